//! Road network model: nodes, undirected road segments, and the all-pairs
//! segment distance matrix that every distance computation downstream builds
//! on.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type NodeId = u32;
pub type EdgeId = u32;

/// Mean Earth radius in kilometres, shared by every distance in the crate.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoadEdge {
    pub id: EdgeId,
    pub a: NodeId,
    pub b: NodeId,
    /// Segment length in km; filled with the haversine distance between the
    /// endpoints when the input file omits it.
    #[serde(default)]
    pub length_km: Option<f64>,
}

/// Undirected road graph. Node and edge ids are dense (0..len), so vectors
/// double as id-indexed maps.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<RoadEdge>,
    /// node id -> incident edge ids, ascending.
    node_edges: Vec<Vec<EdgeId>>,
    /// edge id -> edge ids sharing a node (excluding itself), ascending.
    edge_adjacency: Vec<Vec<EdgeId>>,
    /// Content hash; stored in trained models so a model can refuse to run
    /// against a different network.
    identifier: String,
}

/// Great-circle distance in km between two (lat, lon) points in degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().atan2((1.0 - a).sqrt())
}

#[derive(Debug, Deserialize)]
struct NetworkFile {
    nodes: Vec<Node>,
    edges: Vec<RoadEdge>,
}

#[derive(Debug, Serialize)]
struct NetworkFileOut<'a> {
    nodes: &'a [Node],
    edges: Vec<RoadEdge>,
}

impl RoadNetwork {
    /// Builds and validates a network from node and edge lists. Ids must be
    /// dense (a permutation of 0..len); missing edge lengths are filled with
    /// the endpoint haversine distance. A disconnected edge graph is allowed
    /// here (with a warning) and only rejected by
    /// [`all_pairs_segment_distances`].
    pub fn new(nodes: Vec<Node>, edges: Vec<RoadEdge>) -> Result<RoadNetwork> {
        if edges.is_empty() {
            return Err(Error::Network("no segments: edge list is empty".into()));
        }
        let mut node_slots: Vec<Option<Node>> = vec![None; nodes.len()];
        for n in nodes {
            let id = n.id as usize;
            match node_slots.get_mut(id) {
                Some(slot @ None) => *slot = Some(n),
                Some(_) => return Err(Error::Network(format!("duplicate node id {}", n.id))),
                None => {
                    return Err(Error::Network(format!(
                        "node ids are not dense: id {} with {} nodes",
                        n.id,
                        node_slots.len()
                    )))
                }
            }
        }
        let nodes: Vec<Node> = node_slots.into_iter().map(|s| s.unwrap()).collect();

        let n_edges = edges.len();
        let mut edge_slots: Vec<Option<RoadEdge>> = vec![None; n_edges];
        for mut e in edges {
            let id = e.id as usize;
            if id >= n_edges {
                return Err(Error::Network(format!(
                    "edge ids are not dense: id {} with {} edges",
                    e.id, n_edges
                )));
            }
            if edge_slots[id].is_some() {
                return Err(Error::Network(format!("duplicate edge id {}", e.id)));
            }
            for end in [e.a, e.b] {
                if end as usize >= nodes.len() {
                    return Err(Error::Network(format!(
                        "edge {} has dangling endpoint node {}",
                        e.id, end
                    )));
                }
            }
            if e.a == e.b {
                return Err(Error::Network(format!(
                    "edge {} is a self-loop at node {}",
                    e.id, e.a
                )));
            }
            let len = e.length_km.unwrap_or_else(|| {
                let (na, nb) = (&nodes[e.a as usize], &nodes[e.b as usize]);
                haversine_km(na.lat, na.lon, nb.lat, nb.lon)
            });
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::Network(format!(
                    "edge {} has non-positive length {}",
                    e.id, len
                )));
            }
            e.length_km = Some(len);
            edge_slots[id] = Some(e);
        }
        let edges: Vec<RoadEdge> = edge_slots.into_iter().map(|s| s.unwrap()).collect();

        let mut node_edges = vec![Vec::new(); nodes.len()];
        for e in &edges {
            node_edges[e.a as usize].push(e.id);
            node_edges[e.b as usize].push(e.id);
        }
        let mut edge_adjacency = vec![Vec::new(); edges.len()];
        for (id, e) in edges.iter().enumerate() {
            let mut adj: Vec<EdgeId> = node_edges[e.a as usize]
                .iter()
                .chain(node_edges[e.b as usize].iter())
                .copied()
                .filter(|&other| other as usize != id)
                .collect();
            adj.sort_unstable();
            adj.dedup();
            edge_adjacency[id] = adj;
        }

        let identifier = content_hash(&nodes, &edges);
        let net = RoadNetwork {
            nodes,
            edges,
            node_edges,
            edge_adjacency,
            identifier,
        };
        if net.edge_component_count() > 1 {
            log::warn!("road network has disconnected segments; distance precompute will fail");
        }
        Ok(net)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn edge(&self, id: EdgeId) -> &RoadEdge {
        &self.edges[id as usize]
    }

    pub fn edge_length_km(&self, id: EdgeId) -> f64 {
        self.edges[id as usize].length_km.unwrap()
    }

    pub fn identifier(&self) -> &str {
        &self.identifier
    }

    /// Edge ids sharing a node with `edge`, ascending, excluding `edge`.
    pub fn adjacent_segments(&self, edge: EdgeId) -> Result<&[EdgeId]> {
        self.edge_adjacency
            .get(edge as usize)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Arg(format!("unknown edge id {edge}")))
    }

    /// Edge ids incident to a node, ascending.
    pub fn edges_at_node(&self, node: NodeId) -> Result<&[EdgeId]> {
        self.node_edges
            .get(node as usize)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Arg(format!("unknown node id {node}")))
    }

    /// True when the two edges share at least one endpoint node.
    pub fn edges_share_node(&self, e1: EdgeId, e2: EdgeId) -> bool {
        let (a, b) = (&self.edges[e1 as usize], &self.edges[e2 as usize]);
        a.a == b.a || a.a == b.b || a.b == b.a || a.b == b.b
    }

    /// Lowest-id edge between the two nodes, if any.
    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.node_edges[a as usize]
            .iter()
            .copied()
            .find(|&e| {
                let ed = &self.edges[e as usize];
                (ed.a == a && ed.b == b) || (ed.a == b && ed.b == a)
            })
    }

    /// Geodesic midpoint of the edge's endpoints as (lat, lon) degrees.
    pub fn edge_midpoint(&self, edge: EdgeId) -> (f64, f64) {
        let e = &self.edges[edge as usize];
        let (na, nb) = (&self.nodes[e.a as usize], &self.nodes[e.b as usize]);
        let to_vec = |lat: f64, lon: f64| {
            let (phi, lam) = (lat.to_radians(), lon.to_radians());
            (phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin())
        };
        let (x1, y1, z1) = to_vec(na.lat, na.lon);
        let (x2, y2, z2) = to_vec(nb.lat, nb.lon);
        let (x, y, z) = ((x1 + x2) / 2.0, (y1 + y2) / 2.0, (z1 + z2) / 2.0);
        let hyp = (x * x + y * y).sqrt();
        (z.atan2(hyp).to_degrees(), y.atan2(x).to_degrees())
    }

    /// Number of connected components of the edge graph (edges joined by
    /// shared nodes). Isolated nodes do not count.
    fn edge_component_count(&self) -> usize {
        let mut seen = vec![false; self.edges.len()];
        let mut components = 0;
        for start in 0..self.edges.len() {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start as EdgeId];
            seen[start] = true;
            while let Some(e) = stack.pop() {
                for &next in &self.edge_adjacency[e as usize] {
                    if !seen[next as usize] {
                        seen[next as usize] = true;
                        stack.push(next);
                    }
                }
            }
        }
        components
    }

    /// Node-to-all shortest path distances (km) from a pair of seed nodes,
    /// i.e. a multi-source Dijkstra seeded with both endpoints of an edge.
    fn dijkstra_from(&self, seeds: [NodeId; 2]) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Entry {
            dist: f64,
            node: NodeId,
        }
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                // Reversed: BinaryHeap is a max-heap, we want the min.
                other
                    .dist
                    .partial_cmp(&self.dist)
                    .unwrap()
                    .then_with(|| other.node.cmp(&self.node))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        for s in seeds {
            if dist[s as usize] > 0.0 {
                dist[s as usize] = 0.0;
                heap.push(Entry { dist: 0.0, node: s });
            }
        }
        while let Some(Entry { dist: d, node }) = heap.pop() {
            if d > dist[node as usize] {
                continue;
            }
            for &eid in &self.node_edges[node as usize] {
                let e = &self.edges[eid as usize];
                let other = if e.a == node { e.b } else { e.a };
                let nd = d + e.length_km.unwrap();
                if nd < dist[other as usize] {
                    dist[other as usize] = nd;
                    heap.push(Entry {
                        dist: nd,
                        node: other,
                    });
                }
            }
        }
        dist
    }
}

fn content_hash(nodes: &[Node], edges: &[RoadEdge]) -> String {
    let mut h = Sha256::new();
    h.update(b"trajclus-network-v1");
    for n in nodes {
        h.update(n.id.to_le_bytes());
        h.update(n.lat.to_bits().to_le_bytes());
        h.update(n.lon.to_bits().to_le_bytes());
    }
    for e in edges {
        h.update(e.id.to_le_bytes());
        h.update(e.a.to_le_bytes());
        h.update(e.b.to_le_bytes());
        h.update(e.length_km.unwrap().to_bits().to_le_bytes());
    }
    let digest = h.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads a network from a JSON file `{"nodes": [...], "edges": [...]}`.
pub fn load_network(path: &Path) -> Result<RoadNetwork> {
    let text = std::fs::read_to_string(path)?;
    let file: NetworkFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    RoadNetwork::new(file.nodes, file.edges)
}

/// Writes a network to the JSON format read by [`load_network`].
pub fn save_network(net: &RoadNetwork, path: &Path) -> Result<()> {
    let out = NetworkFileOut {
        nodes: &net.nodes,
        edges: net.edges.clone(),
    };
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer(&mut f, &out).map_err(|e| Error::Parse(e.to_string()))?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Dense symmetric matrix of network distances between all segment pairs,
/// in km. Entry (i, j) is the minimum over endpoint pairs of the node
/// shortest-path distance plus half of each segment's length; the diagonal
/// is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

const DALL_MAGIC: &[u8; 4] = b"TCVD";
const DALL_VERSION: u32 = 1;

impl SegmentDistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: EdgeId, j: EdgeId) -> f64 {
        self.data[i as usize * self.n + j as usize]
    }

    /// Binary layout: magic "TCVD", version u32 LE, |E| u32 LE, then
    /// row-major f64 LE values.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(DALL_MAGIC)?;
        f.write_all(&DALL_VERSION.to_le_bytes())?;
        f.write_all(&(self.n as u32).to_le_bytes())?;
        for v in &self.data {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SegmentDistanceMatrix> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != DALL_MAGIC {
            return Err(Error::Format(format!(
                "{}: bad magic {:?}, expected \"TCVD\"",
                path.display(),
                magic
            )));
        }
        let mut word = [0u8; 4];
        f.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != DALL_VERSION {
            return Err(Error::Format(format!(
                "{}: unsupported version {version}",
                path.display()
            )));
        }
        f.read_exact(&mut word)?;
        let n = u32::from_le_bytes(word) as usize;
        let mut data = vec![0f64; n * n];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            f.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        let mut rest = [0u8; 1];
        if f.read(&mut rest)? != 0 {
            return Err(Error::Format(format!(
                "{}: trailing bytes after {n}x{n} matrix",
                path.display()
            )));
        }
        Ok(SegmentDistanceMatrix { n, data })
    }

    /// Construct from raw row-major data. Used by tests and the generator.
    pub fn from_raw(n: usize, data: Vec<f64>) -> SegmentDistanceMatrix {
        assert_eq!(data.len(), n * n);
        SegmentDistanceMatrix { n, data }
    }
}

/// Computes the all-pairs segment distance matrix. Rows are independent
/// Dijkstra runs and execute in parallel; entry (i, j) with i < j is computed
/// once from i's run and mirrored, so the result is exactly symmetric and
/// invariant to thread count.
pub fn all_pairs_segment_distances(net: &RoadNetwork) -> Result<SegmentDistanceMatrix> {
    let n = net.num_edges();
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let e = net.edge(i as EdgeId);
            let node_dist = net.dijkstra_from([e.a, e.b]);
            let half_i = net.edge_length_km(i as EdgeId) / 2.0;
            let mut row = vec![0f64; n];
            for j in (i + 1)..n {
                let ej = net.edge(j as EdgeId);
                let d = node_dist[ej.a as usize].min(node_dist[ej.b as usize]);
                if d.is_infinite() {
                    return Err(Error::Network(format!(
                        "segment {j} is unreachable from segment {i} (node {} unreachable from nodes {}/{})",
                        ej.a, e.a, e.b
                    )));
                }
                row[j] = d + half_i + net.edge_length_km(j as EdgeId) / 2.0;
            }
            Ok(row)
        })
        .collect();

    let mut data = vec![0f64; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for (j, v) in row.into_iter().enumerate().skip(i + 1) {
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(SegmentDistanceMatrix { n, data })
}
