//! Independent reference implementations the acceptance suite checks the
//! library against. Everything here trades speed for obviousness: path
//! enumeration instead of banded DP, Floyd-Warshall instead of Dijkstra,
//! agglomerative merging instead of MST cuts.

use std::collections::BTreeSet;

use rand::Rng;
use trajclus::road_network::{haversine_km, Node, RoadEdge, RoadNetwork, SegmentDistanceMatrix};
use trajclus::EdgeId;

/// Brute-force banded DTW: enumerates every monotone warping path from
/// (0, 0) to (l1-1, l2-1) whose cells satisfy the documented band rule,
/// keeps the lexicographic (cost, length) minimum, and normalizes by the
/// path length. Exponential, fine for lengths up to ~8.
pub fn exhaustive_dtw(t1: &[EdgeId], t2: &[EdgeId], d_all: &SegmentDistanceMatrix) -> f64 {
    // Mirror the library's canonical orientation. Ties between equal-cost
    // paths of different lengths are broken by float comparisons, so both
    // sides must accumulate costs in the same order to agree on cost/len.
    let r1: Vec<EdgeId> = t1.iter().rev().copied().collect();
    let r2: Vec<EdgeId> = t2.iter().rev().copied().collect();
    let mut s: (&[EdgeId], &[EdgeId]) = (t1, t2);
    for cand in [(t2, t1), (&r1[..], &r2[..]), (&r2[..], &r1[..])] {
        if cand < s {
            s = cand;
        }
    }
    let (t1, t2) = s;
    let (l1, l2) = (t1.len(), t2.len());
    let w = (l1.min(l2).div_ceil(2)).max(1) as i64;
    let feasible = |i: usize, j: usize| {
        let (a, b) = ((l1 - 1) as i64, (l2 - 1) as i64);
        ((j as i64) * a - (i as i64) * b).abs() <= w * a.max(b)
    };
    struct Walk<'a> {
        t1: &'a [EdgeId],
        t2: &'a [EdgeId],
        d_all: &'a SegmentDistanceMatrix,
        best: Option<(f64, u32)>,
    }
    impl Walk<'_> {
        fn go(
            &mut self,
            i: usize,
            j: usize,
            cost: f64,
            len: u32,
            feasible: &dyn Fn(usize, usize) -> bool,
        ) {
            if !feasible(i, j) {
                return;
            }
            let cost = cost + self.d_all.get(self.t1[i], self.t2[j]);
            let len = len + 1;
            if i == self.t1.len() - 1 && j == self.t2.len() - 1 {
                let cand = (cost, len);
                let better = match self.best {
                    None => true,
                    Some(b) => cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1),
                };
                if better {
                    self.best = Some(cand);
                }
                return;
            }
            if i + 1 < self.t1.len() && j + 1 < self.t2.len() {
                self.go(i + 1, j + 1, cost, len, feasible);
            }
            if i + 1 < self.t1.len() {
                self.go(i + 1, j, cost, len, feasible);
            }
            if j + 1 < self.t2.len() {
                self.go(i, j + 1, cost, len, feasible);
            }
        }
    }
    let mut walk = Walk {
        t1,
        t2,
        d_all,
        best: None,
    };
    walk.go(0, 0, 0.0, 0, &feasible);
    let (cost, len) = walk.best.expect("an in-band monotone path must exist");
    cost / len as f64
}

/// Segment distance oracle: Floyd-Warshall over the nodes, then for every
/// segment pair the cheapest endpoint-to-endpoint route plus half of each
/// segment's own length. Returns a dense row-major matrix.
pub fn fw_midpoint_distances(net: &RoadNetwork) -> Vec<f64> {
    let nn = net.num_nodes();
    let ne = net.num_edges();
    let mut d = vec![f64::INFINITY; nn * nn];
    for v in 0..nn {
        d[v * nn + v] = 0.0;
    }
    for e in 0..ne {
        let edge = net.edge(e as EdgeId);
        let len = net.edge_length_km(e as EdgeId);
        let (a, b) = (edge.a as usize, edge.b as usize);
        if len < d[a * nn + b] {
            d[a * nn + b] = len;
            d[b * nn + a] = len;
        }
    }
    for k in 0..nn {
        for i in 0..nn {
            for j in 0..nn {
                let via = d[i * nn + k] + d[k * nn + j];
                if via < d[i * nn + j] {
                    d[i * nn + j] = via;
                }
            }
        }
    }
    let mut out = vec![0.0; ne * ne];
    for i in 0..ne {
        for j in 0..ne {
            if i == j {
                continue;
            }
            let (ei, ej) = (net.edge(i as EdgeId), net.edge(j as EdgeId));
            let half = (net.edge_length_km(i as EdgeId) + net.edge_length_km(j as EdgeId)) / 2.0;
            let mut best = f64::INFINITY;
            for &a in &[ei.a, ei.b] {
                for &b in &[ej.a, ej.b] {
                    let v = d[a as usize * nn + b as usize] + half;
                    if v < best {
                        best = v;
                    }
                }
            }
            out[i * ne + j] = best;
        }
    }
    out
}

/// Min-max path closure of a symmetric matrix: entry (i, j) becomes the
/// smallest over all paths of the largest step on the path.
pub fn minimax_closure(n: usize, d: &[f64]) -> Vec<f64> {
    let mut g = d.to_vec();
    for i in 0..n {
        g[i * n + i] = 0.0;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = g[i * n + k].max(g[k * n + j]);
                if via < g[i * n + j] {
                    g[i * n + j] = via;
                }
            }
        }
    }
    g
}

/// Naive bottom-up single linkage. Returns one label vector per cluster
/// count: `out[k]` holds the labels at exactly k clusters (index 0 unused).
/// Assumes distinct off-diagonal entries so the hierarchy is unambiguous.
pub fn single_linkage_levels(n: usize, d: &[f64]) -> Vec<Vec<usize>> {
    let mut link = d.to_vec();
    let mut active = vec![true; n];
    let mut labels: Vec<usize> = (0..n).collect();
    let mut out = vec![Vec::new(); n + 1];
    out[n] = canonical_partition(&labels);
    for clusters in (1..n).rev() {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in (a + 1)..n {
                if active[b] && link[a * n + b] < best.0 {
                    best = (link[a * n + b], a, b);
                }
            }
        }
        let (_, a, b) = best;
        for l in labels.iter_mut() {
            if *l == b {
                *l = a;
            }
        }
        active[b] = false;
        for c in 0..n {
            if active[c] && c != a {
                let v = link[a * n + c].min(link[b * n + c]);
                link[a * n + c] = v;
                link[c * n + a] = v;
            }
        }
        out[clusters] = canonical_partition(&labels);
    }
    out
}

/// Relabels clusters by first appearance so two labelings of the same
/// partition compare equal.
pub fn canonical_partition(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            *map.entry(l).or_insert_with(|| {
                let v = next;
                next += 1;
                v
            })
        })
        .collect()
}

/// Random connected road network: a random spanning tree over randomly
/// placed nodes plus extra non-parallel edges up to `max_edges`. A few
/// edges carry explicit lengths instead of the haversine default.
pub fn random_network<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize) -> RoadNetwork {
    let nn = rng.gen_range(2..=max_nodes);
    let nodes: Vec<Node> = (0..nn)
        .map(|i| Node {
            id: i as u32,
            lat: rng.gen_range(-0.05..0.05),
            lon: rng.gen_range(-0.05..0.05),
        })
        .collect();
    let mut edges: Vec<RoadEdge> = Vec::new();
    let mut seen = BTreeSet::new();
    for i in 1..nn {
        let j = rng.gen_range(0..i);
        seen.insert((j, i));
        edges.push(RoadEdge {
            id: edges.len() as u32,
            a: j as u32,
            b: i as u32,
            length_km: None,
        });
    }
    let target = rng.gen_range(edges.len()..=max_edges.max(edges.len()));
    let mut attempts = 0;
    while edges.len() < target && attempts < 400 {
        attempts += 1;
        let a = rng.gen_range(0..nn);
        let b = rng.gen_range(0..nn);
        if a == b || seen.contains(&(a.min(b), a.max(b))) {
            continue;
        }
        seen.insert((a.min(b), a.max(b)));
        let length_km = if rng.gen_bool(0.25) {
            let (na, nb) = (&nodes[a], &nodes[b]);
            let base = haversine_km(na.lat, na.lon, nb.lat, nb.lon);
            Some(base * rng.gen_range(1.0..2.0) + 0.01)
        } else {
            None
        };
        edges.push(RoadEdge {
            id: edges.len() as u32,
            a: a as u32,
            b: b as u32,
            length_km,
        });
    }
    RoadNetwork::new(nodes, edges).expect("generated network is valid")
}
