//! Synthetic data generation: grid road networks and trajectory corpora
//! drawn from node-path patterns with controlled direction mix, truncation
//! and detour noise. Ground-truth pattern labels come back with the data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road_network::{EdgeId, Node, NodeId, RoadEdge, RoadNetwork};
use crate::trajectory::{Trajectory, TrajectoryDataset};

/// Rectangular grid: node (r, c) has id r*cols + c at lat r*spacing and
/// lon c*spacing. Edges are emitted per node in row-major order, the
/// rightward edge before the downward one, giving 2*r*c - r - c edges.
pub fn make_grid_network(rows: u32, cols: u32, spacing_deg: f64) -> Result<RoadNetwork> {
    if rows < 1 || cols < 1 || (rows * cols) < 2 {
        return Err(Error::Arg(format!("grid {rows}x{cols} has no edges")));
    }
    if !(spacing_deg > 0.0) || !spacing_deg.is_finite() {
        return Err(Error::Arg(format!("bad grid spacing {spacing_deg}")));
    }
    let mut nodes = Vec::with_capacity((rows * cols) as usize);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            nodes.push(Node {
                id,
                lat: r as f64 * spacing_deg,
                lon: c as f64 * spacing_deg,
            });
            if c + 1 < cols {
                edges.push(RoadEdge {
                    id: edges.len() as EdgeId,
                    a: id,
                    b: id + 1,
                    length_km: None,
                });
            }
            if r + 1 < rows {
                edges.push(RoadEdge {
                    id: edges.len() as EdgeId,
                    a: id,
                    b: id + cols,
                    length_km: None,
                });
            }
        }
    }
    RoadNetwork::new(nodes, edges)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub rows: u32,
    pub cols: u32,
    pub spacing_deg: f64,
    /// Movement patterns as node paths over the grid.
    pub patterns: Vec<Vec<NodeId>>,
    /// Trajectories to emit per pattern.
    pub counts: Vec<u64>,
    /// Fraction of each pattern's trajectories travelled in reverse.
    pub direction_mix: f64,
    pub truncation_prob: f64,
    pub detour_prob: f64,
    /// Shortest trajectory (in segments) truncation may leave behind.
    pub min_len: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryLabel {
    pub id: u64,
    pub pattern: usize,
    pub reversed: bool,
}

fn validate_spec(spec: &GeneratorSpec) -> Result<()> {
    if spec.patterns.is_empty() {
        return Err(Error::Arg("no patterns".into()));
    }
    if spec.patterns.len() != spec.counts.len() {
        return Err(Error::Arg(format!(
            "{} patterns but {} counts",
            spec.patterns.len(),
            spec.counts.len()
        )));
    }
    for (name, p) in [
        ("direction_mix", spec.direction_mix),
        ("truncation_prob", spec.truncation_prob),
        ("detour_prob", spec.detour_prob),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Arg(format!("{name} {p} outside [0, 1]")));
        }
    }
    if spec.min_len < 1 {
        return Err(Error::Arg("min_len must be at least 1".into()));
    }
    Ok(())
}

/// Interior corner positions of a node path: index i such that the triple
/// around it turns (the straight continuation and the backtrack are both
/// excluded), so the opposite corner u + w - v exists to detour through.
fn corner_positions(path: &[NodeId], cols: u32) -> Vec<usize> {
    let rc = |n: NodeId| (n / cols, n % cols);
    let mut out = Vec::new();
    for i in 1..path.len() - 1 {
        let (u, v, w) = (path[i - 1], path[i], path[i + 1]);
        if u == w {
            continue;
        }
        let ((ru, cu), (rv, cv), (rw, cw)) = (rc(u), rc(v), rc(w));
        let xr = ru + rw - rv;
        let xc = cu + cw - cv;
        if (xr, xc) != (rv, cv) {
            out.push(i);
        }
    }
    out
}

fn segments_of(net: &RoadNetwork, path: &[NodeId]) -> Result<Vec<EdgeId>> {
    path.windows(2)
        .map(|w| {
            net.edge_between(w[0], w[1]).ok_or_else(|| {
                Error::Data(format!("pattern step {} -> {} is not a grid edge", w[0], w[1]))
            })
        })
        .collect()
}

/// Builds the grid network, emits `counts[p]` trajectories per pattern and
/// returns the ground-truth labels alongside. Every pattern runs on its own
/// random substream, so changing one pattern's count leaves the others'
/// trajectories untouched. Trajectory ids count up globally in pattern order.
pub fn generate(
    spec: &GeneratorSpec,
) -> Result<(RoadNetwork, TrajectoryDataset, Vec<TrajectoryLabel>)> {
    validate_spec(spec)?;
    let net = make_grid_network(spec.rows, spec.cols, spec.spacing_deg)?;
    let n_nodes = (spec.rows * spec.cols) as NodeId;
    for (p, path) in spec.patterns.iter().enumerate() {
        if path.len() < 2 {
            return Err(Error::Arg(format!("pattern {p} has fewer than 2 nodes")));
        }
        if let Some(&bad) = path.iter().find(|&&n| n >= n_nodes) {
            return Err(Error::Arg(format!("pattern {p} uses nonexistent node {bad}")));
        }
        let segs = segments_of(&net, path)?;
        if segs.len() < spec.min_len {
            return Err(Error::Arg(format!(
                "pattern {p} has {} segments, below min_len {}",
                segs.len(),
                spec.min_len
            )));
        }
    }

    let mut trajectories = Vec::new();
    let mut labels = Vec::new();
    let mut next_id: u64 = 0;
    for (p, path) in spec.patterns.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(p as u64 + 1);
        for t in 0..spec.counts[p] {
            let mut node_path = path.clone();
            if spec.detour_prob > 0.0 && rng.gen_bool(spec.detour_prob) {
                let corners = corner_positions(&node_path, spec.cols);
                if !corners.is_empty() {
                    let i = corners[rng.gen_range(0..corners.len())];
                    let (u, v, w) = (node_path[i - 1], node_path[i], node_path[i + 1]);
                    node_path[i] = u + w - v;
                }
            }
            let mut segs = segments_of(&net, &node_path)?;
            if spec.truncation_prob > 0.0
                && rng.gen_bool(spec.truncation_prob)
                && segs.len() > spec.min_len
            {
                let from_front = rng.gen_bool(0.5);
                let amount = rng.gen_range(1..=segs.len() - spec.min_len);
                if from_front {
                    segs.drain(..amount);
                } else {
                    segs.truncate(segs.len() - amount);
                }
            }
            // Interleaving by the cumulative-share jump hits the requested
            // mix exactly on every prefix, not just in expectation.
            let rho = spec.direction_mix;
            let reversed = ((t + 1) as f64 * rho).floor() - (t as f64 * rho).floor() == 1.0;
            if reversed {
                segs.reverse();
            }
            trajectories.push(Trajectory {
                id: next_id,
                segments: segs,
            });
            labels.push(TrajectoryLabel {
                id: next_id,
                pattern: p,
                reversed,
            });
            next_id += 1;
        }
    }
    let ds = TrajectoryDataset {
        trajectories,
        network_ref: net.identifier().to_string(),
    };
    Ok((net, ds, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_spec() -> GeneratorSpec {
        GeneratorSpec {
            rows: 3,
            cols: 3,
            spacing_deg: 0.001,
            patterns: vec![vec![0, 1, 2, 5, 8]],
            counts: vec![4],
            direction_mix: 0.0,
            truncation_prob: 0.0,
            detour_prob: 0.0,
            min_len: 2,
            seed: 0,
        }
    }

    #[test]
    fn grid_edge_counts_match_the_formula() {
        assert_eq!(make_grid_network(2, 2, 0.001).unwrap().num_edges(), 4);
        assert_eq!(make_grid_network(3, 3, 0.001).unwrap().num_edges(), 12);
        assert_eq!(make_grid_network(1, 5, 0.001).unwrap().num_edges(), 4);
        assert!(make_grid_network(1, 1, 0.001).is_err());
        assert!(make_grid_network(2, 2, 0.0).is_err());
    }

    #[test]
    fn grid_edges_interleave_rightward_then_downward() {
        let net = make_grid_network(2, 2, 0.001).unwrap();
        // Node 0 contributes edges 0 (0-1) and 1 (0-2), node 1 edge 2 (1-3),
        // node 2 edge 3 (2-3).
        let ends = |e: u32| (net.edge(e).a, net.edge(e).b);
        assert_eq!(ends(0), (0, 1));
        assert_eq!(ends(1), (0, 2));
        assert_eq!(ends(2), (1, 3));
        assert_eq!(ends(3), (2, 3));
        assert_eq!(net.node(3).lat, 0.001);
        assert_eq!(net.node(3).lon, 0.001);
    }

    #[test]
    fn small_grid_edges_have_equal_length() {
        let net = make_grid_network(3, 3, 0.001).unwrap();
        let l0 = net.edge_length_km(0);
        for e in 1..net.num_edges() as u32 {
            assert!(
                (net.edge_length_km(e) - l0).abs() < 1e-9,
                "edge {e}: {} vs {}",
                net.edge_length_km(e),
                l0
            );
        }
    }

    #[test]
    fn zero_noise_reproduces_patterns_verbatim() {
        let spec = base_spec();
        let (net, ds, labels) = generate(&spec).unwrap();
        assert_eq!(ds.trajectories.len(), 4);
        let expected = segments_of(&net, &spec.patterns[0]).unwrap();
        for (t, l) in ds.trajectories.iter().zip(&labels) {
            assert_eq!(t.segments, expected);
            assert_eq!(l.pattern, 0);
            assert!(!l.reversed);
        }
        let ids: Vec<u64> = labels.iter().map(|l| l.id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert_eq!(ds.network_ref, net.identifier());
    }

    #[test]
    fn direction_mix_is_exact_and_reverses_segments() {
        let mut spec = base_spec();
        spec.direction_mix = 0.5;
        spec.counts = vec![6];
        let (net, ds, labels) = generate(&spec).unwrap();
        let forward = segments_of(&net, &spec.patterns[0]).unwrap();
        let mut backward = forward.clone();
        backward.reverse();
        let n_rev = labels.iter().filter(|l| l.reversed).count();
        assert_eq!(n_rev, 3);
        for (t, l) in ds.trajectories.iter().zip(&labels) {
            let want = if l.reversed { &backward } else { &forward };
            assert_eq!(&t.segments, want);
        }
    }

    #[test]
    fn truncation_respects_the_length_floor() {
        let mut spec = base_spec();
        spec.truncation_prob = 1.0;
        spec.counts = vec![50];
        spec.min_len = 2;
        let (net, ds, _) = generate(&spec).unwrap();
        let full = segments_of(&net, &spec.patterns[0]).unwrap();
        let mut saw_shorter = false;
        for t in &ds.trajectories {
            assert!(t.segments.len() >= spec.min_len);
            assert!(t.segments.len() <= full.len());
            saw_shorter |= t.segments.len() < full.len();
            // A truncation is a contiguous slice of the full route.
            let found = (0..=full.len() - t.segments.len())
                .any(|s| full[s..s + t.segments.len()] == t.segments[..]);
            assert!(found, "{:?} is not a slice of {:?}", t.segments, full);
        }
        assert!(saw_shorter);
    }

    #[test]
    fn truncation_skips_patterns_already_at_min_len() {
        let mut spec = base_spec();
        spec.truncation_prob = 1.0;
        spec.min_len = 4; // pattern has exactly 4 segments
        let (net, ds, _) = generate(&spec).unwrap();
        let full = segments_of(&net, &spec.patterns[0]).unwrap();
        for t in &ds.trajectories {
            assert_eq!(t.segments, full);
        }
    }

    #[test]
    fn detours_keep_endpoints_and_length() {
        let mut spec = base_spec();
        spec.detour_prob = 1.0;
        spec.counts = vec![20];
        let (net, ds, _) = generate(&spec).unwrap();
        let full = segments_of(&net, &spec.patterns[0]).unwrap();
        // The only corner of 0-1-2-5-8 is interior, so the end segments stay.
        let mut saw_detour = false;
        for t in &ds.trajectories {
            assert_eq!(t.segments.len(), full.len());
            assert_eq!(t.segments[0], full[0]);
            assert_eq!(t.segments.last(), full.last());
            saw_detour |= t.segments != full;
        }
        assert!(saw_detour);
        // A straight pattern has no corner to cut, so detours never fire.
        let mut straight = base_spec();
        straight.detour_prob = 1.0;
        straight.patterns = vec![vec![0, 1, 2]];
        straight.min_len = 2;
        let (net2, ds2, _) = generate(&straight).unwrap();
        let want = segments_of(&net2, &straight.patterns[0]).unwrap();
        for t in &ds2.trajectories {
            assert_eq!(t.segments, want);
        }
    }

    #[test]
    fn detour_rewires_the_corner_node() {
        // Pattern 0 -> 1 -> 4 turns at node 1; the detour goes 0 -> 3 -> 4.
        let mut spec = base_spec();
        spec.patterns = vec![vec![0, 1, 4]];
        spec.min_len = 2;
        spec.detour_prob = 1.0;
        let (net, ds, _) = generate(&spec).unwrap();
        let detoured = segments_of(&net, &[0, 3, 4]).unwrap();
        for t in &ds.trajectories {
            assert_eq!(t.segments, detoured);
        }
    }

    #[test]
    fn generation_is_deterministic_and_streams_are_independent() {
        let mut spec = base_spec();
        spec.patterns = vec![vec![0, 1, 2, 5, 8], vec![6, 7, 8, 5, 2]];
        spec.counts = vec![5, 5];
        spec.truncation_prob = 0.4;
        spec.detour_prob = 0.3;
        spec.direction_mix = 0.5;
        let (_, ds1, l1) = generate(&spec).unwrap();
        let (_, ds2, l2) = generate(&spec).unwrap();
        assert_eq!(ds1.trajectories, ds2.trajectories);
        assert_eq!(l1, l2);
        // Shrinking pattern 1's count must not disturb pattern 0's output.
        let mut smaller = spec.clone();
        smaller.counts = vec![5, 2];
        let (_, ds3, _) = generate(&smaller).unwrap();
        for i in 0..5 {
            assert_eq!(ds1.trajectories[i], ds3.trajectories[i]);
        }
    }

    #[test]
    fn spec_validation_catches_bad_input() {
        let mut s = base_spec();
        s.counts = vec![1, 2];
        assert!(generate(&s).is_err());
        let mut s = base_spec();
        s.direction_mix = 1.5;
        assert!(generate(&s).is_err());
        let mut s = base_spec();
        s.patterns = vec![vec![0, 99]];
        assert!(generate(&s).is_err());
        let mut s = base_spec();
        s.patterns = vec![vec![0, 4]]; // diagonal, not a grid edge
        assert!(generate(&s).is_err());
        let mut s = base_spec();
        s.min_len = 10;
        assert!(generate(&s).is_err());
    }
}
