//! Shows why predictions condition on a recent window of the observed
//! trajectory instead of all of it. The network is a long corridor with a
//! late Y exit; the dominant pattern rides the corridor and leaves through
//! the first arm, a smaller one through an early side branch, and a third
//! enters mid-corridor and follows the full Y. A trajectory that covered
//! the whole corridor and then turned onto the Y looks, over its full
//! history, most like the dominant pattern; a short recent window sees only
//! the Y segments and picks the right chain. Too short a window loses the
//! entry information instead, so the error curve is U-shaped in lambda.

use trajclus::evaluation::run_experiment;
use trajclus::fixtures::traj;
use trajclus::pipeline::{train, PipelineConfig};
use trajclus::predictor::{ClusivatPredictor, LAMBDA_FULL};
use trajclus::road_network::{all_pairs_segment_distances, Node, RoadEdge, RoadNetwork};
use trajclus::trajectory::{Trajectory, TrajectoryDataset};
use trajclus::EdgeId;

fn build_network() -> trajclus::Result<RoadNetwork> {
    // Corridor nodes 0..8, Y arm 9..11 with a private exit 12, early side
    // branch 13..14.
    let mut nodes: Vec<Node> = (0..9)
        .map(|i| Node { id: i, lat: 0.0, lon: 0.01 * f64::from(i) })
        .collect();
    nodes.push(Node { id: 9, lat: 0.01, lon: 0.08 });
    nodes.push(Node { id: 10, lat: 0.02, lon: 0.08 });
    nodes.push(Node { id: 11, lat: 0.03, lon: 0.08 });
    nodes.push(Node { id: 12, lat: 0.01, lon: 0.09 });
    nodes.push(Node { id: 13, lat: -0.01, lon: 0.07 });
    nodes.push(Node { id: 14, lat: -0.02, lon: 0.07 });
    let mut edges: Vec<RoadEdge> = (0..8)
        .map(|i| RoadEdge { id: i, a: i, b: i + 1, length_km: None })
        .collect();
    for &(id, a, b) in &[
        (8u32, 8u32, 9u32),
        (9, 9, 10),
        (10, 10, 11),
        (11, 9, 12),
        (12, 7, 13),
        (13, 13, 14),
    ] {
        edges.push(RoadEdge { id, a, b, length_km: None });
    }
    RoadNetwork::new(nodes, edges)
}

fn main() -> trajclus::Result<()> {
    let net = build_network()?;
    let d_all = all_pairs_segment_distances(&net)?;

    let a1: Vec<EdgeId> = vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 11];
    let a2: Vec<EdgeId> = vec![0, 1, 2, 3, 4, 5, 6, 12, 13];
    let b: Vec<EdgeId> = vec![4, 5, 6, 7, 8, 9, 10];

    let mut trajectories = Vec::new();
    let mut id = 0u64;
    for (route, count) in [(&a1, 9), (&a2, 7), (&b, 8)] {
        for _ in 0..count {
            trajectories.push(traj(id, route));
            id += 1;
        }
    }
    let ds = TrajectoryDataset {
        trajectories,
        network_ref: net.identifier().to_string(),
    };
    let cfg = PipelineConfig {
        k_prime: 3,
        n: 24,
        // Chosen between the two corridor patterns' distance and their
        // distance to the Y pattern, so the corridor pair merges into one
        // cluster whose chain carries a 9:7 majority at the exit fork.
        alpha_stage1: 11.0,
        alpha_stage2: Some(50.0),
        min_t: 0.3,
        seed: 0,
        min_len: 5,
        max_len: 200,
        lambda_window: 3,
    };
    let (model, _) = train(&ds, &net, &d_all, &cfg)?;
    println!("model has {} clusters:", model.clusters.len());
    for c in &model.clusters {
        println!(
            "  cluster {}: {} members, representative {:?}",
            c.cluster_id,
            c.members.len(),
            c.rt.segments
        );
    }

    // The tricky test case: full corridor, then the whole Y.
    let misleading: Vec<EdgeId> = vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
    let mut test: Vec<Trajectory> = Vec::new();
    let mut id = 100;
    for route in [&misleading, &a1, &a2, &b] {
        for _ in 0..4 {
            test.push(traj(id, route));
            id += 1;
        }
    }
    let predictor = ClusivatPredictor { model: &model, d_all: &d_all };

    println!("\n{:>8} {:>10} {:>10}", "lambda", "PA", "DE (km)");
    for lambda in [1usize, 2, 3, 5, 8, LAMBDA_FULL] {
        let report = run_experiment(&predictor, &test, 5, lambda, &net, None)?;
        let name = if lambda == LAMBDA_FULL {
            "full".to_string()
        } else {
            lambda.to_string()
        };
        println!("{name:>8} {:>10.4} {:>10.4}", report.avg_pa, report.avg_de_km);
    }
    Ok(())
}
