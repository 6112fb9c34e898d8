//! Sweeps the stage-1 cut ratio alpha on a network with three distant
//! sites. Each site carries two route patterns that share a middle
//! corridor and fork at the exit, 7:3 in favour of the first. A loose
//! alpha keeps each site as one cluster, so the minority pattern gets the
//! majority exit predicted at the fork; tightening alpha separates the
//! patterns and the error vanishes. The cluster count is monotone in
//! alpha, the held-out distance error monotone the other way.

use trajclus::evaluation::run_experiment;
use trajclus::fixtures::traj;
use trajclus::pipeline::{train, PipelineConfig};
use trajclus::predictor::ClusivatPredictor;
use trajclus::road_network::{all_pairs_segment_distances, Node, RoadEdge, RoadNetwork};
use trajclus::trajectory::{Trajectory, TrajectoryDataset};
use trajclus::EdgeId;

// Short branch segments keep the within-site pattern distance small and
// sharply defined; long connectors push the sites far apart.
const BRANCH_KM: f64 = 0.018;
const CONNECTOR_KM: f64 = 10.0;

fn build_sites() -> trajclus::Result<RoadNetwork> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for s in 0..3u32 {
        let lon = 0.1 * f64::from(s);
        let nb = s * 11;
        // Two entries (a, b), a shared corridor (m), two exits (x, y).
        let site_nodes = [
            (0.001, 0.0),
            (0.001, 0.01),
            (0.002, 0.0),
            (0.002, 0.01),
            (0.0, 0.02),
            (0.0, 0.03),
            (0.0, 0.04),
            (-0.001, 0.05),
            (-0.001, 0.06),
            (-0.002, 0.05),
            (-0.002, 0.06),
        ];
        for (i, &(lat, dlon)) in site_nodes.iter().enumerate() {
            nodes.push(Node { id: nb + i as u32, lat, lon: lon + dlon });
        }
        let site_edges = [
            (0u32, 1u32, Some(BRANCH_KM)),
            (1, 4, Some(BRANCH_KM)),
            (2, 3, Some(BRANCH_KM)),
            (3, 4, Some(BRANCH_KM)),
            (4, 5, None),
            (5, 6, None),
            (6, 7, Some(BRANCH_KM)),
            (7, 8, Some(BRANCH_KM)),
            (6, 9, Some(BRANCH_KM)),
            (9, 10, Some(BRANCH_KM)),
        ];
        for (i, &(a, b, length_km)) in site_edges.iter().enumerate() {
            edges.push(RoadEdge { id: s * 10 + i as u32, a: nb + a, b: nb + b, length_km });
        }
    }
    for s in 0..2u32 {
        edges.push(RoadEdge {
            id: 30 + s,
            a: s * 11 + 8,
            b: (s + 1) * 11,
            length_km: Some(CONNECTOR_KM),
        });
    }
    RoadNetwork::new(nodes, edges)
}

fn route(site: u32, minority: bool) -> Vec<EdgeId> {
    let eb = site * 10;
    if minority {
        vec![eb + 2, eb + 3, eb + 4, eb + 5, eb + 8, eb + 9]
    } else {
        vec![eb, eb + 1, eb + 4, eb + 5, eb + 6, eb + 7]
    }
}

fn main() -> trajclus::Result<()> {
    let net = build_sites()?;
    let d_all = all_pairs_segment_distances(&net)?;

    let mut trajectories = Vec::new();
    for s in 0..3u32 {
        for i in 0..7 {
            trajectories.push(traj(u64::from(s) * 10 + i, &route(s, false)));
        }
        for i in 7..10 {
            trajectories.push(traj(u64::from(s) * 10 + i, &route(s, true)));
        }
    }
    let ds = TrajectoryDataset {
        trajectories,
        network_ref: net.identifier().to_string(),
    };
    let test: Vec<Trajectory> = (0..3u32)
        .flat_map(|s| {
            [
                traj(100 + u64::from(s) * 2, &route(s, false)),
                traj(101 + u64::from(s) * 2, &route(s, true)),
            ]
        })
        .collect();

    println!("{:>8} {:>4} {:>10} {:>10}", "alpha", "K", "PA", "DE (km)");
    for alpha in [0.2, 0.1, 0.05, 0.02] {
        let cfg = PipelineConfig {
            k_prime: 6,
            n: 30,
            alpha_stage1: alpha,
            // Everything travels the same direction; hold the directional
            // stage open so the sweep isolates the first stage.
            alpha_stage2: Some(50.0),
            min_t: 0.3,
            seed: 0,
            min_len: 5,
            max_len: 200,
            lambda_window: 3,
        };
        let (model, _) = train(&ds, &net, &d_all, &cfg)?;
        let predictor = ClusivatPredictor { model: &model, d_all: &d_all };
        let report = run_experiment(&predictor, &test, 3, 3, &net, None)?;
        println!(
            "{:>8.2} {:>4} {:>10.4} {:>10.4}",
            alpha,
            model.clusters.len(),
            report.avg_pa,
            report.avg_de_km
        );
    }
    Ok(())
}
