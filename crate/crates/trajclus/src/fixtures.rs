//! Tiny canonical fixtures shared by tests and examples.

use crate::road_network::{Node, RoadEdge, RoadNetwork};
use crate::trajectory::Trajectory;

/// Four collinear nodes on the equator at longitudes 0, 0.01, 0.02, 0.03
/// degrees, joined by edges e0, e1, e2 of ~1.11195 km each.
pub fn toy4() -> RoadNetwork {
    let nodes = (0..4)
        .map(|i| Node {
            id: i,
            lat: 0.0,
            lon: 0.01 * f64::from(i),
        })
        .collect();
    let edges = (0..3)
        .map(|i| RoadEdge {
            id: i,
            a: i,
            b: i + 1,
            length_km: None,
        })
        .collect();
    RoadNetwork::new(nodes, edges).unwrap()
}

/// Straight equatorial chain of `n_edges` segments, 0.01 degrees apart.
pub fn line(n_edges: u32) -> RoadNetwork {
    let nodes = (0..=n_edges)
        .map(|i| Node {
            id: i,
            lat: 0.0,
            lon: 0.01 * f64::from(i),
        })
        .collect();
    let edges = (0..n_edges)
        .map(|i| RoadEdge {
            id: i,
            a: i,
            b: i + 1,
            length_km: None,
        })
        .collect();
    RoadNetwork::new(nodes, edges).unwrap()
}

/// Convenience constructor for test trajectories.
pub fn traj(id: u64, segments: &[u32]) -> Trajectory {
    Trajectory {
        id,
        segments: segments.to_vec(),
    }
}
