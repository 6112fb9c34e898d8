//! Road-network trajectory clustering and route prediction.
//!
//! The crate clusters GPS trajectories that have been map-matched to road
//! segments, builds one first-order Markov chain per cluster, and predicts
//! the next road segments of a partially observed trip. The pipeline is:
//!
//! 1. precompute an all-pairs segment distance matrix over the road network
//!    ([`road_network`]),
//! 2. draw a representative sample with maximin + proportional random
//!    sampling ([`mmrs`]),
//! 3. cluster the sample in two stages (non-directional, then directional)
//!    with VAT reordering and MST cuts ([`vat`], [`dtw`]),
//! 4. assign every remaining trajectory to a cluster with a hybrid
//!    probability/distance rule and extract representative trajectories
//!    ([`cluster`], [`pipeline`]),
//! 5. predict routes step by step from per-cluster chains with a global
//!    fallback ([`markov`], [`predictor`]),
//! 6. score predictions ([`evaluation`]) against baselines ([`baselines`]).
//!
//! [`synthgen`] generates labeled synthetic datasets on grid networks for
//! experiments, and the `trajclus` binary wires the whole thing into a small
//! CLI. The `examples/` directory has one runnable example per capability.

pub mod baselines;
pub mod cluster;
pub mod dtw;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod markov;
pub mod mmrs;
pub mod pipeline;
pub mod predictor;
pub mod road_network;
pub mod synthgen;
pub mod trajectory;
pub mod vat;

pub use error::{Error, Result};
pub use road_network::{EdgeId, NodeId, RoadNetwork, SegmentDistanceMatrix};
pub use trajectory::{Trajectory, TrajectoryDataset};
