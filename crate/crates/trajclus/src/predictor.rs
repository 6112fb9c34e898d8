//! Sequential m-step route prediction. Each step reselects the best
//! cluster from a window over the growing partial trajectory, then takes
//! the most probable next segment, falling back to the global chain when
//! the cluster has no outgoing row.

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::hybrid_npr_assign;
use crate::error::{Error, Result};
use crate::markov::TransitionMatrix;
use crate::pipeline::TrainedModel;
use crate::road_network::{EdgeId, SegmentDistanceMatrix};
use crate::trajectory::Trajectory;

/// Window length meaning "use the whole history".
pub const LAMBDA_FULL: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct PredictionRequest {
    pub partial: Vec<EdgeId>,
    pub steps: usize,
    pub lambda: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionResult {
    pub predicted: Vec<EdgeId>,
    /// Cluster/component/path chosen at each emitted step; empty for
    /// methods without a selection stage.
    pub cluster_trace: Vec<usize>,
    pub truncated: bool,
    #[serde(skip)]
    pub reason: Option<String>,
}

/// A trained method that can continue partial trajectories. Window logic
/// applies wherever the method selects among sub-models.
pub trait RoutePredictor: Sync {
    fn predict(&self, partial: &[EdgeId], steps: usize, lambda: usize) -> Result<PredictionResult>;
    fn method(&self) -> &'static str;
}

pub(crate) fn validate_request(
    partial: &[EdgeId],
    steps: usize,
    lambda: usize,
    num_edges: u32,
) -> Result<()> {
    if partial.is_empty() {
        return Err(Error::Arg("partial trajectory is empty".into()));
    }
    if steps < 1 {
        return Err(Error::Arg("steps must be at least 1".into()));
    }
    if lambda < 1 {
        return Err(Error::Arg("lambda must be at least 1".into()));
    }
    for &e in partial {
        if e >= num_edges {
            return Err(Error::Data(format!("partial trajectory uses unknown edge {e}")));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn window(tp: &[EdgeId], lambda: usize) -> &[EdgeId] {
    &tp[tp.len() - tp.len().min(lambda)..]
}

pub struct ClusivatPredictor<'a> {
    pub model: &'a TrainedModel,
    pub d_all: &'a SegmentDistanceMatrix,
}

impl RoutePredictor for ClusivatPredictor<'_> {
    fn predict(&self, partial: &[EdgeId], steps: usize, lambda: usize) -> Result<PredictionResult> {
        validate_request(partial, steps, lambda, self.model.num_edges)?;
        let mut tp = partial.to_vec();
        let mut out = PredictionResult {
            predicted: Vec::new(),
            cluster_trace: Vec::new(),
            truncated: false,
            reason: None,
        };
        for _ in 0..steps {
            let c = hybrid_npr_assign(window(&tp, lambda), &self.model.clusters, self.d_all)?;
            let last = *tp.last().unwrap();
            let step = self.model.clusters[c]
                .probs
                .next_location(last)
                .or_else(|| self.model.global_chain.next_location(last));
            match step {
                Some((next, _)) => {
                    tp.push(next);
                    out.predicted.push(next);
                    out.cluster_trace.push(c);
                }
                None => {
                    out.truncated = true;
                    out.reason = Some("dead end".into());
                    break;
                }
            }
        }
        Ok(out)
    }

    fn method(&self) -> &'static str {
        "clusivat"
    }
}

/// Plain first-order chain over all training data; no selection stage.
pub struct GlobalChainPredictor<'a> {
    pub chain: &'a TransitionMatrix,
    pub num_edges: u32,
}

impl RoutePredictor for GlobalChainPredictor<'_> {
    fn predict(&self, partial: &[EdgeId], steps: usize, lambda: usize) -> Result<PredictionResult> {
        validate_request(partial, steps, lambda, self.num_edges)?;
        let mut last = *partial.last().unwrap();
        let mut out = PredictionResult {
            predicted: Vec::new(),
            cluster_trace: Vec::new(),
            truncated: false,
            reason: None,
        };
        for _ in 0..steps {
            match self.chain.next_location(last) {
                Some((next, _)) => {
                    out.predicted.push(next);
                    last = next;
                }
                None => {
                    out.truncated = true;
                    out.reason = Some("dead end".into());
                    break;
                }
            }
        }
        Ok(out)
    }

    fn method(&self) -> &'static str {
        "global"
    }
}

/// Convenience wrapper matching the training entry point.
pub fn predict(
    model: &TrainedModel,
    d_all: &SegmentDistanceMatrix,
    req: &PredictionRequest,
) -> Result<PredictionResult> {
    ClusivatPredictor { model, d_all }.predict(&req.partial, req.steps, req.lambda)
}

/// Batch prediction preserving input order.
pub fn predict_batch(
    predictor: &dyn RoutePredictor,
    partials: &[Trajectory],
    steps: usize,
    lambda: usize,
) -> Result<Vec<(u64, PredictionResult)>> {
    partials
        .par_iter()
        .map(|t| Ok((t.id, predictor.predict(&t.segments, steps, lambda)?)))
        .collect()
}
