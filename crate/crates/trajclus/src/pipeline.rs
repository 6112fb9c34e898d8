//! Training orchestration: sampling, two-stage clustering, cluster model
//! construction, assignment of the unsampled remainder, and model-file
//! persistence for every method the crate trains.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{GlobalModel, MmmModel, NetscanModel};
use crate::cluster::{hybrid_npr_assign, ClusterModel, RepresentativeTrajectory};
use crate::dtw::{nd_traj_dtw, pairwise_matrix, DistanceMode};
use crate::error::{Error, Result};
use crate::markov::{TransitionCounts, TransitionMatrix};
use crate::mmrs::{maximin, proportional_sample};
use crate::road_network::{EdgeId, RoadNetwork, SegmentDistanceMatrix};
use crate::trajectory::TrajectoryDataset;
use crate::vat::{cut_alpha, ivat, vat, IvatMatrix, VatResult};

pub const MODEL_FORMAT: &str = "TCVM";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Number of distinguished objects for the maximin pass.
    pub k_prime: usize,
    /// Sample size drawn for the clustering stages.
    pub n: usize,
    pub alpha_stage1: f64,
    /// Defaults to alpha_stage1 when absent.
    pub alpha_stage2: Option<f64>,
    pub min_t: f64,
    pub seed: u64,
    pub min_len: usize,
    pub max_len: usize,
    /// Prediction window; usize::MAX means the full history.
    pub lambda_window: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_prime: 150,
            n: 500,
            alpha_stage1: 0.05,
            alpha_stage2: None,
            min_t: 0.3,
            seed: 0,
            min_len: 5,
            max_len: 200,
            lambda_window: 3,
        }
    }
}

impl PipelineConfig {
    pub fn alpha2(&self) -> f64 {
        self.alpha_stage2.unwrap_or(self.alpha_stage1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_prime < 1 {
            return Err(Error::Arg("k_prime must be at least 1".into()));
        }
        if self.n < self.k_prime {
            return Err(Error::Arg(format!(
                "sample size n={} must be at least k_prime={}",
                self.n, self.k_prime
            )));
        }
        if !(self.alpha_stage1 > 0.0) || !(self.alpha2() > 0.0) {
            return Err(Error::Arg("alpha thresholds must be positive".into()));
        }
        if !(self.min_t > 0.0 && self.min_t <= 1.0) {
            return Err(Error::Arg(format!("min_t must be in (0, 1], got {}", self.min_t)));
        }
        if self.min_len < 2 || self.max_len < self.min_len {
            return Err(Error::Arg("need 2 <= min_len <= max_len".into()));
        }
        if self.lambda_window < 1 {
            return Err(Error::Arg("lambda_window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub clusters: Vec<ClusterModel>,
    /// Cluster count after the non-directional stage.
    pub k_nondirectional: usize,
    pub global_counts: TransitionCounts,
    pub global_chain: TransitionMatrix,
    pub config: PipelineConfig,
    pub network_ref: String,
    pub num_edges: u32,
}

/// Side products of training kept out of the persisted model: the sample,
/// the stage-1 images, and the final assignment of every trajectory.
#[derive(Debug, Clone)]
pub struct TrainingDiagnostics {
    pub sample_indices: Vec<usize>,
    pub stage1_vat: VatResult,
    pub stage1_ivat: IvatMatrix,
    /// Stage-1 label per sample position.
    pub stage1_labels: Vec<usize>,
    /// Final cluster id per dataset index.
    pub assignments: Vec<usize>,
}

pub fn train(
    ds: &TrajectoryDataset,
    net: &RoadNetwork,
    d_all: &SegmentDistanceMatrix,
    cfg: &PipelineConfig,
) -> Result<(TrainedModel, TrainingDiagnostics)> {
    cfg.validate()?;
    let n_total = ds.trajectories.len();
    if cfg.n < 2 {
        return Err(Error::Data("sample size must be at least 2".into()));
    }
    if n_total < cfg.n {
        return Err(Error::Data(format!(
            "dataset holds {n_total} trajectories, fewer than sample size {}",
            cfg.n
        )));
    }
    if d_all.n() != net.num_edges() {
        return Err(Error::Data("distance matrix does not match the network".into()));
    }
    if !ds.network_ref.is_empty() && ds.network_ref != net.identifier() {
        return Err(Error::Data(format!(
            "dataset references network {} but got {}",
            ds.network_ref,
            net.identifier()
        )));
    }
    for t in &ds.trajectories {
        if t.segments.is_empty() {
            return Err(Error::Data(format!("trajectory {} is empty", t.id)));
        }
        for &e in &t.segments {
            if e as usize >= net.num_edges() {
                return Err(Error::Data(format!("trajectory {} uses unknown edge {e}", t.id)));
            }
        }
    }

    let segs: Vec<&[EdgeId]> = ds.trajectories.iter().map(|t| t.segments.as_slice()).collect();
    let nd = |a: usize, b: usize| nd_traj_dtw(segs[a], segs[b], d_all).unwrap();

    // Step i: maximin picks, then a proportional random sample.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let first = rng.gen_range(0..n_total);
    let mm = maximin(n_total, cfg.k_prime, first, nd)
        .map_err(|e| Error::Data(format!("sampling stage: {e}")))?;
    let sample_indices = proportional_sample(n_total, &mm.picks, cfg.n, &mut rng, nd)
        .map_err(|e| Error::Data(format!("sampling stage: {e}")))?;
    let sample_segs: Vec<&[EdgeId]> = sample_indices.iter().map(|&i| segs[i]).collect();

    // Step ii: non-directional clustering of the sample.
    let nd_matrix = pairwise_matrix(&sample_segs, d_all, DistanceMode::NonDirectional)
        .map_err(|e| Error::Data(format!("stage-1 distances: {e}")))?;
    let stage1_vat = vat(&nd_matrix).map_err(|e| Error::Data(format!("stage-1 vat: {e}")))?;
    let stage1_ivat = ivat(&stage1_vat);
    let stage1_labels = cut_alpha(&stage1_vat, cfg.alpha_stage1)
        .map_err(|e| Error::Data(format!("stage-1 cut: {e}")))?;
    let k = stage1_labels.iter().max().map_or(0, |&m| m + 1);

    // Step iii: directional split inside each stage-1 cluster. Singletons
    // pass through; everything larger gets its own VAT cut.
    let mut stage1_groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (pos, &label) in stage1_labels.iter().enumerate() {
        stage1_groups[label].push(pos);
    }
    let alpha2 = cfg.alpha2();
    let sub_labels: Vec<Vec<usize>> = stage1_groups
        .par_iter()
        .map(|group| -> Result<Vec<usize>> {
            if group.len() == 1 {
                return Ok(vec![0]);
            }
            let group_segs: Vec<&[EdgeId]> = group.iter().map(|&p| sample_segs[p]).collect();
            let dir = pairwise_matrix(&group_segs, d_all, DistanceMode::Directional)?;
            let v = vat(&dir)?;
            cut_alpha(&v, alpha2)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Data(format!("stage-2 split: {e}")))?;

    // Directional clusters in (stage-1 label, sub-label) order.
    let mut cluster_members: Vec<Vec<usize>> = Vec::new();
    for (group, subs) in stage1_groups.iter().zip(&sub_labels) {
        let sub_k = subs.iter().max().map_or(0, |&m| m + 1);
        let base = cluster_members.len();
        cluster_members.resize(base + sub_k, Vec::new());
        for (&pos, &sub) in group.iter().zip(subs) {
            cluster_members[base + sub].push(sample_indices[pos]);
        }
    }
    for members in &mut cluster_members {
        members.sort_unstable();
    }

    // Step iv: sample-level cluster models.
    let sample_clusters: Vec<ClusterModel> = cluster_members
        .iter()
        .enumerate()
        .map(|(id, members)| {
            ClusterModel::build(
                id,
                members.iter().map(|&i| (ds.trajectories[i].id, segs[i])),
                cfg.min_t,
            )
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Data(format!("cluster build: {e}")))?;

    // Step v: assign the unsampled remainder. Assignments are independent,
    // so parallel order cannot change the outcome.
    let sampled: std::collections::HashSet<usize> = sample_indices.iter().copied().collect();
    let unsampled: Vec<usize> = (0..n_total).filter(|i| !sampled.contains(i)).collect();
    let npr: Vec<usize> = unsampled
        .par_iter()
        .map(|&i| hybrid_npr_assign(segs[i], &sample_clusters, d_all))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Data(format!("assignment stage: {e}")))?;

    let mut assignments = vec![usize::MAX; n_total];
    for (cid, members) in cluster_members.iter().enumerate() {
        for &i in members {
            assignments[i] = cid;
        }
    }
    for (&i, &cid) in unsampled.iter().zip(&npr) {
        assignments[i] = cid;
    }

    // Steps vi and vii: rebuild every cluster from its full membership and
    // refresh the probability matrices, plus the global chain.
    let mut full_members: Vec<Vec<usize>> = vec![Vec::new(); sample_clusters.len()];
    for (i, &cid) in assignments.iter().enumerate() {
        full_members[cid].push(i);
    }
    let clusters: Vec<ClusterModel> = full_members
        .par_iter()
        .enumerate()
        .map(|(id, members)| {
            ClusterModel::build(
                id,
                members.iter().map(|&i| (ds.trajectories[i].id, segs[i])),
                cfg.min_t,
            )
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Data(format!("cluster rebuild: {e}")))?;

    let global_counts = TransitionCounts::from_trajectories(segs.iter().copied());
    let global_chain = TransitionMatrix::from_counts(&global_counts);

    let model = TrainedModel {
        clusters,
        k_nondirectional: k,
        global_counts,
        global_chain,
        config: cfg.clone(),
        network_ref: net.identifier().to_string(),
        num_edges: net.num_edges() as u32,
    };
    let diagnostics = TrainingDiagnostics {
        sample_indices,
        stage1_vat,
        stage1_ivat,
        stage1_labels,
        assignments,
    };
    Ok((model, diagnostics))
}

/// In-memory model of any training method, for uniform persistence and
/// evaluation dispatch.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Clusivat(TrainedModel),
    Netscan(NetscanModel),
    Mmm(MmmModel),
    Global(GlobalModel),
}

impl AnyModel {
    pub fn method_name(&self) -> &'static str {
        match self {
            AnyModel::Clusivat(_) => "clusivat",
            AnyModel::Netscan(_) => "netscan",
            AnyModel::Mmm(_) => "mmm",
            AnyModel::Global(_) => "global",
        }
    }
}

/// A model plus the network it was trained against.
#[derive(Debug, Clone)]
pub struct StoredModel {
    pub network_ref: String,
    pub num_edges: u32,
    pub model: AnyModel,
}

#[derive(Clone, Serialize, Deserialize)]
struct ClusterRecord {
    id: usize,
    members: Vec<u64>,
    counts: TransitionCounts,
    frs: Vec<EdgeId>,
    fss: Vec<EdgeId>,
    rt: RepresentativeTrajectory,
}

#[derive(Clone, Serialize, Deserialize)]
struct ClusivatRecord {
    config: PipelineConfig,
    k: usize,
    clusters: Vec<ClusterRecord>,
    global: TransitionCounts,
}

#[derive(Clone, Serialize, Deserialize)]
struct NetscanRecord {
    density_threshold: u64,
    similarity_threshold: u64,
    dense_paths: Vec<Vec<EdgeId>>,
    assignment: Vec<(u64, usize)>,
    path_counts: Vec<TransitionCounts>,
    global: TransitionCounts,
}

#[derive(Clone, Serialize, Deserialize)]
struct MmmRecord {
    components: usize,
    weights: Vec<f64>,
    init_rows: Vec<Vec<(EdgeId, f64)>>,
    trans_rows: Vec<Vec<(EdgeId, Vec<(EdgeId, f64)>)>>,
    responsibilities: Vec<Vec<f64>>,
    traj_ids: Vec<u64>,
    objective_trace: Vec<f64>,
    global: TransitionCounts,
}

#[derive(Clone, Serialize, Deserialize)]
struct GlobalRecord {
    counts: TransitionCounts,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "method", content = "data", rename_all = "snake_case")]
enum MethodRecord {
    Clusivat(ClusivatRecord),
    Netscan(NetscanRecord),
    Mmm(MmmRecord),
    Global(GlobalRecord),
}

#[derive(Serialize, Deserialize)]
struct ModelEnvelope {
    format: String,
    version: u32,
    network_ref: String,
    num_edges: u32,
    payload: MethodRecord,
    checksum: String,
}

fn envelope_checksum(envelope: &ModelEnvelope) -> Result<String> {
    // The checksum covers the envelope serialized with an empty checksum
    // field; serialization order is fixed by the struct definitions.
    let clean = ModelEnvelope {
        format: envelope.format.clone(),
        version: envelope.version,
        network_ref: envelope.network_ref.clone(),
        num_edges: envelope.num_edges,
        payload: envelope.payload.clone(),
        checksum: String::new(),
    };
    let bytes = serde_json::to_vec(&clean)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

fn to_envelope(m: &StoredModel) -> MethodRecord {
    match &m.model {
        AnyModel::Clusivat(t) => MethodRecord::Clusivat(ClusivatRecord {
            config: t.config.clone(),
            k: t.k_nondirectional,
            clusters: t
                .clusters
                .iter()
                .map(|c| ClusterRecord {
                    id: c.cluster_id,
                    members: c.members.clone(),
                    counts: c.counts.clone(),
                    frs: c.frs.iter().copied().collect(),
                    fss: c.fss.iter().copied().collect(),
                    rt: c.rt.clone(),
                })
                .collect(),
            global: t.global_counts.clone(),
        }),
        AnyModel::Netscan(ns) => MethodRecord::Netscan(NetscanRecord {
            density_threshold: ns.density_threshold,
            similarity_threshold: ns.similarity_threshold,
            dense_paths: ns.dense_paths.clone(),
            assignment: ns.assignment.iter().map(|(&k, &v)| (k, v)).collect(),
            path_counts: ns.path_counts.clone(),
            global: ns.global_counts.clone(),
        }),
        AnyModel::Mmm(mm) => MethodRecord::Mmm(MmmRecord {
            components: mm.components,
            weights: mm.weights.clone(),
            init_rows: mm.init_rows.clone(),
            trans_rows: mm.trans_rows.clone(),
            responsibilities: mm.responsibilities.clone(),
            traj_ids: mm.traj_ids.clone(),
            objective_trace: mm.objective_trace.clone(),
            global: mm.global_counts.clone(),
        }),
        AnyModel::Global(g) => MethodRecord::Global(GlobalRecord {
            counts: g.counts.clone(),
        }),
    }
}

fn from_envelope(env: ModelEnvelope) -> StoredModel {
    let model = match env.payload {
        MethodRecord::Clusivat(r) => {
            let clusters = r
                .clusters
                .into_iter()
                .map(|c| ClusterModel {
                    cluster_id: c.id,
                    members: c.members,
                    probs: TransitionMatrix::from_counts(&c.counts),
                    counts: c.counts,
                    frs: c.frs.into_iter().collect(),
                    fss: c.fss.into_iter().collect(),
                    rt: c.rt,
                })
                .collect();
            AnyModel::Clusivat(TrainedModel {
                clusters,
                k_nondirectional: r.k,
                global_chain: TransitionMatrix::from_counts(&r.global),
                global_counts: r.global,
                config: r.config,
                network_ref: env.network_ref.clone(),
                num_edges: env.num_edges,
            })
        }
        MethodRecord::Netscan(r) => AnyModel::Netscan(NetscanModel {
            density_threshold: r.density_threshold,
            similarity_threshold: r.similarity_threshold,
            path_chains: r.path_counts.iter().map(TransitionMatrix::from_counts).collect(),
            dense_paths: r.dense_paths,
            assignment: r.assignment.into_iter().collect(),
            path_counts: r.path_counts,
            global_chain: TransitionMatrix::from_counts(&r.global),
            global_counts: r.global,
        }),
        MethodRecord::Mmm(r) => AnyModel::Mmm(MmmModel {
            components: r.components,
            weights: r.weights,
            init_rows: r.init_rows,
            trans_rows: r.trans_rows,
            responsibilities: r.responsibilities,
            traj_ids: r.traj_ids,
            objective_trace: r.objective_trace,
            global_chain: TransitionMatrix::from_counts(&r.global),
            global_counts: r.global,
        }),
        MethodRecord::Global(r) => AnyModel::Global(GlobalModel {
            chain: TransitionMatrix::from_counts(&r.counts),
            counts: r.counts,
        }),
    };
    StoredModel {
        network_ref: env.network_ref,
        num_edges: env.num_edges,
        model,
    }
}

pub fn save_any_model(m: &StoredModel, path: &Path) -> Result<()> {
    let mut envelope = ModelEnvelope {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        network_ref: m.network_ref.clone(),
        num_edges: m.num_edges,
        payload: to_envelope(m),
        checksum: String::new(),
    };
    envelope.checksum = envelope_checksum(&envelope)?;
    std::fs::write(path, serde_json::to_vec(&envelope)?)?;
    Ok(())
}

pub fn load_any_model(path: &Path) -> Result<StoredModel> {
    let bytes = std::fs::read(path)?;
    let envelope: ModelEnvelope = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Format(format!("not a model file: {e}")))?;
    if envelope.format != MODEL_FORMAT {
        return Err(Error::Format(format!(
            "bad model magic {:?}, expected {MODEL_FORMAT:?}",
            envelope.format
        )));
    }
    if envelope.version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {} (supported: {MODEL_VERSION})",
            envelope.version
        )));
    }
    let expected = envelope_checksum(&envelope)?;
    if envelope.checksum != expected {
        return Err(Error::Format("model checksum mismatch".into()));
    }
    Ok(from_envelope(envelope))
}

pub fn save_model(m: &TrainedModel, path: &Path) -> Result<()> {
    save_any_model(
        &StoredModel {
            network_ref: m.network_ref.clone(),
            num_edges: m.num_edges,
            model: AnyModel::Clusivat(m.clone()),
        },
        path,
    )
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    match load_any_model(path)?.model {
        AnyModel::Clusivat(t) => Ok(t),
        other => Err(Error::Format(format!(
            "expected a clusivat model, found method {:?}",
            other.method_name()
        ))),
    }
}
