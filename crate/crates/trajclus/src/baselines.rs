//! Comparison methods: NETSCAN dense-path clustering, a mixture of
//! first-order Markov chains fit by EM, and the plain global chain.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dtw::traj_dtw;
use crate::error::{Error, Result};
use crate::markov::{TransitionCounts, TransitionMatrix};
use crate::mmrs::{group_by_nearest, maximin};
use crate::predictor::{validate_request, window, PredictionResult, RoutePredictor};
use crate::road_network::{EdgeId, NodeId, RoadNetwork, SegmentDistanceMatrix};
use crate::trajectory::TrajectoryDataset;

// ---------------------------------------------------------------- global --

#[derive(Debug, Clone)]
pub struct GlobalModel {
    pub counts: TransitionCounts,
    pub chain: TransitionMatrix,
}

pub fn global_mm_train(ds: &TrajectoryDataset) -> Result<GlobalModel> {
    if ds.trajectories.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let counts =
        TransitionCounts::from_trajectories(ds.trajectories.iter().map(|t| t.segments.as_slice()));
    let chain = TransitionMatrix::from_counts(&counts);
    Ok(GlobalModel { counts, chain })
}

// --------------------------------------------------------------- netscan --

#[derive(Debug, Clone)]
pub struct NetscanModel {
    pub density_threshold: u64,
    pub similarity_threshold: u64,
    pub dense_paths: Vec<Vec<EdgeId>>,
    /// Trajectory id -> dense path index.
    pub assignment: BTreeMap<u64, usize>,
    pub path_counts: Vec<TransitionCounts>,
    pub path_chains: Vec<TransitionMatrix>,
    pub global_counts: TransitionCounts,
    pub global_chain: TransitionMatrix,
}

/// Dense paths must span at least this many segments to survive.
pub const MIN_PATH_SEGMENTS: usize = 6;

fn other_endpoint(net: &RoadNetwork, edge: EdgeId, node: NodeId) -> NodeId {
    let e = net.edge(edge);
    if e.a == node {
        e.b
    } else {
        e.a
    }
}

/// Greedy dense-path construction over segment pass counts. Returns the
/// kept paths; consumed segments of discarded short paths stay consumed.
fn build_dense_paths(
    net: &RoadNetwork,
    density: &[u64],
    density_threshold: u64,
    similarity_threshold: u64,
) -> Result<Vec<Vec<EdgeId>>> {
    let mut used = vec![false; net.num_edges()];
    let mut paths = Vec::new();
    let mut first = true;
    loop {
        let mut seed: Option<EdgeId> = None;
        for e in 0..net.num_edges() as EdgeId {
            if !used[e as usize]
                && density[e as usize] >= density_threshold
                && seed.map_or(true, |s| density[e as usize] > density[s as usize])
            {
                seed = Some(e);
            }
        }
        let Some(seed) = seed else {
            if first {
                return Err(Error::Data(format!(
                    "no segment reaches density threshold {density_threshold}"
                )));
            }
            break;
        };
        first = false;
        used[seed as usize] = true;
        let mut path = VecDeque::from([seed]);
        let mut head_node = net.edge(seed).a;
        let mut tail_node = net.edge(seed).b;
        // Best unused neighbor at a free end: above the density floor and
        // within the similarity band of the current end segment.
        let extend = |node: NodeId, end_edge: EdgeId, used: &[bool]| -> Option<EdgeId> {
            let mut best: Option<EdgeId> = None;
            for &cand in net.edges_at_node(node).unwrap() {
                if used[cand as usize]
                    || density[cand as usize] < density_threshold
                    || density[cand as usize].abs_diff(density[end_edge as usize])
                        > similarity_threshold
                {
                    continue;
                }
                if best.map_or(true, |b| density[cand as usize] > density[b as usize]) {
                    best = Some(cand);
                }
            }
            best
        };
        loop {
            let mut grew = false;
            if let Some(e) = extend(tail_node, *path.back().unwrap(), &used) {
                used[e as usize] = true;
                tail_node = other_endpoint(net, e, tail_node);
                path.push_back(e);
                grew = true;
            }
            if let Some(e) = extend(head_node, *path.front().unwrap(), &used) {
                used[e as usize] = true;
                head_node = other_endpoint(net, e, head_node);
                path.push_front(e);
                grew = true;
            }
            if !grew {
                break;
            }
        }
        if path.len() >= MIN_PATH_SEGMENTS {
            paths.push(path.into_iter().collect());
        }
    }
    Ok(paths)
}

/// Longest run of consecutive segments that all belong to `set`.
fn longest_member_run(segs: &[EdgeId], set: &HashSet<EdgeId>) -> usize {
    let mut best = 0;
    let mut run = 0;
    for s in segs {
        if set.contains(s) {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Path choice for one trajectory: most distinct shared segments, then the
/// longest contiguous overlap run, then the lowest path id; with no overlap
/// anywhere, the nearest path under directional trajDTW.
fn assign_to_path(
    segs: &[EdgeId],
    paths: &[Vec<EdgeId>],
    path_sets: &[HashSet<EdgeId>],
    d_all: &SegmentDistanceMatrix,
) -> Result<usize> {
    if paths.is_empty() {
        return Err(Error::Data("no dense paths".into()));
    }
    let distinct: HashSet<EdgeId> = segs.iter().copied().collect();
    let mut best: Option<(usize, usize, usize)> = None; // shared, run, idx
    for (idx, set) in path_sets.iter().enumerate() {
        let shared = distinct.iter().filter(|s| set.contains(s)).count();
        if shared == 0 {
            continue;
        }
        let run = longest_member_run(segs, set);
        if best.map_or(true, |(bs, br, _)| shared > bs || (shared == bs && run > br)) {
            best = Some((shared, run, idx));
        }
    }
    if let Some((_, _, idx)) = best {
        return Ok(idx);
    }
    let mut best_d = f64::INFINITY;
    let mut best_idx = 0;
    for (idx, path) in paths.iter().enumerate() {
        let d = traj_dtw(segs, path, d_all)?;
        if d < best_d {
            best_d = d;
            best_idx = idx;
        }
    }
    Ok(best_idx)
}

pub fn netscan_train(
    ds: &TrajectoryDataset,
    net: &RoadNetwork,
    d_all: &SegmentDistanceMatrix,
    density_threshold: u64,
    similarity_threshold: u64,
) -> Result<NetscanModel> {
    if density_threshold < 1 || similarity_threshold < 1 {
        return Err(Error::Arg("thresholds must be positive".into()));
    }
    if ds.trajectories.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let global_counts =
        TransitionCounts::from_trajectories(ds.trajectories.iter().map(|t| t.segments.as_slice()));
    let mut density = vec![0u64; net.num_edges()];
    for (&seg, &c) in &global_counts.pass_counts {
        density[seg as usize] = c;
    }
    let global_chain = TransitionMatrix::from_counts(&global_counts);
    let dense_paths = build_dense_paths(net, &density, density_threshold, similarity_threshold)?;
    if dense_paths.is_empty() {
        return Err(Error::Data(format!(
            "every dense path fell short of {MIN_PATH_SEGMENTS} segments"
        )));
    }
    let path_sets: Vec<HashSet<EdgeId>> = dense_paths
        .iter()
        .map(|p| p.iter().copied().collect())
        .collect();
    let assigned: Vec<usize> = ds
        .trajectories
        .par_iter()
        .map(|t| assign_to_path(&t.segments, &dense_paths, &path_sets, d_all))
        .collect::<Result<Vec<_>>>()?;
    let mut assignment = BTreeMap::new();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); dense_paths.len()];
    for (i, (&path_idx, t)) in assigned.iter().zip(&ds.trajectories).enumerate() {
        assignment.insert(t.id, path_idx);
        groups[path_idx].push(i);
    }
    let path_counts: Vec<TransitionCounts> = groups
        .iter()
        .map(|g| {
            TransitionCounts::from_trajectories(
                g.iter().map(|&i| ds.trajectories[i].segments.as_slice()),
            )
        })
        .collect();
    let path_chains = path_counts.iter().map(TransitionMatrix::from_counts).collect();
    Ok(NetscanModel {
        density_threshold,
        similarity_threshold,
        dense_paths,
        assignment,
        path_counts,
        path_chains,
        global_counts,
        global_chain,
    })
}

/// Number of dense paths a threshold pair produces, without assignment.
pub fn netscan_path_count(
    ds: &TrajectoryDataset,
    net: &RoadNetwork,
    density_threshold: u64,
    similarity_threshold: u64,
) -> Result<usize> {
    let counts =
        TransitionCounts::from_trajectories(ds.trajectories.iter().map(|t| t.segments.as_slice()));
    let mut density = vec![0u64; net.num_edges()];
    for (&seg, &c) in &counts.pass_counts {
        density[seg as usize] = c;
    }
    match build_dense_paths(net, &density, density_threshold, similarity_threshold) {
        Ok(paths) => Ok(paths.len()),
        Err(Error::Data(_)) => Ok(0),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub best_threshold: u64,
    pub best_count: usize,
    /// Every scanned (density threshold, dense path count) pair, ascending.
    pub curve: Vec<(u64, usize)>,
}

/// Scans density thresholds over the distinct observed densities and picks
/// the one whose dense-path count comes closest to `target_k` (ties go to
/// the lower threshold).
pub fn netscan_tune(
    ds: &TrajectoryDataset,
    net: &RoadNetwork,
    similarity_threshold: u64,
    target_k: usize,
) -> Result<TuneResult> {
    let counts =
        TransitionCounts::from_trajectories(ds.trajectories.iter().map(|t| t.segments.as_slice()));
    let mut thresholds: BTreeSet<u64> = counts.pass_counts.values().copied().collect();
    thresholds.insert(1);
    let mut curve = Vec::with_capacity(thresholds.len());
    let mut best: Option<(u64, usize)> = None;
    for &thr in &thresholds {
        let count = netscan_path_count(ds, net, thr, similarity_threshold)?;
        curve.push((thr, count));
        let better = match best {
            None => true,
            Some((_, bc)) => count.abs_diff(target_k) < bc.abs_diff(target_k),
        };
        if better {
            best = Some((thr, count));
        }
    }
    let (best_threshold, best_count) =
        best.ok_or_else(|| Error::Data("no usable density threshold".into()))?;
    Ok(TuneResult {
        best_threshold,
        best_count,
        curve,
    })
}

pub struct NetscanPredictor<'a> {
    pub model: &'a NetscanModel,
    pub d_all: &'a SegmentDistanceMatrix,
    pub num_edges: u32,
}

impl RoutePredictor for NetscanPredictor<'_> {
    fn predict(&self, partial: &[EdgeId], steps: usize, lambda: usize) -> Result<PredictionResult> {
        validate_request(partial, steps, lambda, self.num_edges)?;
        let path_sets: Vec<HashSet<EdgeId>> = self
            .model
            .dense_paths
            .iter()
            .map(|p| p.iter().copied().collect())
            .collect();
        let mut tp = partial.to_vec();
        let mut out = PredictionResult {
            predicted: Vec::new(),
            cluster_trace: Vec::new(),
            truncated: false,
            reason: None,
        };
        for _ in 0..steps {
            let w = window(&tp, lambda);
            let p = assign_to_path(w, &self.model.dense_paths, &path_sets, self.d_all)?;
            let last = *tp.last().unwrap();
            let step = self.model.path_chains[p]
                .next_location(last)
                .or_else(|| self.model.global_chain.next_location(last));
            match step {
                Some((next, _)) => {
                    tp.push(next);
                    out.predicted.push(next);
                    out.cluster_trace.push(p);
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
        "netscan"
    }
}

// ------------------------------------------------------------------- mmm --

pub const MMM_SMOOTHING: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct MmmModel {
    pub components: usize,
    pub weights: Vec<f64>,
    /// Per component: smoothed initial distribution over observed origins.
    pub init_rows: Vec<Vec<(EdgeId, f64)>>,
    /// Per component: smoothed transition rows over observed successors.
    pub trans_rows: Vec<Vec<(EdgeId, Vec<(EdgeId, f64)>)>>,
    /// Final E-step responsibilities, one row per trajectory.
    pub responsibilities: Vec<Vec<f64>>,
    pub traj_ids: Vec<u64>,
    /// Penalized log-likelihood after each E-step.
    pub objective_trace: Vec<f64>,
    pub global_counts: TransitionCounts,
    pub global_chain: TransitionMatrix,
}

struct TrajStats {
    origin: EdgeId,
    /// Occurrence counts of consecutive pairs (unlike the trajectory-level
    /// counting of the main method, the likelihood multiplies every step).
    trans: Vec<((EdgeId, EdgeId), u64)>,
}

struct MmmParams {
    weights: Vec<f64>,
    init: Vec<BTreeMap<EdgeId, f64>>,
    trans: Vec<BTreeMap<EdgeId, BTreeMap<EdgeId, f64>>>,
}

fn m_step(
    stats: &[TrajStats],
    resp: &[Vec<f64>],
    origins: &BTreeSet<EdgeId>,
    support: &BTreeMap<EdgeId, BTreeSet<EdgeId>>,
    components: usize,
) -> MmmParams {
    let n = stats.len();
    let mut weights = vec![0.0; components];
    for row in resp {
        for (c, &r) in row.iter().enumerate() {
            weights[c] += r;
        }
    }
    for w in &mut weights {
        *w /= n as f64;
    }
    let mut init = Vec::with_capacity(components);
    let mut trans = Vec::with_capacity(components);
    for c in 0..components {
        let mut origin_counts: BTreeMap<EdgeId, f64> =
            origins.iter().map(|&o| (o, 0.0)).collect();
        let mut pair_counts: BTreeMap<EdgeId, BTreeMap<EdgeId, f64>> = support
            .iter()
            .map(|(&f, tos)| (f, tos.iter().map(|&t| (t, 0.0)).collect()))
            .collect();
        for (t, stat) in stats.iter().enumerate() {
            let r = resp[t][c];
            *origin_counts.get_mut(&stat.origin).unwrap() += r;
            for &((from, to), cnt) in &stat.trans {
                *pair_counts.get_mut(&from).unwrap().get_mut(&to).unwrap() += r * cnt as f64;
            }
        }
        let origin_total: f64 = origin_counts.values().sum();
        let denom = origin_total + MMM_SMOOTHING * origins.len() as f64;
        let pi: BTreeMap<EdgeId, f64> = origin_counts
            .iter()
            .map(|(&o, &v)| (o, (v + MMM_SMOOTHING) / denom))
            .collect();
        let a: BTreeMap<EdgeId, BTreeMap<EdgeId, f64>> = pair_counts
            .iter()
            .map(|(&from, row)| {
                let row_total: f64 = row.values().sum();
                let denom = row_total + MMM_SMOOTHING * row.len() as f64;
                (
                    from,
                    row.iter()
                        .map(|(&to, &v)| (to, (v + MMM_SMOOTHING) / denom))
                        .collect(),
                )
            })
            .collect();
        init.push(pi);
        trans.push(a);
    }
    MmmParams {
        weights,
        init,
        trans,
    }
}

/// Responsibilities plus the penalized log-likelihood (the data likelihood
/// with the Dirichlet terms the smoothing corresponds to, which is the
/// quantity EM increases monotonically here).
fn e_step(stats: &[TrajStats], params: &MmmParams, components: usize) -> (Vec<Vec<f64>>, f64) {
    let scored: Vec<(Vec<f64>, f64)> = stats
        .par_iter()
        .map(|stat| {
            let mut log_scores = Vec::with_capacity(components);
            for c in 0..components {
                let mut s = params.weights[c].ln() + params.init[c][&stat.origin].ln();
                for &((from, to), cnt) in &stat.trans {
                    s += cnt as f64 * params.trans[c][&from][&to].ln();
                }
                log_scores.push(s);
            }
            let max = log_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = log_scores.iter().map(|&s| (s - max).exp()).sum();
            let ll = max + sum_exp.ln();
            let row: Vec<f64> = log_scores.iter().map(|&s| (s - ll).exp()).collect();
            (row, ll)
        })
        .collect();
    let mut resp = Vec::with_capacity(stats.len());
    let mut ll = 0.0;
    for (row, l) in scored {
        resp.push(row);
        ll += l;
    }
    let mut penalty = 0.0;
    for c in 0..components {
        for p in params.init[c].values() {
            penalty += MMM_SMOOTHING * p.ln();
        }
        for row in params.trans[c].values() {
            for p in row.values() {
                penalty += MMM_SMOOTHING * p.ln();
            }
        }
    }
    (resp, ll + penalty)
}

pub fn mmm_train(
    ds: &TrajectoryDataset,
    components: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<MmmModel> {
    let n = ds.trajectories.len();
    if n == 0 {
        return Err(Error::Data("empty dataset".into()));
    }
    if components < 1 || components > n {
        return Err(Error::Arg(format!(
            "components must be in 1..={n}, got {components}"
        )));
    }
    if max_iters < 1 {
        return Err(Error::Arg("max_iters must be at least 1".into()));
    }
    let mut origins = BTreeSet::new();
    let mut support: BTreeMap<EdgeId, BTreeSet<EdgeId>> = BTreeMap::new();
    let mut stats = Vec::with_capacity(n);
    for t in &ds.trajectories {
        if t.segments.is_empty() {
            return Err(Error::Data(format!("trajectory {} is empty", t.id)));
        }
        origins.insert(t.segments[0]);
        let mut trans: BTreeMap<(EdgeId, EdgeId), u64> = BTreeMap::new();
        for w in t.segments.windows(2) {
            support.entry(w[0]).or_default().insert(w[1]);
            *trans.entry((w[0], w[1])).or_insert(0) += 1;
        }
        stats.push(TrajStats {
            origin: t.segments[0],
            trans: trans.into_iter().collect(),
        });
    }

    // Exemplar seeding. Aggregated random responsibilities leave EM at a
    // fixed point on datasets whose patterns share no segments (every
    // balanced split explains the data equally well), so each component is
    // instead anchored to a farthest-first exemplar trajectory under
    // Jaccard distance, and every trajectory starts softly assigned to its
    // nearest exemplar. Disjoint supports then separate in one step.
    let sets: Vec<BTreeSet<EdgeId>> = ds
        .trajectories
        .iter()
        .map(|t| t.segments.iter().copied().collect())
        .collect();
    let jaccard = |i: usize, j: usize| {
        let inter = sets[i].intersection(&sets[j]).count();
        let union = sets[i].len() + sets[j].len() - inter;
        1.0 - inter as f64 / union as f64
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n);
    let picks = maximin(n, components, first, jaccard)?.picks;
    let nearest = group_by_nearest(n, &picks, jaccard);
    const SOFT: f64 = 1e-3;
    let anchored = 1.0 - SOFT * (components - 1) as f64;
    let mut resp: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let mut row = vec![SOFT; components];
            row[nearest[t]] = anchored;
            row
        })
        .collect();

    let mut params = m_step(&stats, &resp, &origins, &support, components);
    let mut trace = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..max_iters {
        let (new_resp, obj) = e_step(&stats, &params, components);
        resp = new_resp;
        trace.push(obj);
        if obj - prev < tol && prev > f64::NEG_INFINITY {
            break;
        }
        prev = obj;
        params = m_step(&stats, &resp, &origins, &support, components);
    }

    let global_counts =
        TransitionCounts::from_trajectories(ds.trajectories.iter().map(|t| t.segments.as_slice()));
    Ok(MmmModel {
        components,
        weights: params.weights,
        init_rows: params
            .init
            .iter()
            .map(|m| m.iter().map(|(&k, &v)| (k, v)).collect())
            .collect(),
        trans_rows: params
            .trans
            .iter()
            .map(|m| {
                m.iter()
                    .map(|(&from, row)| (from, row.iter().map(|(&t, &p)| (t, p)).collect()))
                    .collect()
            })
            .collect(),
        responsibilities: resp,
        traj_ids: ds.trajectories.iter().map(|t| t.id).collect(),
        objective_trace: trace,
        global_chain: TransitionMatrix::from_counts(&global_counts),
        global_counts,
    })
}

impl MmmModel {
    fn trans_row(&self, c: usize, from: EdgeId) -> Option<&[(EdgeId, f64)]> {
        let rows = &self.trans_rows[c];
        rows.binary_search_by_key(&from, |&(f, _)| f)
            .ok()
            .map(|i| rows[i].1.as_slice())
    }

    fn trans_prob(&self, c: usize, from: EdgeId, to: EdgeId) -> Option<f64> {
        let row = self.trans_row(c, from)?;
        row.binary_search_by_key(&to, |&(t, _)| t)
            .ok()
            .map(|i| row[i].1)
    }

    /// Mixture log-likelihood of a full trajectory, flooring probabilities
    /// outside the trained support; used by the cross-validation sweep.
    pub fn score_trajectory(&self, segs: &[EdgeId]) -> f64 {
        const FLOOR: f64 = 1e-12;
        let mut log_scores = Vec::with_capacity(self.components);
        for c in 0..self.components {
            let mut s = self.weights[c].max(FLOOR).ln();
            let init = &self.init_rows[c];
            let pi = init
                .binary_search_by_key(&segs[0], |&(o, _)| o)
                .ok()
                .map(|i| init[i].1)
                .unwrap_or(FLOOR);
            s += pi.ln();
            for w in segs.windows(2) {
                s += self.trans_prob(c, w[0], w[1]).unwrap_or(FLOOR).ln();
            }
            log_scores.push(s);
        }
        let max = log_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + log_scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln()
    }

    /// Component choice for a window: highest ln weight plus transition
    /// log-probabilities (the window start is not treated as an origin).
    fn select_component(&self, w: &[EdgeId]) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for c in 0..self.components {
            let mut s = self.weights[c].ln();
            for pair in w.windows(2) {
                s += self
                    .trans_prob(c, pair[0], pair[1])
                    .map_or(f64::NEG_INFINITY, f64::ln);
            }
            if s > best_score {
                best_score = s;
                best = c;
            }
        }
        best
    }
}

pub struct MmmPredictor<'a> {
    pub model: &'a MmmModel,
    pub num_edges: u32,
}

impl RoutePredictor for MmmPredictor<'_> {
    fn predict(&self, partial: &[EdgeId], steps: usize, lambda: usize) -> Result<PredictionResult> {
        validate_request(partial, steps, lambda, self.num_edges)?;
        let mut tp = partial.to_vec();
        let mut out = PredictionResult {
            predicted: Vec::new(),
            cluster_trace: Vec::new(),
            truncated: false,
            reason: None,
        };
        for _ in 0..steps {
            let c = self.model.select_component(window(&tp, lambda));
            let last = *tp.last().unwrap();
            let from_component = self.model.trans_row(c, last).map(|row| {
                let mut best = row[0];
                for &(to, p) in row {
                    if p > best.1 {
                        best = (to, p);
                    }
                }
                (best.0, best.1)
            });
            let step = from_component.or_else(|| self.model.global_chain.next_location(last));
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
        "mmm"
    }
}

pub struct GlobalPredictorOwned<'a> {
    pub model: &'a GlobalModel,
    pub num_edges: u32,
}

impl RoutePredictor for GlobalPredictorOwned<'_> {
    fn predict(&self, partial: &[EdgeId], steps: usize, lambda: usize) -> Result<PredictionResult> {
        crate::predictor::GlobalChainPredictor {
            chain: &self.model.chain,
            num_edges: self.num_edges,
        }
        .predict(partial, steps, lambda)
    }

    fn method(&self) -> &'static str {
        "global"
    }
}

/// K-fold cross-validation over component counts; returns the mean
/// held-out per-trajectory log-likelihood for each candidate.
pub fn mmm_cv_sweep(
    ds: &TrajectoryDataset,
    component_grid: &[usize],
    folds: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<Vec<(usize, f64)>> {
    let n = ds.trajectories.len();
    if folds < 2 || folds > n {
        return Err(Error::Arg(format!("folds must be in 2..={n}, got {folds}")));
    }
    if component_grid.is_empty() {
        return Err(Error::Arg("empty component grid".into()));
    }
    let mut results = Vec::new();
    for &components in component_grid {
        let mut total_ll = 0.0;
        for fold in 0..folds {
            let train_set: Vec<_> = ds
                .trajectories
                .iter()
                .enumerate()
                .filter(|(i, _)| i % folds != fold)
                .map(|(_, t)| t.clone())
                .collect();
            let held_out: Vec<_> = ds
                .trajectories
                .iter()
                .enumerate()
                .filter(|(i, _)| i % folds == fold)
                .map(|(_, t)| t.clone())
                .collect();
            if train_set.len() < components {
                return Err(Error::Arg(format!(
                    "fold of {} trajectories cannot fit {components} components",
                    train_set.len()
                )));
            }
            let sub = TrajectoryDataset {
                trajectories: train_set,
                network_ref: ds.network_ref.clone(),
            };
            let model = mmm_train(&sub, components, seed, max_iters, tol)?;
            for t in &held_out {
                total_ll += model.score_trajectory(&t.segments);
            }
        }
        results.push((components, total_ll / n as f64));
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{line, traj};
    use crate::road_network::all_pairs_segment_distances;
    use crate::trajectory::Trajectory;

    fn dataset(net: &RoadNetwork, routes: Vec<Trajectory>) -> TrajectoryDataset {
        TrajectoryDataset {
            trajectories: routes,
            network_ref: net.identifier().to_string(),
        }
    }

    fn repeat_route(first_id: u64, route: &[u32], times: u64) -> Vec<Trajectory> {
        (0..times).map(|i| traj(first_id + i, route)).collect()
    }

    #[test]
    fn netscan_recovers_a_dominant_route() {
        let net = line(10);
        let d_all = all_pairs_segment_distances(&net).unwrap();
        let route: Vec<u32> = (0..10).collect();
        let ds = dataset(&net, repeat_route(0, &route, 5));
        let m = netscan_train(&ds, &net, &d_all, 1, 10).unwrap();
        assert_eq!(m.dense_paths, vec![route.clone()]);
        assert!(m.assignment.values().all(|&p| p == 0));
        let p = NetscanPredictor {
            model: &m,
            d_all: &d_all,
            num_edges: net.num_edges() as u32,
        };
        let r = p.predict(&[0, 1], 3, 3).unwrap();
        assert_eq!(r.predicted, vec![2, 3, 4]);
        assert_eq!(r.cluster_trace, vec![0, 0, 0]);
    }

    #[test]
    fn netscan_rejects_unreachable_density() {
        let net = line(10);
        let d_all = all_pairs_segment_distances(&net).unwrap();
        let route: Vec<u32> = (0..10).collect();
        let ds = dataset(&net, repeat_route(0, &route, 2));
        assert!(netscan_train(&ds, &net, &d_all, 3, 10).is_err());
        assert!(netscan_train(&ds, &net, &d_all, 0, 10).is_err());
    }

    #[test]
    fn netscan_separates_disjoint_busy_routes() {
        // Edges 0..8 and 12..20 are busy; the bridge 9..11 stays unused.
        let net = line(21);
        let d_all = all_pairs_segment_distances(&net).unwrap();
        let route_a: Vec<u32> = (0..9).collect();
        let route_b: Vec<u32> = (12..21).collect();
        let mut routes = repeat_route(0, &route_a, 5);
        routes.extend(repeat_route(100, &route_b, 4));
        let ds = dataset(&net, routes);
        let m = netscan_train(&ds, &net, &d_all, 3, 10).unwrap();
        assert_eq!(m.dense_paths.len(), 2);
        assert_eq!(m.dense_paths[0], route_a);
        assert_eq!(m.dense_paths[1], route_b);
        for t in &ds.trajectories {
            let expected = if t.id < 100 { 0 } else { 1 };
            assert_eq!(m.assignment[&t.id], expected);
        }
        // Paths never share segments.
        let s0: HashSet<u32> = m.dense_paths[0].iter().copied().collect();
        assert!(m.dense_paths[1].iter().all(|e| !s0.contains(e)));
    }

    #[test]
    fn netscan_discards_short_paths_but_consumes_their_segments() {
        let net = line(4);
        let d_all = all_pairs_segment_distances(&net).unwrap();
        let route: Vec<u32> = (0..4).collect();
        let ds = dataset(&net, repeat_route(0, &route, 3));
        // The only candidate path has 4 < 6 segments.
        assert!(netscan_train(&ds, &net, &d_all, 1, 10).is_err());
        assert_eq!(netscan_path_count(&ds, &net, 1, 10).unwrap(), 0);
    }

    #[test]
    fn netscan_tune_matches_target() {
        let net = line(21);
        let route_a: Vec<u32> = (0..9).collect();
        let route_b: Vec<u32> = (12..21).collect();
        let mut routes = repeat_route(0, &route_a, 5);
        routes.extend(repeat_route(100, &route_b, 4));
        let ds = dataset(&net, routes);
        let tuned = netscan_tune(&ds, &net, 10, 2).unwrap();
        assert_eq!(tuned.best_count, 2);
        assert!(tuned.best_threshold >= 1 && tuned.best_threshold <= 4);
        assert!(tuned.curve.len() >= 2);
        assert!(tuned.curve.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn mmm_single_component_matches_global_chain_argmax() {
        let net = line(6);
        let mut routes = repeat_route(0, &[0, 1, 2], 3);
        routes.extend(repeat_route(10, &[1, 2, 3], 1));
        let ds = dataset(&net, routes);
        let m = mmm_train(&ds, 1, 7, 50, 1e-9).unwrap();
        assert_eq!(m.weights, vec![1.0]);
        let p = MmmPredictor {
            model: &m,
            num_edges: net.num_edges() as u32,
        };
        let r = p.predict(&[0], 2, 3).unwrap();
        assert_eq!(r.predicted, vec![1, 2]);
    }

    #[test]
    fn mmm_objective_is_monotone() {
        let net = line(8);
        let mut routes = repeat_route(0, &[0, 1, 2, 3], 4);
        routes.extend(repeat_route(10, &[4, 5, 6, 7], 4));
        let ds = dataset(&net, routes);
        let m = mmm_train(&ds, 2, 3, 100, 1e-12).unwrap();
        for w in m.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "objective fell: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn mmm_separates_disjoint_patterns() {
        let net = line(8);
        let mut routes = repeat_route(0, &[0, 1, 2, 3], 6);
        routes.extend(repeat_route(10, &[4, 5, 6, 7], 6));
        let ds = dataset(&net, routes);
        let m = mmm_train(&ds, 2, 1, 200, 1e-9).unwrap();
        // Within-pattern rows agree on a component, across patterns differ.
        let comp_of = |row: &Vec<f64>| -> usize {
            if row[0] > row[1] {
                0
            } else {
                1
            }
        };
        let first = comp_of(&m.responsibilities[0]);
        let second = comp_of(&m.responsibilities[6]);
        assert_ne!(first, second);
        for (i, row) in m.responsibilities.iter().enumerate() {
            let expected = if i < 6 { first } else { second };
            assert_eq!(comp_of(row), expected, "trajectory {i}");
            assert!(row[expected] >= 0.99, "weak responsibility {row:?}");
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mmm_validates_arguments() {
        let net = line(4);
        let ds = dataset(&net, repeat_route(0, &[0, 1], 3));
        assert!(mmm_train(&ds, 0, 1, 10, 1e-6).is_err());
        assert!(mmm_train(&ds, 4, 1, 10, 1e-6).is_err());
        let empty = dataset(&net, vec![]);
        assert!(mmm_train(&empty, 1, 1, 10, 1e-6).is_err());
    }

    #[test]
    fn mmm_cv_prefers_the_true_component_count() {
        // Both routes cross the middle segment 3 and branch by origin:
        // 0 -> 3 -> 5 and 2 -> 3 -> 6 on a 2x3 grid. A single chain halves
        // the branch probability; a 2-component mixture keeps it at 1, so
        // held-out likelihood exposes the true count. Fully disjoint
        // patterns would not work here: they are representable by one
        // chain, so the sweep would tie.
        let net = crate::synthgen::make_grid_network(2, 3, 0.001).unwrap();
        let mut routes = Vec::new();
        for i in 0..8 {
            routes.push(traj(i, &[0, 3, 5]));
            routes.push(traj(100 + i, &[2, 3, 6]));
        }
        let ds = dataset(&net, routes);
        let sweep = mmm_cv_sweep(&ds, &[1, 2], 4, 5, 100, 1e-9).unwrap();
        assert_eq!(sweep.len(), 2);
        let ll1 = sweep[0].1;
        let ll2 = sweep[1].1;
        assert!(
            ll2 > ll1 + 0.5,
            "two components should fit better: {ll1} vs {ll2}"
        );
    }

    #[test]
    fn global_baseline_is_the_plain_chain() {
        let net = line(6);
        let ds = dataset(&net, repeat_route(0, &[0, 1, 2], 3));
        let g = global_mm_train(&ds).unwrap();
        assert_eq!(g.chain.prob(0, 1), 1.0);
        let p = GlobalPredictorOwned {
            model: &g,
            num_edges: net.num_edges() as u32,
        };
        let r = p.predict(&[0], 2, 3).unwrap();
        assert_eq!(r.predicted, vec![1, 2]);
        assert!(global_mm_train(&dataset(&net, vec![])).is_err());
    }
}
