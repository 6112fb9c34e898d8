//! Per-cluster artifacts: frequent segment sets, the representative
//! trajectory grown by transition-count argmax, and hybrid
//! nearest-prototype assignment of query trajectories.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dtw::traj_dtw;
use crate::error::{Error, Result};
use crate::markov::{TransitionCounts, TransitionMatrix};
use crate::road_network::{EdgeId, SegmentDistanceMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeTrajectory {
    pub segments: Vec<EdgeId>,
    pub count_score: u64,
    pub origin_fss: EdgeId,
}

#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub cluster_id: usize,
    pub members: Vec<u64>,
    pub counts: TransitionCounts,
    pub probs: TransitionMatrix,
    pub frs: BTreeSet<EdgeId>,
    pub fss: BTreeSet<EdgeId>,
    pub rt: RepresentativeTrajectory,
}

/// Segments traversed by at least `min_t` of the cluster's trajectories.
pub fn compute_frs(counts: &TransitionCounts, n_members: usize, min_t: f64) -> Result<BTreeSet<EdgeId>> {
    if n_members == 0 {
        return Err(Error::Arg("cluster has no members".into()));
    }
    if !(min_t > 0.0 && min_t <= 1.0) {
        return Err(Error::Arg(format!("min_t must be in (0, 1], got {min_t}")));
    }
    let threshold = min_t * n_members as f64;
    Ok(counts
        .pass_counts
        .iter()
        .filter(|&(_, &c)| c as f64 >= threshold)
        .map(|(&s, _)| s)
        .collect())
}

/// Frequent source segments: origin_count at least `min_t` of the cluster,
/// restricted to segments that are themselves frequent.
pub fn compute_fss(
    counts: &TransitionCounts,
    n_members: usize,
    min_t: f64,
    frs: &BTreeSet<EdgeId>,
) -> Result<BTreeSet<EdgeId>> {
    if n_members == 0 {
        return Err(Error::Arg("cluster has no members".into()));
    }
    if !(min_t > 0.0 && min_t <= 1.0) {
        return Err(Error::Arg(format!("min_t must be in (0, 1], got {min_t}")));
    }
    let threshold = min_t * n_members as f64;
    Ok(counts
        .origin_counts
        .iter()
        .filter(|&(s, &c)| c as f64 >= threshold && frs.contains(s))
        .map(|(&s, _)| s)
        .collect())
}

/// Highest transition count out of `from`; ties resolve to the lowest
/// target id (rows iterate in ascending key order, kept on strict >).
fn argmax_count(counts: &TransitionCounts, from: EdgeId) -> Option<(EdgeId, u64)> {
    let mut best: Option<(EdgeId, u64)> = None;
    for (&(_, to), &c) in counts.pair_counts.range((from, EdgeId::MIN)..=(from, EdgeId::MAX)) {
        if best.map_or(true, |(_, bc)| c > bc) {
            best = Some((to, c));
        }
    }
    best
}

/// Grows one imaginary trajectory per frequent source segment by repeated
/// count argmax, stopping when the argmax leaves the frequent set, revisits
/// a segment, or has no outgoing counts. The best trajectory wins by score,
/// then length, then lowest origin id. An empty FSS falls back to the
/// single source segment with the highest origin count.
pub fn representative_trajectory(
    counts: &TransitionCounts,
    frs: &BTreeSet<EdgeId>,
    fss: &BTreeSet<EdgeId>,
) -> RepresentativeTrajectory {
    if fss.is_empty() {
        let mut best: Option<(EdgeId, u64)> = None;
        for (&s, &c) in &counts.origin_counts {
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((s, c));
            }
        }
        let origin = best.map(|(s, _)| s).unwrap_or(0);
        return RepresentativeTrajectory {
            segments: vec![origin],
            count_score: 0,
            origin_fss: origin,
        };
    }
    let mut best: Option<RepresentativeTrajectory> = None;
    for &origin in fss {
        let mut it = vec![origin];
        let mut seen: BTreeSet<EdgeId> = [origin].into();
        let mut score = 0u64;
        loop {
            let current = *it.last().unwrap();
            let Some((next, c)) = argmax_count(counts, current) else {
                break;
            };
            if !frs.contains(&next) || seen.contains(&next) {
                break;
            }
            it.push(next);
            seen.insert(next);
            score += c;
        }
        let candidate = RepresentativeTrajectory {
            segments: it,
            count_score: score,
            origin_fss: origin,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                candidate.count_score > b.count_score
                    || (candidate.count_score == b.count_score
                        && (candidate.segments.len() > b.segments.len()
                            || (candidate.segments.len() == b.segments.len()
                                && candidate.origin_fss < b.origin_fss)))
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    best.unwrap()
}

impl ClusterModel {
    pub fn build<'a, I>(cluster_id: usize, members: I, min_t: f64) -> Result<ClusterModel>
    where
        I: IntoIterator<Item = (u64, &'a [EdgeId])>,
    {
        let mut ids = Vec::new();
        let mut counts = TransitionCounts::default();
        for (id, segs) in members {
            ids.push(id);
            counts.add_trajectory(segs);
        }
        if ids.is_empty() {
            return Err(Error::Arg("cluster has no members".into()));
        }
        let frs = compute_frs(&counts, ids.len(), min_t)?;
        let fss = compute_fss(&counts, ids.len(), min_t, &frs)?;
        let rt = representative_trajectory(&counts, &frs, &fss);
        let probs = TransitionMatrix::from_counts(&counts);
        Ok(ClusterModel {
            cluster_id,
            members: ids,
            counts,
            probs,
            frs,
            fss,
            rt,
        })
    }
}

/// Hybrid nearest-prototype assignment. When any cluster gives the query a
/// positive path probability, the highest wins (lowest cluster id on ties);
/// otherwise the cluster with the nearest representative trajectory under
/// directional trajDTW wins (lowest id on ties). Returns a position into
/// `clusters`.
pub fn hybrid_npr_assign(
    query: &[EdgeId],
    clusters: &[ClusterModel],
    d_all: &SegmentDistanceMatrix,
) -> Result<usize> {
    if clusters.is_empty() {
        return Err(Error::Arg("no clusters to assign to".into()));
    }
    let mut best_p = 0.0;
    let mut best_idx = None;
    for (idx, c) in clusters.iter().enumerate() {
        let p = c.probs.path_probability(query);
        if p > best_p {
            best_p = p;
            best_idx = Some(idx);
        }
    }
    if let Some(idx) = best_idx {
        return Ok(idx);
    }
    let mut best_d = f64::INFINITY;
    let mut best_idx = 0;
    for (idx, c) in clusters.iter().enumerate() {
        let d = traj_dtw(query, &c.rt.segments, d_all)?;
        if d < best_d {
            best_d = d;
            best_idx = idx;
        }
    }
    Ok(best_idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy4;
    use crate::road_network::all_pairs_segment_distances;

    fn build(id: usize, members: &[&[EdgeId]], min_t: f64) -> ClusterModel {
        let with_ids: Vec<(u64, &[EdgeId])> = members
            .iter()
            .enumerate()
            .map(|(i, &s)| (i as u64, s))
            .collect();
        ClusterModel::build(id, with_ids, min_t).unwrap()
    }

    #[test]
    fn frs_thresholds() {
        let c = build(0, &[&[0, 1, 2], &[0, 1, 2], &[0, 1]], 0.3);
        // Pass counts 3, 3, 2 against threshold 0.9: all pass.
        assert_eq!(c.frs, [0, 1, 2].into());
        let c = build(0, &[&[0, 1, 2], &[0, 1, 2], &[0, 1]], 1.0);
        assert_eq!(c.frs, [0, 1].into());
    }

    #[test]
    fn fss_requires_origin_share_and_frs_membership() {
        let c = build(0, &[&[0, 1, 2], &[0, 1, 2], &[0, 1]], 0.3);
        assert_eq!(c.fss, [0].into());
        // Two members with distinct sources, threshold 1.2: neither passes.
        let c = build(0, &[&[0, 1], &[1, 0]], 0.6);
        assert!(c.fss.is_empty());
        // Single member: its source qualifies at any threshold.
        let c = build(0, &[&[2, 1, 0]], 1.0);
        assert_eq!(c.fss, [2].into());
    }

    #[test]
    fn rt_hand_trace() {
        let c = build(0, &[&[0, 1, 2], &[0, 1, 2], &[0, 1]], 0.3);
        assert_eq!(c.rt.segments, vec![0, 1, 2]);
        assert_eq!(c.rt.count_score, 5); // W[0][1]=3 plus W[1][2]=2
        assert_eq!(c.rt.origin_fss, 0);
    }

    #[test]
    fn rt_of_single_trajectory_cluster_is_the_trajectory() {
        let c = build(0, &[&[3, 2, 1, 0]], 0.3);
        assert_eq!(c.rt.segments, vec![3, 2, 1, 0]);
        assert_eq!(c.rt.count_score, 3);
    }

    #[test]
    fn rt_cycle_guard_terminates() {
        // Counts form the 2-cycle W[0][1] = W[1][0] = 2.
        let c = build(0, &[&[0, 1, 0], &[1, 0, 1]], 0.3);
        assert_eq!(c.rt.segments, vec![0, 1]);
        assert_eq!(c.rt.count_score, 2);
        assert_eq!(c.rt.origin_fss, 0);
    }

    #[test]
    fn rt_score_matches_its_own_transitions() {
        let c = build(0, &[&[0, 1, 2, 3], &[0, 1, 2], &[0, 1], &[2, 3]], 0.3);
        let recomputed: u64 = c
            .rt
            .segments
            .windows(2)
            .map(|w| c.counts.pair_counts[&(w[0], w[1])])
            .sum();
        assert_eq!(c.rt.count_score, recomputed);
    }

    #[test]
    fn rt_fallback_on_empty_fss() {
        // Sources 0, 2, 2 at min_t = 0.9 leave no frequent source; the
        // fallback picks the most common source.
        let c = build(0, &[&[0, 1], &[2, 1], &[2, 1]], 0.9);
        assert!(c.fss.is_empty());
        assert_eq!(c.rt.segments, vec![2]);
        assert_eq!(c.rt.count_score, 0);
    }

    #[test]
    fn npr_prefers_higher_path_probability() {
        // Query 0->1 has probability 0.5 in A and 0.1 in B.
        let a = build(0, &[&[0, 1], &[0, 2]], 0.3);
        let mut b_members: Vec<&[EdgeId]> = vec![&[0, 1]];
        let tail: &[EdgeId] = &[0, 2];
        for _ in 0..9 {
            b_members.push(tail);
        }
        let b = build(1, &b_members, 0.3);
        let net = toy4();
        let d_all = all_pairs_segment_distances(&net).unwrap();
        assert_eq!(hybrid_npr_assign(&[0, 1], &[a, b], &d_all).unwrap(), 0);
    }

    #[test]
    fn npr_falls_back_to_rt_distance() {
        let far = build(0, &[&[2]], 0.3);
        let near = build(1, &[&[1]], 0.3);
        let net = toy4();
        let d_all = all_pairs_segment_distances(&net).unwrap();
        // Query segment 0: distances to the RTs are 2.22390 and 1.11195 km.
        assert_eq!(hybrid_npr_assign(&[0], &[far, near], &d_all).unwrap(), 1);
    }

    #[test]
    fn npr_assigns_members_to_their_own_cluster() {
        let c = build(0, &[&[0, 1, 2], &[0, 1]], 0.3);
        let net = toy4();
        let d_all = all_pairs_segment_distances(&net).unwrap();
        assert_eq!(hybrid_npr_assign(&[0, 1, 2], std::slice::from_ref(&c), &d_all).unwrap(), 0);
        assert!(hybrid_npr_assign(&[0], &[], &d_all).is_err());
    }

    #[test]
    fn npr_tie_breaks_to_lowest_cluster_id() {
        let a = build(0, &[&[0, 1]], 0.3);
        let b = build(1, &[&[0, 1]], 0.3);
        let net = toy4();
        let d_all = all_pairs_segment_distances(&net).unwrap();
        assert_eq!(hybrid_npr_assign(&[0, 1], &[a, b], &d_all).unwrap(), 0);
    }
}
