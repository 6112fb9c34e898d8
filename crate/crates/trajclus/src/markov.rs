//! First-order Markov transition models over road segments.
//!
//! Counting is trajectory-level: a trajectory contributes at most one count
//! to any ordered segment pair, at most one pass count per segment, and one
//! origin count for its first segment. Transition probabilities are
//! count / pass with no smoothing and no renormalization, so rows may sum to
//! less than one; unseen pairs have probability zero.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::road_network::EdgeId;

/// Raw counts from a set of trajectories. Serializes as sorted triplet and
/// pair lists so the representation stays JSON-friendly.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(from = "CountsRecord", into = "CountsRecord")]
pub struct TransitionCounts {
    /// (from, to) -> number of trajectories containing the consecutive pair.
    pub pair_counts: BTreeMap<(EdgeId, EdgeId), u64>,
    /// Segment -> number of trajectories passing through it.
    pub pass_counts: BTreeMap<EdgeId, u64>,
    /// Segment -> number of trajectories starting on it.
    pub origin_counts: BTreeMap<EdgeId, u64>,
}

#[derive(Serialize, Deserialize)]
struct CountsRecord {
    pairs: Vec<(EdgeId, EdgeId, u64)>,
    passes: Vec<(EdgeId, u64)>,
    origins: Vec<(EdgeId, u64)>,
}

impl From<TransitionCounts> for CountsRecord {
    fn from(c: TransitionCounts) -> Self {
        CountsRecord {
            pairs: c.pair_counts.iter().map(|(&(a, b), &v)| (a, b, v)).collect(),
            passes: c.pass_counts.iter().map(|(&s, &v)| (s, v)).collect(),
            origins: c.origin_counts.iter().map(|(&s, &v)| (s, v)).collect(),
        }
    }
}

impl From<CountsRecord> for TransitionCounts {
    fn from(r: CountsRecord) -> Self {
        TransitionCounts {
            pair_counts: r.pairs.into_iter().map(|(a, b, v)| ((a, b), v)).collect(),
            pass_counts: r.passes.into_iter().collect(),
            origin_counts: r.origins.into_iter().collect(),
        }
    }
}

impl TransitionCounts {
    pub fn from_trajectories<'a, I>(trajectories: I) -> Self
    where
        I: IntoIterator<Item = &'a [EdgeId]>,
    {
        let mut counts = TransitionCounts::default();
        for segs in trajectories {
            counts.add_trajectory(segs);
        }
        counts
    }

    pub fn add_trajectory(&mut self, segs: &[EdgeId]) {
        if segs.is_empty() {
            return;
        }
        let mut pairs = BTreeSet::new();
        for w in segs.windows(2) {
            pairs.insert((w[0], w[1]));
        }
        for (a, b) in pairs {
            *self.pair_counts.entry((a, b)).or_insert(0) += 1;
        }
        let passed: BTreeSet<EdgeId> = segs.iter().copied().collect();
        for s in passed {
            *self.pass_counts.entry(s).or_insert(0) += 1;
        }
        *self.origin_counts.entry(segs[0]).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &TransitionCounts) {
        for (&k, &v) in &other.pair_counts {
            *self.pair_counts.entry(k).or_insert(0) += v;
        }
        for (&k, &v) in &other.pass_counts {
            *self.pass_counts.entry(k).or_insert(0) += v;
        }
        for (&k, &v) in &other.origin_counts {
            *self.origin_counts.entry(k).or_insert(0) += v;
        }
    }
}

/// Sub-stochastic transition matrix in sparse form.
#[derive(Debug, Clone, Default)]
pub struct TransitionMatrix {
    /// from -> sorted (to, probability) rows.
    rows: BTreeMap<EdgeId, Vec<(EdgeId, f64)>>,
    /// Segments with a nonzero pass count; a length-1 path on one of these
    /// has probability 1.
    observed: BTreeSet<EdgeId>,
}

impl TransitionMatrix {
    pub fn from_counts(counts: &TransitionCounts) -> Self {
        let mut rows: BTreeMap<EdgeId, Vec<(EdgeId, f64)>> = BTreeMap::new();
        for (&(from, to), &c) in &counts.pair_counts {
            let pass = counts.pass_counts[&from];
            rows.entry(from).or_default().push((to, c as f64 / pass as f64));
        }
        let observed = counts.pass_counts.keys().copied().collect();
        TransitionMatrix { rows, observed }
    }

    pub fn prob(&self, from: EdgeId, to: EdgeId) -> f64 {
        self.rows
            .get(&from)
            .and_then(|r| r.iter().find(|&&(t, _)| t == to))
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn row(&self, from: EdgeId) -> Option<&[(EdgeId, f64)]> {
        self.rows.get(&from).map(|r| r.as_slice())
    }

    pub fn is_observed(&self, seg: EdgeId) -> bool {
        self.observed.contains(&seg)
    }

    /// Product of step probabilities along the path. A single observed
    /// segment has probability 1; a single unobserved one, 0.
    pub fn path_probability(&self, path: &[EdgeId]) -> f64 {
        match path {
            [] => 0.0,
            [only] => {
                if self.is_observed(*only) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => path.windows(2).map(|w| self.prob(w[0], w[1])).product(),
        }
    }

    /// Most probable successor of `from`; ties resolve to the lowest
    /// segment id. None when the row is empty or absent.
    pub fn next_location(&self, from: EdgeId) -> Option<(EdgeId, f64)> {
        let row = self.rows.get(&from)?;
        let mut best: Option<(EdgeId, f64)> = None;
        for &(to, p) in row {
            match best {
                Some((_, bp)) if p <= bp => {}
                _ => best = Some((to, p)),
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ids: &[u32]) -> Vec<EdgeId> {
        ids.to_vec()
    }

    #[test]
    fn pair_counted_once_per_trajectory() {
        // The 0->1 pair appears twice inside one trajectory but counts once.
        let t = seg(&[0, 1, 0, 1]);
        let counts = TransitionCounts::from_trajectories([t.as_slice()]);
        assert_eq!(counts.pair_counts[&(0, 1)], 1);
        assert_eq!(counts.pair_counts[&(1, 0)], 1);
        assert_eq!(counts.pass_counts[&0], 1);
        assert_eq!(counts.pass_counts[&1], 1);
        assert_eq!(counts.origin_counts[&0], 1);
    }

    #[test]
    fn probabilities_are_count_over_pass() {
        let a = seg(&[0, 1, 2]);
        let b = seg(&[0, 1, 3]);
        let c = seg(&[0, 4]);
        let counts =
            TransitionCounts::from_trajectories([a.as_slice(), b.as_slice(), c.as_slice()]);
        let m = TransitionMatrix::from_counts(&counts);
        assert_eq!(m.prob(0, 1), 2.0 / 3.0);
        assert_eq!(m.prob(0, 4), 1.0 / 3.0);
        assert_eq!(m.prob(1, 2), 0.5);
        assert_eq!(m.prob(1, 3), 0.5);
        assert_eq!(m.prob(2, 0), 0.0);
    }

    #[test]
    fn rows_can_be_substochastic() {
        // Segment 1 ends one trajectory, so its row sums to 1/2, not 1.
        let a = seg(&[0, 1]);
        let b = seg(&[0, 1, 2]);
        let counts = TransitionCounts::from_trajectories([a.as_slice(), b.as_slice()]);
        let m = TransitionMatrix::from_counts(&counts);
        let row_sum: f64 = m.row(1).unwrap().iter().map(|&(_, p)| p).sum();
        assert_eq!(row_sum, 0.5);
    }

    #[test]
    fn path_probability_products() {
        let a = seg(&[0, 1, 2]);
        let b = seg(&[0, 1, 3]);
        let counts = TransitionCounts::from_trajectories([a.as_slice(), b.as_slice()]);
        let m = TransitionMatrix::from_counts(&counts);
        assert_eq!(m.path_probability(&[0, 1, 2]), 0.5);
        assert_eq!(m.path_probability(&[0, 1]), 1.0);
        assert_eq!(m.path_probability(&[2, 3]), 0.0);
        assert_eq!(m.path_probability(&[2]), 1.0);
        assert_eq!(m.path_probability(&[9]), 0.0);
        assert_eq!(m.path_probability(&[]), 0.0);
    }

    #[test]
    fn next_location_argmax_lowest_id_on_tie() {
        let a = seg(&[0, 2]);
        let b = seg(&[0, 1]);
        let counts = TransitionCounts::from_trajectories([a.as_slice(), b.as_slice()]);
        let m = TransitionMatrix::from_counts(&counts);
        // Both successors at probability 1/2; id 1 wins.
        assert_eq!(m.next_location(0), Some((1, 0.5)));
        assert_eq!(m.next_location(2), None);
        assert_eq!(m.next_location(7), None);
    }

    #[test]
    fn merge_adds_counts() {
        let a = seg(&[0, 1]);
        let b = seg(&[0, 1]);
        let mut c1 = TransitionCounts::from_trajectories([a.as_slice()]);
        let c2 = TransitionCounts::from_trajectories([b.as_slice()]);
        c1.merge(&c2);
        assert_eq!(c1.pair_counts[&(0, 1)], 2);
        assert_eq!(c1.pass_counts[&0], 2);
        assert_eq!(c1.origin_counts[&0], 2);
        let m = TransitionMatrix::from_counts(&c1);
        assert_eq!(m.prob(0, 1), 1.0);
    }

    #[test]
    fn counts_round_trip_through_json() {
        let a = seg(&[0, 1, 2]);
        let b = seg(&[2, 1]);
        let counts = TransitionCounts::from_trajectories([a.as_slice(), b.as_slice()]);
        let text = serde_json::to_string(&counts).unwrap();
        let back: TransitionCounts = serde_json::from_str(&text).unwrap();
        assert_eq!(counts, back);
    }

    #[test]
    fn empty_trajectory_ignored() {
        let mut counts = TransitionCounts::default();
        counts.add_trajectory(&[]);
        assert!(counts.pass_counts.is_empty());
        assert!(counts.origin_counts.is_empty());
    }
}
