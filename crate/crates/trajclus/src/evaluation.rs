//! Prediction metrics and the experiment harness.
//!
//! Scoring rules for ragged cases: accuracy compares positionwise over the
//! shorter of the two sequences against a denominator of the longer, so
//! truncated or overlong predictions lose exactly their missing or extra
//! positions. Distance error anchors a missing position at the last
//! predicted segment (or a caller-supplied anchor when nothing was
//! predicted) and an extra position at the last truth segment.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::predictor::RoutePredictor;
use crate::road_network::{EdgeId, RoadNetwork};
use crate::trajectory::{split_query_truth, Trajectory};

/// Positionwise prediction accuracy with denominator max(|pred|, |truth|).
pub fn pa(pred: &[EdgeId], truth: &[EdgeId]) -> Result<f64> {
    if pred.is_empty() && truth.is_empty() {
        return Err(Error::Arg("both sequences empty".into()));
    }
    let compared = pred.len().min(truth.len());
    let matches = (0..compared).filter(|&j| pred[j] == truth[j]).count();
    Ok(matches as f64 / pred.len().max(truth.len()) as f64)
}

/// Fraction of results whose prediction equals the truth exactly.
pub fn pr(results: &[(Vec<EdgeId>, Vec<EdgeId>)]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::Arg("no results".into()));
    }
    let exact = results.iter().filter(|(p, t)| p == t).count();
    Ok(exact as f64 / results.len() as f64)
}

fn midpoint_km(net: &RoadNetwork, a: EdgeId, b: EdgeId) -> f64 {
    let (la, na) = net.edge_midpoint(a);
    let (lb, nb) = net.edge_midpoint(b);
    crate::road_network::haversine_km(la, na, lb, nb)
}

/// Mean midpoint distance over max(|pred|, |truth|) positions, with the
/// anchor rules described at module level.
pub fn de_anchored(
    pred: &[EdgeId],
    truth: &[EdgeId],
    anchor: Option<EdgeId>,
    net: &RoadNetwork,
) -> Result<f64> {
    if pred.is_empty() && truth.is_empty() {
        return Err(Error::Arg("both sequences empty".into()));
    }
    if truth.is_empty() {
        return Err(Error::Arg("truth sequence empty".into()));
    }
    let fill = match pred.last().copied().or(anchor) {
        Some(e) => e,
        None => return Err(Error::Arg("empty prediction without an anchor".into())),
    };
    let positions = pred.len().max(truth.len());
    let mut total = 0.0;
    for j in 0..positions {
        let p = pred.get(j).copied().unwrap_or(fill);
        let t = truth.get(j).copied().unwrap_or(*truth.last().unwrap());
        total += midpoint_km(net, p, t);
    }
    Ok(total / positions as f64)
}

/// Distance error when the prediction is known to be nonempty.
pub fn de(pred: &[EdgeId], truth: &[EdgeId], net: &RoadNetwork) -> Result<f64> {
    de_anchored(pred, truth, None, net)
}

/// One scored test trajectory.
#[derive(Debug, Clone)]
pub struct PairResult {
    pub id: u64,
    pub pred: Vec<EdgeId>,
    pub truth: Vec<EdgeId>,
    /// Last segment of the query half; stands in when nothing was predicted.
    pub anchor: EdgeId,
    pub truncated: bool,
}

/// Pooled first-step accuracy and distance error.
pub fn one_step_metrics(results: &[PairResult], net: &RoadNetwork) -> Result<(f64, f64)> {
    if results.is_empty() {
        return Err(Error::Arg("no results".into()));
    }
    let mut correct = 0usize;
    let mut total_km = 0.0;
    for r in results {
        if r.truth.is_empty() {
            return Err(Error::Arg(format!("trajectory {} has no truth half", r.id)));
        }
        let p = r.pred.first().copied().unwrap_or(r.anchor);
        if r.pred.first() == Some(&r.truth[0]) {
            correct += 1;
        }
        total_km += midpoint_km(net, p, r.truth[0]);
    }
    Ok((
        correct as f64 / results.len() as f64,
        total_km / results.len() as f64,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub step: usize,
    pub avg_pa: Option<f64>,
    pub avg_de_km: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub method: String,
    pub avg_pa: f64,
    pub avg_de_km: f64,
    pub pr: f64,
    pub oa: f64,
    pub ode_km: f64,
    pub n_test: usize,
    pub n_truncated: usize,
    pub per_step: Vec<StepRow>,
    /// Histogram of predicted lengths.
    pub predicted_lengths: BTreeMap<usize, usize>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl EvalReport {
    pub fn write_csv(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(out_dir.join("summary.csv"))?);
        writeln!(f, "method,avg_pa,avg_de_km,pr_pct,oa,ode_km,n_test,n_truncated")?;
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            self.method,
            self.avg_pa,
            self.avg_de_km,
            self.pr * 100.0,
            self.oa,
            self.ode_km,
            self.n_test,
            self.n_truncated
        )?;
        f.flush()?;

        let mut f = std::io::BufWriter::new(std::fs::File::create(out_dir.join("per_step.csv"))?);
        writeln!(f, "step,avg_pa,avg_de_km,support")?;
        for row in &self.per_step {
            writeln!(
                f,
                "{},{},{},{}",
                row.step,
                fmt_opt(row.avg_pa),
                fmt_opt(row.avg_de_km),
                row.support
            )?;
        }
        f.flush()?;

        let mut f = std::io::BufWriter::new(std::fs::File::create(
            out_dir.join("length_histogram.csv"),
        )?);
        writeln!(f, "predicted_length,count")?;
        for (len, count) in &self.predicted_lengths {
            writeln!(f, "{len},{count}")?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Runs the full protocol: split each test trajectory in half, predict up
/// to `m_max` continuation steps, and aggregate every metric. Writes the
/// CSV artifacts when `out_dir` is given.
pub fn run_experiment(
    predictor: &dyn RoutePredictor,
    test: &[Trajectory],
    m_max: usize,
    lambda: usize,
    net: &RoadNetwork,
    out_dir: Option<&Path>,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Arg("empty test set".into()));
    }
    if m_max < 1 {
        return Err(Error::Arg("m_max must be at least 1".into()));
    }
    let results: Vec<PairResult> = test
        .par_iter()
        .map(|t| -> Result<PairResult> {
            let (query, truth) = split_query_truth(t)?;
            let m = m_max.min(truth.segments.len());
            let r = predictor.predict(&query.segments, m, lambda)?;
            Ok(PairResult {
                id: t.id,
                pred: r.predicted,
                truth: truth.segments[..m].to_vec(),
                anchor: *query.segments.last().unwrap(),
                truncated: r.truncated,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = results.len();
    let mut sum_pa = 0.0;
    let mut sum_de = 0.0;
    for r in &results {
        sum_pa += pa(&r.pred, &r.truth)?;
        sum_de += de_anchored(&r.pred, &r.truth, Some(r.anchor), net)?;
    }
    let pairs: Vec<(Vec<EdgeId>, Vec<EdgeId>)> = results
        .iter()
        .map(|r| (r.pred.clone(), r.truth.clone()))
        .collect();
    let pr_val = pr(&pairs)?;
    let (oa, ode) = one_step_metrics(&results, net)?;

    let mut per_step = Vec::with_capacity(m_max);
    for step in 1..=m_max {
        let idx = step - 1;
        let mut support = 0usize;
        let mut correct = 0usize;
        let mut dist = 0.0;
        for r in &results {
            if r.truth.len() < step {
                continue;
            }
            support += 1;
            let truth_seg = r.truth[idx];
            match r.pred.get(idx) {
                Some(&p) => {
                    if p == truth_seg {
                        correct += 1;
                    }
                    dist += midpoint_km(net, p, truth_seg);
                }
                None => {
                    let fill = r.pred.last().copied().unwrap_or(r.anchor);
                    dist += midpoint_km(net, fill, truth_seg);
                }
            }
        }
        per_step.push(StepRow {
            step,
            avg_pa: (support > 0).then(|| correct as f64 / support as f64),
            avg_de_km: (support > 0).then(|| dist / support as f64),
            support,
        });
    }

    let mut predicted_lengths = BTreeMap::new();
    for r in &results {
        *predicted_lengths.entry(r.pred.len()).or_insert(0) += 1;
    }
    let report = EvalReport {
        method: predictor.method().to_string(),
        avg_pa: sum_pa / n as f64,
        avg_de_km: sum_de / n as f64,
        pr: pr_val,
        oa,
        ode_km: ode,
        n_test: n,
        n_truncated: results.iter().filter(|r| r.truncated).count(),
        per_step,
        predicted_lengths,
    };
    if let Some(dir) = out_dir {
        report.write_csv(dir)?;
    }
    Ok(report)
}

/// Adjusted Rand index between two labelings of the same objects.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Arg("label vectors differ in length".into()));
    }
    if a.is_empty() {
        return Err(Error::Arg("empty labelings".into()));
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    fn choose2(x: u64) -> f64 {
        (x as f64) * (x as f64 - 1.0) / 2.0
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sum_rows: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sum_cols: f64 = cols.values().map(|&v| choose2(v)).sum();
    let total = choose2(a.len() as u64);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-12 {
        // Both partitions trivial in the same way; treat as full agreement.
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy4, traj};
    use crate::pipeline::{train, PipelineConfig};
    use crate::predictor::ClusivatPredictor;
    use crate::road_network::all_pairs_segment_distances;
    use crate::trajectory::TrajectoryDataset;

    const UNIT_KM: f64 = 1.1119492664455873;

    #[test]
    fn pa_examples() {
        assert_eq!(pa(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert!((pa(&[1, 9, 3], &[1, 2, 3]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((pa(&[1], &[1, 2, 3]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((pa(&[1, 2, 3], &[1]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(pa(&[], &[1]).unwrap(), 0.0);
        assert!(pa(&[], &[]).is_err());
    }

    #[test]
    fn pr_counts_exact_matches() {
        let results = vec![
            (vec![1, 2], vec![1, 2]),
            (vec![1, 3], vec![1, 2]),
            (vec![1, 2, 3], vec![1, 2]),
            (vec![4], vec![4]),
        ];
        assert_eq!(pr(&results).unwrap(), 0.5);
        assert!(pr(&[]).is_err());
        let mut shuffled = results.clone();
        shuffled.reverse();
        assert_eq!(pr(&shuffled).unwrap(), 0.5);
    }

    #[test]
    fn de_toy_geometry() {
        let net = toy4();
        assert_eq!(de(&[0, 1, 2], &[0, 1, 2], &net).unwrap(), 0.0);
        assert!((de(&[0], &[1], &net).unwrap() - UNIT_KM).abs() < 1e-9);
        assert!((de(&[0, 1], &[0, 2], &net).unwrap() - UNIT_KM / 2.0).abs() < 1e-9);
        // Truncated prediction: position 2 anchors at the last prediction.
        assert!((de(&[0], &[0, 1], &net).unwrap() - UNIT_KM / 2.0).abs() < 1e-9);
        // Nothing predicted: the explicit anchor fills every position.
        assert!((de_anchored(&[], &[1], Some(0), &net).unwrap() - UNIT_KM).abs() < 1e-9);
        assert!(de(&[], &[1], &net).is_err());
        assert!(de(&[0], &[], &net).is_err());
    }

    #[test]
    fn pa_one_iff_de_zero_on_distinct_midpoints() {
        let net = toy4();
        for pred in [[0u32, 1].as_slice(), &[0, 2], &[1, 2]] {
            let truth: &[u32] = &[0, 2];
            let equal = pa(pred, truth).unwrap() == 1.0;
            let zero = de(pred, truth, &net).unwrap() == 0.0;
            assert_eq!(equal, zero);
        }
    }

    #[test]
    fn one_step_pooled() {
        let net = toy4();
        let results = vec![
            PairResult {
                id: 0,
                pred: vec![1],
                truth: vec![1],
                anchor: 0,
                truncated: false,
            },
            PairResult {
                id: 1,
                pred: vec![1],
                truth: vec![2],
                anchor: 0,
                truncated: false,
            },
        ];
        let (oa, ode) = one_step_metrics(&results, &net).unwrap();
        assert_eq!(oa, 0.5);
        assert!((ode - UNIT_KM / 2.0).abs() < 1e-9);
    }

    #[test]
    fn pr_never_exceeds_mean_pa() {
        let cases = vec![
            (vec![1, 2, 3], vec![1, 2, 3]),
            (vec![1, 9, 3], vec![1, 2, 3]),
            (vec![7], vec![1, 2]),
            (vec![1, 2], vec![1, 2]),
        ];
        let mean_pa: f64 = cases
            .iter()
            .map(|(p, t)| pa(p, t).unwrap())
            .sum::<f64>()
            / cases.len() as f64;
        assert!(pr(&cases).unwrap() <= mean_pa + 1e-12);
    }

    #[test]
    fn experiment_on_single_route_model() {
        let net = toy4();
        let d_all = all_pairs_segment_distances(&net).unwrap();
        let ds = TrajectoryDataset {
            trajectories: (0..4).map(|i| traj(i, &[0, 1, 2])).collect(),
            network_ref: net.identifier().to_string(),
        };
        let cfg = PipelineConfig {
            k_prime: 2,
            n: 3,
            alpha_stage1: 0.9,
            min_len: 2,
            max_len: 10,
            ..PipelineConfig::default()
        };
        let (model, _) = train(&ds, &net, &d_all, &cfg).unwrap();
        let predictor = ClusivatPredictor {
            model: &model,
            d_all: &d_all,
        };
        let test = vec![traj(10, &[0, 1, 2])];
        let dir = tempfile::tempdir().unwrap();
        let report =
            run_experiment(&predictor, &test, 3, 3, &net, Some(dir.path())).unwrap();
        // Query half (0, 1), truth half (2): one perfect one-step result.
        assert_eq!(report.avg_pa, 1.0);
        assert_eq!(report.pr, 1.0);
        assert_eq!(report.avg_de_km, 0.0);
        assert_eq!(report.oa, 1.0);
        assert_eq!(report.ode_km, 0.0);
        assert_eq!(report.n_truncated, 0);
        assert_eq!(report.per_step.len(), 3);
        assert_eq!(report.per_step[0].support, 1);
        assert_eq!(report.per_step[1].support, 0);
        assert_eq!(report.per_step[1].avg_pa, None);
        assert_eq!(report.predicted_lengths[&1], 1);
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with("method,avg_pa,avg_de_km,pr_pct,oa,ode_km,n_test,n_truncated"));
        assert!(summary.contains("clusivat,1,0,100,1,0,1,0"));
        let per_step = std::fs::read_to_string(dir.path().join("per_step.csv")).unwrap();
        assert_eq!(per_step.lines().count(), 4);
        assert!(dir.path().join("length_histogram.csv").exists());
    }

    #[test]
    fn ari_basics() {
        let a = vec![0, 0, 1, 1, 2, 2];
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        let permuted = vec![2, 2, 0, 0, 1, 1];
        assert_eq!(adjusted_rand_index(&a, &permuted).unwrap(), 1.0);
        let one_cluster = vec![0; 6];
        let singletons = vec![0, 1, 2, 3, 4, 5];
        assert_eq!(adjusted_rand_index(&one_cluster, &singletons).unwrap(), 0.0);
        assert_eq!(adjusted_rand_index(&one_cluster, &one_cluster).unwrap(), 1.0);
        let disagree = vec![0, 1, 0, 1, 0, 1];
        let v = adjusted_rand_index(&a, &disagree).unwrap();
        assert!(v < 0.1, "near-random agreement should score low, got {v}");
        assert!(adjusted_rand_index(&a, &[0]).is_err());
    }
}
