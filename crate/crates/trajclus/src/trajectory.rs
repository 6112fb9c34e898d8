//! Trajectory model and ingestion. A trajectory is an ordered sequence of
//! road segment ids in which consecutive segments share a node.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road_network::{EdgeId, NodeId, RoadNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: u64,
    pub segments: Vec<EdgeId>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Same id, segments in reverse order.
    pub fn reversed(&self) -> Trajectory {
        Trajectory {
            id: self.id,
            segments: self.segments.iter().rev().copied().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryDataset {
    pub trajectories: Vec<Trajectory>,
    /// Identifier of the network the segment ids refer to.
    pub network_ref: String,
}

/// One rejected input line: (1-based line number, trajectory id when the
/// line parsed far enough to contain one, reason).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub line_no: usize,
    pub id: Option<u64>,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct RejectionReport {
    pub rejections: Vec<Rejection>,
}

impl RejectionReport {
    /// CSV with header `line_no,id,reason`; empty id column for lines that
    /// did not parse far enough to have one.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "line_no,id,reason")?;
        for r in &self.rejections {
            let id = r.id.map(|v| v.to_string()).unwrap_or_default();
            writeln!(f, "{},{},{}", r.line_no, id, r.reason)?;
        }
        f.flush()?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct TrajectoryLine {
    id: u64,
    edges: Vec<EdgeId>,
}

/// Reads trajectories from a JSONL file (`{"id": 7, "edges": [0, 1, 2]}` per
/// line), validating each line against the network and the length bounds.
/// Bad lines are rejected and reported, not fatal; an unreadable file is.
///
/// `min_len` must be at least 2 so every kept trajectory has a transition.
pub fn ingest(
    path: &Path,
    net: &RoadNetwork,
    min_len: usize,
    max_len: usize,
) -> Result<(TrajectoryDataset, RejectionReport)> {
    if min_len < 2 {
        return Err(Error::Arg(format!("min_len must be >= 2, got {min_len}")));
    }
    if max_len < min_len {
        return Err(Error::Arg(format!(
            "max_len {max_len} is smaller than min_len {min_len}"
        )));
    }
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);

    let mut trajectories = Vec::new();
    let mut report = RejectionReport::default();
    let mut seen_ids: HashSet<u64> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TrajectoryLine = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                report.rejections.push(Rejection {
                    line_no,
                    id: None,
                    reason: format!("malformed: {e}"),
                });
                continue;
            }
        };
        let problem = if !seen_ids.insert(parsed.id) {
            Some(format!("duplicate id {}", parsed.id))
        } else if parsed.edges.len() < min_len {
            Some(format!("too short: {} < {min_len}", parsed.edges.len()))
        } else if parsed.edges.len() > max_len {
            Some(format!("too long: {} > {max_len}", parsed.edges.len()))
        } else if let Some(&bad) = parsed
            .edges
            .iter()
            .find(|&&e| e as usize >= net.num_edges())
        {
            Some(format!("unknown edge id {bad}"))
        } else if let Some(w) = parsed
            .edges
            .windows(2)
            .find(|w| !net.edges_share_node(w[0], w[1]))
        {
            Some(format!("disconnected pair ({}, {})", w[0], w[1]))
        } else {
            None
        };
        match problem {
            Some(reason) => report.rejections.push(Rejection {
                line_no,
                id: Some(parsed.id),
                reason,
            }),
            None => trajectories.push(Trajectory {
                id: parsed.id,
                segments: parsed.edges,
            }),
        }
    }

    Ok((
        TrajectoryDataset {
            trajectories,
            network_ref: net.identifier().to_string(),
        },
        report,
    ))
}

/// Writes trajectories in the JSONL format read by [`ingest`].
pub fn save_trajectories(trajs: &[Trajectory], path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        id: u64,
        edges: &'a [EdgeId],
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for t in trajs {
        let line = serde_json::to_string(&Line {
            id: t.id,
            edges: &t.segments,
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(f, "{line}")?;
    }
    f.flush()?;
    Ok(())
}

/// True when `candidate` appears as a contiguous run inside `t` (same order,
/// same direction). Every trajectory contains itself; the empty sequence is
/// contained in everything.
pub fn is_subtrajectory(candidate: &[EdgeId], t: &[EdgeId]) -> bool {
    if candidate.is_empty() {
        return true;
    }
    if candidate.len() > t.len() {
        return false;
    }
    t.windows(candidate.len()).any(|w| w == candidate)
}

/// The source segment of a trajectory together with its source node: the
/// endpoint of the first segment not shared with the second segment (the
/// trip's origin side).
pub fn source_segment(t: &Trajectory, net: &RoadNetwork) -> Result<(EdgeId, NodeId)> {
    if t.len() < 2 {
        return Err(Error::Arg(format!(
            "trajectory {} has fewer than 2 segments",
            t.id
        )));
    }
    let first = net.edge(t.segments[0]);
    let second = net.edge(t.segments[1]);
    let shared_b = first.b == second.a || first.b == second.b;
    let source_node = if shared_b { first.a } else { first.b };
    Ok((t.segments[0], source_node))
}

/// Splits a trajectory into (query, truth): the first ceil(l/2) segments and
/// the rest. Both halves keep the original id.
pub fn split_query_truth(t: &Trajectory) -> Result<(Trajectory, Trajectory)> {
    if t.len() < 2 {
        return Err(Error::Arg(format!(
            "trajectory {} too short to split",
            t.id
        )));
    }
    let cut = t.len().div_ceil(2);
    Ok((
        Trajectory {
            id: t.id,
            segments: t.segments[..cut].to_vec(),
        },
        Trajectory {
            id: t.id,
            segments: t.segments[cut..].to_vec(),
        },
    ))
}

/// Seeded random split into (train, test) with round(fraction * N) training
/// trajectories. Both halves preserve the original dataset order.
pub fn split_train_test(
    ds: &TrajectoryDataset,
    fraction: f64,
    seed: u64,
) -> Result<(TrajectoryDataset, TrajectoryDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Arg(format!(
            "train fraction must be in (0, 1), got {fraction}"
        )));
    }
    let n = ds.trajectories.len();
    if n == 0 {
        return Err(Error::Arg("cannot split an empty dataset".into()));
    }
    let n_train = (fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut is_train = vec![false; n];
    for &i in order.iter().take(n_train) {
        is_train[i] = true;
    }
    let pick = |keep: bool| TrajectoryDataset {
        trajectories: ds
            .trajectories
            .iter()
            .enumerate()
            .filter(|(i, _)| is_train[*i] == keep)
            .map(|(_, t)| t.clone())
            .collect(),
        network_ref: ds.network_ref.clone(),
    };
    Ok((pick(true), pick(false)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, traj};

    fn write_lines(lines: &[&str]) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajs.jsonl");
        std::fs::write(&path, lines.join("\n")).unwrap();
        (dir, path)
    }

    #[test]
    fn ingest_filters_and_reports() {
        let net = fixtures::toy4();
        let (_dir, path) = write_lines(&[
            r#"{"id": 1, "edges": [0, 1, 2]}"#,
            r#"{"id": 2, "edges": [0]}"#,
            r#"{"id": 3, "edges": [0, 2]}"#,
            r#"{"id": 4, "edges": [0, 9]}"#,
            r#"not json"#,
            r#"{"id": 1, "edges": [1, 2]}"#,
        ]);
        let (ds, report) = ingest(&path, &net, 2, 10).unwrap();
        assert_eq!(ds.trajectories.len(), 1);
        assert_eq!(ds.trajectories[0].id, 1);
        let reasons: Vec<&str> = report.rejections.iter().map(|r| r.reason.as_str()).collect();
        assert_eq!(report.rejections.len(), 5);
        assert!(reasons[0].contains("too short"));
        assert!(reasons[1].contains("disconnected"));
        assert!(reasons[2].contains("unknown edge"));
        assert!(reasons[3].contains("malformed"));
        assert!(reasons[4].contains("duplicate"));
    }

    #[test]
    fn ingest_rejects_min_len_below_two() {
        let net = fixtures::toy4();
        let (_dir, path) = write_lines(&[r#"{"id": 1, "edges": [0, 1]}"#]);
        assert!(ingest(&path, &net, 1, 10).is_err());
    }

    #[test]
    fn rejection_csv_format() {
        let report = RejectionReport {
            rejections: vec![
                Rejection { line_no: 2, id: Some(7), reason: "too short: 1 < 2".into() },
                Rejection { line_no: 5, id: None, reason: "malformed: oops".into() },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rej.csv");
        report.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("line_no,id,reason\n"));
        assert!(text.contains("2,7,too short"));
        assert!(text.contains("5,,malformed"));
    }

    #[test]
    fn subtrajectory_examples() {
        assert!(is_subtrajectory(&[1, 2], &[0, 1, 2, 3]));
        assert!(!is_subtrajectory(&[2, 1], &[0, 1, 2, 3]));
        assert!(!is_subtrajectory(&[0, 2], &[0, 1, 2, 3]));
        assert!(is_subtrajectory(&[0, 1, 2], &[0, 1, 2]));
        assert!(is_subtrajectory(&[], &[0, 1]));
    }

    #[test]
    fn subtrajectory_matches_naive_scan() {
        // Oracle: direct index-based double loop.
        fn naive(c: &[u32], t: &[u32]) -> bool {
            if c.is_empty() {
                return true;
            }
            (0..t.len().saturating_sub(c.len() - 1))
                .any(|s| (0..c.len()).all(|k| t[s + k] == c[k]))
        }
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let t: Vec<u32> = (0..rng.gen_range(0..8)).map(|_| rng.gen_range(0..4)).collect();
            let c: Vec<u32> = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..4)).collect();
            assert_eq!(is_subtrajectory(&c, &t), naive(&c, &t), "c={c:?} t={t:?}");
        }
    }

    #[test]
    fn source_segment_picks_origin_side() {
        let net = fixtures::toy4();
        // e0 = (n0, n1), e1 = (n1, n2): shared node n1, so the source node is n0.
        let t = traj(1, &[0, 1]);
        assert_eq!(source_segment(&t, &net).unwrap(), (0, 0));
        // Reversed trip enters e1 from n2's side.
        let t = traj(2, &[1, 0]);
        assert_eq!(source_segment(&t, &net).unwrap(), (1, 2));
        assert!(source_segment(&traj(3, &[0]), &net).is_err());
    }

    #[test]
    fn split_query_truth_halves() {
        let t = traj(1, &[0, 1, 2, 3, 4]);
        let (q, rest) = split_query_truth(&t).unwrap();
        assert_eq!(q.segments, vec![0, 1, 2]);
        assert_eq!(rest.segments, vec![3, 4]);
        let mut joined = q.segments.clone();
        joined.extend(&rest.segments);
        assert_eq!(joined, t.segments);
        assert!(split_query_truth(&traj(1, &[0])).is_err());
    }

    #[test]
    fn split_train_test_is_deterministic_and_exhaustive() {
        let ds = TrajectoryDataset {
            trajectories: (0..10).map(|i| traj(i, &[0, 1])).collect(),
            network_ref: "x".into(),
        };
        let (tr1, te1) = split_train_test(&ds, 0.6, 9).unwrap();
        let (tr2, te2) = split_train_test(&ds, 0.6, 9).unwrap();
        assert_eq!(tr1.trajectories, tr2.trajectories);
        assert_eq!(te1.trajectories, te2.trajectories);
        assert_eq!(tr1.trajectories.len(), 6);
        assert_eq!(te1.trajectories.len(), 4);
        let mut ids: Vec<u64> = tr1
            .trajectories
            .iter()
            .chain(te1.trajectories.iter())
            .map(|t| t.id)
            .collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
        assert!(split_train_test(&ds, 1.5, 0).is_err());
    }
}
