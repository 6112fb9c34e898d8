//! Windowed dynamic time warping between segment sequences, with the local
//! cost taken from the precomputed segment distance matrix.
//!
//! Conventions (pinned here and mirrored by the brute-force oracle in the
//! integration tests):
//!
//! * Sakoe-Chiba band half-width `w = max(1, ceil(min(l1, l2) / 2))`.
//! * The band is centered on the corner-to-corner diagonal and symmetric in
//!   both arguments and under joint reversal: cell (i, j) is feasible iff
//!   `|j*(l1-1) - i*(l2-1)| <= w * max(l1-1, l2-1)`. End cells are always
//!   feasible and an end-to-end monotone path always exists for w >= 1; a
//!   widening retry loop exists as a debug guard and counts into
//!   [`band_widenings`].
//! * Before the DP runs, the pair is put into a canonical orientation: the
//!   lexicographically smallest of the four presentations reachable by
//!   swapping the arguments and reversing both. All four describe the same
//!   warping problem with the same exact (cost, length) pairs, but not the
//!   same float summation order; fixing one presentation makes ties between
//!   equal-cost paths of different lengths resolve identically however the
//!   pair is passed in.
//! * Boundary conditions are full: the warping path runs from (0, 0) to
//!   (l1-1, l2-1).
//! * Among all feasible paths the DP minimizes accumulated cost first and
//!   path length second; the returned value is that cost divided by that
//!   path length.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::road_network::{EdgeId, SegmentDistanceMatrix};

static BAND_WIDENINGS: AtomicU64 = AtomicU64::new(0);

/// Number of times any DTW run had to widen its band to reach the end cell.
/// Expected to stay 0; exposed for debugging.
pub fn band_widenings() -> u64 {
    BAND_WIDENINGS.load(Ordering::Relaxed)
}

/// Whether sequences are compared as-is or as unordered paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    Directional,
    NonDirectional,
}

#[inline]
fn band_feasible(l1: usize, l2: usize, w: i64, i: usize, j: usize) -> bool {
    let (a, b) = ((l1 - 1) as i64, (l2 - 1) as i64);
    ((j as i64) * a - (i as i64) * b).abs() <= w * a.max(b)
}

fn default_band(l1: usize, l2: usize) -> i64 {
    (l1.min(l2).div_ceil(2)).max(1) as i64
}

/// Banded DTW distance between two segment sequences, in km per warping-path
/// step. Symmetric in its arguments and bitwise invariant under reversing
/// both of them.
pub fn traj_dtw(t1: &[EdgeId], t2: &[EdgeId], d_all: &SegmentDistanceMatrix) -> Result<f64> {
    if t1.is_empty() || t2.is_empty() {
        return Err(Error::Arg("traj_dtw requires non-empty trajectories".into()));
    }
    for &e in t1.iter().chain(t2.iter()) {
        if e as usize >= d_all.n() {
            return Err(Error::Arg(format!(
                "edge id {e} outside distance matrix of {} segments",
                d_all.n()
            )));
        }
    }
    // Ties between equal-cost warping paths of different lengths are decided
    // by float comparisons, so the outcome depends on summation order. The
    // canonical orientation (see module docs) makes that order, and with it
    // the returned cost/len, identical for every presentation of the pair.
    let r1: Vec<EdgeId> = t1.iter().rev().copied().collect();
    let r2: Vec<EdgeId> = t2.iter().rev().copied().collect();
    let mut s: (&[EdgeId], &[EdgeId]) = (t1, t2);
    for cand in [(t2, t1), (&r1[..], &r2[..]), (&r2[..], &r1[..])] {
        if cand < s {
            s = cand;
        }
    }
    let (s1, s2) = s;
    let mut w = default_band(s1.len(), s2.len());
    loop {
        if let Some((cost, len)) = dtw_banded(s1, s2, d_all, w) {
            return Ok(cost / len as f64);
        }
        // Unreachable with the default band; kept as a guard for debugging.
        BAND_WIDENINGS.fetch_add(1, Ordering::Relaxed);
        w += 1;
    }
}

/// DP over the banded grid tracking (accumulated cost, path length) with
/// lexicographic minimization. Returns None when no in-band monotone path
/// reaches the end cell.
fn dtw_banded(
    t1: &[EdgeId],
    t2: &[EdgeId],
    d_all: &SegmentDistanceMatrix,
    w: i64,
) -> Option<(f64, u32)> {
    let (l1, l2) = (t1.len(), t2.len());
    let mut prev: Vec<Option<(f64, u32)>> = vec![None; l2];
    let mut cur: Vec<Option<(f64, u32)>> = vec![None; l2];
    for i in 0..l1 {
        for j in 0..l2 {
            cur[j] = None;
            if !band_feasible(l1, l2, w, i, j) {
                continue;
            }
            let c = d_all.get(t1[i], t2[j]);
            if i == 0 && j == 0 {
                cur[j] = Some((c, 1));
                continue;
            }
            let mut best: Option<(f64, u32)> = None;
            let candidates = [
                if i > 0 && j > 0 { prev[j - 1] } else { None },
                if i > 0 { prev[j] } else { None },
                if j > 0 { cur[j - 1] } else { None },
            ];
            for cand in candidates.into_iter().flatten() {
                best = Some(match best {
                    None => cand,
                    Some(b) => {
                        if cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1) {
                            cand
                        } else {
                            b
                        }
                    }
                });
            }
            cur[j] = best.map(|(cost, len)| (cost + c, len + 1));
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[l2 - 1]
}

/// Non-directional distance: the smaller of the directional distances to the
/// sequence and to its reverse. Invariant to reversing either argument.
pub fn nd_traj_dtw(t1: &[EdgeId], t2: &[EdgeId], d_all: &SegmentDistanceMatrix) -> Result<f64> {
    let fwd = traj_dtw(t1, t2, d_all)?;
    let rev: Vec<EdgeId> = t2.iter().rev().copied().collect();
    let bwd = traj_dtw(t1, &rev, d_all)?;
    Ok(fwd.min(bwd))
}

/// Dense symmetric pairwise trajectory distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    mode: DistanceMode,
}

const TRAJ_MAGIC: &[u8; 4] = b"TCVN";
const TRAJ_VERSION: u32 = 1;

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn from_raw(n: usize, data: Vec<f64>, mode: DistanceMode) -> DistanceMatrix {
        assert_eq!(data.len(), n * n);
        DistanceMatrix { n, data, mode }
    }

    /// Same layout as the segment matrix, magic "TCVN", plus a mode byte
    /// (0 directional, 1 non-directional) between the header and the data.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(TRAJ_MAGIC)?;
        f.write_all(&TRAJ_VERSION.to_le_bytes())?;
        f.write_all(&(self.n as u32).to_le_bytes())?;
        f.write_all(&[match self.mode {
            DistanceMode::Directional => 0u8,
            DistanceMode::NonDirectional => 1u8,
        }])?;
        for v in &self.data {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<DistanceMatrix> {
        use std::io::Read;
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != TRAJ_MAGIC {
            return Err(Error::Format(format!(
                "{}: bad magic {:?}, expected \"TCVN\"",
                path.display(),
                magic
            )));
        }
        let mut word = [0u8; 4];
        f.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != TRAJ_VERSION {
            return Err(Error::Format(format!(
                "{}: unsupported version {version}",
                path.display()
            )));
        }
        f.read_exact(&mut word)?;
        let n = u32::from_le_bytes(word) as usize;
        let mut mode_byte = [0u8; 1];
        f.read_exact(&mut mode_byte)?;
        let mode = match mode_byte[0] {
            0 => DistanceMode::Directional,
            1 => DistanceMode::NonDirectional,
            m => {
                return Err(Error::Format(format!(
                    "{}: unknown mode byte {m}",
                    path.display()
                )))
            }
        };
        let mut data = vec![0f64; n * n];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            f.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        Ok(DistanceMatrix { n, data, mode })
    }
}

/// Pairwise distance matrix over a list of trajectories. Pairs are computed
/// in parallel, each exactly once (i < j), then mirrored, so the matrix is
/// exactly symmetric and thread-count invariant.
pub fn pairwise_matrix(
    trajs: &[&[EdgeId]],
    d_all: &SegmentDistanceMatrix,
    mode: DistanceMode,
) -> Result<DistanceMatrix> {
    let n = trajs.len();
    if n == 0 {
        return Err(Error::Arg("pairwise_matrix requires a non-empty list".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| match mode {
            DistanceMode::Directional => traj_dtw(trajs[i], trajs[j], d_all),
            DistanceMode::NonDirectional => nd_traj_dtw(trajs[i], trajs[j], d_all),
        })
        .collect();
    let mut data = vec![0f64; n * n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        let v = v?;
        data[i * n + j] = v;
        data[j * n + i] = v;
    }
    Ok(DistanceMatrix { n, data, mode })
}
