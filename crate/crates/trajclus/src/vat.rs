//! VAT reordering (a modified Prim traversal), the iVAT transform
//! (min-max path closure), and the MST cut operations that turn the
//! reordering into flat partitions.

use std::io::Write;
use std::path::Path;

use crate::dtw::DistanceMatrix;
use crate::error::{Error, Result};

/// One MST edge in insertion order. `from` and `to` are indices into the
/// original (pre-permutation) object list; `from` is already visited when
/// `to` is attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub from: usize,
    pub to: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct VatResult {
    /// Visit order: permutation[k] = original index of the k-th object.
    pub permutation: Vec<usize>,
    /// Input matrix reordered by `permutation` (row-major, n x n).
    pub reordered: Vec<f64>,
    /// n - 1 MST edges in insertion order.
    pub mst_edges: Vec<MstEdge>,
    n: usize,
}

impl VatResult {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn reordered_at(&self, i: usize, j: usize) -> f64 {
        self.reordered[i * self.n + j]
    }

    /// MST edge magnitudes in insertion order.
    pub fn cut_magnitudes(&self) -> Vec<f64> {
        self.mst_edges.iter().map(|e| e.magnitude).collect()
    }
}

/// iVAT-transformed matrix; entries follow the VAT permutation, like
/// [`VatResult::reordered`].
#[derive(Debug, Clone)]
pub struct IvatMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl IvatMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// VAT reordering. The initial object is the one appearing in a maximum
/// entry of the matrix (lowest index among ties); afterwards the nearest
/// unvisited object is attached (lowest index among ties, attachment point =
/// earliest visited object attaining the minimum).
pub fn vat(d: &DistanceMatrix) -> Result<VatResult> {
    let n = d.n();
    if n < 2 {
        return Err(Error::Arg(format!("vat requires n >= 2, got {n}")));
    }
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Arg(format!("negative or non-finite entry at ({i}, {j})")));
            }
            if d.get(i, j) != d.get(j, i) {
                return Err(Error::Arg(format!("asymmetric input at ({i}, {j})")));
            }
        }
    }

    // Row-major scan: the first row containing a maximum entry is the lowest
    // index appearing in any maximum entry.
    let mut max_val = f64::NEG_INFINITY;
    let mut initial = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j && d.get(i, j) > max_val {
                max_val = d.get(i, j);
                initial = i;
            }
        }
    }

    let mut permutation = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut min_dist = vec![f64::INFINITY; n];
    let mut attach = vec![0usize; n];
    let mut mst_edges = Vec::with_capacity(n - 1);

    permutation.push(initial);
    visited[initial] = true;
    for u in 0..n {
        if u != initial {
            min_dist[u] = d.get(u, initial);
            attach[u] = initial;
        }
    }
    for _ in 1..n {
        let mut best = usize::MAX;
        for u in 0..n {
            if !visited[u] && (best == usize::MAX || min_dist[u] < min_dist[best]) {
                best = u;
            }
        }
        mst_edges.push(MstEdge {
            from: attach[best],
            to: best,
            magnitude: min_dist[best],
        });
        permutation.push(best);
        visited[best] = true;
        for u in 0..n {
            // Strict improvement keeps the earliest-visited attachment on ties.
            if !visited[u] && d.get(u, best) < min_dist[u] {
                min_dist[u] = d.get(u, best);
                attach[u] = best;
            }
        }
    }

    let mut reordered = vec![0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            reordered[i * n + j] = d.get(permutation[i], permutation[j]);
        }
    }
    Ok(VatResult {
        permutation,
        reordered,
        mst_edges,
        n,
    })
}

/// iVAT transform: replaces each entry of the reordered matrix with the
/// min-max path distance (the smallest over paths of the largest step),
/// computed by the recursive single pass over the VAT ordering.
pub fn ivat(v: &VatResult) -> IvatMatrix {
    let n = v.n;
    let mut out = vec![0f64; n * n];
    for r in 1..n {
        let mut jstar = 0;
        for c in 1..r {
            if v.reordered_at(r, c) < v.reordered_at(r, jstar) {
                jstar = c;
            }
        }
        let base = v.reordered_at(r, jstar);
        out[r * n + jstar] = base;
        out[jstar * n + r] = base;
        for c in 0..r {
            if c != jstar {
                let val = base.max(out[jstar * n + c]);
                out[r * n + c] = val;
                out[c * n + r] = val;
            }
        }
    }
    IvatMatrix { n, data: out }
}

fn components_from_kept_edges(
    n: usize,
    edges: &[MstEdge],
    removed: &[bool],
    permutation: &[usize],
) -> Vec<usize> {
    // Union-find over objects using the kept MST edges.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    for (idx, e) in edges.iter().enumerate() {
        if !removed[idx] {
            let (ra, rb) = (find(&mut parent, e.from), find(&mut parent, e.to));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    // Canonical labels: clusters numbered by first appearance along the VAT
    // permutation, so labels line up with the dark-block order.
    let mut label_of_root = std::collections::HashMap::new();
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    for &obj in permutation {
        let root = find(&mut parent, obj);
        let label = *label_of_root.entry(root).or_insert_with(|| {
            let l = next;
            next += 1;
            l
        });
        labels[obj] = label;
    }
    labels
}

/// Removes the k - 1 largest MST edges (earliest insertion wins ties) and
/// labels the resulting components. Labels align with original indices.
pub fn cut_k(v: &VatResult, k: usize) -> Result<Vec<usize>> {
    let n = v.n;
    if k < 1 || k > n {
        return Err(Error::Arg(format!("k must be in 1..={n}, got {k}")));
    }
    let mut order: Vec<usize> = (0..v.mst_edges.len()).collect();
    order.sort_by(|&x, &y| {
        v.mst_edges[y]
            .magnitude
            .partial_cmp(&v.mst_edges[x].magnitude)
            .unwrap()
            .then(x.cmp(&y))
    });
    let mut removed = vec![false; v.mst_edges.len()];
    for &idx in order.iter().take(k - 1) {
        removed[idx] = true;
    }
    Ok(components_from_kept_edges(n, &v.mst_edges, &removed, &v.permutation))
}

/// Removes every MST edge whose magnitude exceeds alpha times the mean of
/// all n - 1 magnitudes, in one pass, and labels the components.
pub fn cut_alpha(v: &VatResult, alpha: f64) -> Result<Vec<usize>> {
    if !(alpha > 0.0) {
        return Err(Error::Arg(format!("alpha must be > 0, got {alpha}")));
    }
    let mean = v.mst_edges.iter().map(|e| e.magnitude).sum::<f64>() / v.mst_edges.len() as f64;
    let threshold = alpha * mean;
    let removed: Vec<bool> = v.mst_edges.iter().map(|e| e.magnitude > threshold).collect();
    Ok(components_from_kept_edges(v.n, &v.mst_edges, &removed, &v.permutation))
}

/// Writes a square matrix as an 8-bit binary PGM, min-max scaled so the
/// smallest entry is black. Small distances render as dark blocks.
pub fn write_pgm(data: &[f64], n: usize, path: &Path) -> Result<()> {
    assert_eq!(data.len(), n * n);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in data {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = if hi > lo { hi - lo } else { 1.0 };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "P5\n{n} {n}\n255\n")?;
    let bytes: Vec<u8> = data
        .iter()
        .map(|&v| (((v - lo) / range) * 255.0).round() as u8)
        .collect();
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

/// Raw matrix values as CSV, one row per line.
pub fn write_matrix_csv(data: &[f64], n: usize, path: &Path) -> Result<()> {
    assert_eq!(data.len(), n * n);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", data[i * n + j])).collect();
        writeln!(f, "{}", row.join(","))?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtw::DistanceMode;

    fn matrix(vals: &[&[f64]]) -> DistanceMatrix {
        let n = vals.len();
        let mut data = Vec::with_capacity(n * n);
        for row in vals {
            assert_eq!(row.len(), n);
            data.extend_from_slice(row);
        }
        DistanceMatrix::from_raw(n, data, DistanceMode::NonDirectional)
    }

    #[test]
    fn three_object_walkthrough() {
        let d = matrix(&[&[0.0, 1.0, 5.0], &[1.0, 0.0, 4.0], &[5.0, 4.0, 0.0]]);
        let v = vat(&d).unwrap();
        assert_eq!(v.permutation, vec![0, 1, 2]);
        assert_eq!(v.cut_magnitudes(), vec![1.0, 4.0]);
        assert_eq!(v.mst_edges[0].from, 0);
        assert_eq!(v.mst_edges[1].from, 1);
    }

    #[test]
    fn ivat_is_minmax_path_distance() {
        let d = matrix(&[&[0.0, 1.0, 5.0], &[1.0, 0.0, 4.0], &[5.0, 4.0, 0.0]]);
        let v = vat(&d).unwrap();
        let iv = ivat(&v);
        // Path 0-1-2 caps the largest step at 4, beating the direct 5.
        assert_eq!(iv.get(0, 1), 1.0);
        assert_eq!(iv.get(0, 2), 4.0);
        assert_eq!(iv.get(1, 2), 4.0);
        for i in 0..3 {
            assert_eq!(iv.get(i, i), 0.0);
        }
    }

    #[test]
    fn cut_k_examples() {
        let d = matrix(&[&[0.0, 1.0, 5.0], &[1.0, 0.0, 4.0], &[5.0, 4.0, 0.0]]);
        let v = vat(&d).unwrap();
        assert_eq!(cut_k(&v, 1).unwrap(), vec![0, 0, 0]);
        assert_eq!(cut_k(&v, 2).unwrap(), vec![0, 0, 1]);
        assert_eq!(cut_k(&v, 3).unwrap(), vec![0, 1, 2]);
        assert!(cut_k(&v, 0).is_err());
        assert!(cut_k(&v, 4).is_err());
    }

    #[test]
    fn cut_alpha_examples() {
        let d = matrix(&[&[0.0, 1.0, 5.0], &[1.0, 0.0, 4.0], &[5.0, 4.0, 0.0]]);
        let v = vat(&d).unwrap();
        // mean magnitude = 2.5; alpha=1.0 cuts the 4.0 edge only.
        assert_eq!(cut_alpha(&v, 1.0).unwrap(), vec![0, 0, 1]);
        // alpha large enough keeps everything.
        assert_eq!(cut_alpha(&v, 2.0).unwrap(), vec![0, 0, 0]);
        assert!(cut_alpha(&v, 0.0).is_err());
    }

    #[test]
    fn equal_magnitudes_never_cut_at_alpha_one_or_more() {
        let d = matrix(&[
            &[0.0, 2.0, 2.0, 2.0],
            &[2.0, 0.0, 2.0, 2.0],
            &[2.0, 2.0, 0.0, 2.0],
            &[2.0, 2.0, 2.0, 0.0],
        ]);
        let v = vat(&d).unwrap();
        assert_eq!(cut_alpha(&v, 1.0).unwrap(), vec![0; 4]);
        // Below 1, every edge exceeds alpha * mean and all objects separate.
        assert_eq!(cut_alpha(&v, 0.5).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_bad_input() {
        let asym = matrix(&[&[0.0, 1.0], &[2.0, 0.0]]);
        assert!(vat(&asym).is_err());
        let neg = matrix(&[&[0.0, -1.0], &[-1.0, 0.0]]);
        assert!(vat(&neg).is_err());
        let tiny = matrix(&[&[0.0]]);
        assert!(vat(&tiny).is_err());
    }

    #[test]
    fn clusters_are_contiguous_in_vat_order() {
        // Two well-separated groups plus an outlier.
        let d = matrix(&[
            &[0.0, 0.1, 9.0, 9.1, 5.0],
            &[0.1, 0.0, 9.2, 9.0, 5.1],
            &[9.0, 9.2, 0.0, 0.2, 5.2],
            &[9.1, 9.0, 0.2, 0.0, 5.3],
            &[5.0, 5.1, 5.2, 5.3, 0.0],
        ]);
        let v = vat(&d).unwrap();
        for k in 1..=5 {
            let labels = cut_k(&v, k).unwrap();
            let order: Vec<usize> = v.permutation.iter().map(|&o| labels[o]).collect();
            let mut seen = Vec::new();
            for l in order {
                if seen.last() != Some(&l) {
                    assert!(!seen.contains(&l), "cluster {l} not contiguous at k={k}");
                    seen.push(l);
                }
            }
        }
    }

    #[test]
    fn pgm_and_csv_export() {
        let d = matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let v = vat(&d).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let pgm = dir.path().join("m.pgm");
        let csv = dir.path().join("m.csv");
        write_pgm(&v.reordered, v.n(), &pgm).unwrap();
        write_matrix_csv(&v.reordered, v.n(), &csv).unwrap();
        let bytes = std::fs::read(&pgm).unwrap();
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(bytes.len(), b"P5\n2 2\n255\n".len() + 4);
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}
