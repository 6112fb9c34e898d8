//! Maximin random sampling: pick k' distinguished objects by farthest-point
//! traversal, group every object with its nearest distinguished one, then
//! draw a proportional random sample from the groups.

use rand::Rng;

use crate::error::{Error, Result};

/// Outcome of the maximin pass.
#[derive(Debug, Clone)]
pub struct MaximinResult {
    /// Indices of the distinguished objects in pick order.
    pub picks: Vec<usize>,
    /// Final distance from each object to its nearest distinguished object.
    pub min_dists: Vec<f64>,
    /// Distance at which each pick was selected; radii[0] is infinity.
    pub radii: Vec<f64>,
}

/// Farthest-point selection of `k` objects out of `n`, driven by a distance
/// callback. The first pick is `seed`; each later pick maximizes the
/// distance to the already-picked set (lowest index on ties). Performs
/// exactly k * n distance evaluations.
pub fn maximin<F>(n: usize, k: usize, seed: usize, mut dist: F) -> Result<MaximinResult>
where
    F: FnMut(usize, usize) -> f64,
{
    if n == 0 || k == 0 || k > n || seed >= n {
        return Err(Error::Arg(format!(
            "maximin needs 0 < k <= n and seed < n (n={n}, k={k}, seed={seed})"
        )));
    }
    let mut picks = Vec::with_capacity(k);
    let mut radii = Vec::with_capacity(k);
    let mut min_dists = vec![f64::INFINITY; n];
    let mut current = seed;
    for _ in 0..k {
        picks.push(current);
        radii.push(min_dists[current]);
        for j in 0..n {
            let d = dist(current, j);
            if d < min_dists[j] {
                min_dists[j] = d;
            }
        }
        let mut best = 0;
        for j in 1..n {
            if min_dists[j] > min_dists[best] {
                best = j;
            }
        }
        current = best;
    }
    Ok(MaximinResult {
        picks,
        min_dists,
        radii,
    })
}

/// Assigns each object to its nearest distinguished object, returning for
/// each object the position (index into `picks`) of its group. Ties go to
/// the earliest pick; a distinguished object always maps to itself even
/// when it duplicates an earlier pick.
pub fn group_by_nearest<F>(n: usize, picks: &[usize], mut dist: F) -> Vec<usize>
where
    F: FnMut(usize, usize) -> f64,
{
    let mut groups = vec![0usize; n];
    for j in 0..n {
        if let Some(pos) = picks.iter().position(|&p| p == j) {
            groups[j] = pos;
            continue;
        }
        let mut best = 0;
        let mut best_d = dist(picks[0], j);
        for (pos, &p) in picks.iter().enumerate().skip(1) {
            let d = dist(p, j);
            if d < best_d {
                best_d = d;
                best = pos;
            }
        }
        groups[j] = best;
    }
    groups
}

/// Number of samples each group contributes: floor(n * g / total) with the
/// remainder spread by largest fractional part (lowest group index on ties),
/// then every nonempty group is raised to at least one sample by stealing
/// from the currently largest allocation above one.
pub fn proportional_allocation(group_sizes: &[usize], n: usize) -> Result<Vec<usize>> {
    let total: usize = group_sizes.iter().sum();
    if n == 0 || n > total {
        return Err(Error::Arg(format!(
            "sample size must be in 1..=total ({n} of {total})"
        )));
    }
    let nonempty = group_sizes.iter().filter(|&&g| g > 0).count();
    if n < nonempty {
        return Err(Error::Arg(format!(
            "sample size {n} cannot cover {nonempty} nonempty groups"
        )));
    }
    let mut alloc: Vec<usize> = Vec::with_capacity(group_sizes.len());
    let mut fracs: Vec<(f64, usize)> = Vec::new();
    let mut used = 0;
    for (idx, &g) in group_sizes.iter().enumerate() {
        let exact = n as f64 * g as f64 / total as f64;
        let base = exact.floor() as usize;
        alloc.push(base);
        used += base;
        fracs.push((exact - base as f64, idx));
    }
    // Largest remainder first; ties by lowest group index.
    fracs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut leftover = n - used;
    for &(_, idx) in &fracs {
        if leftover == 0 {
            break;
        }
        if group_sizes[idx] > 0 {
            alloc[idx] += 1;
            leftover -= 1;
        }
    }
    // Zero-fix: every nonempty group contributes at least one sample.
    for idx in 0..alloc.len() {
        if group_sizes[idx] > 0 && alloc[idx] == 0 {
            let donor = (0..alloc.len())
                .filter(|&d| alloc[d] > 1)
                .max_by(|&a, &b| alloc[a].cmp(&alloc[b]).then(b.cmp(&a)))
                .expect("an allocation above one must exist");
            alloc[donor] -= 1;
            alloc[idx] += 1;
        }
    }
    // Clamp cannot trigger: a group's allocation never exceeds its size
    // because exact <= g and the remainder adds at most one to a group
    // whose fraction is nonzero.
    for (idx, &a) in alloc.iter().enumerate() {
        debug_assert!(a <= group_sizes[idx]);
    }
    Ok(alloc)
}

/// Full sampling pass: groups objects by the distinguished picks and draws
/// the proportional allocation uniformly without replacement inside each
/// group. Returns sorted object indices.
pub fn proportional_sample<F, R>(
    n_objects: usize,
    picks: &[usize],
    sample_size: usize,
    rng: &mut R,
    mut dist: F,
) -> Result<Vec<usize>>
where
    F: FnMut(usize, usize) -> f64,
    R: Rng,
{
    let groups = group_by_nearest(n_objects, picks, &mut dist);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); picks.len()];
    for (obj, &g) in groups.iter().enumerate() {
        members[g].push(obj);
    }
    let sizes: Vec<usize> = members.iter().map(|m| m.len()).collect();
    let alloc = proportional_allocation(&sizes, sample_size)?;
    let mut sample = Vec::with_capacity(sample_size);
    for (group, take) in members.iter().zip(&alloc) {
        // Partial Fisher-Yates: the first `take` slots end up a uniform
        // draw without replacement.
        let mut pool = group.clone();
        for i in 0..*take {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
            sample.push(pool[i]);
        }
    }
    sample.sort_unstable();
    Ok(sample)
}
