//! Maximin-based sampling on a trajectory collection: farthest-point picks
//! to find the distinct shapes, nearest-pick grouping, then a proportional
//! random draw. The printed radii fall off sharply once every genuinely
//! different shape has been picked, which is how k' is usually chosen.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trajclus::dtw::nd_traj_dtw;
use trajclus::mmrs::{group_by_nearest, maximin, proportional_sample};
use trajclus::road_network::all_pairs_segment_distances;
use trajclus::synthgen::{generate, GeneratorSpec};

fn main() -> trajclus::Result<()> {
    let spec = GeneratorSpec {
        rows: 6,
        cols: 8,
        spacing_deg: 0.01,
        patterns: [0u32, 2, 5]
            .iter()
            .map(|&r| (0..8).map(|c| r * 8 + c).collect())
            .collect(),
        counts: vec![80, 60, 40],
        direction_mix: 0.0,
        truncation_prob: 0.2,
        detour_prob: 0.0,
        min_len: 5,
        seed: 3,
    };
    let (net, ds, _) = generate(&spec)?;
    let d_all = all_pairs_segment_distances(&net)?;

    let n = ds.trajectories.len();
    let dist = |i: usize, j: usize| {
        nd_traj_dtw(
            &ds.trajectories[i].segments,
            &ds.trajectories[j].segments,
            &d_all,
        )
        .unwrap()
    };

    let k_prime = 8;
    let res = maximin(n, k_prime, 0, dist)?;
    println!("pick  object  radius (km)");
    for (i, (&p, &r)) in res.picks.iter().zip(&res.radii).enumerate() {
        println!("{i:>4}  {p:>6}  {r:>10.4}");
    }

    let groups = group_by_nearest(n, &res.picks, dist);
    let mut sizes = vec![0usize; k_prime];
    for &g in &groups {
        sizes[g] += 1;
    }
    println!("\ngroup sizes: {sizes:?}  (n = {n})");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sample = proportional_sample(n, &res.picks, 30, &mut rng, dist)?;
    let mut sampled_sizes = vec![0usize; k_prime];
    for &s in &sample {
        sampled_sizes[groups[s]] += 1;
    }
    println!("proportional sample of 30: {sampled_sizes:?}");
    Ok(())
}
