//! Compares directional and non-directional trajectory distances on a
//! straight corridor. The band-limited warping makes partial overlaps
//! cheap, while opposite travel directions stay far apart unless the
//! non-directional variant is asked to ignore them.

use trajclus::dtw::{nd_traj_dtw, traj_dtw};
use trajclus::fixtures::line;
use trajclus::road_network::all_pairs_segment_distances;
use trajclus::EdgeId;

fn main() -> trajclus::Result<()> {
    let net = line(12);
    let d_all = all_pairs_segment_distances(&net)?;

    let full: Vec<EdgeId> = (0..10).collect();
    let clipped: Vec<EdgeId> = (2..10).collect();
    let shifted: Vec<EdgeId> = (1..11).collect();
    let reversed: Vec<EdgeId> = full.iter().rev().copied().collect();
    let elsewhere: Vec<EdgeId> = vec![10, 11];

    let cases = [
        ("full vs itself", &full, &full),
        ("full vs clipped front", &full, &clipped),
        ("full vs shifted by one", &full, &shifted),
        ("full vs reversed", &full, &reversed),
        ("full vs far segments", &full, &elsewhere),
    ];
    println!("{:<26} {:>12} {:>16}", "pair", "directional", "non-directional");
    for (name, a, b) in cases {
        let d = traj_dtw(a, b, &d_all)?;
        let nd = nd_traj_dtw(a, b, &d_all)?;
        println!("{name:<26} {d:>12.4} {nd:>16.4}");
    }

    // The non-directional distance is the cheaper of the two orientations,
    // never more.
    let d = traj_dtw(&full, &reversed, &d_all)?;
    let nd = nd_traj_dtw(&full, &reversed, &d_all)?;
    assert!(nd <= d);
    println!("\nreversed pair: directional {d:.4} km, non-directional {nd:.4} km");
    Ok(())
}
