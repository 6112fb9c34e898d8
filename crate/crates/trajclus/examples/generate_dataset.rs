//! Builds a synthetic benchmark: a grid road network with planted route
//! patterns, both travel directions, and random truncation. Writes the
//! network, the trajectories and the ground-truth labels to ./out/dataset.

use trajclus::road_network::save_network;
use trajclus::synthgen::{generate, GeneratorSpec};
use trajclus::trajectory::save_trajectories;

fn main() -> trajclus::Result<()> {
    let spec = GeneratorSpec {
        rows: 10,
        cols: 10,
        spacing_deg: 0.01,
        // Horizontal routes along rows 0, 3, 6 and 9.
        patterns: [0u32, 3, 6, 9]
            .iter()
            .map(|&r| (0..10).map(|c| r * 10 + c).collect())
            .collect(),
        counts: vec![500; 4],
        direction_mix: 0.5,
        truncation_prob: 0.1,
        detour_prob: 0.0,
        min_len: 7,
        seed: 42,
    };
    let (net, ds, labels) = generate(&spec)?;

    let dir = std::path::Path::new("out/dataset");
    std::fs::create_dir_all(dir)?;
    save_network(&net, &dir.join("network.json"))?;
    save_trajectories(&ds.trajectories, &dir.join("trajectories.jsonl"))?;

    let mut csv = String::from("id,pattern,reversed\n");
    for l in &labels {
        csv.push_str(&format!("{},{},{}\n", l.id, l.pattern, l.reversed));
    }
    std::fs::write(dir.join("labels.csv"), csv)?;

    let reversed = labels.iter().filter(|l| l.reversed).count();
    let truncated = ds.trajectories.iter().filter(|t| t.len() < 9).count();
    println!(
        "{} nodes, {} segments, {} trajectories ({} reversed, {} truncated)",
        net.num_nodes(),
        net.num_edges(),
        ds.trajectories.len(),
        reversed,
        truncated
    );
    println!("written to {}", dir.display());
    Ok(())
}
