//! Model persistence: save a trained model, reload it, check the two agree,
//! and demonstrate that a tampered file is rejected by its checksum.

use trajclus::pipeline::{load_model, save_model, train, PipelineConfig};
use trajclus::road_network::all_pairs_segment_distances;
use trajclus::synthgen::{generate, GeneratorSpec};

fn main() -> trajclus::Result<()> {
    let spec = GeneratorSpec {
        rows: 6,
        cols: 8,
        spacing_deg: 0.01,
        patterns: [0u32, 5]
            .iter()
            .map(|&r| (0..8).map(|c| r * 8 + c).collect())
            .collect(),
        counts: vec![100, 100],
        direction_mix: 0.5,
        truncation_prob: 0.1,
        detour_prob: 0.0,
        min_len: 5,
        seed: 31,
    };
    let (net, ds, _) = generate(&spec)?;
    let d_all = all_pairs_segment_distances(&net)?;
    let cfg = PipelineConfig {
        k_prime: 8,
        n: 80,
        alpha_stage1: 12.0,
        seed: 7,
        min_len: 5,
        ..PipelineConfig::default()
    };
    let (model, _) = train(&ds, &net, &d_all, &cfg)?;

    let dir = std::path::Path::new("out");
    std::fs::create_dir_all(dir)?;
    let path = dir.join("model.json");
    save_model(&model, &path)?;
    println!(
        "saved {} clusters to {} ({} bytes)",
        model.clusters.len(),
        path.display(),
        std::fs::metadata(&path)?.len()
    );

    let loaded = load_model(&path)?;
    assert_eq!(loaded.clusters.len(), model.clusters.len());
    assert_eq!(loaded.config, model.config);
    for (a, b) in loaded.clusters.iter().zip(&model.clusters) {
        assert_eq!(a.members, b.members);
        assert_eq!(a.rt.segments, b.rt.segments);
    }
    println!("reloaded model matches");

    // Flip one digit inside the payload; the loader must notice.
    let text = std::fs::read_to_string(&path)?;
    let tampered = text.replacen("\"members\":[", "\"members\":[999,", 1);
    let bad = dir.join("model_tampered.json");
    std::fs::write(&bad, tampered)?;
    match load_model(&bad) {
        Err(e) => println!("tampered file rejected: {e}"),
        Ok(_) => panic!("tampered model loaded"),
    }
    Ok(())
}
