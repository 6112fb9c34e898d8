//! End-to-end pipeline run: generate a benchmark, train the clustering
//! model, then feed it partial trajectories and print the continuation each
//! cluster chain proposes.

use trajclus::pipeline::{train, PipelineConfig};
use trajclus::predictor::{predict, PredictionRequest};
use trajclus::road_network::all_pairs_segment_distances;
use trajclus::synthgen::{generate, GeneratorSpec};
use trajclus::trajectory::{split_query_truth, split_train_test};

fn main() -> trajclus::Result<()> {
    let spec = GeneratorSpec {
        rows: 10,
        cols: 10,
        spacing_deg: 0.01,
        patterns: [0u32, 3, 6, 9]
            .iter()
            .map(|&r| (0..10).map(|c| r * 10 + c).collect())
            .collect(),
        counts: vec![300; 4],
        direction_mix: 0.5,
        truncation_prob: 0.1,
        detour_prob: 0.0,
        min_len: 7,
        seed: 42,
    };
    let (net, ds, _) = generate(&spec)?;
    let (ds_train, ds_test) = split_train_test(&ds, 0.8, 5)?;
    let d_all = all_pairs_segment_distances(&net)?;

    let cfg = PipelineConfig {
        k_prime: 16,
        n: 150,
        alpha_stage1: 12.0,
        seed: 7,
        min_len: 5,
        ..PipelineConfig::default()
    };
    let (model, diag) = train(&ds_train, &net, &d_all, &cfg)?;
    println!(
        "trained on {} trajectories (sample of {}): {} stage-1 groups, {} clusters",
        ds_train.trajectories.len(),
        diag.sample_indices.len(),
        model.k_nondirectional,
        model.clusters.len()
    );
    for c in &model.clusters {
        println!(
            "  cluster {}: {} members, representative {:?}",
            c.cluster_id,
            c.members.len(),
            c.rt.segments
        );
    }

    println!("\npredictions on five held-out trajectories:");
    for t in ds_test.trajectories.iter().take(5) {
        let (query, truth) = split_query_truth(t)?;
        let req = PredictionRequest {
            partial: query.segments.clone(),
            steps: truth.segments.len(),
            lambda: 3,
        };
        let res = predict(&model, &d_all, &req)?;
        println!(
            "  observed {:?}\n   cluster {:?}\n predicted {:?}\n    actual {:?}",
            query.segments, res.cluster_trace, res.predicted, truth.segments
        );
    }
    Ok(())
}
