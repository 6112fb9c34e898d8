//! Trains every prediction method on the same benchmark and prints the
//! comparison table: prediction accuracy, distance error, prediction rate
//! and the one-step variants. CSV reports land in ./out/eval/<method>.
//!
//! The benchmark mixes both travel directions, which is what separates the
//! methods. Dense-path matching ignores segment order, so on mixed data the
//! netscan chains inherit the same direction ties as the global chain and
//! the two rows come out identical; the clustered methods keep the
//! directions apart and predict cleanly.

use trajclus::baselines::{
    global_mm_train, mmm_train, netscan_train, GlobalPredictorOwned, MmmPredictor,
    NetscanPredictor,
};
use trajclus::evaluation::run_experiment;
use trajclus::pipeline::{train, PipelineConfig};
use trajclus::predictor::ClusivatPredictor;
use trajclus::road_network::all_pairs_segment_distances;
use trajclus::synthgen::{generate, GeneratorSpec};
use trajclus::trajectory::split_train_test;

fn main() -> trajclus::Result<()> {
    let spec = GeneratorSpec {
        rows: 10,
        cols: 10,
        spacing_deg: 0.01,
        patterns: [0u32, 3, 6, 9]
            .iter()
            .map(|&r| (0..10).map(|c| r * 10 + c).collect())
            .collect(),
        counts: vec![400; 4],
        direction_mix: 0.5,
        truncation_prob: 0.1,
        detour_prob: 0.0,
        min_len: 7,
        seed: 17,
    };
    let (net, ds, _) = generate(&spec)?;
    let (ds_train, ds_test) = split_train_test(&ds, 0.8, 9)?;
    let d_all = all_pairs_segment_distances(&net)?;
    let num_edges = net.num_edges() as u32;
    let m_max = 9;
    let lambda = 3;

    let cfg = PipelineConfig {
        k_prime: 16,
        n: 150,
        alpha_stage1: 12.0,
        seed: 7,
        min_len: 5,
        ..PipelineConfig::default()
    };
    let (clusivat, _) = train(&ds_train, &net, &d_all, &cfg)?;
    let netscan = netscan_train(&ds_train, &net, &d_all, 40, 4)?;
    let mmm = mmm_train(&ds_train, 8, 7, 100, 1e-6)?;
    let global = global_mm_train(&ds_train)?;

    let out = std::path::Path::new("out/eval");
    let reports = [
        run_experiment(
            &ClusivatPredictor { model: &clusivat, d_all: &d_all },
            &ds_test.trajectories,
            m_max,
            lambda,
            &net,
            Some(&out.join("clusivat")),
        )?,
        run_experiment(
            &NetscanPredictor { model: &netscan, d_all: &d_all, num_edges },
            &ds_test.trajectories,
            m_max,
            lambda,
            &net,
            Some(&out.join("netscan")),
        )?,
        run_experiment(
            &MmmPredictor { model: &mmm, num_edges },
            &ds_test.trajectories,
            m_max,
            lambda,
            &net,
            Some(&out.join("mmm")),
        )?,
        run_experiment(
            &GlobalPredictorOwned { model: &global, num_edges },
            &ds_test.trajectories,
            m_max,
            lambda,
            &net,
            Some(&out.join("global")),
        )?,
    ];

    println!(
        "{:<10} {:>8} {:>10} {:>8} {:>8} {:>10}",
        "method", "PA", "DE (km)", "PR %", "OA", "ODE (km)"
    );
    for r in &reports {
        println!(
            "{:<10} {:>8.4} {:>10.4} {:>8.1} {:>8.4} {:>10.4}",
            r.method,
            r.avg_pa,
            r.avg_de_km,
            r.pr * 100.0,
            r.oa,
            r.ode_km
        );
    }
    println!("\nper-method CSV reports in {}", out.display());
    Ok(())
}
