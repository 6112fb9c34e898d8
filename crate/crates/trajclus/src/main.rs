//! Command-line front end. All logic lives in the library; this file is
//! argument handling, file plumbing and exit-code policy.
//!
//! Exit codes: 0 success, 1 usage, 2 data or file error, 3 internal.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use trajclus::baselines::{
    global_mm_train, mmm_cv_sweep, mmm_train, netscan_train, netscan_tune, GlobalPredictorOwned,
    MmmPredictor, NetscanPredictor,
};
use trajclus::evaluation::run_experiment;
use trajclus::pipeline::{
    load_any_model, save_any_model, save_model, train, AnyModel, PipelineConfig, StoredModel,
};
use trajclus::predictor::{
    predict_batch, ClusivatPredictor, PredictionResult, RoutePredictor, LAMBDA_FULL,
};
use trajclus::road_network::{
    all_pairs_segment_distances, load_network, save_network, RoadNetwork, SegmentDistanceMatrix,
};
use trajclus::synthgen::{generate, GeneratorSpec};
use trajclus::trajectory::{ingest, save_trajectories, Trajectory};
use trajclus::vat::{write_matrix_csv, write_pgm};
use trajclus::Error;

#[derive(Parser)]
#[command(name = "trajclus", version, about = "Trajectory clustering and route prediction")]
struct Cli {
    /// Worker threads (default: all cores; TCV_THREADS is the fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overwrite outputs that already exist.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Precompute the segment-to-segment network distance matrix.
    Precompute(PrecomputeArgs),
    /// Train a model on a trajectory file.
    Train(TrainArgs),
    /// Continue partial trajectories with a trained model.
    Predict(PredictArgs),
    /// Score a trained model against held-out trajectories.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic grid network and trajectory corpus.
    Generate(GenerateArgs),
    /// Cross-validate mixture-of-Markov component counts.
    MmmSweep(MmmSweepArgs),
    /// Scan density thresholds for a target dense-path count.
    NetscanTune(NetscanTuneArgs),
}

#[derive(Args)]
struct PrecomputeArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Clusivat,
    Netscan,
    Mmm,
    Global,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    trajectories: PathBuf,
    /// Precomputed distance matrix; computed on the fly when absent.
    #[arg(long)]
    dall: Option<PathBuf>,
    /// JSON config file with flat keys; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Clusivat)]
    method: Method,
    #[arg(long)]
    k_prime: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
    #[arg(long)]
    min_t: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    /// Prediction window stored with the model ("inf" for full history).
    #[arg(long, value_parser = parse_lambda)]
    lambda: Option<usize>,
    /// netscan: minimum pass count for a dense segment.
    #[arg(long)]
    density_threshold: Option<u64>,
    /// netscan: maximum density gap when extending a path.
    #[arg(long)]
    similarity_threshold: Option<u64>,
    /// mmm: number of mixture components.
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Directory for the stage-1 iVAT image (PGM and CSV); clusivat only.
    #[arg(long)]
    emit_ivat: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    dall: Option<PathBuf>,
    /// JSONL queries, one {"id", "edges"} object per line.
    #[arg(long)]
    partials: PathBuf,
    #[arg(long)]
    steps: usize,
    /// Window length ("inf" for full history; default from the model).
    #[arg(long, value_parser = parse_lambda)]
    lambda: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    dall: Option<PathBuf>,
    /// JSONL of complete trajectories; each is split in half for scoring.
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    mmax: usize,
    #[arg(long, value_parser = parse_lambda)]
    lambda: Option<usize>,
    /// Output directory for summary.csv, per_step.csv, length_histogram.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for network.json, trajectories.jsonl, labels.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MmmSweepArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    trajectories: PathBuf,
    /// Candidate component counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    components: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NetscanTuneArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    trajectories: PathBuf,
    #[arg(long)]
    similarity_threshold: u64,
    /// Desired dense-path count.
    #[arg(long)]
    target_k: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_lambda(s: &str) -> Result<usize, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(LAMBDA_FULL);
    }
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        Ok(_) => Err("lambda must be at least 1".into()),
        Err(e) => Err(format!("expected a positive integer or \"inf\": {e}")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Arg(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
        Err(_) => {
            eprintln!("internal error (panic); rerun with RUST_BACKTRACE=1 for details");
            ExitCode::from(3)
        }
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, Error> {
    if let Some(t) = flag {
        if t < 1 {
            return Err(Error::Arg("--threads must be at least 1".into()));
        }
        return Ok(Some(t));
    }
    match std::env::var("TCV_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(Error::Arg(format!("bad TCV_THREADS value {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let threads = resolve_threads(cli.threads)?;
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Arg(format!("thread pool: {e}")))?;
    }
    let force = cli.force;
    match cli.command {
        Command::Precompute(a) => cmd_precompute(a, force, threads),
        Command::Train(a) => cmd_train(a, force, threads),
        Command::Predict(a) => cmd_predict(a, force, threads),
        Command::Evaluate(a) => cmd_evaluate(a, force, threads),
        Command::Generate(a) => cmd_generate(a, force, threads),
        Command::MmmSweep(a) => cmd_mmm_sweep(a, force, threads),
        Command::NetscanTune(a) => cmd_netscan_tune(a, force, threads),
    }
}

/// Refuses to clobber an existing output unless --force was given.
fn check_outputs(paths: &[&Path], force: bool) -> Result<(), Error> {
    if force {
        return Ok(());
    }
    for p in paths {
        if p.exists() {
            return Err(Error::Data(format!(
                "output {} exists (pass --force to overwrite)",
                p.display()
            )));
        }
    }
    Ok(())
}

/// Sibling provenance file for a single-file output.
fn config_sibling(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{name}.config.json"))
}

fn write_config(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn load_dall(
    flag: Option<&Path>,
    net: &RoadNetwork,
) -> Result<SegmentDistanceMatrix, Error> {
    match flag {
        Some(p) => {
            let m = SegmentDistanceMatrix::load(p)?;
            if m.n() != net.num_edges() {
                return Err(Error::Data(format!(
                    "distance matrix covers {} segments but the network has {}",
                    m.n(),
                    net.num_edges()
                )));
            }
            Ok(m)
        }
        None => {
            log::warn!("no --dall given; computing the distance matrix now");
            all_pairs_segment_distances(net)
        }
    }
}

fn load_stored_model(model: &Path, net: &RoadNetwork) -> Result<StoredModel, Error> {
    let stored = load_any_model(model)?;
    if stored.network_ref != net.identifier() {
        return Err(Error::Data(
            "model was trained against a different network".into(),
        ));
    }
    Ok(stored)
}

fn needs_dall(m: &AnyModel) -> bool {
    matches!(m, AnyModel::Clusivat(_) | AnyModel::Netscan(_))
}

fn make_predictor<'a>(
    stored: &'a StoredModel,
    d_all: Option<&'a SegmentDistanceMatrix>,
) -> Result<Box<dyn RoutePredictor + 'a>, Error> {
    let want = |d: Option<&'a SegmentDistanceMatrix>| {
        d.ok_or_else(|| Error::Arg("this method needs the distance matrix".into()))
    };
    Ok(match &stored.model {
        AnyModel::Clusivat(m) => Box::new(ClusivatPredictor {
            model: m,
            d_all: want(d_all)?,
        }),
        AnyModel::Netscan(m) => Box::new(NetscanPredictor {
            model: m,
            d_all: want(d_all)?,
            num_edges: stored.num_edges,
        }),
        AnyModel::Mmm(m) => Box::new(MmmPredictor {
            model: m,
            num_edges: stored.num_edges,
        }),
        AnyModel::Global(g) => Box::new(GlobalPredictorOwned {
            model: g,
            num_edges: stored.num_edges,
        }),
    })
}

/// Window default: the trained value for clusivat models, 3 otherwise.
fn resolve_lambda(flag: Option<usize>, stored: &StoredModel) -> usize {
    flag.unwrap_or(match &stored.model {
        AnyModel::Clusivat(m) => m.config.lambda_window,
        _ => 3,
    })
}

fn lambda_json(lambda: usize) -> serde_json::Value {
    if lambda == LAMBDA_FULL {
        serde_json::Value::String("inf".into())
    } else {
        serde_json::json!(lambda)
    }
}

fn threads_json(threads: Option<usize>) -> serde_json::Value {
    match threads {
        Some(t) => serde_json::json!(t),
        None => serde_json::Value::String("default".into()),
    }
}

fn cmd_precompute(a: PrecomputeArgs, force: bool, threads: Option<usize>) -> Result<(), Error> {
    check_outputs(&[&a.out], force)?;
    let net = load_network(&a.network)?;
    let d_all = all_pairs_segment_distances(&net)?;
    d_all.save(&a.out)?;
    write_config(
        &config_sibling(&a.out),
        &serde_json::json!({
            "command": "precompute",
            "network": a.network,
            "out": a.out,
            "num_edges": net.num_edges(),
            "threads": threads_json(threads),
        }),
    )?;
    println!(
        "wrote {} x {} segment distance matrix to {}",
        d_all.n(),
        d_all.n(),
        a.out.display()
    );
    Ok(())
}

/// Flat JSON config file; flags override anything set here.
#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    k_prime: Option<usize>,
    n: Option<usize>,
    alpha_stage1: Option<f64>,
    alpha_stage2: Option<f64>,
    min_t: Option<f64>,
    seed: Option<u64>,
    min_len: Option<usize>,
    max_len: Option<usize>,
    lambda_window: Option<usize>,
    density_threshold: Option<u64>,
    similarity_threshold: Option<u64>,
    components: Option<usize>,
    max_iters: Option<usize>,
    tol: Option<f64>,
}

fn cmd_train(a: TrainArgs, force: bool, threads: Option<usize>) -> Result<(), Error> {
    let fc: FileConfig = match &a.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?,
        None => FileConfig::default(),
    };
    let mut cfg = PipelineConfig::default();
    macro_rules! merge {
        ($field:ident, $file:expr, $flag:expr) => {
            if let Some(v) = $file {
                cfg.$field = v;
            }
            if let Some(v) = $flag {
                cfg.$field = v;
            }
        };
    }
    merge!(k_prime, fc.k_prime, a.k_prime);
    merge!(n, fc.n, a.n);
    merge!(alpha_stage1, fc.alpha_stage1, a.alpha1);
    merge!(min_t, fc.min_t, a.min_t);
    merge!(seed, fc.seed, a.seed);
    merge!(min_len, fc.min_len, a.min_len);
    merge!(max_len, fc.max_len, a.max_len);
    merge!(lambda_window, fc.lambda_window, a.lambda);
    if let Some(v) = fc.alpha_stage2 {
        cfg.alpha_stage2 = Some(v);
    }
    if let Some(v) = a.alpha2 {
        cfg.alpha_stage2 = Some(v);
    }
    let density_threshold = a.density_threshold.or(fc.density_threshold);
    let similarity_threshold = a.similarity_threshold.or(fc.similarity_threshold);
    let components = a.components.or(fc.components);
    let max_iters = a.max_iters.or(fc.max_iters).unwrap_or(100);
    let tol = a.tol.or(fc.tol).unwrap_or(1e-6);

    if a.emit_ivat.is_some() && a.method != Method::Clusivat {
        return Err(Error::Arg("--emit-ivat only applies to clusivat".into()));
    }
    check_outputs(&[&a.out], force)?;
    if let Some(dir) = &a.emit_ivat {
        check_outputs(&[&dir.join("ivat.pgm"), &dir.join("ivat.csv")], force)?;
    }

    let net = load_network(&a.network)?;
    let (ds, rejects) = ingest(&a.trajectories, &net, cfg.min_len, cfg.max_len)?;
    if !rejects.rejections.is_empty() {
        let report = a.out.with_file_name(format!(
            "{}.rejections.csv",
            a.out.file_name().unwrap_or_default().to_string_lossy()
        ));
        rejects.write_csv(&report)?;
        log::warn!(
            "rejected {} input lines; reasons in {}",
            rejects.rejections.len(),
            report.display()
        );
    }

    let method_name;
    let stored = match a.method {
        Method::Clusivat => {
            method_name = "clusivat";
            let d_all = load_dall(a.dall.as_deref(), &net)?;
            let (model, diagnostics) = train(&ds, &net, &d_all, &cfg)?;
            if let Some(dir) = &a.emit_ivat {
                std::fs::create_dir_all(dir)?;
                let ivat = &diagnostics.stage1_ivat;
                write_pgm(&ivat.data, ivat.n, &dir.join("ivat.pgm"))?;
                write_matrix_csv(&ivat.data, ivat.n, &dir.join("ivat.csv"))?;
            }
            println!(
                "clusivat: {} stage-1 clusters, {} final clusters",
                model.k_nondirectional,
                model.clusters.len()
            );
            save_model(&model, &a.out)?;
            None
        }
        Method::Netscan => {
            method_name = "netscan";
            let dt = density_threshold
                .ok_or_else(|| Error::Arg("netscan needs --density-threshold".into()))?;
            let st = similarity_threshold
                .ok_or_else(|| Error::Arg("netscan needs --similarity-threshold".into()))?;
            let d_all = load_dall(a.dall.as_deref(), &net)?;
            let model = netscan_train(&ds, &net, &d_all, dt, st)?;
            println!("netscan: {} dense paths", model.dense_paths.len());
            Some(AnyModel::Netscan(model))
        }
        Method::Mmm => {
            method_name = "mmm";
            let c = components.ok_or_else(|| Error::Arg("mmm needs --components".into()))?;
            let model = mmm_train(&ds, c, cfg.seed, max_iters, tol)?;
            println!(
                "mmm: {} components, objective {:.4} after {} iterations",
                model.components,
                model.objective_trace.last().unwrap(),
                model.objective_trace.len()
            );
            Some(AnyModel::Mmm(model))
        }
        Method::Global => {
            method_name = "global";
            Some(AnyModel::Global(global_mm_train(&ds)?))
        }
    };
    if let Some(model) = stored {
        save_any_model(
            &StoredModel {
                network_ref: net.identifier().to_string(),
                num_edges: net.num_edges() as u32,
                model,
            },
            &a.out,
        )?;
    }
    write_config(
        &config_sibling(&a.out),
        &serde_json::json!({
            "command": "train",
            "method": method_name,
            "network": a.network,
            "trajectories": a.trajectories,
            "dall": a.dall,
            "out": a.out,
            "pipeline": cfg,
            "density_threshold": density_threshold,
            "similarity_threshold": similarity_threshold,
            "components": components,
            "max_iters": max_iters,
            "tol": tol,
            "trained_on": ds.trajectories.len(),
            "threads": threads_json(threads),
        }),
    )?;
    println!("model written to {}", a.out.display());
    Ok(())
}

#[derive(Deserialize)]
struct QueryLine {
    id: u64,
    edges: Vec<u32>,
}

/// Partial trajectories are allowed to be shorter than the ingestion
/// minimum, so they get their own lenient loader.
fn load_queries(path: &Path) -> Result<Vec<Trajectory>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: QueryLine = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("{} line {}: {e}", path.display(), no + 1)))?;
        out.push(Trajectory {
            id: q.id,
            segments: q.edges,
        });
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{}: no queries", path.display())));
    }
    Ok(out)
}

fn cmd_predict(a: PredictArgs, force: bool, threads: Option<usize>) -> Result<(), Error> {
    check_outputs(&[&a.out], force)?;
    let net = load_network(&a.network)?;
    let stored = load_stored_model(&a.model, &net)?;
    let d_all = if needs_dall(&stored.model) {
        Some(load_dall(a.dall.as_deref(), &net)?)
    } else {
        None
    };
    let lambda = resolve_lambda(a.lambda, &stored);
    let queries = load_queries(&a.partials)?;
    let predictor = make_predictor(&stored, d_all.as_ref())?;
    let results = predict_batch(&*predictor, &queries, a.steps, lambda)?;

    #[derive(Serialize)]
    struct Row<'a> {
        id: u64,
        #[serde(flatten)]
        result: &'a PredictionResult,
    }
    let mut text = String::new();
    for (id, result) in &results {
        text.push_str(&serde_json::to_string(&Row {
            id: *id,
            result,
        })?);
        text.push('\n');
    }
    std::fs::write(&a.out, text)?;
    write_config(
        &config_sibling(&a.out),
        &serde_json::json!({
            "command": "predict",
            "model": a.model,
            "method": stored.model.method_name(),
            "network": a.network,
            "dall": a.dall,
            "partials": a.partials,
            "steps": a.steps,
            "lambda": lambda_json(lambda),
            "out": a.out,
            "threads": threads_json(threads),
        }),
    )?;
    let truncated = results.iter().filter(|(_, r)| r.truncated).count();
    println!(
        "wrote {} predictions to {} ({} truncated)",
        results.len(),
        a.out.display(),
        truncated
    );
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, force: bool, threads: Option<usize>) -> Result<(), Error> {
    let outputs = [
        a.out.join("summary.csv"),
        a.out.join("per_step.csv"),
        a.out.join("length_histogram.csv"),
    ];
    check_outputs(&outputs.iter().map(|p| p.as_path()).collect::<Vec<_>>(), force)?;
    let net = load_network(&a.network)?;
    let stored = load_stored_model(&a.model, &net)?;
    let d_all = if needs_dall(&stored.model) {
        Some(load_dall(a.dall.as_deref(), &net)?)
    } else {
        None
    };
    let lambda = resolve_lambda(a.lambda, &stored);
    let (test, rejects) = ingest(&a.test, &net, 2, usize::MAX)?;
    if !rejects.rejections.is_empty() {
        log::warn!("ignored {} malformed test lines", rejects.rejections.len());
    }
    let predictor = make_predictor(&stored, d_all.as_ref())?;
    let report = run_experiment(
        &*predictor,
        &test.trajectories,
        a.mmax,
        lambda,
        &net,
        Some(&a.out),
    )?;
    write_config(
        &a.out.join("effective_config.json"),
        &serde_json::json!({
            "command": "evaluate",
            "model": a.model,
            "method": report.method,
            "network": a.network,
            "dall": a.dall,
            "test": a.test,
            "mmax": a.mmax,
            "lambda": lambda_json(lambda),
            "out": a.out,
            "threads": threads_json(threads),
        }),
    )?;
    println!(
        "{}: PA {:.4}, DE {:.4} km, PR {:.1}%, OA {:.4}, ODE {:.4} km over {} trajectories ({} truncated)",
        report.method,
        report.avg_pa,
        report.avg_de_km,
        report.pr * 100.0,
        report.oa,
        report.ode_km,
        report.n_test,
        report.n_truncated
    );
    println!("reports written to {}", a.out.display());
    Ok(())
}

fn cmd_generate(a: GenerateArgs, force: bool, threads: Option<usize>) -> Result<(), Error> {
    let spec: GeneratorSpec =
        serde_json::from_str(&std::fs::read_to_string(&a.spec)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", a.spec.display())))?;
    std::fs::create_dir_all(&a.out)?;
    let net_path = a.out.join("network.json");
    let traj_path = a.out.join("trajectories.jsonl");
    let labels_path = a.out.join("labels.csv");
    check_outputs(&[&net_path, &traj_path, &labels_path], force)?;
    let (net, ds, labels) = generate(&spec)?;
    save_network(&net, &net_path)?;
    save_trajectories(&ds.trajectories, &traj_path)?;
    let mut csv = String::from("id,pattern,direction\n");
    for l in &labels {
        let dir = if l.reversed { "reverse" } else { "forward" };
        csv.push_str(&format!("{},{},{}\n", l.id, l.pattern, dir));
    }
    std::fs::write(&labels_path, csv)?;
    write_config(
        &a.out.join("effective_config.json"),
        &serde_json::json!({
            "command": "generate",
            "spec_file": a.spec,
            "spec": spec,
            "out": a.out,
            "threads": threads_json(threads),
        }),
    )?;
    println!(
        "generated {} nodes, {} segments, {} trajectories into {}",
        net.num_nodes(),
        net.num_edges(),
        ds.trajectories.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_mmm_sweep(a: MmmSweepArgs, force: bool, threads: Option<usize>) -> Result<(), Error> {
    check_outputs(&[&a.out], force)?;
    let net = load_network(&a.network)?;
    let (ds, _) = ingest(&a.trajectories, &net, 2, usize::MAX)?;
    let results = mmm_cv_sweep(&ds, &a.components, a.folds, a.seed, a.max_iters, a.tol)?;
    let mut csv = String::from("components,mean_held_out_ll\n");
    for (c, ll) in &results {
        csv.push_str(&format!("{c},{ll}\n"));
    }
    std::fs::write(&a.out, csv)?;
    let best = results
        .iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    write_config(
        &config_sibling(&a.out),
        &serde_json::json!({
            "command": "mmm-sweep",
            "network": a.network,
            "trajectories": a.trajectories,
            "components": a.components,
            "folds": a.folds,
            "seed": a.seed,
            "max_iters": a.max_iters,
            "tol": a.tol,
            "out": a.out,
            "threads": threads_json(threads),
        }),
    )?;
    println!(
        "best component count {} (mean held-out log-likelihood {:.4}); curve in {}",
        best.0,
        best.1,
        a.out.display()
    );
    Ok(())
}

fn cmd_netscan_tune(a: NetscanTuneArgs, force: bool, threads: Option<usize>) -> Result<(), Error> {
    check_outputs(&[&a.out], force)?;
    let net = load_network(&a.network)?;
    let (ds, _) = ingest(&a.trajectories, &net, 2, usize::MAX)?;
    let tuned = netscan_tune(&ds, &net, a.similarity_threshold, a.target_k)?;
    let mut csv = String::from("density_threshold,paths\n");
    for (thr, count) in &tuned.curve {
        csv.push_str(&format!("{thr},{count}\n"));
    }
    std::fs::write(&a.out, csv)?;
    write_config(
        &config_sibling(&a.out),
        &serde_json::json!({
            "command": "netscan-tune",
            "network": a.network,
            "trajectories": a.trajectories,
            "similarity_threshold": a.similarity_threshold,
            "target_k": a.target_k,
            "out": a.out,
            "threads": threads_json(threads),
        }),
    )?;
    println!(
        "density threshold {} gives {} dense paths (target {}); curve in {}",
        tuned.best_threshold,
        tuned.best_count,
        a.target_k,
        a.out.display()
    );
    Ok(())
}
