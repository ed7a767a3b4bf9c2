//! Command-line front end.
//!
//! Every command writes JSON lines to the supplied writer: first the fully
//! resolved configuration, then its results. Exit codes are 0 on success,
//! 1 for usage errors and 2 for problems with the input data.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::dataio::{
    self, balanced_split, gen_noisy_ssl, load_bundle, load_bundle_verbose, load_hypergraph, save_bundle,
    DatasetBundle, NoisyConfig, LABELS_FILE,
};
use crate::densek::{
    brute_force, gen_sample, max_degree, remove_min_degree, train_densek, DenseKInstance, DenseKResult, FeatureKind,
    Solver,
};
use crate::error::{Error, Result};
use crate::expand::SelfLoops;
use crate::hypercore::{validate, Hypergraph};
use crate::models::{run_trials, train_ssl, Method, SslData, TrainConfig, TrainReport, TrialSummary};
use crate::rng::{stream, Stream};
use crate::scalar::{Precision, Scalar};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hypergcn", version, about = "Hypergraph convolutional networks and densest-k-subhypergraph solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Train one model on one class-balanced split and report its test error.
    Train(TrainArgs),
    /// Repeat training over independent splits and aggregate the errors.
    Trials(TrialsArgs),
    /// Solve densest-k-subhypergraph on a hyperedge list.
    Densek(DensekArgs),
    /// Write a synthetic two-class bundle with pure and noisy hyperedges.
    GenNoisy(GenNoisyArgs),
    /// Write a synthetic densest-k instance with a planted set.
    GenDensek(GenDensekArgs),
    /// Report incidence and expansion pair counts.
    Counts(DataArgs),
    /// Check a dataset directory and list loader warnings.
    Validate(DataArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Dataset directory (or, for hyperedge-only commands, a hyperedge file).
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value = "hypergcn")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long = "weight-decay")]
    pub weight_decay: Option<f64>,
    #[arg(long = "hlr-lambda")]
    pub hlr_lambda: Option<f64>,
    /// Self-loop mode: `unit` or `degree-restoring`.
    #[arg(long = "self-loops", default_value = "unit")]
    pub self_loops: String,
}

impl ModelArgs {
    fn resolve(&self, mut cfg: TrainConfig) -> Result<TrainConfig> {
        cfg.seed = self.seed;
        cfg.epochs = self.epochs.unwrap_or(cfg.epochs);
        cfg.hidden = self.hidden.unwrap_or(cfg.hidden);
        cfg.dropout = self.dropout.unwrap_or(cfg.dropout);
        cfg.lr = self.lr.unwrap_or(cfg.lr);
        cfg.weight_decay = self.weight_decay.unwrap_or(cfg.weight_decay);
        cfg.hlr_lambda = self.hlr_lambda.unwrap_or(cfg.hlr_lambda);
        cfg.self_loops = self.self_loops.parse::<SelfLoops>().map_err(Error::InvalidArgument)?;
        if cfg.hidden == 0 {
            return Err(Error::InvalidArgument("hidden must be positive".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub budget: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// `f64` (default) or `f32`.
    #[arg(long, default_value = "f64")]
    pub precision: String,
    /// Append the aggregate CSV (header plus one row) to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrialsArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub budget: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "f64")]
    pub precision: String,
    /// Write the aggregate CSV (header plus one row) to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DensekArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long = "k-frac", default_value_t = 0.75)]
    pub k_frac: f64,
    /// max-degree, remove-min-degree, brute-force or learned.
    #[arg(long, default_value = "remove-min-degree")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability maps of the learned solver.
    #[arg(long, default_value_t = 4)]
    pub maps: usize,
    /// Synthetic training samples for the learned solver.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Planted-edge probability of the training samples.
    #[arg(long, default_value_t = 0.75)]
    pub p: f64,
    /// Input features of the learned solver: structural, degree or gaussian.
    #[arg(long, default_value = "structural")]
    pub features: String,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long = "weight-decay", default_value_t = 0.0)]
    pub weight_decay: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenNoisyArgs {
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long = "feature-dim", default_value_t = 256)]
    pub feature_dim: usize,
    /// Output directory for the bundle.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenDensekArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long = "k-frac", default_value_t = 0.75)]
    pub k_frac: f64,
    #[arg(long, default_value_t = 0.75)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; receives hyperedges.txt and the planted set as labels.txt.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let line = serde_json::to_string(value)?;
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    emit(out, &json!({ "config": cmd }))?;
    match cmd {
        Command::Train(a) => train(a, out),
        Command::Trials(a) => trials(a, out),
        Command::Densek(a) => densek(a, out),
        Command::GenNoisy(a) => gen_noisy(a, out),
        Command::GenDensek(a) => gen_densek(a, out),
        Command::Counts(a) => counts(a, out),
        Command::Validate(a) => validate_cmd(a, out),
    }
}

fn parse_precision(s: &str) -> Result<Precision> {
    s.parse::<Precision>().map_err(Error::InvalidArgument)
}

fn train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let method: Method = a.model.method.parse()?;
    let cfg = a.model.resolve(TrainConfig::with_method(method))?;
    let bundle = load_bundle(&a.data)?;
    let report = match parse_precision(&a.precision)? {
        Precision::F64 => train_one::<f64>(&bundle, a.budget, &cfg)?,
        Precision::F32 => train_one::<f32>(&bundle, a.budget, &cfg)?,
    };
    emit(out, &report)?;
    if let Some(path) = &a.out {
        let (mean, sd) = (report.test_error, 0.0);
        write_csv(path, &bundle.name, method, a.budget, mean, sd, cfg.epochs, report.seconds_per_epoch)?;
    }
    Ok(())
}

fn train_one<T: Scalar>(bundle: &DatasetBundle, budget: usize, cfg: &TrainConfig) -> Result<TrainReport> {
    let x = bundle.features_as::<T>();
    let data = SslData {
        hypergraph: &bundle.hypergraph,
        features: &x,
        labels: &bundle.labels,
        classes: bundle.classes,
    };
    let split = balanced_split(&bundle.labels, bundle.classes, budget, &mut stream(cfg.seed, Stream::Split))?;
    train_ssl(data, &split, cfg)
}

fn trials_for<T: Scalar>(bundle: &DatasetBundle, budget: usize, trials: usize, cfg: &TrainConfig) -> Result<TrialSummary> {
    let x = bundle.features_as::<T>();
    let data = SslData {
        hypergraph: &bundle.hypergraph,
        features: &x,
        labels: &bundle.labels,
        classes: bundle.classes,
    };
    run_trials(data, cfg, trials, budget)
}

fn trials(a: &TrialsArgs, out: &mut dyn Write) -> Result<()> {
    let method: Method = a.model.method.parse()?;
    let cfg = a.model.resolve(TrainConfig::with_method(method))?;
    let bundle = load_bundle(&a.data)?;
    let summary = match parse_precision(&a.precision)? {
        Precision::F64 => trials_for::<f64>(&bundle, a.budget, a.trials, &cfg)?,
        Precision::F32 => trials_for::<f32>(&bundle, a.budget, a.trials, &cfg)?,
    };
    for (t, r) in summary.reports.iter().enumerate() {
        emit(out, &json!({ "trial": t, "report": r }))?;
    }
    emit(
        out,
        &json!({
            "summary": {
                "method": summary.method,
                "dataset": bundle.name,
                "budget": summary.budget,
                "trials": summary.trials,
                "mean": summary.mean,
                "stdev": summary.stdev,
                "epochs": cfg.epochs,
                "seconds_per_epoch": summary.seconds_per_epoch,
            }
        }),
    )?;
    if let Some(path) = &a.out {
        write_csv(
            path,
            &bundle.name,
            method,
            a.budget,
            summary.mean,
            summary.stdev,
            cfg.epochs,
            summary.seconds_per_epoch,
        )?;
    }
    Ok(())
}

pub const CSV_HEADER: &str = "method,dataset,budget,mean,stdev,epochs,seconds_per_epoch";

#[allow(clippy::too_many_arguments)]
fn write_csv(
    path: &Path,
    dataset: &str,
    method: Method,
    budget: usize,
    mean: f64,
    stdev: f64,
    epochs: usize,
    secs: f64,
) -> Result<()> {
    let body = format!("{CSV_HEADER}\n{method},{dataset},{budget},{mean},{stdev},{epochs},{secs}\n");
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Loads a hypergraph for commands that need no features or labels. `path`
/// may be a hyperedge file or a directory; in a directory the vertex count
/// comes from the features or labels when present.
fn load_structure(path: &Path) -> Result<(String, Hypergraph, Vec<dataio::LoadWarning>)> {
    if path.is_file() {
        let (h, w) = load_hypergraph(path, None)?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok((name, h, w));
    }
    if path.join(dataio::FEATURES_FILE).exists() {
        let (b, w) = load_bundle_verbose(path)?;
        return Ok((b.name, b.hypergraph, w));
    }
    let labels = path.join(LABELS_FILE);
    let n = if labels.exists() {
        let text = fs::read_to_string(&labels).map_err(|e| Error::io(&labels, e))?;
        Some(text.lines().count())
    } else {
        None
    };
    let (h, w) = load_hypergraph(&path.join(dataio::HYPEREDGES_FILE), n)?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((name, h, w))
}

fn densek(a: &DensekArgs, out: &mut dyn Write) -> Result<()> {
    let solver: Solver = a.method.parse()?;
    let (_, h, _) = load_structure(&a.data)?;
    let inst = DenseKInstance::from_fraction(h, a.k_frac)?;
    let vertices = match solver {
        Solver::MaxDegree => max_degree(&inst),
        Solver::RemoveMinDegree => remove_min_degree(&inst),
        Solver::BruteForce => brute_force(&inst)?.0,
        Solver::Learned => {
            let features: FeatureKind = a.features.parse()?;
            let cfg = TrainConfig {
                epochs: a.epochs,
                hidden: a.hidden,
                dropout: a.dropout,
                lr: a.lr,
                weight_decay: a.weight_decay,
                seed: a.seed,
                ..TrainConfig::default()
            };
            let mut rng = stream(a.seed, Stream::Generator);
            let samples = (0..a.samples)
                .map(|_| {
                    let n = rand::Rng::random_range(&mut rng, 100..=300usize);
                    gen_sample(n, 3 * n / 4, a.p, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            let model = train_densek(&samples, &cfg, a.maps, features)?;
            model.solve(&inst, a.seed)?
        }
    };
    emit(out, &DenseKResult::new(solver, &inst, vertices))
}

fn gen_noisy(a: &GenNoisyArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = NoisyConfig {
        n: a.n,
        eta: a.eta,
        feature_dim: a.feature_dim,
        ..NoisyConfig::default()
    };
    let bundle = gen_noisy_ssl(&cfg, &mut stream(a.seed, Stream::Generator))?;
    save_bundle(&bundle, &a.out)?;
    let (minority, majority) = cfg.noisy_split();
    emit(
        out,
        &json!({
            "name": bundle.name,
            "n": bundle.n(),
            "edges": bundle.hypergraph.num_edges(),
            "noisy_minority": minority,
            "noisy_majority": majority,
            "size_counts": bundle.hypergraph.size_counts(),
        }),
    )
}

fn gen_densek(a: &GenDensekArgs, out: &mut dyn Write) -> Result<()> {
    if !(a.k_frac > 0.0 && a.k_frac <= 1.0) {
        return Err(Error::InvalidArgument(format!("k fraction {} not in (0, 1]", a.k_frac)));
    }
    let k = (a.k_frac * a.n as f64).floor() as usize;
    let sample = gen_sample(a.n, k, a.p, &mut stream(a.seed, Stream::Generator))?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    dataio::write_hyperedges(&a.out.join(dataio::HYPEREDGES_FILE), &sample.hypergraph)?;
    let labels: String = sample.target.iter().map(|t| format!("{t}\n")).collect();
    let lpath = a.out.join(LABELS_FILE);
    fs::write(&lpath, labels).map_err(|e| Error::io(&lpath, e))?;
    let planted = sample.planted();
    emit(
        out,
        &json!({
            "n": a.n,
            "k": k,
            "edges": sample.hypergraph.num_edges(),
            "planted_density": crate::densek::density(&sample.hypergraph, &planted),
        }),
    )
}

fn counts(a: &DataArgs, out: &mut dyn Write) -> Result<()> {
    let (name, h, _) = load_structure(&a.data)?;
    let c = h.size_counts();
    emit(
        out,
        &json!({
            "dataset": name,
            "n": h.n(),
            "edges": h.num_edges(),
            "N": c.incidences,
            "N_m": c.mediator_pairs,
            "N_c": c.clique_pairs,
        }),
    )
}

fn validate_cmd(a: &DataArgs, out: &mut dyn Write) -> Result<()> {
    let (name, h, warnings) = load_structure(&a.data)?;
    validate(&h).map_err(Error::InvalidHypergraph)?;
    emit(
        out,
        &json!({
            "dataset": name,
            "valid": true,
            "n": h.n(),
            "edges": h.num_edges(),
            "warnings": warnings,
        }),
    )
}
