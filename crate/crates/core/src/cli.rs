//! Command-line front end: run configuration, experiment presets and the
//! individual pipeline commands.
//!
//! A run configuration is assembled from three layers, later ones winning:
//! the experiment preset, the JSON config file, and command-line flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::anneal::{self, AnnealConfig, Cooling, Mode, Trace};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::objectives::{sample_dataset, Builtin, Dataset, Objective};
use crate::range::{estimate_range_with_chains, grid_oracle, seeds_for, Direction};
use crate::resnet::{Architecture, ResNet};
use crate::trainer::{evaluate_fit, train, write_loss_history, FitReport, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Sample size; `None` uses 2000 rows for 2-d problems and 4000 otherwise.
    pub m: Option<usize>,
    pub noise_sd: f64,
    pub seed: u64,
    /// CSV to train on; defaults to `<out>/dataset.csv`.
    pub path: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            m: None,
            noise_sd: 0.1,
            seed: 0,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub name: Option<Architecture>,
    pub width_divisor: usize,
    pub init_seed: u64,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            name: None,
            width_divisor: 1,
            init_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitEvalConfig {
    /// Defaults to the run domain.
    pub domain: Option<BoxDomain>,
    pub n: usize,
    pub seed: u64,
}

impl Default for FitEvalConfig {
    fn default() -> Self {
        Self {
            domain: None,
            n: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<String>,
    pub function: Option<Builtin>,
    pub weights: Option<PathBuf>,
    pub domain: Option<BoxDomain>,
    pub dataset: DatasetConfig,
    pub architecture: ArchitectureConfig,
    pub train: TrainConfig,
    pub fit_eval: FitEvalConfig,
    pub anneal: AnnealConfig,
    pub n_seeds: usize,
    pub oracle_points_per_dim: Option<usize>,
    /// Target tolerance used by `compare` for iterations-to-target.
    pub compare_tolerance: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            function: None,
            weights: None,
            domain: None,
            dataset: DatasetConfig::default(),
            architecture: ArchitectureConfig::default(),
            train: TrainConfig::default(),
            fit_eval: FitEvalConfig::default(),
            anneal: AnnealConfig::default(),
            n_seeds: 10,
            oracle_points_per_dim: None,
            compare_tolerance: 0.1,
            out: PathBuf::from("out"),
        }
    }
}

pub const PRESETS: [&str; 6] = [
    "ackley",
    "dropwave",
    "multimin",
    "ackley-reduced",
    "dropwave-reduced",
    "multimin-reduced",
];

impl RunConfig {
    /// Settings of one of the bundled experiments. The `-reduced` variants
    /// divide hidden widths by 4 and train for 300 epochs.
    pub fn preset(name: &str) -> Result<Self> {
        let (base, reduced) = match name.strip_suffix("-reduced") {
            Some(base) => (base, true),
            None => (name, false),
        };
        let (function, arch, fit_domain, fit_n, oracle) = match base {
            "ackley" => (
                Builtin::Ackley,
                Architecture::Ackley,
                BoxDomain::cube(-5.0, 5.0, 2)?,
                1000,
                801,
            ),
            "dropwave" => (
                Builtin::DropWave,
                Architecture::Dropwave,
                Builtin::DropWave.default_domain(),
                1500,
                801,
            ),
            "multimin" => (
                Builtin::MultiMinima,
                Architecture::Multimin,
                Builtin::MultiMinima.default_domain(),
                1500,
                61,
            ),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown experiment preset `{name}` (available: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        let mut cfg = RunConfig {
            experiment: Some(name.to_string()),
            function: Some(function),
            domain: Some(function.default_domain()),
            oracle_points_per_dim: Some(oracle),
            ..RunConfig::default()
        };
        cfg.architecture.name = Some(arch);
        cfg.fit_eval.domain = Some(fit_domain);
        cfg.fit_eval.n = fit_n;
        if reduced {
            cfg.architecture.width_divisor = 4;
            cfg.train.epochs = 300;
        }
        Ok(cfg)
    }

    /// Preset (if any), overlaid with the JSON config file at `path`.
    pub fn from_file(path: Option<&Path>, preset: Option<&str>) -> Result<Self> {
        let file_value = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Some(serde_json::from_str::<Value>(&text).map_err(|e| {
                    Error::InvalidConfig(format!("{}: {e}", p.display()))
                })?)
            }
            None => None,
        };
        let preset = preset.map(str::to_string).or_else(|| {
            file_value
                .as_ref()
                .and_then(|v| v.get("experiment"))
                .and_then(Value::as_str)
                .map(str::to_string)
        });
        let base = match &preset {
            Some(name) => Self::preset(name)?,
            None => Self::default(),
        };
        let mut merged = serde_json::to_value(&base)?;
        if let Some(overlay) = file_value {
            merge(&mut merged, overlay);
        }
        if let Some(name) = preset {
            merged["experiment"] = Value::String(name);
        }
        serde_json::from_value(merged).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        if let Some(d) = &self.domain {
            return Ok(d.clone());
        }
        match self.function {
            Some(f) if self.weights.is_none() => Ok(f.default_domain()),
            _ => Err(Error::InvalidConfig(
                "no domain given (use --domain l1,u1,...)".into(),
            )),
        }
    }

    /// The objective named by `weights` or `function`.
    pub fn objective(&self) -> Result<Box<dyn Objective>> {
        match (&self.weights, self.function) {
            (Some(_), Some(_)) => Err(Error::InvalidConfig(
                "give either a builtin function or a weights file, not both".into(),
            )),
            (Some(path), None) => Ok(Box::new(ResNet::load(path)?)),
            (None, Some(f)) => Ok(Box::new(f)),
            (None, None) => Err(Error::InvalidConfig(format!(
                "no objective given (use --fn <{}> or --weights <path>)",
                Builtin::available()
            ))),
        }
    }

    fn dataset_path(&self) -> PathBuf {
        self.dataset
            .path
            .clone()
            .unwrap_or_else(|| self.out.join("dataset.csv"))
    }

    fn sample_size(&self, dim: usize) -> usize {
        self.dataset.m.unwrap_or(if dim <= 2 { 2000 } else { 4000 })
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(base), Value::Object(overlay)) => {
            for (k, v) in overlay {
                merge(base.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

/// A report together with the configuration that produced it.
#[derive(Serialize)]
struct Echo<'a, T: Serialize> {
    #[serde(flatten)]
    report: T,
    run_config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

fn write_json<T: Serialize>(path: &Path, report: T, cfg: &RunConfig, started: Option<Instant>) -> Result<()> {
    let echo = Echo {
        report,
        run_config: cfg,
        wall_time_s: started.map(|t| t.elapsed().as_secs_f64()),
    };
    let json = serde_json::to_string_pretty(&echo)?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `<out>/dataset.csv` and its metadata sidecar.
pub fn cmd_generate_data(cfg: &RunConfig) -> Result<PathBuf> {
    let f = cfg.function.ok_or_else(|| {
        Error::InvalidConfig(format!(
            "generate-data needs a builtin function (--fn <{}>)",
            Builtin::available()
        ))
    })?;
    let domain = cfg.domain()?;
    let data = sample_dataset(
        &f,
        &domain,
        cfg.sample_size(domain.dim()),
        cfg.dataset.noise_sd,
        cfg.dataset.seed,
    )?;
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join("dataset.csv");
    data.write(&path)?;
    write_json(&Dataset::meta_path(&path), &data.meta, cfg, None)?;
    Ok(path)
}

pub struct TrainArtifacts {
    pub weights: PathBuf,
    pub final_mse: f64,
    pub fit: Option<FitReport>,
}

/// Trains the configured architecture on the dataset and saves the weights,
/// loss history and fit report.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainArtifacts> {
    let data = Dataset::read(&cfg.dataset_path())?;
    let arch = cfg.architecture.name.ok_or_else(|| {
        Error::InvalidConfig("no architecture given (use --arch or --preset)".into())
    })?;
    let net = arch.build(cfg.architecture.init_seed, cfg.architecture.width_divisor);
    if net.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: data.dim(),
        });
    }
    let outcome = train(net, &data, &cfg.train)?;
    ensure_dir(&cfg.out)?;
    let weights = cfg.out.join("weights.json");
    outcome.net.save(&weights)?;
    write_loss_history(&cfg.out.join("loss_history.csv"), &outcome.loss_history)?;

    let reference = cfg.function.or_else(|| data.meta.source.parse().ok());
    let fit = match reference {
        Some(f) => {
            let domain = cfg.fit_eval.domain.clone().unwrap_or(data.meta.domain.clone());
            let report = evaluate_fit(&outcome.net, &f, &domain, cfg.fit_eval.n, cfg.fit_eval.seed)?;
            write_json(&cfg.out.join("fit_report.json"), &report, cfg, None)?;
            Some(report)
        }
        None => None,
    };
    Ok(TrainArtifacts {
        weights,
        final_mse: outcome.final_mse,
        fit,
    })
}

/// Fit metrics of a saved network against a builtin function.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<FitReport> {
    let path = cfg
        .weights
        .clone()
        .unwrap_or_else(|| cfg.out.join("weights.json"));
    let net = ResNet::load(&path)?;
    let f = cfg.function.ok_or_else(|| {
        Error::InvalidConfig("evaluate needs the reference function (--fn)".into())
    })?;
    let domain = match &cfg.fit_eval.domain {
        Some(d) => d.clone(),
        None => cfg.domain.clone().unwrap_or(f.default_domain()),
    };
    let report = evaluate_fit(&net, &f, &domain, cfg.fit_eval.n, cfg.fit_eval.seed)?;
    ensure_dir(&cfg.out)?;
    write_json(&cfg.out.join("fit_report.json"), &report, cfg, None)?;
    Ok(report)
}

/// Trace with values of `F` even for chains that minimized `-F`.
fn trace_in_objective_units(trace: &Trace, direction: Direction) -> Trace {
    let mut out = trace.clone();
    if direction == Direction::Max {
        for r in &mut out.records {
            r.value = -r.value;
            r.best_value = -r.best_value;
        }
    }
    out
}

pub fn cmd_estimate_range(cfg: &RunConfig, timing: bool) -> Result<crate::range::RangeResult> {
    let started = timing.then(Instant::now);
    let f = cfg.objective()?;
    let domain = cfg.domain()?;
    let (result, chains) = estimate_range_with_chains(&f, &domain, &cfg.anneal, cfg.n_seeds)?;
    let traces = cfg.out.join("traces");
    ensure_dir(&traces)?;
    for chain in &chains {
        let path = traces.join(format!("{}_seed{}.csv", chain.direction.as_str(), chain.seed));
        trace_in_objective_units(&chain.outcome.trace, chain.direction).write_csv(&path)?;
    }
    write_json(&cfg.out.join("range.json"), &result, cfg, started)?;
    Ok(result)
}

pub fn cmd_oracle(cfg: &RunConfig, timing: bool) -> Result<crate::range::OracleResult> {
    let started = timing.then(Instant::now);
    let f = cfg.objective()?;
    let domain = cfg.domain()?;
    let points = cfg.oracle_points_per_dim.unwrap_or(101);
    let result = grid_oracle(&f, &domain, points)?;
    ensure_dir(&cfg.out)?;
    write_json(&cfg.out.join("oracle.json"), &result, cfg, started)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub mode: Mode,
    pub seed: u64,
    pub best_value: f64,
    pub iterations_to_best: u64,
    /// First iteration whose incumbent is within `compare_tolerance` of the
    /// best value found by any chain of the comparison.
    pub iterations_to_target: Option<u64>,
    pub max_excursion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub target: f64,
    pub rows: Vec<CompareRow>,
}

/// Reflected and classical chains with shared seeds, minimizing the objective.
///
/// The target for iterations-to-target is `reference + compare_tolerance`,
/// where `reference` is the grid-oracle minimum when `oracle_points_per_dim`
/// is set and otherwise the best value over all chains.
pub fn cmd_compare(cfg: &RunConfig, timing: bool) -> Result<CompareSummary> {
    let started = timing.then(Instant::now);
    let f = cfg.objective()?;
    let domain = cfg.domain()?;
    if cfg.n_seeds == 0 {
        return Err(Error::InvalidConfig("n_seeds must be at least 1".into()));
    }
    let jobs: Vec<(u64, Mode)> = seeds_for(&cfg.anneal, cfg.n_seeds)
        .into_iter()
        .flat_map(|s| [(s, Mode::Reflected), (s, Mode::Classical)])
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(seed, mode)| {
            let run_cfg = AnnealConfig {
                seed,
                mode,
                ..cfg.anneal.clone()
            };
            anneal::run(&f, &domain, &run_cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = match cfg.oracle_points_per_dim {
        Some(points) => grid_oracle(&f, &domain, points)?.min_value,
        None => runs.iter().map(|r| r.best_value).fold(f64::INFINITY, f64::min),
    };
    let target = reference + cfg.compare_tolerance;

    let dir = cfg.out.join("compare");
    ensure_dir(&dir)?;
    let mut rows = Vec::with_capacity(runs.len());
    for (&(seed, mode), run) in jobs.iter().zip(&runs) {
        let label = match mode {
            Mode::Reflected => "reflected",
            Mode::Classical => "classical",
        };
        run.trace.write_csv(&dir.join(format!("{label}_seed{seed}.csv")))?;
        rows.push(CompareRow {
            mode,
            seed,
            best_value: run.best_value,
            iterations_to_best: run.trace.iterations_to_best(),
            iterations_to_target: run.trace.iterations_to_within(target),
            max_excursion: run.trace.max_excursion(&domain)?,
        });
    }
    let summary = CompareSummary { target, rows };
    write_json(&cfg.out.join("compare.json"), &summary, cfg, started)?;
    Ok(summary)
}

#[derive(Debug, Parser)]
#[command(
    name = "outrange",
    version,
    about = "Output range estimation with reflective simulated annealing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a noisy dataset from a builtin function.
    GenerateData(GenerateArgs),
    /// Train a residual network on a dataset.
    Train(TrainArgs),
    /// Fit metrics of a saved network against a builtin function.
    Evaluate(EvaluateArgs),
    /// Estimate the output range with annealing chains.
    EstimateRange(AnnealArgs),
    /// Brute-force grid minimum and maximum.
    Oracle(OracleArgs),
    /// Reflected versus classical annealing with shared seeds.
    Compare(AnnealArgs),
}

#[derive(Debug, Args, Default)]
pub struct Shared {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Experiment preset (ackley, dropwave, multimin, and their -reduced variants).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Builtin objective.
    #[arg(long = "fn")]
    pub function: Option<String>,
    /// Weight file of a trained network, used as the objective.
    #[arg(long, conflicts_with = "function")]
    pub weights: Option<PathBuf>,
    /// Box bounds as l1,u1,...,ld,ud.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// reflected or classical.
    #[arg(long)]
    pub mode: Option<String>,
    /// theorem or algorithm1.
    #[arg(long)]
    pub cooling: Option<String>,
    /// Record wall time in the JSON output (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub shared: Shared,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub shared: Shared,
    /// Dataset CSV (defaults to <out>/dataset.csv).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub width_divisor: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub shared: Shared,
    #[arg(long, allow_hyphen_values = true)]
    pub eval_domain: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnnealArgs {
    #[command(flatten)]
    pub shared: Shared,
    #[arg(long)]
    pub n_seeds: Option<usize>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub inner_iters: Option<usize>,
    /// Per-coordinate variance of the Gaussian proposal.
    #[arg(long)]
    pub variance: Option<f64>,
    /// Grid points per side for the oracle reference (compare only).
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub shared: Shared,
    #[arg(long)]
    pub points: Option<usize>,
}

impl Shared {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::from_file(self.config.as_deref(), self.preset.as_deref())?;
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(name) = &self.function {
            cfg.function = Some(name.parse()?);
            cfg.weights = None;
        }
        if let Some(w) = &self.weights {
            cfg.weights = Some(w.clone());
            cfg.function = None;
        }
        if let Some(d) = &self.domain {
            cfg.domain = Some(BoxDomain::parse_flat(d)?);
        }
        if let Some(m) = &self.mode {
            cfg.anneal.mode = m.parse()?;
        }
        if let Some(c) = &self.cooling {
            cfg.anneal.cooling = c.parse::<Cooling>()?;
        }
        Ok(cfg)
    }
}

impl AnnealArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = self.shared.resolve()?;
        if let Some(seed) = self.shared.seed {
            cfg.anneal.seed = seed;
        }
        let a = &mut cfg.anneal;
        if let Some(v) = self.t_max {
            a.t_max = v;
        }
        if let Some(v) = self.t_min {
            a.t_min = v;
        }
        if let Some(v) = self.delta {
            a.delta = v;
        }
        if let Some(v) = self.inner_iters {
            a.inner_iters = v;
        }
        if let Some(v) = self.variance {
            a.proposal_variance = Some(v);
        }
        if let Some(v) = self.n_seeds {
            cfg.n_seeds = v;
        }
        if let Some(v) = self.points {
            cfg.oracle_points_per_dim = Some(v);
        }
        cfg.anneal.validate()?;
        Ok(cfg)
    }
}

/// A one-line account of what a command produced.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::GenerateData(args) => {
            let mut cfg = args.shared.resolve()?;
            if let Some(seed) = args.shared.seed {
                cfg.dataset.seed = seed;
            }
            if let Some(m) = args.m {
                cfg.dataset.m = Some(m);
            }
            if let Some(sd) = args.noise_sd {
                cfg.dataset.noise_sd = sd;
            }
            let path = cmd_generate_data(&cfg)?;
            Ok(format!("wrote {}", path.display()))
        }
        Command::Train(args) => {
            let mut cfg = args.shared.resolve()?;
            if let Some(seed) = args.shared.seed {
                cfg.train.seed = seed;
                cfg.architecture.init_seed = seed;
            }
            if let Some(p) = args.data {
                cfg.dataset.path = Some(p);
            }
            if let Some(a) = &args.arch {
                cfg.architecture.name = Some(a.parse()?);
            }
            if let Some(d) = args.width_divisor {
                cfg.architecture.width_divisor = d;
            }
            if let Some(e) = args.epochs {
                cfg.train.epochs = e;
            }
            if let Some(lr) = args.lr {
                cfg.train.learning_rate = lr;
            }
            if let Some(b) = args.batch_size {
                cfg.train.batch_size = Some(b);
            }
            let out = cmd_train(&cfg)?;
            let fit = out.fit.map_or(String::new(), |r| {
                format!(", fit mae {:.4} mse {:.4}", r.mae, r.mse)
            });
            Ok(format!(
                "wrote {} (training mse {:.6}{fit})",
                out.weights.display(),
                out.final_mse
            ))
        }
        Command::Evaluate(args) => {
            let mut cfg = args.shared.resolve()?;
            if let Some(seed) = args.shared.seed {
                cfg.fit_eval.seed = seed;
            }
            if let Some(d) = &args.eval_domain {
                cfg.fit_eval.domain = Some(BoxDomain::parse_flat(d)?);
            }
            if let Some(n) = args.n {
                cfg.fit_eval.n = n;
            }
            let r = cmd_evaluate(&cfg)?;
            Ok(format!("mae {:.6} mse {:.6} over {} points", r.mae, r.mse, r.n_eval_points))
        }
        Command::EstimateRange(args) => {
            let cfg = args.resolve()?;
            let r = cmd_estimate_range(&cfg, args.shared.timing)?;
            Ok(format!(
                "range [{}, {}] ({} interval, {} evaluations)",
                r.f_min, r.f_max, r.interval_type, r.eval_count
            ))
        }
        Command::Oracle(args) => {
            let mut cfg = args.shared.resolve()?;
            if let Some(p) = args.points {
                cfg.oracle_points_per_dim = Some(p);
            }
            let r = cmd_oracle(&cfg, args.shared.timing)?;
            Ok(format!(
                "grid min {} at {:?}, max {} at {:?}",
                r.min_value, r.min_point, r.max_value, r.max_point
            ))
        }
        Command::Compare(args) => {
            let cfg = args.resolve()?;
            let summary = cmd_compare(&cfg, args.shared.timing)?;
            let mut table = format!(
                "{:<10} {:>6} {:>14} {:>10} {:>10} {:>12}\n",
                "mode", "seed", "best", "to_best", "to_target", "excursion"
            );
            for r in &summary.rows {
                table += &format!(
                    "{:<10} {:>6} {:>14.6} {:>10} {:>10} {:>12.4}\n",
                    format!("{:?}", r.mode).to_lowercase(),
                    r.seed,
                    r.best_value,
                    r.iterations_to_best,
                    r.iterations_to_target.map_or("-".into(), |i| i.to_string()),
                    r.max_excursion
                );
            }
            Ok(table)
        }
    }
}
