//! Command-line front end.
//!
//! Every command reads an optional TOML run configuration, applies flag
//! overrides, and writes its outputs into `--out`. Structured outputs are
//! TOML and embed the resolved configuration; tables are headed CSV; sample
//! files are headerless delimited text.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::datagen::{
    sample, whiten, BasisSpec, GroundTruth, ModelSpec, PlantedModel, SignalKind, SignalLaw, TruthConfig,
};
use crate::error::{Error, Result};
use crate::metrics::{
    concentration_probe, evaluate_recovery, rate_probe, sample_cov_spectral_norm, RecoveryError, TruthSource,
};
use crate::pursuit::{maximize_on_sphere, net_maximizer_oracle, DataMatrix, Direction, Frame, OptimizerConfig};
use crate::recovery::{sequential_recovery, RecoveryReport, StopReason, StoppingConfig};

#[derive(Debug, Parser)]
#[command(name = "wpursuit", version, about = "Wasserstein projection pursuit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a planted model; writes data.csv and model.toml.
    Generate {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Recover non-Gaussian directions; writes report.toml.
    Recover {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Skip the whitening step.
        #[arg(long)]
        no_whiten: bool,
        #[arg(long)]
        max_k: Option<usize>,
    },
    /// Compare a report with its model; writes metrics.toml and plot.csv.
    Evaluate {
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run a diagnostic probe; writes probe.toml and probe.csv.
    Probe {
        #[arg(long, value_enum)]
        kind: Option<ProbeKind>,
    },
    /// Cross-check the optimizer against exhaustive net search (p ≤ 3);
    /// writes oracle.toml.
    Oracle {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        resolution: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelSpec,
    pub truth: TruthConfig,
    pub generate: GenerateConfig,
    pub optimizer: OptimizerConfig,
    pub stopping: StoppingConfig,
    pub recover: RecoverConfig,
    pub evaluate: EvaluateConfig,
    pub probe: ProbeConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            model: ModelSpec {
                p: 10,
                k: 1,
                signal: SignalKind::rademacher(),
                basis: BasisSpec::default(),
                complement: None,
            },
            truth: TruthConfig::default(),
            generate: GenerateConfig::default(),
            optimizer: OptimizerConfig::default(),
            stopping: StoppingConfig::default(),
            recover: RecoverConfig::default(),
            evaluate: EvaluateConfig::default(),
            probe: ProbeConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub n: usize,
    /// Single-byte field delimiter of sample files.
    pub delimiter: String,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            n: 1000,
            delimiter: ",".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverConfig {
    pub data: Option<PathBuf>,
    pub whiten: bool,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        RecoverConfig {
            data: None,
            whiten: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub report: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Concentration,
    Rate,
    Covnorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    pub concentration: ConcentrationConfig,
    pub rate: RateConfig,
    pub covnorm: CovnormConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            kind: ProbeKind::Rate,
            concentration: ConcentrationConfig::default(),
            rate: RateConfig::default(),
            covnorm: CovnormConfig::default(),
        }
    }
}

/// Probes `model` from the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcentrationConfig {
    pub n_grid: Vec<usize>,
    pub directions: usize,
    pub seeds: usize,
    pub truth: TruthSource,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        ConcentrationConfig {
            n_grid: vec![100, 1000, 10_000],
            directions: 200,
            seeds: 10,
            truth: TruthSource::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub law: SignalKind,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub band: [f64; 2],
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            law: SignalKind::standard_normal(),
            n_grid: vec![100, 1000, 10_000],
            trials: 50,
            band: [-0.6, -0.2],
        }
    }
}

/// Spectral norm of the sample covariance of null data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovnormConfig {
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub band: [f64; 2],
}

impl Default for CovnormConfig {
    fn default() -> Self {
        CovnormConfig {
            n: 4000,
            p: 400,
            trials: 20,
            band: [1.2, 2.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Sample file; when absent the configured model is sampled.
    pub data: Option<PathBuf>,
    pub resolution: f64,
    pub whiten: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            data: None,
            resolution: 1e-3,
            whiten: false,
        }
    }
}

/// Sidecar of a generated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub seed: u64,
    pub n: usize,
    pub truth: GroundTruth,
    /// Columns of the signal basis.
    pub basis_u: Vec<Vec<f64>>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub seed: u64,
    pub data: PathBuf,
    pub n: usize,
    pub p: usize,
    pub whitened: bool,
    pub k_hat: usize,
    pub stopped_reason: StopReason,
    pub threshold_used: f64,
    pub d_psi_estimate: f64,
    pub distances: Vec<f64>,
    pub threshold_trace: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub config: RunConfig,
}

impl ReportFile {
    pub fn to_report(&self) -> Result<RecoveryReport> {
        let dirs = self
            .directions
            .iter()
            .map(|d| Direction::new(d.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(RecoveryReport {
            frame: Frame::new(self.p, dirs)?,
            distances: self.distances.clone(),
            k_hat: self.k_hat,
            threshold_used: self.threshold_used,
            d_psi_estimate: self.d_psi_estimate,
            stopped_reason: self.stopped_reason,
            threshold_trace: self.threshold_trace.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub report: PathBuf,
    pub model: PathBuf,
    pub k: usize,
    pub k_hat: usize,
    /// `max_w_proj ≤ snr_bound`.
    pub bound_holds: bool,
    pub error: RecoveryError,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFile {
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub resolution: f64,
    pub optimizer_value: f64,
    pub optimizer_direction: Vec<f64>,
    pub oracle_value: f64,
    pub oracle_direction: Vec<f64>,
    /// `oracle_value − optimizer_value`; positive when the net wins.
    pub gap: f64,
    /// The net beat the optimizer by more than `1e-3`.
    pub optimizer_missed: bool,
    pub config: RunConfig,
}

/// Entry point shared by the binary; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(&cli) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut config = match &cli.global.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.global.seed {
        config.seed = seed;
    }
    let mut job = move || -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&cli.global.out).map_err(|e| Error::io(&cli.global.out, e))?;
        let out = cli.global.out.as_path();
        match &cli.command {
            Command::Generate { n } => {
                if let Some(n) = n {
                    config.generate.n = *n;
                }
                cmd_generate(&config, out)
            }
            Command::Recover { data, no_whiten, max_k } => {
                if let Some(d) = data {
                    config.recover.data = Some(d.clone());
                }
                if *no_whiten {
                    config.recover.whiten = false;
                }
                if max_k.is_some() {
                    config.stopping.max_k = *max_k;
                }
                cmd_recover(&config, out)
            }
            Command::Evaluate { report, model } => {
                if let Some(r) = report {
                    config.evaluate.report = Some(r.clone());
                }
                if let Some(m) = model {
                    config.evaluate.model = Some(m.clone());
                }
                cmd_evaluate(&config, out)
            }
            Command::Probe { kind } => {
                if let Some(k) = kind {
                    config.probe.kind = *k;
                }
                cmd_probe(&config, out)
            }
            Command::Oracle { data, resolution } => {
                if let Some(d) = data {
                    config.oracle.data = Some(d.clone());
                }
                if let Some(r) = resolution {
                    config.oracle.resolution = *r;
                }
                cmd_oracle(&config, out)
            }
        }
    };
    match cli.global.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    read_toml(path)
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let text = toml::to_string(value).map_err(|e| Error::parse(path, e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn delimiter(s: &str) -> Result<u8> {
    match s.as_bytes() {
        [b] if *b != b'\n' && *b != b'"' && *b != b'.' && *b != b'-' => Ok(*b),
        _ => Err(Error::config(format!("delimiter must be a single byte, got {s:?}"))),
    }
}

/// Writes one sample per row, each value in shortest round-trip form.
pub fn write_data(path: &Path, data: &DataMatrix, delim: &str) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter(delim)?)
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    for row in data.rows() {
        w.write_record(row.iter().map(|x| x.to_string())).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_data(path: &Path, delim: &str) -> Result<DataMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(delimiter(delim)?)
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, format!("row {}, column {}: cannot parse {field:?}", i + 1, j + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DataMatrix::from_rows(&rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::parse(path, e.to_string()),
    }
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    value
        .as_ref()
        .ok_or_else(|| Error::config(format!("no {what} given (flag or configuration)")))
}

pub fn cmd_generate(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let model = PlantedModel::new(config.model.clone(), &config.truth)?;
    let data = sample(&model, config.generate.n, config.seed)?;
    let data_path = out.join("data.csv");
    write_data(&data_path, &data, &config.generate.delimiter)?;
    let sidecar = ModelFile {
        seed: config.seed,
        n: config.generate.n,
        truth: model.truth().clone(),
        basis_u: model.basis_u().directions().iter().map(|d| d.as_slice().to_vec()).collect(),
        config: config.clone(),
    };
    let model_path = write_toml(&out.join("model.toml"), &sidecar)?;
    Ok(vec![data_path, model_path])
}

pub fn cmd_recover(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let data_path = required(&config.recover.data, "data file")?;
    let raw = read_data(data_path, &config.generate.delimiter)?;
    let data = if config.recover.whiten { whiten(&raw)? } else { raw };
    let opt = OptimizerConfig {
        seed: config.seed,
        ..config.optimizer.clone()
    };
    let report = sequential_recovery(&data, &opt, &config.stopping)?;
    let file = ReportFile {
        seed: config.seed,
        data: data_path.clone(),
        n: data.n(),
        p: data.p(),
        whitened: data.is_whitened(),
        k_hat: report.k_hat,
        stopped_reason: report.stopped_reason,
        threshold_used: report.threshold_used,
        d_psi_estimate: report.d_psi_estimate,
        distances: report.distances.clone(),
        threshold_trace: report.threshold_trace.clone(),
        directions: report.frame.directions().iter().map(|d| d.as_slice().to_vec()).collect(),
        config: RunConfig {
            optimizer: opt,
            ..config.clone()
        },
    };
    Ok(vec![write_toml(&out.join("report.toml"), &file)?])
}

pub fn cmd_evaluate(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let report_path = required(&config.evaluate.report, "report file")?;
    let model_path = required(&config.evaluate.model, "model file")?;
    let report_file: ReportFile = read_toml(report_path)?;
    let model_file: ModelFile = read_toml(model_path)?;
    let model = PlantedModel::with_truth(model_file.config.model.clone(), model_file.truth.clone())?;
    let stored = &model_file.basis_u;
    let rebuilt = model.basis_u().directions();
    if stored.len() != rebuilt.len()
        || stored
            .iter()
            .zip(rebuilt)
            .any(|(a, b)| a.iter().zip(b.as_slice()).any(|(x, y)| (x - y).abs() > 1e-12))
    {
        return Err(Error::parse(model_path, "basis_u does not match the model specification"));
    }
    let report = report_file.to_report()?;
    let error = evaluate_recovery(&report, &model)?;

    let plot_path = out.join("plot.csv");
    let mut w = csv::Writer::from_path(&plot_path).map_err(|e| csv_error(&plot_path, e))?;
    w.write_record(["index", "distance", "w_proj", "retained"])
        .map_err(|e| csv_error(&plot_path, e))?;
    for (j, (d, wp)) in report.distances.iter().zip(&error.per_direction_w_proj).enumerate() {
        w.write_record([
            (j + 1).to_string(),
            d.to_string(),
            wp.to_string(),
            (j < report.k_hat).to_string(),
        ])
        .map_err(|e| csv_error(&plot_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&plot_path, e))?;

    let metrics = MetricsFile {
        report: report_path.clone(),
        model: model_path.clone(),
        k: model.k(),
        k_hat: report.k_hat,
        bound_holds: error.max_w_proj <= error.snr_bound,
        error,
        config: config.clone(),
    };
    Ok(vec![write_toml(&out.join("metrics.toml"), &metrics)?, plot_path])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFile {
    pub kind: ProbeKind,
    pub seed: u64,
    pub summary: ProbeSummary,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbeSummary {
    Concentration {
        n_grid: Vec<usize>,
        /// Median over seeds of the maximum gap, per `n`.
        median_max_gap: Vec<f64>,
        overall_max_gap: f64,
        strictly_decreasing: bool,
        /// Only finitely many directions are sampled, so every gap is a
        /// lower bound on the supremum over the sphere.
        note: String,
    },
    Rate {
        n_grid: Vec<usize>,
        mean_w2: Vec<f64>,
        slope: f64,
        in_band: bool,
    },
    Covnorm {
        norms: Vec<f64>,
        in_band: usize,
        trials: usize,
        mp_edge: f64,
    },
}

pub fn cmd_probe(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let csv_path = out.join("probe.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| csv_error(&csv_path, e))?;
    let mut row = |fields: Vec<String>| w.write_record(fields).map_err(|e| csv_error(&csv_path, e));
    let summary = match config.probe.kind {
        ProbeKind::Concentration => {
            let c = &config.probe.concentration;
            if c.seeds == 0 || c.n_grid.is_empty() {
                return Err(Error::config("concentration probe needs seeds > 0 and a nonempty n_grid"));
            }
            let model = PlantedModel::without_truth(config.model.clone())?;
            row(vec!["n".into(), "seed".into(), "max_gap".into()])?;
            let mut medians = Vec::new();
            let mut overall: f64 = 0.0;
            for &n in &c.n_grid {
                let mut gaps = Vec::new();
                for s in 0..c.seeds as u64 {
                    let seed = config.seed.wrapping_add(s);
                    let probe = concentration_probe(&model, n, c.directions, &c.truth, seed)?;
                    row(vec![n.to_string(), seed.to_string(), probe.max_abs_deviation.to_string()])?;
                    gaps.push(probe.max_abs_deviation);
                }
                overall = overall.max(gaps.iter().copied().fold(0.0, f64::max));
                medians.push(median(&mut gaps));
            }
            ProbeSummary::Concentration {
                n_grid: c.n_grid.clone(),
                strictly_decreasing: medians.windows(2).all(|m| m[1] < m[0]),
                median_max_gap: medians,
                overall_max_gap: overall,
                note: "gaps are taken over sampled directions and lower-bound the supremum over the sphere".into(),
            }
        }
        ProbeKind::Rate => {
            let r = &config.probe.rate;
            let law = SignalLaw::new(r.law.clone(), 1)?;
            let probe = rate_probe(&law, &r.n_grid, r.trials, config.seed)?;
            row(vec!["n".into(), "mean_w2".into()])?;
            for p in &probe.points {
                row(vec![p.n.to_string(), p.mean_w2.to_string()])?;
            }
            ProbeSummary::Rate {
                n_grid: probe.points.iter().map(|p| p.n).collect(),
                mean_w2: probe.points.iter().map(|p| p.mean_w2).collect(),
                in_band: probe.slope >= r.band[0] && probe.slope <= r.band[1],
                slope: probe.slope,
            }
        }
        ProbeKind::Covnorm => {
            let c = &config.probe.covnorm;
            if c.trials == 0 {
                return Err(Error::config("covnorm probe needs trials > 0"));
            }
            let null = PlantedModel::without_truth(ModelSpec {
                p: c.p,
                k: 0,
                signal: SignalKind::rademacher(),
                basis: BasisSpec::Canonical,
                complement: None,
            })?;
            row(vec!["trial".into(), "norm".into()])?;
            let mut norms = Vec::new();
            for t in 0..c.trials as u64 {
                let v = sample_cov_spectral_norm(&sample(&null, c.n, config.seed.wrapping_add(t))?);
                row(vec![t.to_string(), v.to_string()])?;
                norms.push(v);
            }
            let ratio = (c.p as f64 / c.n as f64).sqrt();
            ProbeSummary::Covnorm {
                in_band: norms.iter().filter(|v| **v >= c.band[0] && **v <= c.band[1]).count(),
                trials: c.trials,
                mp_edge: (1.0 + ratio) * (1.0 + ratio),
                norms,
            }
        }
    };
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    let file = ProbeFile {
        kind: config.probe.kind,
        seed: config.seed,
        summary,
        config: config.clone(),
    };
    Ok(vec![write_toml(&out.join("probe.toml"), &file)?, csv_path])
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn cmd_oracle(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let raw = match &config.oracle.data {
        Some(path) => read_data(path, &config.generate.delimiter)?,
        None => {
            let model = PlantedModel::without_truth(config.model.clone())?;
            sample(&model, config.generate.n, config.seed)?
        }
    };
    if !(2..=3).contains(&raw.p()) {
        return Err(Error::Unsupported(format!(
            "the net oracle needs p in {{2, 3}}, got p = {}",
            raw.p()
        )));
    }
    let data = if config.oracle.whiten { whiten(&raw)? } else { raw };
    let (net_dir, net_value) = net_maximizer_oracle(&data, config.oracle.resolution)?;
    let opt = OptimizerConfig {
        seed: config.seed,
        ..config.optimizer.clone()
    };
    let (dir, value) = maximize_on_sphere(&data, &Frame::empty(data.p()), &opt)?;
    let gap = net_value - value;
    if gap > 1e-3 {
        log::warn!("net search beat the optimizer by {gap:e}");
    }
    let file = OracleFile {
        seed: config.seed,
        n: data.n(),
        p: data.p(),
        resolution: config.oracle.resolution,
        optimizer_value: value,
        optimizer_direction: dir.as_slice().to_vec(),
        oracle_value: net_value,
        oracle_direction: net_dir.as_slice().to_vec(),
        gap,
        optimizer_missed: gap > 1e-3,
        config: RunConfig {
            optimizer: opt,
            ..config.clone()
        },
    };
    Ok(vec![write_toml(&out.join("oracle.toml"), &file)?])
}
