//! Command-line front end: `simulate`, `fit`, `predict`, `evaluate` and
//! `bench`. Exit codes are 0 on success, 2 for usage errors, 3 for data
//! errors and 4 for internal errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{self, ExperimentSpec};
use crate::data::{self, load_csv, load_feature_rows, Schema, SimConfig, SimModel};
use crate::error::{Error, Result};
use crate::estimator::{predict_from_weights, CqrConfig, RootRule, SurvivalMode};
use crate::forest::{Forest, ForestConfig};
use crate::metrics::EvalReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cqrf", version, about = "Censored quantile regression forests")]
pub struct Cli {
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a censored sample from a simulation model.
    Simulate(SimulateArgs),
    /// Grow a forest on a censored CSV and save it.
    Fit(FitArgs),
    /// Predict conditional quantiles of the latent time.
    Predict(PredictArgs),
    /// Score predictions against latent times.
    Evaluate(EvaluateArgs),
    /// Run a replicated experiment from a TOML spec.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file with `model`, `n`, `lambda`, `noise_sd`, `seed`; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// aft1d, sine1d, aft_multi_d or complex_manifold.
    #[arg(long)]
    pub model: Option<SimModel>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Censoring rate (default: the model's reference value).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SchemaArgs {
    #[arg(long, default_value = "y")]
    pub response: String,
    #[arg(long, default_value = "delta")]
    pub event: String,
    /// Comma-separated feature columns (default: every other column except `t`).
    #[arg(long, value_delimiter = ',')]
    pub feature_columns: Option<Vec<String>>,
}

impl SchemaArgs {
    fn schema(&self) -> Schema {
        Schema {
            response: self.response.clone(),
            event: self.event.clone(),
            features: self.feature_columns.clone(),
            latent: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[arg(long, default_value_t = 200)]
    pub trees: usize,
    /// Minimum node size `m`.
    #[arg(long, default_value_t = 5)]
    pub node_size: usize,
    /// Features tried per split (default: ceil(p/3)).
    #[arg(long)]
    pub mtry: Option<usize>,
    /// Each child must hold at least this fraction of its parent.
    #[arg(long, default_value_t = 0.05)]
    pub min_child_fraction: f64,
    /// Grow every tree on the full sample instead of a bootstrap draw.
    #[arg(long)]
    pub no_bootstrap: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// The training data the model was fitted on.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// CSV with the test points; columns are matched by feature name.
    #[arg(long)]
    pub features: PathBuf,
    /// Comma-separated, strictly increasing levels.
    #[arg(long, value_delimiter = ',', required = true)]
    pub taus: Vec<f64>,
    /// beran-rf or km-knn:K.
    #[arg(long, default_value = "beran-rf", value_parser = parse_survival)]
    pub survival: SurvivalMode,
    /// first-crossing or min-abs.
    #[arg(long, default_value = "first-crossing", value_parser = parse_root_rule)]
    pub root_rule: RootRule,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Output of `predict`.
    #[arg(long)]
    pub pred: PathBuf,
    /// CSV with the latent times of the test points, one row per point.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub taus: Vec<f64>,
    #[arg(long, default_value = "t")]
    pub time_column: String,
    /// Optional event column; all times count as observed without it.
    #[arg(long)]
    pub event_column: Option<String>,
    /// Model whose true quantiles enable the MSE and MAD losses. Without it,
    /// `q_<tau>` columns of the truth file are used when present.
    #[arg(long)]
    pub sim_model: Option<SimModel>,
    #[arg(long, default_value = "data")]
    pub dataset: String,
    #[arg(long, default_value = "crf")]
    pub method: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_survival(s: &str) -> std::result::Result<SurvivalMode, String> {
    match s {
        "beran-rf" => Ok(SurvivalMode::BeranRf),
        _ => {
            let k = s
                .strip_prefix("km-knn:")
                .ok_or_else(|| format!("expected beran-rf or km-knn:K, got `{s}`"))?;
            match k.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(SurvivalMode::KmKnn { k }),
                _ => Err(format!("k must be a positive integer, got `{k}`")),
            }
        }
    }
}

fn parse_root_rule(s: &str) -> std::result::Result<RootRule, String> {
    match s {
        "first-crossing" => Ok(RootRule::FirstCrossing),
        "min-abs" => Ok(RootRule::MinAbs),
        _ => Err(format!("expected first-crossing or min-abs, got `{s}`")),
    }
}

/// One line of `predict` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub row: usize,
    pub tau: f64,
    pub q_hat: f64,
    pub residual: f64,
    pub degenerate_tail: bool,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => EXIT_USAGE,
        e if e.is_data_error() => EXIT_DATA,
        _ => EXIT_INTERNAL,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed invocation, on a dedicated pool when `--threads` is set.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.threads {
        Some(0) => Err(Error::InvalidConfig("--threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Model(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => run_bench(a),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimFile {
    model: Option<SimModel>,
    n: Option<usize>,
    #[serde(alias = "censor_rate_param")]
    lambda: Option<f64>,
    noise_sd: Option<f64>,
    seed: Option<u64>,
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let file = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str::<SimFile>(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?
        }
        None => SimFile::default(),
    };
    let model = a
        .model
        .or(file.model)
        .ok_or_else(|| Error::InvalidConfig("--model is required".into()))?;
    let n = a
        .n
        .or(file.n)
        .ok_or_else(|| Error::InvalidConfig("--n is required".into()))?;
    let mut cfg = SimConfig::new(
        model,
        n,
        a.lambda.or(file.lambda).unwrap_or(model.default_lambda()),
        a.seed.or(file.seed).unwrap_or(0),
    );
    if let Some(s) = a.noise_sd.or(file.noise_sd) {
        cfg.noise_sd = s;
    }
    data::simulate(&cfg)?.save_csv(&a.out)
}

fn fit(a: FitArgs) -> Result<()> {
    let d = load_csv(&a.data, &a.schema.schema())?;
    let mut cfg = ForestConfig::new(d.p(), a.trees, a.node_size, a.seed);
    if let Some(m) = a.mtry {
        cfg.mtry = m;
    }
    cfg.min_child_fraction = a.min_child_fraction;
    cfg.bootstrap = !a.no_bootstrap;
    Forest::fit(&d, &cfg)?.save(&a.model_out)
}

fn predict(a: PredictArgs) -> Result<()> {
    let forest = Forest::load(&a.model)?;
    let mut schema = a.schema.schema();
    if schema.features.is_none() {
        schema.features = Some(forest.feature_names().to_vec());
    }
    let train = load_csv(&a.data, &schema)?;
    if train.feature_names() != forest.feature_names() {
        return Err(Error::SchemaMismatch(format!(
            "model features {:?} differ from data features {:?}",
            forest.feature_names(),
            train.feature_names()
        )));
    }
    let same_response = train.n() == forest.n_train()
        && train
            .response()
            .iter()
            .zip(forest.response())
            .all(|(a, b)| a.to_bits() == b.to_bits());
    if !same_response {
        return Err(Error::SchemaMismatch(
            "responses in --data differ from those the model was fitted on".into(),
        ));
    }
    let cfg = CqrConfig::new(a.survival, a.taus)?.with_root_rule(a.root_rule);
    let points = load_feature_rows(&a.features, forest.feature_names())?;
    let per_point: Vec<Vec<PredictionRecord>> = points
        .par_iter()
        .enumerate()
        .map(|(row, x)| {
            let w = forest.weights(x)?;
            Ok(predict_from_weights(&train, &w, x, &cfg)?
                .into_iter()
                .map(|p| PredictionRecord {
                    row,
                    tau: p.tau,
                    q_hat: p.q_hat,
                    residual: p.residual,
                    degenerate_tail: p.degenerate_tail,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    for rec in per_point.iter().flatten() {
        w.serialize(rec)?;
    }
    w.flush().map_err(|e| Error::io(&a.out, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

/// Reads `predict` output.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(f)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Column name holding the true `tau`-quantiles in an evaluation truth file.
pub fn truth_quantile_column(tau: f64) -> String {
    format!("q_{tau}")
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let preds = read_predictions(&a.pred)?;
    let t = data::load_column(&a.truth, &a.time_column)?;
    let n = t.len();
    let event: Option<Vec<bool>> = match &a.event_column {
        Some(c) => Some(
            data::load_column(&a.truth, c)?
                .into_iter()
                .map(|v| v == 1.0)
                .collect(),
        ),
        None => None,
    };
    let features = match a.sim_model {
        Some(m) => {
            let names: Vec<String> = (1..=m.dims()).map(|j| format!("x{j}")).collect();
            Some(load_feature_rows(&a.truth, &names)?)
        }
        None => None,
    };
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    w.write_record(EvalReport::HEADER)?;
    for &tau in &a.taus {
        data::check_tau(tau)?;
        let mut pred = vec![f64::NAN; n];
        for r in preds.iter().filter(|r| r.tau == tau) {
            if r.row >= n {
                return Err(Error::InvalidData(format!(
                    "prediction row {} beyond the {n} truth rows",
                    r.row
                )));
            }
            pred[r.row] = r.q_hat;
        }
        if let Some(i) = pred.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidData(format!("no prediction for row {i} at tau {tau}")));
        }
        let truth_q: Option<Vec<f64>> = match (&features, a.sim_model) {
            (Some(xs), Some(m)) => Some(
                xs.iter()
                    .map(|x| m.quantile(x, tau, data::DEFAULT_NOISE_SD))
                    .collect::<Result<_>>()?,
            ),
            _ => match data::load_column(&a.truth, &truth_quantile_column(tau)) {
                Ok(q) => Some(q),
                Err(Error::MissingColumn(_)) => None,
                Err(e) => return Err(e),
            },
        };
        let rep = EvalReport::evaluate(&t, event.as_deref(), truth_q.as_deref(), &pred, tau)?
            .labelled(&a.dataset, &a.method, 0);
        w.write_record(rep.record())?;
    }
    w.flush().map_err(|e| Error::io(&a.out, e))
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let spec = ExperimentSpec::load(&a.spec)?;
    bench::run(&spec, &a.out_dir).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_survival_modes() {
        assert_eq!(parse_survival("beran-rf").unwrap(), SurvivalMode::BeranRf);
        assert_eq!(parse_survival("km-knn:7").unwrap(), SurvivalMode::KmKnn { k: 7 });
        assert!(parse_survival("km-knn:0").is_err());
        assert!(parse_survival("kaplan").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(main_with_args(["cqrf", "simulate", "--bogus", "1"]), EXIT_USAGE);
        assert_eq!(main_with_args(["cqrf"]), EXIT_USAGE);
        assert_eq!(main_with_args(["cqrf", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let code = main_with_args([
            "cqrf",
            "fit",
            "--data",
            "/nonexistent/cqrf.csv",
            "--model-out",
            "/nonexistent/m.json",
        ]);
        assert_eq!(code, EXIT_DATA);
    }
}
