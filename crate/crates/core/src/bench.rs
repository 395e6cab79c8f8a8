//! Replicated simulation experiments and their tidy result tables.
//!
//! An [`ExperimentSpec`] is read from TOML. [`execute`] runs it and returns
//! one [`ResultRow`] per (method, level, node size, sample size, replication,
//! metric); [`run`] also writes `results.csv` and `aggregate.csv`.
//! Replications run in parallel, each on seeds derived from the spec seed and
//! the replication index, so the tables do not depend on the thread count.
//! The wall-clock metrics of [`Scenario::RuntimeScaling`] are the only values
//! that differ between runs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{check_tau, simulate, Dataset, SimConfig, SimModel, DEFAULT_NOISE_SD};
use crate::error::{Error, Result};
use crate::estimator::{
    interval_taus, predict_from_weights, CqrConfig, EstimatingEquation, RootRule, SurvivalMode,
};
use crate::forest::{weighted_quantile, Forest, ForestConfig, WeightVector};
use crate::metrics::EvalReport;
use crate::rng::{derive_seed, stream};
use crate::survival::{self, SurvivalCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Uniform latent times with normal censoring; compares the roots of the
    /// uncensored and censored estimating equations.
    #[serde(alias = "illustrative41")]
    Illustrative,
    #[serde(rename = "aft1d")]
    Aft1D,
    #[serde(rename = "sine1d")]
    Sine1D,
    AftMultiD,
    ComplexManifold,
    /// Distance of the forest-based censoring survival estimates to the truth.
    SurvivalComparison,
    NodeSizeSweep,
    /// Empirical coverage of central prediction intervals.
    Coverage,
    RuntimeScaling,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Illustrative => "illustrative",
            Scenario::Aft1D => "aft1d",
            Scenario::Sine1D => "sine1d",
            Scenario::AftMultiD => "aft_multi_d",
            Scenario::ComplexManifold => "complex_manifold",
            Scenario::SurvivalComparison => "survival_comparison",
            Scenario::NodeSizeSweep => "node_size_sweep",
            Scenario::Coverage => "coverage",
            Scenario::RuntimeScaling => "runtime_scaling",
        }
    }

    fn default_model(self) -> SimModel {
        match self {
            Scenario::Sine1D | Scenario::NodeSizeSweep | Scenario::Coverage => SimModel::Sine1D,
            Scenario::AftMultiD => SimModel::AftMultiD,
            Scenario::ComplexManifold => SimModel::ComplexManifold,
            _ => SimModel::Aft1D,
        }
    }

    fn fixed_model(self) -> Option<SimModel> {
        match self {
            Scenario::Aft1D => Some(SimModel::Aft1D),
            Scenario::Sine1D => Some(SimModel::Sine1D),
            Scenario::AftMultiD => Some(SimModel::AftMultiD),
            Scenario::ComplexManifold => Some(SimModel::ComplexManifold),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Censored quantile regression forest (Beran survival, forest weights).
    Crf,
    /// Quantile regression forest on the observed responses, ignoring
    /// censoring.
    Qrf,
    /// Quantile regression forest trained on the latent times.
    QrfOracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Crf => "crf",
            Method::Qrf => "qrf",
            Method::QrfOracle => "qrf_oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_n")]
    pub n_train: usize,
    #[serde(default = "default_n")]
    pub n_test: usize,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    /// Minimum node sizes; empty means `max(1, n_train / 10)`.
    #[serde(default)]
    pub node_sizes: Vec<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    /// Simulation model for the scenarios that are not tied to one.
    #[serde(default)]
    pub model: Option<SimModel>,
    /// Censoring rate; defaults to the model's reference value.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Training sizes for the scenarios that vary `n`.
    #[serde(default)]
    pub sample_sizes: Option<Vec<usize>>,
    /// Nominal level of the central intervals in the coverage scenario.
    #[serde(default = "default_level")]
    pub level: f64,
    /// Feature values at which survival curves are compared.
    #[serde(default = "default_probes")]
    pub probe_points: Vec<f64>,
}

fn default_replications() -> usize {
    20
}
fn default_n() -> usize {
    300
}
fn default_taus() -> Vec<f64> {
    vec![0.1, 0.3, 0.5, 0.7, 0.9]
}
fn default_methods() -> Vec<Method> {
    vec![Method::Crf, Method::Qrf, Method::QrfOracle]
}
fn default_trees() -> usize {
    200
}
fn default_level() -> f64 {
    0.95
}
fn default_probes() -> Vec<f64> {
    vec![0.4, 0.8, 1.2, 1.6]
}

impl ExperimentSpec {
    /// A spec with every optional field at its default.
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        ExperimentSpec {
            scenario,
            replications: default_replications(),
            n_train: default_n(),
            n_test: default_n(),
            taus: default_taus(),
            node_sizes: Vec::new(),
            methods: default_methods(),
            seed,
            n_trees: default_trees(),
            model: None,
            lambda: None,
            sample_sizes: None,
            level: default_level(),
            probe_points: default_probes(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.n_train == 0 || self.n_test == 0 {
            return bad("n_train and n_test must be at least 1");
        }
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1");
        }
        if self.taus.is_empty() {
            return bad("at least one tau is required");
        }
        for &t in &self.taus {
            check_tau(t)?;
        }
        if self.taus.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("taus must be strictly increasing");
        }
        if self.node_sizes.contains(&0) {
            return bad("node sizes must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad("lambda must be positive");
            }
        }
        if let Some(s) = &self.sample_sizes {
            if s.is_empty() || s.contains(&0) {
                return bad("sample sizes must be a nonempty list of positive integers");
            }
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level must lie in (0,1)");
        }
        if let (Some(fixed), Some(m)) = (self.scenario.fixed_model(), self.model) {
            if fixed != m {
                return bad("model conflicts with the scenario");
            }
        }
        Ok(())
    }

    pub fn model(&self) -> SimModel {
        self.model.unwrap_or_else(|| self.scenario.default_model())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or_else(|| self.model().default_lambda())
    }

    pub fn sample_sizes(&self) -> Vec<usize> {
        if let Some(s) = &self.sample_sizes {
            return s.clone();
        }
        match self.scenario {
            Scenario::Illustrative => vec![100, 500, 1000, 5000],
            Scenario::SurvivalComparison => vec![300, 2000, 5000],
            Scenario::RuntimeScaling => vec![500, 1000, 2000],
            _ => vec![self.n_train],
        }
    }

    /// Node sizes for training size `n`.
    pub fn node_sizes_for(&self, n: usize) -> Vec<usize> {
        if !self.node_sizes.is_empty() {
            return self.node_sizes.clone();
        }
        if self.scenario == Scenario::NodeSizeSweep {
            return (1..=12).map(|k| 5 * k).collect();
        }
        vec![default_node_size(n)]
    }
}

/// `max(1, n / 10)`.
pub fn default_node_size(n: usize) -> usize {
    (n / 10).max(1)
}

/// One tidy result value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub method: String,
    pub tau: Option<f64>,
    pub node_size: Option<usize>,
    pub n_train: usize,
    pub replication: usize,
    pub metric: String,
    pub value: f64,
}

/// Mean, sample standard deviation and count of one metric over
/// replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scenario: String,
    pub method: String,
    pub tau: Option<f64>,
    pub node_size: Option<usize>,
    pub n_train: usize,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
    pub results_path: PathBuf,
    pub aggregate_path: PathBuf,
}

struct Rows<'a> {
    scenario: &'a str,
    replication: usize,
    out: Vec<ResultRow>,
}

impl Rows<'_> {
    fn push(
        &mut self,
        method: &str,
        tau: Option<f64>,
        node_size: Option<usize>,
        n_train: usize,
        metric: &str,
        value: f64,
    ) {
        self.out.push(ResultRow {
            scenario: self.scenario.to_string(),
            method: method.to_string(),
            tau,
            node_size,
            n_train,
            replication: self.replication,
            metric: metric.to_string(),
            value,
        });
    }
}

/// Runs the experiment without touching the file system.
pub fn execute(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    if spec.scenario == Scenario::RuntimeScaling {
        return runtime_scaling(spec);
    }
    let per_rep: Vec<Vec<ResultRow>> = (0..spec.replications)
        .into_par_iter()
        .map(|r| replication(spec, r))
        .collect::<Result<_>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Runs the experiment and writes `results.csv` and `aggregate.csv` into
/// `out_dir`, creating it if needed.
pub fn run(spec: &ExperimentSpec, out_dir: impl AsRef<Path>) -> Result<BenchOutput> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let rows = execute(spec)?;
    let aggregates = aggregate(&rows);
    let results_path = out_dir.join("results.csv");
    let aggregate_path = out_dir.join("aggregate.csv");
    write_rows(&results_path, &rows)?;
    write_aggregates(&aggregate_path, &aggregates)?;
    Ok(BenchOutput {
        rows,
        aggregates,
        results_path,
        aggregate_path,
    })
}

fn replication(spec: &ExperimentSpec, r: usize) -> Result<Vec<ResultRow>> {
    let seed = derive_seed(spec.seed, r as u64);
    let mut rows = Rows {
        scenario: spec.scenario.name(),
        replication: r,
        out: Vec::new(),
    };
    match spec.scenario {
        Scenario::Illustrative => illustrative_rep(spec, seed, &mut rows)?,
        Scenario::SurvivalComparison => survival_rep(spec, seed, &mut rows)?,
        Scenario::Coverage => coverage_rep(spec, seed, &mut rows)?,
        Scenario::RuntimeScaling => unreachable!("runtime scaling runs sequentially"),
        _ => accuracy_rep(spec, seed, &mut rows)?,
    }
    Ok(rows.out)
}

/// Training and test samples of one replication.
pub fn replication_data(
    model: SimModel,
    lambda: f64,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let train = simulate(&SimConfig::new(model, n_train, lambda, derive_seed(seed, 1)))?;
    let test = simulate(&SimConfig::new(model, n_test, lambda, derive_seed(seed, 2)))?;
    Ok((train, test))
}

/// The forests a replication needs: one on the observed responses (shared by
/// the censored and naive methods) and, if requested, one on the latent
/// times.
struct Fitted {
    forest: Forest,
    oracle: Option<(Forest, Dataset)>,
}

fn fit_methods(
    spec: &ExperimentSpec,
    train: &Dataset,
    node_size: usize,
    seed: u64,
) -> Result<Fitted> {
    let cfg = ForestConfig::new(train.p(), spec.n_trees, node_size, derive_seed(seed, 3));
    let forest = Forest::fit(train, &cfg)?;
    let oracle = if spec.methods.contains(&Method::QrfOracle) {
        let view = train
            .uncensored_view()
            .ok_or_else(|| Error::InvalidData("oracle baseline needs latent times".into()))?;
        let ocfg = ForestConfig {
            seed: derive_seed(seed, 4),
            ..cfg
        };
        Some((Forest::fit(&view, &ocfg)?, view))
    } else {
        None
    };
    Ok(Fitted { forest, oracle })
}

/// Predicted quantiles `[test point][tau]` of one method.
pub fn method_quantiles(
    method: Method,
    forest: &Forest,
    train: &Dataset,
    oracle: Option<(&Forest, &Dataset)>,
    test: &Dataset,
    taus: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let cqr = CqrConfig::beran_rf(taus.to_vec())?;
    test.rows()
        .map(|x| match method {
            Method::Crf => {
                let w = forest.weights(x)?;
                Ok(predict_from_weights(train, &w, x, &cqr)?
                    .into_iter()
                    .map(|p| p.q_hat)
                    .collect())
            }
            Method::Qrf => {
                let w = forest.weights(x)?;
                taus.iter()
                    .map(|&t| weighted_quantile(&w, train.response(), t))
                    .collect()
            }
            Method::QrfOracle => {
                let (f, view) = oracle.ok_or_else(|| {
                    Error::InvalidConfig("oracle forest was not fitted".into())
                })?;
                let w = f.weights(x)?;
                taus.iter()
                    .map(|&t| weighted_quantile(&w, view.response(), t))
                    .collect()
            }
        })
        .collect()
}

fn latent(d: &Dataset) -> Result<&[f64]> {
    d.latent()
        .ok_or_else(|| Error::InvalidData("test data needs latent times".into()))
}

fn accuracy_rep(spec: &ExperimentSpec, seed: u64, rows: &mut Rows<'_>) -> Result<()> {
    let model = spec.model();
    let (train, test) = replication_data(model, spec.lambda(), spec.n_train, spec.n_test, seed)?;
    let n = train.n();
    rows.push("data", None, None, n, "censoring_rate", train.censoring_fraction());
    let t = latent(&test)?;
    let truth: Vec<Vec<f64>> = spec
        .taus
        .iter()
        .map(|&tau| {
            test.rows()
                .map(|x| model.quantile(x, tau, DEFAULT_NOISE_SD))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    for m in spec.node_sizes_for(n) {
        let fitted = fit_methods(spec, &train, m, seed)?;
        let oracle = fitted.oracle.as_ref().map(|(f, v)| (f, v));
        for &method in &spec.methods {
            let q = method_quantiles(method, &fitted.forest, &train, oracle, &test, &spec.taus)?;
            for (j, &tau) in spec.taus.iter().enumerate() {
                let pred: Vec<f64> = q.iter().map(|row| row[j]).collect();
                let rep = EvalReport::evaluate(t, None, Some(&truth[j]), &pred, tau)?;
                let name = method.name();
                let (tau, m) = (Some(tau), Some(m));
                if let Some(v) = rep.l_mse {
                    rows.push(name, tau, m, n, "l_mse", v);
                }
                if let Some(v) = rep.l_mad {
                    rows.push(name, tau, m, n, "l_mad", v);
                }
                rows.push(name, tau, m, n, "l_quantile", rep.l_quantile);
                if let Some(v) = rep.c_index {
                    rows.push(name, tau, m, n, "c_index", v);
                }
            }
        }
    }
    Ok(())
}

fn coverage_rep(spec: &ExperimentSpec, seed: u64, rows: &mut Rows<'_>) -> Result<()> {
    let (train, test) =
        replication_data(spec.model(), spec.lambda(), spec.n_train, spec.n_test, seed)?;
    let n = train.n();
    let t = latent(&test)?;
    let (lo, hi) = interval_taus(spec.level)?;
    for m in spec.node_sizes_for(n) {
        let fitted = fit_methods(spec, &train, m, seed)?;
        let oracle = fitted.oracle.as_ref().map(|(f, v)| (f, v));
        for &method in &spec.methods {
            let q = method_quantiles(method, &fitted.forest, &train, oracle, &test, &[lo, hi])?;
            let covered = q
                .iter()
                .zip(t)
                .filter(|(b, &ti)| b[0] <= ti && ti <= b[1])
                .count();
            let width: f64 = q.iter().map(|b| b[1] - b[0]).sum::<f64>() / q.len() as f64;
            let name = method.name();
            let level = Some(spec.level);
            rows.push(name, level, Some(m), n, "coverage", covered as f64 / t.len() as f64);
            rows.push(name, level, Some(m), n, "mean_width", width);
        }
    }
    Ok(())
}

/// Largest absolute difference between a step curve and a continuous truth,
/// checked on both sides of every point of `grid`.
pub fn sup_distance(curve: &SurvivalCurve, truth: impl Fn(f64) -> f64, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&q| {
            let g = truth(q);
            (curve.evaluate(q) - g).abs().max((curve.left_limit(q) - g).abs())
        })
        .fold(0.0, f64::max)
}

/// Responses in the weight support up to the weighted 0.9-quantile at which
/// the curve has not yet reached zero from the left: the region where the
/// curve carries information.
pub fn comparison_grid(curve: &SurvivalCurve, w: &WeightVector, y: &[f64]) -> Result<Vec<f64>> {
    let upper = weighted_quantile(w, y, 0.9)?;
    let mut grid: Vec<f64> = w
        .iter()
        .map(|(i, _)| y[i])
        .filter(|&q| q <= upper && curve.left_limit(q) > 0.0)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

fn survival_rep(spec: &ExperimentSpec, seed: u64, rows: &mut Rows<'_>) -> Result<()> {
    let model = spec.model();
    let lambda = spec.lambda();
    for (s, n) in spec.sample_sizes().into_iter().enumerate() {
        let s_seed = derive_seed(seed, 100 + s as u64);
        let train = simulate(&SimConfig::new(model, n, lambda, derive_seed(s_seed, 1)))?;
        let m = spec.node_sizes.first().copied().unwrap_or(default_node_size(n));
        let cfg = ForestConfig::new(train.p(), spec.n_trees, m, derive_seed(s_seed, 3));
        let forest = Forest::fit(&train, &cfg)?;
        let k = default_node_size(n);
        for &probe in &spec.probe_points {
            let x = vec![probe; model.dims()];
            let w = forest.weights(&x)?;
            let truth = |q: f64| model.censoring_survival(&x, lambda, q);
            let metric = format!("sup_error_x{probe}");
            let rf = survival::beran_rf(&train, &w)?;
            let grid = comparison_grid(&rf, &w, train.response())?;
            rows.push("beran_rf", None, Some(m), n, &metric, sup_distance(&rf, truth, &grid));
            let knn = survival::km_knn(&train, &w, k.min(n))?;
            let grid = comparison_grid(&knn, &w, train.response())?;
            rows.push("km_knn", None, Some(k), n, &metric, sup_distance(&knn, truth, &grid));
        }
    }
    Ok(())
}

/// Roots of the uncensored and censored estimating equations on one sample
/// of the illustrative design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IllustrativeRoots {
    /// Root with the latent times and `G = 1`.
    pub uncensored: f64,
    /// Root with the observed responses and the Kaplan-Meier estimate of `G`.
    pub censored: f64,
}

/// `T ~ U(0,1)`, `C ~ N(0.8, 0.2^2)`, `Y = min(T, C)`. Returns
/// `(t, y, event)`.
pub fn illustrative_sample(n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>, Vec<bool>)> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let mut rng = stream(seed, 0);
    let normal = Normal::new(0.8, 0.2).expect("valid normal");
    let mut t = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    for _ in 0..n {
        let ti: f64 = rng.random();
        let ci = normal.sample(&mut rng);
        t.push(ti);
        y.push(ti.min(ci));
        event.push(ti <= ci);
    }
    Ok((t, y, event))
}

/// Estimating equation with uniform weights over all rows.
pub fn uniform_equation(y: &[f64], curve: SurvivalCurve) -> Result<EstimatingEquation> {
    let rows: Vec<usize> = (0..y.len()).collect();
    let w = WeightVector::uniform(&rows)?;
    let candidates = crate::estimator::candidate_set(&w, y, SurvivalMode::BeranRf)?;
    EstimatingEquation::new(&w, y, curve, candidates)
}

pub fn illustrative_roots(n: usize, tau: f64, seed: u64) -> Result<IllustrativeRoots> {
    check_tau(tau)?;
    let (t, y, event) = illustrative_sample(n, seed)?;
    let u1 = uniform_equation(&t, SurvivalCurve::constant_one())?;
    let u2 = uniform_equation(&y, survival::km(&y, &event)?)?;
    let rule = RootRule::default();
    Ok(IllustrativeRoots {
        uncensored: u1.candidates()[u1.solve(tau, rule)],
        censored: u2.candidates()[u2.solve(tau, rule)],
    })
}

fn illustrative_rep(spec: &ExperimentSpec, seed: u64, rows: &mut Rows<'_>) -> Result<()> {
    for (s, n) in spec.sample_sizes().into_iter().enumerate() {
        for &tau in &spec.taus {
            let r = illustrative_roots(n, tau, derive_seed(seed, s as u64))?;
            // Latent times are U(0,1), so the true quantile is tau.
            rows.push("u1", Some(tau), None, n, "root", r.uncensored);
            rows.push("u2", Some(tau), None, n, "root", r.censored);
            rows.push("u1", Some(tau), None, n, "abs_error", (r.uncensored - tau).abs());
            rows.push("u2", Some(tau), None, n, "abs_error", (r.censored - tau).abs());
            rows.push("u2_vs_u1", Some(tau), None, n, "gap", (r.censored - r.uncensored).abs());
        }
    }
    Ok(())
}

fn runtime_scaling(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let model = spec.model();
    let cqr = CqrConfig::beran_rf(spec.taus.clone())?;
    let mut out = Vec::new();
    for r in 0..spec.replications {
        let seed = derive_seed(spec.seed, r as u64);
        let mut rows = Rows {
            scenario: spec.scenario.name(),
            replication: r,
            out: Vec::new(),
        };
        for (s, n) in spec.sample_sizes().into_iter().enumerate() {
            let s_seed = derive_seed(seed, 100 + s as u64);
            let (train, test) = replication_data(model, spec.lambda(), n, spec.n_test, s_seed)?;
            let m = spec.node_sizes.first().copied().unwrap_or(default_node_size(n));
            let cfg = ForestConfig::new(train.p(), spec.n_trees, m, derive_seed(s_seed, 3));
            let start = Instant::now();
            let forest = Forest::fit(&train, &cfg)?;
            let fit_secs = start.elapsed().as_secs_f64();
            let mut support = 0usize;
            let mut candidates = 0usize;
            let start = Instant::now();
            for x in test.rows() {
                let w = forest.weights(x)?;
                support += w.support_len();
                let p = predict_from_weights(&train, &w, x, &cqr)?;
                candidates += p[0].candidate_count;
            }
            let per_point = start.elapsed().as_secs_f64() / test.n() as f64;
            let k = test.n() as f64;
            rows.push("crf", None, Some(m), n, "fit_seconds", fit_secs);
            rows.push("crf", None, Some(m), n, "predict_seconds_per_point", per_point);
            rows.push("crf", None, Some(m), n, "mean_support", support as f64 / k);
            rows.push("crf", None, Some(m), n, "mean_candidates", candidates as f64 / k);
        }
        out.extend(rows.out);
    }
    Ok(out)
}

type GroupKey = (String, String, Option<u64>, Option<usize>, usize, String);

/// Groups rows by everything except the replication, in order of first
/// appearance.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut index: HashMap<GroupKey, usize> = HashMap::new();
    let mut groups: Vec<(&ResultRow, Vec<f64>)> = Vec::new();
    for r in rows {
        let key = (
            r.scenario.clone(),
            r.method.clone(),
            r.tau.map(f64::to_bits),
            r.node_size,
            r.n_train,
            r.metric.clone(),
        );
        let k = *index.entry(key).or_insert_with(|| {
            groups.push((r, Vec::new()));
            groups.len() - 1
        });
        groups[k].1.push(r.value);
    }
    groups
        .into_iter()
        .map(|(r, v)| {
            let count = v.len();
            let mean = v.iter().sum::<f64>() / count as f64;
            let sd = if count > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                scenario: r.scenario.clone(),
                method: r.method.clone(),
                tau: r.tau,
                node_size: r.node_size,
                n_train: r.n_train,
                metric: r.metric.clone(),
                mean,
                sd,
                count,
            }
        })
        .collect()
}

fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_aggregates(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a tidy result table written by [`run`].
pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
