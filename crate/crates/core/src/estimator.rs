//! Censored quantile regression forest.
//!
//! For a test point `x` with forest weights `w` and censoring survival
//! estimate `G(.|x)`, the estimating function is
//!
//! ```text
//! S_n(q; tau) = (1 - tau) G(q|x) - sum_i w_i 1(Y_i > q)
//! ```
//!
//! It is a right-continuous step function that can only change at observed
//! responses with positive weight, so it is scanned over that finite candidate
//! set. With no censoring `G = 1` and `S_n(q) = F_w(q) - tau`, where `F_w` is
//! the weighted empirical CDF of the responses.

use serde::{Deserialize, Serialize};

use crate::data::{check_tau, Dataset};
use crate::error::{Error, Result};
use crate::forest::{Forest, WeightVector};
use crate::survival::{self, SurvivalCurve};

/// Slack used when comparing values of `S_n` (and of weighted CDFs) against
/// each other or against zero, so that sums of weights that are equal in exact
/// arithmetic compare equal.
pub const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SurvivalMode {
    /// Beran product-limit estimator with the forest weights.
    BeranRf,
    /// Kaplan-Meier on the `k` rows with the largest forest weight.
    KmKnn { k: usize },
}

/// How the root of `S_n` is picked among the candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootRule {
    /// Smallest candidate with `S_n(q) >= 0`: the point where the step
    /// function crosses zero. Without censoring this is exactly the weighted
    /// empirical quantile.
    #[default]
    FirstCrossing,
    /// `argmin |S_n(q)|`.
    MinAbs,
}

/// Ties in the selection criterion go to the smallest candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    SmallestQ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqrConfig {
    pub survival_mode: SurvivalMode,
    /// Strictly increasing quantile levels in `(0, 1)`.
    pub taus: Vec<f64>,
    #[serde(default)]
    pub root_rule: RootRule,
    #[serde(default)]
    pub tie_break: TieBreak,
    /// Restricts the search to `[-r, r]`.
    #[serde(default)]
    pub search_window: Option<f64>,
}

impl CqrConfig {
    pub fn new(survival_mode: SurvivalMode, taus: Vec<f64>) -> Result<Self> {
        let cfg = CqrConfig {
            survival_mode,
            taus,
            root_rule: RootRule::default(),
            tie_break: TieBreak::default(),
            search_window: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn beran_rf(taus: Vec<f64>) -> Result<Self> {
        Self::new(SurvivalMode::BeranRf, taus)
    }

    pub fn with_root_rule(mut self, rule: RootRule) -> Self {
        self.root_rule = rule;
        self
    }

    pub fn with_search_window(mut self, r: f64) -> Self {
        self.search_window = Some(r);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for &t in &self.taus {
            check_tau(t)?;
        }
        if self.taus.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("taus must be strictly increasing".into()));
        }
        if let SurvivalMode::KmKnn { k } = self.survival_mode {
            if k < 1 {
                return Err(Error::InvalidConfig("k must be at least 1".into()));
            }
        }
        if let Some(r) = self.search_window {
            if !(r > 0.0) {
                return Err(Error::InvalidConfig("search window radius must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantilePrediction {
    pub x: Vec<f64>,
    pub tau: f64,
    pub q_hat: f64,
    /// `|S_n(q_hat; tau)|`.
    pub residual: f64,
    pub candidate_count: usize,
    /// The survival estimate is already zero at `q_hat`.
    pub degenerate_tail: bool,
    /// Nearest-neighbour mode only: zero-weight rows used to fill `k`.
    pub padded_neighbors: usize,
}

/// `(1 - tau) G(q) - sum_i w_i 1(Y_i > q)`.
pub fn score(q: f64, tau: f64, w: &WeightVector, curve: &SurvivalCurve, y: &[f64]) -> f64 {
    let above: f64 = w.iter().filter(|&(i, _)| y[i] > q).map(|(_, wi)| wi).sum();
    (1.0 - tau) * curve.evaluate(q) - above
}

/// Distinct responses at which `S_n` may jump, ascending: rows with positive
/// weight, or the nearest-neighbour rows in `KmKnn` mode.
pub fn candidate_set(w: &WeightVector, y: &[f64], mode: SurvivalMode) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut c: Vec<f64> = match mode {
        SurvivalMode::BeranRf => w.iter().map(|(i, _)| y[i]).collect(),
        SurvivalMode::KmKnn { k } => survival::nearest_neighbors(w, y.len(), k)?
            .rows
            .into_iter()
            .map(|i| y[i])
            .collect(),
    };
    c.sort_by(f64::total_cmp);
    c.dedup();
    Ok(c)
}

/// `S_n(.; tau)` at one test point, prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct EstimatingEquation {
    /// `(Y_i, w_i)` over the weight support, sorted by `Y`.
    support: Vec<(f64, f64)>,
    /// `tail[k] = sum of weights at sorted positions >= k`.
    tail: Vec<f64>,
    curve: SurvivalCurve,
    candidates: Vec<f64>,
}

impl EstimatingEquation {
    pub fn new(w: &WeightVector, y: &[f64], curve: SurvivalCurve, candidates: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::EmptySupport);
        }
        if candidates.is_empty() {
            return Err(Error::EmptyCandidateSet);
        }
        let mut support: Vec<(f64, f64)> = w.iter().map(|(i, wi)| (y[i], wi)).collect();
        support.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut tail = vec![0.0; support.len() + 1];
        for k in (0..support.len()).rev() {
            tail[k] = tail[k + 1] + support[k].1;
        }
        Ok(EstimatingEquation {
            support,
            tail,
            curve,
            candidates,
        })
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn curve(&self) -> &SurvivalCurve {
        &self.curve
    }

    fn weight_above(&self, q: f64) -> f64 {
        self.tail[self.support.partition_point(|&(y, _)| y <= q)]
    }

    pub fn eval(&self, q: f64, tau: f64) -> f64 {
        (1.0 - tau) * self.curve.evaluate(q) - self.weight_above(q)
    }

    /// Index into `candidates` of the selected root.
    pub fn solve(&self, tau: f64, rule: RootRule) -> usize {
        let values: Vec<f64> = self.candidates.iter().map(|&q| self.eval(q, tau)).collect();
        if rule == RootRule::FirstCrossing {
            if let Some(k) = values.iter().position(|&s| s >= -ROOT_TOL) {
                return k;
            }
        }
        let best = values.iter().map(|s| s.abs()).fold(f64::INFINITY, f64::min);
        values
            .iter()
            .position(|s| s.abs() <= best + ROOT_TOL)
            .expect("candidate set is nonempty")
    }
}

struct LocalFit {
    equation: EstimatingEquation,
    padded: usize,
}

fn local_fit(data: &Dataset, w: &WeightVector, cfg: &CqrConfig) -> Result<LocalFit> {
    let y = data.response();
    let (curve, padded) = match cfg.survival_mode {
        SurvivalMode::BeranRf => (survival::beran_rf(data, w)?, 0),
        SurvivalMode::KmKnn { k } => {
            let (c, nb) = survival::km_knn_with_neighbors(data, w, k)?;
            (c, nb.padded)
        }
    };
    let mut candidates = candidate_set(w, y, cfg.survival_mode)?;
    if let Some(r) = cfg.search_window {
        candidates.retain(|&q| (-r..=r).contains(&q));
    }
    let equation = EstimatingEquation::new(w, y, curve, candidates)?;
    Ok(LocalFit { equation, padded })
}

fn prediction(fit: &LocalFit, x: &[f64], tau: f64, q: f64) -> QuantilePrediction {
    let eq = &fit.equation;
    QuantilePrediction {
        x: x.to_vec(),
        tau,
        q_hat: q,
        residual: eq.eval(q, tau).abs(),
        candidate_count: eq.candidates.len(),
        degenerate_tail: eq.curve.evaluate(q) == 0.0,
        padded_neighbors: fit.padded,
    }
}

/// Quantile predictions at every level of `cfg.taus` from precomputed
/// weights. The survival curve is estimated once and shared by all levels;
/// the raw roots are then made nondecreasing in `tau` by a running maximum.
pub fn predict_from_weights(
    data: &Dataset,
    w: &WeightVector,
    x: &[f64],
    cfg: &CqrConfig,
) -> Result<Vec<QuantilePrediction>> {
    cfg.validate()?;
    let fit = local_fit(data, w, cfg)?;
    let mut out = Vec::with_capacity(cfg.taus.len());
    let mut floor = f64::NEG_INFINITY;
    for &tau in &cfg.taus {
        let k = fit.equation.solve(tau, cfg.root_rule);
        let q = fit.equation.candidates[k].max(floor);
        floor = q;
        out.push(prediction(&fit, x, tau, q));
    }
    Ok(out)
}

fn check_pair(forest: &Forest, data: &Dataset) -> Result<()> {
    if forest.n_train() != data.n() || forest.p() != data.p() {
        return Err(Error::SchemaMismatch(format!(
            "forest was fitted on {}x{} data, got {}x{}",
            forest.n_train(),
            forest.p(),
            data.n(),
            data.p()
        )));
    }
    Ok(())
}

/// Algorithm entry point for one level: forest weights, survival estimate,
/// then the selected root of `S_n` over the candidate set.
pub fn predict_quantile(
    forest: &Forest,
    data: &Dataset,
    x: &[f64],
    tau: f64,
    cfg: &CqrConfig,
) -> Result<QuantilePrediction> {
    check_tau(tau)?;
    let single = CqrConfig {
        taus: vec![tau],
        ..cfg.clone()
    };
    predict_quantiles(forest, data, x, &single).map(|mut v| v.remove(0))
}

/// Predictions at every level of `cfg.taus`, nondecreasing in `tau`.
pub fn predict_quantiles(
    forest: &Forest,
    data: &Dataset,
    x: &[f64],
    cfg: &CqrConfig,
) -> Result<Vec<QuantilePrediction>> {
    check_pair(forest, data)?;
    let w = forest.weights(x)?;
    predict_from_weights(data, &w, x, cfg)
}

/// Levels `((1 - level)/2, 1 - (1 - level)/2)` of a central interval.
pub fn interval_taus(level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("level must lie in (0,1), got {level}")));
    }
    let a = (1.0 - level) / 2.0;
    Ok((a, 1.0 - a))
}

/// Central prediction interval for the latent time at `x`.
pub fn predict_interval(
    forest: &Forest,
    data: &Dataset,
    x: &[f64],
    level: f64,
    cfg: &CqrConfig,
) -> Result<(f64, f64)> {
    let (lo, hi) = interval_taus(level)?;
    let pair = CqrConfig {
        taus: vec![lo, hi],
        ..cfg.clone()
    };
    let p = predict_quantiles(forest, data, x, &pair)?;
    Ok((p[0].q_hat, p[1].q_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::ForestConfig;

    fn toy(y: &[f64], event: &[bool]) -> Dataset {
        let x = (0..y.len()).map(|i| i as f64).collect();
        Dataset::new(x, 1, y.to_vec(), event.to_vec(), None).unwrap()
    }

    #[test]
    fn score_examples() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let w = WeightVector::uniform(&[0, 1, 2, 3]).unwrap();
        let one = SurvivalCurve::constant_one();
        assert_eq!(score(2.0, 0.5, &w, &one, &y), 0.0);
        assert!((score(0.5, 0.3, &w, &one, &y) + 0.3).abs() < 1e-15);
        let g = SurvivalCurve::new(vec![2.0], vec![0.5]).unwrap();
        assert_eq!(score(10.0, 0.4, &w, &g, &y), 0.6 * 0.5);
    }

    #[test]
    fn candidates_examples() {
        let y = [9.0, 8.0, 7.0, 6.0, 5.0, 4.0];
        let w = WeightVector::from_pairs([(2, 0.5), (5, 0.5)]).unwrap();
        assert_eq!(candidate_set(&w, &y, SurvivalMode::BeranRf).unwrap(), vec![4.0, 7.0]);
        let all = WeightVector::uniform(&[0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(
            candidate_set(&all, &[2.0, 1.0, 2.0, 3.0, 1.0, 0.0], SurvivalMode::BeranRf).unwrap(),
            vec![0.0, 1.0, 2.0, 3.0]
        );
        assert_eq!(
            candidate_set(&w, &y, SurvivalMode::KmKnn { k: 3 }).unwrap(),
            vec![4.0, 7.0, 9.0]
        );
        assert!(candidate_set(&WeightVector::default(), &y, SurvivalMode::BeranRf).is_err());
    }

    #[test]
    fn root_rules_differ_only_in_selection() {
        let d = toy(&[1.0, 2.0, 3.0, 4.0, 5.0], &[true; 5]);
        let w = WeightVector::uniform(&[0, 1, 2, 3, 4]).unwrap();
        let cfg = CqrConfig::beran_rf(vec![0.5]).unwrap();
        let cross = predict_from_weights(&d, &w, &[0.0], &cfg).unwrap();
        assert_eq!(cross[0].q_hat, 3.0);
        // |S| ties at q=2 and q=3 (both 0.1); the smallest wins
        let cfg = cfg.with_root_rule(RootRule::MinAbs);
        let abs = predict_from_weights(&d, &w, &[0.0], &cfg).unwrap();
        assert_eq!(abs[0].q_hat, 2.0);
        assert!((abs[0].residual - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_row() {
        for event in [true, false] {
            let d = toy(&[2.5], &[event]);
            let f = Forest::fit(&d, &ForestConfig::new(1, 3, 1, 0)).unwrap();
            let cfg = CqrConfig::beran_rf(vec![0.1, 0.5, 0.9]).unwrap();
            for p in predict_quantiles(&f, &d, &[0.0], &cfg).unwrap() {
                assert_eq!(p.q_hat, 2.5);
                assert_eq!(p.candidate_count, 1);
                assert_eq!(p.degenerate_tail, !event);
            }
        }
    }

    #[test]
    fn search_window_restricts_candidates() {
        let d = toy(&[-3.0, 1.0, 2.0, 5.0], &[true; 4]);
        let w = WeightVector::uniform(&[0, 1, 2, 3]).unwrap();
        let cfg = CqrConfig::beran_rf(vec![0.9]).unwrap().with_search_window(2.5);
        let p = predict_from_weights(&d, &w, &[0.0], &cfg).unwrap();
        assert_eq!(p[0].candidate_count, 2);
        assert_eq!(p[0].q_hat, 2.0);
        let cfg = CqrConfig::beran_rf(vec![0.9]).unwrap().with_search_window(0.5);
        assert!(matches!(
            predict_from_weights(&d, &w, &[0.0], &cfg),
            Err(Error::EmptyCandidateSet)
        ));
    }

    #[test]
    fn degenerate_tail_is_flagged() {
        // top observation censored: curve drops to 0 there
        let d = toy(&[1.0, 2.0, 3.0], &[true, true, false]);
        let w = WeightVector::uniform(&[0, 1, 2]).unwrap();
        let cfg = CqrConfig::beran_rf(vec![0.95]).unwrap();
        let p = &predict_from_weights(&d, &w, &[0.0], &cfg).unwrap()[0];
        assert_eq!(p.q_hat, 3.0);
        assert!(p.degenerate_tail);
    }

    #[test]
    fn config_validation() {
        assert!(CqrConfig::beran_rf(vec![0.5, 0.3]).is_err());
        assert!(CqrConfig::beran_rf(vec![0.0]).is_err());
        assert!(CqrConfig::new(SurvivalMode::KmKnn { k: 0 }, vec![0.5]).is_err());
        let (lo, hi) = interval_taus(0.95).unwrap();
        assert!((lo - 0.025).abs() < 1e-15 && (hi - 0.975).abs() < 1e-15);
        assert!(interval_taus(1.0).is_err());
    }

    #[test]
    fn forest_and_data_must_match() {
        let d = toy(&[1.0, 2.0, 3.0], &[true; 3]);
        let other = toy(&[1.0, 2.0], &[true; 2]);
        let f = Forest::fit(&d, &ForestConfig::new(1, 2, 1, 0)).unwrap();
        let cfg = CqrConfig::beran_rf(vec![0.5]).unwrap();
        assert!(matches!(
            predict_quantile(&f, &other, &[0.0], 0.5, &cfg),
            Err(Error::SchemaMismatch(_))
        ));
    }
}
