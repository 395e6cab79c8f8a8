//! Right-censored datasets: validation, CSV input/output and the simulation
//! models used throughout the benchmarks.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::rng;

/// Observations `(X_i, Y_i, delta_i)` with `Y = min(T, C)` and
/// `delta = 1{T <= C}`. Features are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n: usize,
    p: usize,
    response: Vec<f64>,
    event: Vec<bool>,
    latent: Option<Vec<f64>>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major features, checking every invariant.
    pub fn new(
        features: Vec<f64>,
        p: usize,
        response: Vec<f64>,
        event: Vec<bool>,
        latent: Option<Vec<f64>>,
    ) -> Result<Self> {
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Self::with_names(features, names, response, event, latent)
    }

    pub fn with_names(
        features: Vec<f64>,
        feature_names: Vec<String>,
        response: Vec<f64>,
        event: Vec<bool>,
        latent: Option<Vec<f64>>,
    ) -> Result<Self> {
        let p = feature_names.len();
        let n = response.len();
        if p == 0 {
            return Err(Error::InvalidData("at least one feature is required".into()));
        }
        if n == 0 {
            return Err(Error::InvalidData("at least one row is required".into()));
        }
        if event.len() != n {
            return Err(Error::LengthMismatch {
                what: "event vs response",
                left: event.len(),
                right: n,
            });
        }
        if features.len() != n * p {
            return Err(Error::LengthMismatch {
                what: "feature cells vs n*p",
                left: features.len(),
                right: n * p,
            });
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature in row {}",
                i / p
            )));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite response in row {i}")));
        }
        if let Some(t) = &latent {
            if t.len() != n {
                return Err(Error::LengthMismatch {
                    what: "latent vs response",
                    left: t.len(),
                    right: n,
                });
            }
            for i in 0..n {
                if !t[i].is_finite() {
                    return Err(Error::InvalidData(format!("non-finite latent in row {i}")));
                }
                let ok = if event[i] {
                    response[i] == t[i]
                } else {
                    response[i] < t[i]
                };
                if !ok {
                    return Err(Error::InvalidData(format!(
                        "row {i}: response {} inconsistent with latent {} and event {}",
                        response[i], t[i], event[i]
                    )));
                }
            }
        }
        Ok(Dataset {
            features,
            n,
            p,
            response,
            event,
            latent,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.p)
    }

    pub fn feature(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.p + j]
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn latent(&self) -> Option<&[f64]> {
        self.latent.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn censoring_fraction(&self) -> f64 {
        self.event.iter().filter(|&&e| !e).count() as f64 / self.n as f64
    }

    /// The same features with the latent times as fully observed responses.
    /// This is what the oracle baselines are trained on.
    pub fn uncensored_view(&self) -> Option<Dataset> {
        let t = self.latent.as_ref()?;
        Some(Dataset {
            features: self.features.clone(),
            n: self.n,
            p: self.p,
            response: t.clone(),
            event: vec![true; self.n],
            latent: Some(t.clone()),
            feature_names: self.feature_names.clone(),
        })
    }

    /// Writes `features..., y, delta[, t]` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.feature_names.clone();
        header.push("y".into());
        header.push("delta".into());
        if self.latent.is_some() {
            header.push("t".into());
        }
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.response[i].to_string());
            rec.push(if self.event[i] { "1" } else { "0" }.into());
            if let Some(t) = &self.latent {
                rec.push(t[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }
}

/// Column mapping for CSV input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub response: String,
    pub event: String,
    /// Feature columns; `None` selects every column that is not the
    /// response, the event flag or the latent column.
    pub features: Option<Vec<String>>,
    /// Optional column with the latent time (simulated data only).
    pub latent: Option<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            response: "y".into(),
            event: "delta".into(),
            features: None,
            latent: None,
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(input: R, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::EmptyFile(origin.to_path_buf()));
        }
        let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        if rows.is_empty() {
            return Err(Error::EmptyFile(origin.to_path_buf()));
        }
        Ok(Table { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn cell(&self, row: usize, col: usize) -> Result<&str> {
        match self.rows[row].get(col) {
            Some(s) if !s.is_empty() && !s.eq_ignore_ascii_case("na") => Ok(s),
            _ => Err(Error::MissingValue {
                row,
                column: self.header[col].clone(),
            }),
        }
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let s = self.cell(row, col)?;
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::NonNumeric {
                row,
                column: self.header[col].clone(),
                value: s.to_string(),
            }),
        }
    }

    fn flag(&self, row: usize, col: usize) -> Result<bool> {
        let s = self.cell(row, col)?;
        match s.parse::<f64>() {
            Ok(v) if v == 0.0 => Ok(false),
            Ok(v) if v == 1.0 => Ok(true),
            _ => Err(Error::InvalidEventFlag {
                row,
                value: s.to_string(),
            }),
        }
    }
}

/// Loads a dataset from a headered CSV file.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(f, path, schema)
}

pub fn read_csv<R: Read>(input: R, origin: &Path, schema: &Schema) -> Result<Dataset> {
    let table = Table::read(input, origin)?;
    let y_col = table.column(&schema.response)?;
    let d_col = table.column(&schema.event)?;
    let t_col = schema.latent.as_deref().map(|c| table.column(c)).transpose()?;
    let feature_names: Vec<String> = match &schema.features {
        Some(cols) => cols.clone(),
        None => table
            .header
            .iter()
            .filter(|h| {
                **h != schema.response
                    && **h != schema.event
                    && Some(h.as_str()) != schema.latent.as_deref()
                    && h.as_str() != "t"
            })
            .cloned()
            .collect(),
    };
    if feature_names.is_empty() {
        return Err(Error::InvalidData("no feature columns selected".into()));
    }
    let f_cols = feature_names
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>>>()?;

    let n = table.rows.len();
    let mut features = Vec::with_capacity(n * f_cols.len());
    let mut response = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    let mut latent = t_col.map(|_| Vec::with_capacity(n));
    for i in 0..n {
        for &c in &f_cols {
            features.push(table.number(i, c)?);
        }
        response.push(table.number(i, y_col)?);
        event.push(table.flag(i, d_col)?);
        if let (Some(c), Some(t)) = (t_col, latent.as_mut()) {
            t.push(table.number(i, c)?);
        }
    }
    Dataset::with_names(features, feature_names, response, event, latent)
}

/// Reads the named feature columns of a CSV file into row vectors.
pub fn load_feature_rows(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let table = Table::read(f, path)?;
    let cols = names
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>>>()?;
    (0..table.rows.len())
        .map(|i| cols.iter().map(|&c| table.number(i, c)).collect())
        .collect()
}

/// Reads one numeric column of a CSV file.
pub fn load_column(path: impl AsRef<Path>, name: &str) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let table = Table::read(f, path)?;
    let c = table.column(name)?;
    (0..table.rows.len()).map(|i| table.number(i, c)).collect()
}

/// The four simulation models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimModel {
    /// `log T = X + eps`, `X ~ U(0,2)`, `C ~ Exp(lambda)`.
    #[serde(rename = "aft1d")]
    Aft1D,
    /// `T = 2.5 + sin X + eps`, `X ~ U(0, 2pi)`, `C = 1 + sin X + Exp(lambda)`.
    #[serde(rename = "sine1d")]
    Sine1D,
    /// `log T = X'beta + eps`, `beta = (0.1, ..., 0.5)`, `X_j ~ U(0,2)`.
    AftMultiD,
    /// `T = 5 + (sin X1 + cos X2 + X3^2 + exp X4 + X5)/5 + eps`, `X_j ~ U(0,2)`.
    ComplexManifold,
}

const MULTI_BETA: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

impl SimModel {
    pub const ALL: [SimModel; 4] = [
        SimModel::Aft1D,
        SimModel::Sine1D,
        SimModel::AftMultiD,
        SimModel::ComplexManifold,
    ];

    pub fn dims(self) -> usize {
        match self {
            SimModel::Aft1D | SimModel::Sine1D => 1,
            SimModel::AftMultiD | SimModel::ComplexManifold => 5,
        }
    }

    /// Censoring rate used for this model in the reference experiments.
    pub fn default_lambda(self) -> f64 {
        match self {
            SimModel::Aft1D => 0.08,
            SimModel::Sine1D => 0.2,
            SimModel::AftMultiD => 0.05,
            SimModel::ComplexManifold => 0.015,
        }
    }

    fn feature_upper(self) -> f64 {
        match self {
            SimModel::Sine1D => 2.0 * std::f64::consts::PI,
            _ => 2.0,
        }
    }

    /// Location of the noise term: `log T = loc + eps` for the AFT models,
    /// `T = loc + eps` otherwise.
    fn location(self, x: &[f64]) -> f64 {
        match self {
            SimModel::Aft1D => x[0],
            SimModel::Sine1D => 2.5 + x[0].sin(),
            SimModel::AftMultiD => x.iter().zip(MULTI_BETA).map(|(a, b)| a * b).sum(),
            SimModel::ComplexManifold => {
                5.0 + (x[0].sin() + x[1].cos() + x[2] * x[2] + x[3].exp() + x[4]) / 5.0
            }
        }
    }

    fn is_log_scale(self) -> bool {
        matches!(self, SimModel::Aft1D | SimModel::AftMultiD)
    }

    /// Draws a feature vector from the model's covariate law.
    pub fn sample_x<R: rand::Rng + ?Sized>(self, rng: &mut R) -> Vec<f64> {
        let hi = self.feature_upper();
        (0..self.dims()).map(|_| rng.random::<f64>() * hi).collect()
    }

    /// Draws a latent time at `x`.
    pub fn sample_t<R: rand::Rng + ?Sized>(self, x: &[f64], noise_sd: f64, rng: &mut R) -> f64 {
        let eps = Normal::new(0.0, noise_sd).expect("noise_sd validated").sample(rng);
        let z = self.location(x) + eps;
        if self.is_log_scale() {
            z.exp()
        } else {
            z
        }
    }

    fn sample_c<R: rand::Rng + ?Sized>(self, x: &[f64], lambda: f64, rng: &mut R) -> f64 {
        let e = Exp::new(lambda).expect("lambda validated").sample(rng);
        match self {
            SimModel::Sine1D => 1.0 + x[0].sin() + e,
            _ => e,
        }
    }

    /// True censoring survival `P(C >= q | x)` for censoring rate `lambda`.
    pub fn censoring_survival(self, x: &[f64], lambda: f64, q: f64) -> f64 {
        let shift = match self {
            SimModel::Sine1D => 1.0 + x[0].sin(),
            _ => 0.0,
        };
        (-lambda * (q - shift).max(0.0)).exp()
    }

    /// Conditional `tau`-quantile of `T` at `x` for noise standard deviation
    /// `noise_sd`.
    pub fn quantile(self, x: &[f64], tau: f64, noise_sd: f64) -> Result<f64> {
        check_tau(tau)?;
        if x.len() != self.dims() {
            return Err(Error::LengthMismatch {
                what: "feature vector vs model dimension",
                left: x.len(),
                right: self.dims(),
            });
        }
        let z = self.location(x) + noise_sd * normal::inv_cdf(tau);
        Ok(if self.is_log_scale() { z.exp() } else { z })
    }
}

impl fmt::Display for SimModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimModel::Aft1D => "aft1d",
            SimModel::Sine1D => "sine1d",
            SimModel::AftMultiD => "aft_multi_d",
            SimModel::ComplexManifold => "complex_manifold",
        })
    }
}

impl FromStr for SimModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "aft1d" => Ok(SimModel::Aft1D),
            "sine1d" | "sine" => Ok(SimModel::Sine1D),
            "aftmultid" | "aftmulti" => Ok(SimModel::AftMultiD),
            "complexmanifold" | "complex" => Ok(SimModel::ComplexManifold),
            _ => Err(Error::InvalidConfig(format!("unknown model `{s}`"))),
        }
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("tau must lie in (0,1), got {tau}")))
    }
}

/// `tau`-quantile of `T` at `x` under `model` with the default noise level 0.3.
pub fn true_quantile(model: SimModel, x: &[f64], tau: f64) -> Result<f64> {
    model.quantile(x, tau, DEFAULT_NOISE_SD)
}

pub const DEFAULT_NOISE_SD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: SimModel,
    pub n: usize,
    /// Rate of the exponential censoring law.
    #[serde(alias = "lambda")]
    pub censor_rate_param: f64,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_noise_sd() -> f64 {
    DEFAULT_NOISE_SD
}

impl SimConfig {
    pub fn new(model: SimModel, n: usize, lambda: f64, seed: u64) -> Self {
        SimConfig {
            model,
            n,
            censor_rate_param: lambda,
            noise_sd: DEFAULT_NOISE_SD,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if !(self.censor_rate_param > 0.0 && self.censor_rate_param.is_finite()) {
            return Err(Error::InvalidConfig("censoring rate must be positive".into()));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidConfig("noise_sd must be positive".into()));
        }
        Ok(())
    }

    pub fn true_quantile(&self, x: &[f64], tau: f64) -> Result<f64> {
        self.model.quantile(x, tau, self.noise_sd)
    }
}

/// Draws a censored sample. Per row the draws are, in order: the features,
/// the noise term and the censoring time, all from one seeded stream.
pub fn simulate(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    let model = cfg.model;
    let p = model.dims();
    let mut rng = rng::stream(cfg.seed, 0);
    let mut features = Vec::with_capacity(cfg.n * p);
    let mut response = Vec::with_capacity(cfg.n);
    let mut event = Vec::with_capacity(cfg.n);
    let mut latent = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let x = model.sample_x(&mut rng);
        let t = model.sample_t(&x, cfg.noise_sd, &mut rng);
        let c = model.sample_c(&x, cfg.censor_rate_param, &mut rng);
        features.extend_from_slice(&x);
        if t <= c {
            response.push(t);
            event.push(true);
        } else {
            response.push(c);
            event.push(false);
        }
        latent.push(t);
    }
    Dataset::new(features, p, response, event, Some(latent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<Dataset> {
        read_csv(Cursor::new(text), Path::new("mem.csv"), &Schema::default())
    }

    #[test]
    fn parses_three_rows() {
        let d = parse("y,delta,x1\n1.5,1,0.2\n2.0,0,0.4\n0.7,1,1.9\n").unwrap();
        assert_eq!((d.n(), d.p()), (3, 1));
        assert_eq!(d.event(), &[true, false, true]);
        assert_eq!(d.row(2), &[1.9]);
    }

    #[test]
    fn rejects_bad_event_flag() {
        let err = parse("y,delta,x1\n1.5,2,0.2\n").unwrap_err();
        assert!(err.to_string().contains("invalid event flag"), "{err}");
    }

    #[test]
    fn rejects_missing_and_non_numeric() {
        assert!(matches!(
            parse("y,delta,x1\n1.5,1,\n"),
            Err(Error::MissingValue { .. })
        ));
        assert!(matches!(
            parse("y,delta,x1\n1.5,1,abc\n"),
            Err(Error::NonNumeric { .. })
        ));
        assert!(matches!(parse(""), Err(Error::EmptyFile(_))));
        assert!(matches!(parse("y,delta,x1\n"), Err(Error::EmptyFile(_))));
        assert!(matches!(
            parse("y,x1\n1,2\n"),
            Err(Error::MissingColumn(c)) if c == "delta"
        ));
    }

    #[test]
    fn wide_file() {
        let mut text = String::from("x1,x2,x3,x4,x5,y,delta\n");
        for i in 0..500 {
            text.push_str(&format!("{i},1,2,3,4,{}.5,{}\n", i % 7, i % 2));
        }
        let d = parse(&text).unwrap();
        assert_eq!((d.n(), d.p()), (500, 5));
        assert_eq!(d.feature_names()[4], "x5");
    }

    #[test]
    fn latent_invariants_enforced() {
        assert!(Dataset::new(vec![0.0], 1, vec![1.0], vec![true], Some(vec![2.0])).is_err());
        assert!(Dataset::new(vec![0.0], 1, vec![3.0], vec![false], Some(vec![2.0])).is_err());
        assert!(Dataset::new(vec![0.0], 1, vec![1.0], vec![false], Some(vec![2.0])).is_ok());
        assert!(Dataset::new(vec![f64::NAN], 1, vec![1.0], vec![true], None).is_err());
        assert!(Dataset::new(vec![], 1, vec![], vec![], None).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = simulate(&SimConfig::new(SimModel::AftMultiD, 20, 0.05, 3)).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let schema = Schema {
            latent: Some("t".into()),
            ..Schema::default()
        };
        let back = read_csv(Cursor::new(buf), Path::new("mem"), &schema).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn simulation_is_reproducible_and_consistent() {
        for model in SimModel::ALL {
            let cfg = SimConfig::new(model, 500, model.default_lambda(), 11);
            let a = simulate(&cfg).unwrap();
            let b = simulate(&cfg).unwrap();
            assert_eq!(a, b);
            let t = a.latent().unwrap();
            for i in 0..a.n() {
                assert!(a.response()[i] <= t[i]);
                assert_eq!(a.response()[i] == t[i], a.event()[i]);
            }
            let c = simulate(&SimConfig { seed: 12, ..cfg }).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn vanishing_censoring_rate_censors_nothing() {
        for model in SimModel::ALL {
            let d = simulate(&SimConfig::new(model, 1000, 1e-9, 5)).unwrap();
            assert!(d.event().iter().all(|&e| e), "{model}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(simulate(&SimConfig::new(SimModel::Aft1D, 0, 0.08, 1)).is_err());
        assert!(simulate(&SimConfig::new(SimModel::Aft1D, 10, 0.0, 1)).is_err());
        let mut cfg = SimConfig::new(SimModel::Aft1D, 10, 0.08, 1);
        cfg.noise_sd = -1.0;
        assert!(simulate(&cfg).is_err());
    }

    #[test]
    fn closed_form_quantiles() {
        let q = true_quantile(SimModel::Aft1D, &[1.0], 0.5).unwrap();
        assert!((q - std::f64::consts::E).abs() < 1e-12);
        let q = true_quantile(SimModel::Sine1D, &[std::f64::consts::FRAC_PI_2], 0.5).unwrap();
        assert!((q - 3.5).abs() < 1e-12);
        assert!(true_quantile(SimModel::Aft1D, &[1.0], 1.0).is_err());
        assert!(true_quantile(SimModel::Aft1D, &[1.0], 0.0).is_err());
        assert!(true_quantile(SimModel::AftMultiD, &[1.0], 0.5).is_err());
    }

    #[test]
    fn aft_quantile_matches_monte_carlo() {
        // Empirical 0.3-quantile of exp(0.4 + eps) over 10^6 draws.
        let mut rng = rng::stream(2024, 0);
        let normal = Normal::new(0.0, 0.3).unwrap();
        let mut draws: Vec<f64> = (0..1_000_000)
            .map(|_| (0.4 + normal.sample(&mut rng) as f64).exp())
            .collect();
        draws.sort_by(f64::total_cmp);
        let mc = draws[300_000];
        let q = true_quantile(SimModel::Aft1D, &[0.4], 0.3).unwrap();
        // sd of the empirical quantile is about 6e-4 here
        assert!((q - mc).abs() < 3e-3, "{q} vs {mc}");
    }

    #[test]
    fn quantiles_increase_in_tau() {
        let mut rng = rng::stream(9, 0);
        for model in SimModel::ALL {
            for _ in 0..20 {
                let x = model.sample_x(&mut rng);
                let qs: Vec<f64> = (1..20)
                    .map(|k| true_quantile(model, &x, k as f64 / 20.0).unwrap())
                    .collect();
                assert!(qs.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn model_names_parse() {
        for m in SimModel::ALL {
            assert_eq!(m.to_string().parse::<SimModel>().unwrap(), m);
        }
        assert!("weibull".parse::<SimModel>().is_err());
    }
}
