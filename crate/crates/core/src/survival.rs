//! Survival curves of the censoring variable, `G(q|x) = P(C >= q | x)`.
//!
//! All estimators here are the same weighted product-limit estimator
//!
//! ```text
//! G(q|x) = prod_{Y_i <= q} { 1 - w_i / sum_j 1(Y_j >= Y_i) w_j }^(1 - delta_i)
//! ```
//!
//! with different weights: unit weights (Kaplan-Meier), Nadaraya-Watson
//! kernel weights (Beran), uniform weights on the forest nearest neighbours,
//! or the forest weights themselves. A row with `delta = 1` only enters the
//! risk sets; the curve jumps at censored rows (`delta = 0`).
//!
//! Rows are processed in ascending `Y`; at tied `Y`, uncensored rows come
//! before censored ones and lower row indices first. Each row leaves the risk
//! set once processed, so `d` tied censored rows jointly contribute the usual
//! `1 - d/R` factor.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::WeightVector;

/// Right-continuous nonincreasing step function, equal to 1 before the first
/// jump and to `values[k]` on `[jump_times[k], jump_times[k+1])`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurvivalCurve {
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl SurvivalCurve {
    /// Builds a curve, checking the step-function invariants.
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "jump times vs values",
                left: jump_times.len(),
                right: values.len(),
            });
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidData("jump times must be strictly increasing".into()));
        }
        let mut prev = 1.0;
        for &v in &values {
            if !(0.0..=prev).contains(&v) {
                return Err(Error::InvalidData("curve values must be nonincreasing in [0,1]".into()));
            }
            prev = v;
        }
        Ok(SurvivalCurve { jump_times, values })
    }

    /// The curve identically equal to one.
    pub fn constant_one() -> Self {
        SurvivalCurve::default()
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn evaluate(&self, q: f64) -> f64 {
        match self.jump_times.partition_point(|&t| t <= q) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }

    /// `lim_{s -> q-} G(s)`.
    pub fn left_limit(&self, q: f64) -> f64 {
        match self.jump_times.partition_point(|&t| t < q) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }

    /// First time at which the curve reaches zero, if it does.
    pub fn zero_time(&self) -> Option<f64> {
        self.values
            .iter()
            .position(|&v| v == 0.0)
            .map(|k| self.jump_times[k])
    }

    /// Writes `jump_time,value` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["jump_time", "value"])?;
        for (t, v) in self.jump_times.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }
}

/// Weighted product-limit curve over `(row, weight)` pairs. Zero-weight rows
/// are ignored: they contribute neither factors nor risk mass.
pub fn product_limit(
    y: &[f64],
    event: &[bool],
    weights: impl IntoIterator<Item = (usize, f64)>,
) -> Result<SurvivalCurve> {
    if y.len() != event.len() {
        return Err(Error::LengthMismatch {
            what: "response vs event",
            left: y.len(),
            right: event.len(),
        });
    }
    let mut pts: Vec<(usize, f64)> = Vec::new();
    for (i, w) in weights {
        if i >= y.len() {
            return Err(Error::InvalidData(format!("weight for row {i} out of range")));
        }
        if w > 0.0 {
            pts.push((i, w));
        }
    }
    if pts.is_empty() {
        return Err(Error::EmptySupport);
    }
    pts.sort_by(|&(i, _), &(j, _)| {
        y[i].total_cmp(&y[j])
            .then(event[j].cmp(&event[i]))
            .then(i.cmp(&j))
    });

    // at_risk[k] = sum of weights at sorted positions >= k
    let mut at_risk = vec![0.0; pts.len()];
    let mut acc = 0.0;
    for k in (0..pts.len()).rev() {
        acc += pts[k].1;
        at_risk[k] = acc;
    }

    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut value = 1.0;
    let mut k = 0;
    while k < pts.len() {
        let t = y[pts[k].0];
        let before = value;
        while k < pts.len() && y[pts[k].0] == t {
            let (i, w) = pts[k];
            if !event[i] {
                value *= (1.0 - w / at_risk[k]).max(0.0);
            }
            k += 1;
        }
        if value != before {
            jump_times.push(t);
            values.push(value);
        }
    }
    Ok(SurvivalCurve { jump_times, values })
}

/// Kaplan-Meier estimate of the censoring survival function.
pub fn km(y: &[f64], event: &[bool]) -> Result<SurvivalCurve> {
    if y.is_empty() {
        return Err(Error::InvalidData("empty sample".into()));
    }
    product_limit(y, event, (0..y.len()).map(|i| (i, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    /// Radial profile evaluated at `u = |x - X_i| / a_n`.
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * u * u).exp(),
            Kernel::Epanechnikov => {
                if u < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeranNWConfig {
    pub kernel: Kernel,
    pub bandwidth: f64,
}

/// Nadaraya-Watson weights `K(|x - X_i| / a_n) / sum_j K(|x - X_j| / a_n)`,
/// with the Euclidean distance for multivariate features.
pub fn nadaraya_watson_weights(data: &Dataset, x: &[f64], cfg: &BeranNWConfig) -> Result<Vec<f64>> {
    if !(cfg.bandwidth > 0.0) {
        return Err(Error::InvalidConfig("bandwidth must be positive".into()));
    }
    if x.len() != data.p() {
        return Err(Error::LengthMismatch {
            what: "feature vector vs data dimension",
            left: x.len(),
            right: data.p(),
        });
    }
    let k: Vec<f64> = data
        .rows()
        .map(|row| {
            let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            cfg.kernel.eval(d2.sqrt() / cfg.bandwidth)
        })
        .collect();
    let total: f64 = k.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyKernelNeighborhood);
    }
    Ok(k.into_iter().map(|v| v / total).collect())
}

/// Beran's conditional product-limit estimator with kernel weights.
pub fn beran_nw(data: &Dataset, x: &[f64], cfg: &BeranNWConfig) -> Result<SurvivalCurve> {
    let w = nadaraya_watson_weights(data, x, cfg)?;
    product_limit(data.response(), data.event(), w.into_iter().enumerate())
}

/// The `k` rows with the largest forest weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    /// Selected rows, in decreasing weight order.
    pub rows: Vec<usize>,
    /// How many selected rows have zero weight (fewer than `k` rows had
    /// positive weight).
    pub padded: usize,
}

/// Picks the `k` rows with the largest weight, ties by lower row index. When
/// fewer than `k` rows have positive weight, zero-weight rows fill the set in
/// index order.
pub fn nearest_neighbors(w: &WeightVector, n: usize, k: usize) -> Result<Neighborhood> {
    if k < 1 || k > n {
        return Err(Error::InvalidConfig(format!("k must lie in [1, {n}], got {k}")));
    }
    let mut ranked: Vec<(usize, f64)> = w.iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    let mut rows: Vec<usize> = ranked.iter().map(|&(i, _)| i).collect();
    let mut padded = 0;
    if rows.len() < k {
        let mut next = 0;
        while rows.len() < k {
            if w.get(next) == 0.0 {
                rows.push(next);
                padded += 1;
            }
            next += 1;
        }
    }
    Ok(Neighborhood { rows, padded })
}

/// Kaplan-Meier on the `k` forest nearest neighbours of the test point.
/// Runs the weighted estimator with weight `1/k` on each neighbour, which is
/// the Kaplan-Meier curve of the neighbourhood.
pub fn km_knn(data: &Dataset, w: &WeightVector, k: usize) -> Result<SurvivalCurve> {
    km_knn_with_neighbors(data, w, k).map(|(c, _)| c)
}

pub fn km_knn_with_neighbors(
    data: &Dataset,
    w: &WeightVector,
    k: usize,
) -> Result<(SurvivalCurve, Neighborhood)> {
    let nb = nearest_neighbors(w, data.n(), k)?;
    let uniform = WeightVector::uniform(&nb.rows)?;
    let curve = product_limit(data.response(), data.event(), uniform.iter())?;
    Ok((curve, nb))
}

/// Beran estimator with random forest weights.
pub fn beran_rf(data: &Dataset, w: &WeightVector) -> Result<SurvivalCurve> {
    product_limit(data.response(), data.event(), w.iter())
}
