#![allow(dead_code)]

use cqrf::data::Dataset;
use cqrf::forest::{Forest, ForestConfig, WeightVector};
use cqrf::rng::{stream, Rng};
use rand::Rng as _;

/// Product-limit value at `q` computed straight from the definition:
/// rows sorted by `(Y, censored after events, index)`, risk set of a row =
/// weight of itself and every row after it, factor `1 - w/R` for censored
/// rows. For distinct responses this is the textbook product over
/// `Y_i <= q` with risk set `sum_j 1(Y_j >= Y_i) w_j`.
pub fn brute_product(y: &[f64], event: &[bool], w: &[f64], q: f64) -> f64 {
    let mut order: Vec<usize> = (0..y.len()).filter(|&i| w[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        y[a].total_cmp(&y[b])
            .then(event[b].cmp(&event[a]))
            .then(a.cmp(&b))
    });
    let mut g = 1.0;
    for (k, &i) in order.iter().enumerate() {
        if y[i] > q {
            break;
        }
        if !event[i] {
            let risk: f64 = order[k..].iter().map(|&j| w[j]).sum();
            g *= 1.0 - w[i] / risk;
        }
    }
    g
}

/// Points where a step curve over `y` can be checked: every response, the
/// midpoints between consecutive distinct responses and one point outside
/// on each side.
pub fn probe_grid(y: &[f64]) -> Vec<f64> {
    let mut s = y.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    let mut g = vec![s[0] - 1.0];
    for w in s.windows(2) {
        g.push(w[0]);
        g.push(0.5 * (w[0] + w[1]));
    }
    g.push(*s.last().unwrap());
    g.push(s.last().unwrap() + 1.0);
    g
}

/// Rows with the `k` largest weights, ties to the lower index.
pub fn brute_top_k(w: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

pub struct RandomData {
    pub n: usize,
    pub p: usize,
    /// Probability that a row is censored.
    pub censor_prob: f64,
    /// Round responses to this grid to force ties.
    pub tie_grid: Option<f64>,
}

pub fn random_dataset(rng: &mut Rng, spec: &RandomData) -> Dataset {
    let x: Vec<f64> = (0..spec.n * spec.p).map(|_| rng.random::<f64>() * 2.0).collect();
    let y: Vec<f64> = (0..spec.n)
        .map(|i| {
            let v = 1.0 + x[i * spec.p] + rng.random::<f64>() * 3.0;
            match spec.tie_grid {
                Some(g) => (v / g).round() * g,
                None => v,
            }
        })
        .collect();
    let event: Vec<bool> = (0..spec.n).map(|_| rng.random::<f64>() >= spec.censor_prob).collect();
    Dataset::new(x, spec.p, y, event, None).unwrap()
}

pub fn random_forest(rng: &mut Rng, data: &Dataset) -> Forest {
    let trees = rng.random_range(1..=30);
    let m = rng.random_range(1..=8);
    let mut cfg = ForestConfig::new(data.p(), trees, m, rng.random());
    cfg.mtry = rng.random_range(1..=data.p());
    cfg.bootstrap = rng.random_bool(0.7);
    Forest::fit(data, &cfg).unwrap()
}

pub fn random_point(rng: &mut Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.random::<f64>() * 2.2 - 0.1).collect()
}

/// Random weights on a random nonempty subset, normalised.
pub fn random_weights(rng: &mut Rng, n: usize) -> WeightVector {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.6) { rng.random::<f64>() } else { 0.0 })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
            return WeightVector::from_dense(&w).unwrap();
        }
    }
}

pub fn rng_for(seed: u64) -> Rng {
    stream(seed, 99)
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
