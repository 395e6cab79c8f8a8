//! Quantile losses against the truth and Harrell's concordance index.

use serde::{Deserialize, Serialize};

use crate::data::check_tau;
use crate::error::{Error, Result};

/// `rho_tau(u) = u (tau - 1(u < 0))`.
pub fn pinball(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileLosses {
    /// Mean squared error against the true quantiles, when known.
    pub l_mse: Option<f64>,
    /// Mean absolute error against the true quantiles, when known.
    pub l_mad: Option<f64>,
    /// Mean pinball loss of the observed times.
    pub l_quantile: f64,
}

/// Losses of predicted quantiles `pred_q` at level `tau`.
///
/// `truth_t` are fully observed test times; `true_q` the true conditional
/// quantiles, available only for simulated data.
pub fn quantile_losses(
    truth_t: &[f64],
    true_q: Option<&[f64]>,
    pred_q: &[f64],
    tau: f64,
) -> Result<QuantileLosses> {
    check_tau(tau)?;
    let n = pred_q.len();
    if truth_t.len() != n {
        return Err(Error::LengthMismatch {
            what: "observed times vs predictions",
            left: truth_t.len(),
            right: n,
        });
    }
    if n == 0 {
        return Err(Error::InvalidData("no predictions to evaluate".into()));
    }
    let nf = n as f64;
    let l_quantile = truth_t
        .iter()
        .zip(pred_q)
        .map(|(t, q)| pinball(t - q, tau))
        .sum::<f64>()
        / nf;
    let (l_mse, l_mad) = match true_q {
        Some(q) => {
            if q.len() != n {
                return Err(Error::LengthMismatch {
                    what: "true quantiles vs predictions",
                    left: q.len(),
                    right: n,
                });
            }
            let mse = pred_q.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / nf;
            let mad = pred_q.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / nf;
            (Some(mse), Some(mad))
        }
        None => (None, None),
    };
    Ok(QuantileLosses {
        l_mse,
        l_mad,
        l_quantile,
    })
}

/// Harrell's C: among usable pairs, the fraction in which the member that
/// failed first has the smaller prediction. Prediction ties count one half.
///
/// A pair is usable when the smaller observed time is an event, or when the
/// times are equal and exactly one of them is an event (that one is taken to
/// fail first).
pub fn c_index(pred: &[f64], y: &[f64], event: &[bool]) -> Result<f64> {
    let n = pred.len();
    if y.len() != n || event.len() != n {
        return Err(Error::LengthMismatch {
            what: "predictions vs times/events",
            left: n,
            right: if y.len() != n { y.len() } else { event.len() },
        });
    }
    let mut usable = 0.0;
    let mut concordant = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            // `a` fails first
            let (a, b) = if y[i] < y[j] {
                (i, j)
            } else if y[j] < y[i] {
                (j, i)
            } else if event[i] != event[j] {
                if event[i] {
                    (i, j)
                } else {
                    (j, i)
                }
            } else {
                continue;
            };
            if !event[a] {
                continue;
            }
            usable += 1.0;
            if pred[a] < pred[b] {
                concordant += 1.0;
            } else if pred[a] == pred[b] {
                concordant += 0.5;
            }
        }
    }
    if usable == 0.0 {
        return Err(Error::NoComparablePairs);
    }
    Ok(concordant / usable)
}

/// One evaluation row: losses and concordance of a prediction set at one
/// quantile level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub method: String,
    pub tau: f64,
    pub replication: usize,
    pub n_test: usize,
    pub l_mse: Option<f64>,
    pub l_mad: Option<f64>,
    pub l_quantile: f64,
    pub c_index: Option<f64>,
}

impl EvalReport {
    /// Evaluates `pred_q` against fully observed test times `truth_t`
    /// (events default to all observed).
    pub fn evaluate(
        truth_t: &[f64],
        event: Option<&[bool]>,
        true_q: Option<&[f64]>,
        pred_q: &[f64],
        tau: f64,
    ) -> Result<Self> {
        let losses = quantile_losses(truth_t, true_q, pred_q, tau)?;
        let all = vec![true; truth_t.len()];
        let c = match c_index(pred_q, truth_t, event.unwrap_or(&all)) {
            Ok(c) => Some(c),
            Err(Error::NoComparablePairs) => None,
            Err(e) => return Err(e),
        };
        Ok(EvalReport {
            dataset: String::new(),
            method: String::new(),
            tau,
            replication: 0,
            n_test: pred_q.len(),
            l_mse: losses.l_mse,
            l_mad: losses.l_mad,
            l_quantile: losses.l_quantile,
            c_index: c,
        })
    }

    pub fn labelled(mut self, dataset: &str, method: &str, replication: usize) -> Self {
        self.dataset = dataset.to_string();
        self.method = method.to_string();
        self.replication = replication;
        self
    }

    pub const HEADER: [&'static str; 9] = [
        "dataset",
        "method",
        "tau",
        "replication",
        "n_test",
        "l_mse",
        "l_mad",
        "l_quantile",
        "c_index",
    ];

    pub fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.dataset.clone(),
            self.method.clone(),
            self.tau.to_string(),
            self.replication.to_string(),
            self.n_test.to_string(),
            opt(self.l_mse),
            opt(self.l_mad),
            self.l_quantile.to_string(),
            opt(self.c_index),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinball_examples() {
        assert_eq!(pinball(0.0, 0.7), 0.0);
        assert!((pinball(2.0, 0.3) - 0.6).abs() < 1e-15);
        assert!((pinball(-2.0, 0.3) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn loss_examples() {
        let t = [1.0, 2.0, 3.0];
        let l = quantile_losses(&t, Some(&t), &t, 0.4).unwrap();
        assert_eq!((l.l_mse, l.l_mad, l.l_quantile), (Some(0.0), Some(0.0), 0.0));

        let l = quantile_losses(&[1.0, 3.0], None, &[2.0, 2.0], 0.5).unwrap();
        assert_eq!(l.l_quantile, 0.5);
        assert_eq!(l.l_mse, None);

        let shifted: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
        let l = quantile_losses(&t, Some(&t), &shifted, 0.5).unwrap();
        assert_eq!((l.l_mse, l.l_mad), (Some(1.0), Some(1.0)));

        assert!(quantile_losses(&t, None, &[1.0], 0.5).is_err());
        assert!(quantile_losses(&t, Some(&[1.0]), &t, 0.5).is_err());
    }

    #[test]
    fn c_index_examples() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let e = [true; 4];
        assert_eq!(c_index(&[10.0, 20.0, 30.0, 40.0], &y, &e).unwrap(), 1.0);
        assert_eq!(c_index(&[5.0; 4], &y, &e).unwrap(), 0.5);
        assert_eq!(c_index(&[40.0, 30.0, 20.0, 10.0], &y, &e).unwrap(), 0.0);
        assert!(matches!(
            c_index(&[1.0, 2.0], &[1.0, 2.0], &[false, false]),
            Err(Error::NoComparablePairs)
        ));
    }

    #[test]
    fn c_index_censored_by_enumeration() {
        // Y=(2,3,1,4), delta=(1,0,1,0), pred=(2.5,2.0,0.5,3.0)
        // usable pairs (first failure listed first):
        //  (2,0): 0.5<2.5 yes   (2,1): 0.5<2.0 yes   (2,3): 0.5<3.0 yes
        //  (0,1): 2.5<2.0 no    (0,3): 2.5<3.0 yes
        //  rows 1 and 3 are censored and never fail first
        let c = c_index(
            &[2.5, 2.0, 0.5, 3.0],
            &[2.0, 3.0, 1.0, 4.0],
            &[true, false, true, false],
        )
        .unwrap();
        assert!((c - 4.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn equal_times_one_event() {
        // the event at t=2 precedes the censored t=2
        let c = c_index(&[1.0, 3.0], &[2.0, 2.0], &[true, false]).unwrap();
        assert_eq!(c, 1.0);
        assert!(c_index(&[1.0, 3.0], &[2.0, 2.0], &[true, true]).is_err());
    }
}
