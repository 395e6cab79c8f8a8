//! Censored quantile regression forests.
//!
//! A regression forest is grown on the observed responses of right-censored
//! data, ignoring the censoring flags. Its local weights then drive two
//! things for each test point: a conditional survival estimate of the
//! censoring variable, and a weighted estimating equation whose root is the
//! conditional quantile of the latent survival time.
//!
//! ```no_run
//! use cqrf::data::{simulate, SimConfig, SimModel};
//! use cqrf::estimator::{predict_quantiles, CqrConfig};
//! use cqrf::forest::{Forest, ForestConfig};
//!
//! let train = simulate(&SimConfig::new(SimModel::Aft1D, 300, 0.08, 1)).unwrap();
//! let forest = Forest::fit(&train, &ForestConfig::new(1, 200, 30, 7)).unwrap();
//! let cfg = CqrConfig::beran_rf(vec![0.3, 0.5, 0.7]).unwrap();
//! let preds = predict_quantiles(&forest, &train, &[1.0], &cfg).unwrap();
//! for p in &preds {
//!     println!("tau={} q={}", p.tau, p.q_hat);
//! }
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons also reject NaN

pub mod bench;
pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod forest;
pub mod metrics;
pub mod normal;
pub mod rng;
pub mod survival;

pub use error::{Error, Result};
