//! Central prediction intervals for the latent time and their empirical
//! coverage on fresh draws.

use cqrf::data::{simulate, SimConfig, SimModel};
use cqrf::estimator::{predict_interval, CqrConfig};
use cqrf::forest::{Forest, ForestConfig};

fn main() -> cqrf::Result<()> {
    let model = SimModel::Sine1D;
    let train = simulate(&SimConfig::new(model, 300, 0.2, 21))?;
    let test = simulate(&SimConfig::new(model, 500, 0.2, 22))?;
    let forest = Forest::fit(&train, &ForestConfig::new(1, 200, 30, 4))?;
    let cfg = CqrConfig::beran_rf(vec![0.5])?;
    let t = test.latent().expect("simulated data keeps the latent times");

    for level in [0.5, 0.8, 0.95] {
        let mut covered = 0;
        let mut width = 0.0;
        for (x, &ti) in test.rows().zip(t) {
            let (lo, hi) = predict_interval(&forest, &train, x, level, &cfg)?;
            covered += usize::from(lo <= ti && ti <= hi);
            width += hi - lo;
        }
        println!(
            "level {level}: coverage {:.3}, mean width {:.3}",
            covered as f64 / test.n() as f64,
            width / test.n() as f64
        );
    }

    let (lo, hi) = predict_interval(&forest, &train, &[std::f64::consts::FRAC_PI_2], 0.95, &cfg)?;
    let (a, b) = (
        model.quantile(&[std::f64::consts::FRAC_PI_2], 0.025, 0.3)?,
        model.quantile(&[std::f64::consts::FRAC_PI_2], 0.975, 0.3)?,
    );
    println!("x = pi/2: 95% interval [{lo:.3}, {hi:.3}], true [{a:.3}, {b:.3}]");
    Ok(())
}
