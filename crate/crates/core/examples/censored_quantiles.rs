//! Conditional quantiles of the latent time from the censored forest,
//! compared with a forest that ignores censoring and with the truth.

use cqrf::data::{simulate, SimConfig, SimModel};
use cqrf::estimator::{predict_quantiles, CqrConfig, SurvivalMode};
use cqrf::forest::{Forest, ForestConfig};

fn main() -> cqrf::Result<()> {
    let model = SimModel::Sine1D;
    let n = 1000;
    let train = simulate(&SimConfig::new(model, n, model.default_lambda(), 11))?;
    println!("censored fraction {:.3}", train.censoring_fraction());
    let forest = Forest::fit(&train, &ForestConfig::new(1, 200, n / 20, 2))?;

    let taus = vec![0.1, 0.5, 0.9];
    let beran = CqrConfig::beran_rf(taus.clone())?;
    let knn = CqrConfig::new(SurvivalMode::KmKnn { k: n / 20 }, taus.clone())?;

    println!("x,tau,truth,crf,crf_knn,naive");
    for i in 0..8 {
        let x = [0.4 + 0.75 * i as f64];
        let a = predict_quantiles(&forest, &train, &x, &beran)?;
        let b = predict_quantiles(&forest, &train, &x, &knn)?;
        for (j, &tau) in taus.iter().enumerate() {
            println!(
                "{:.2},{tau},{:.3},{:.3},{:.3},{:.3}",
                x[0],
                model.quantile(&x, tau, 0.3)?,
                a[j].q_hat,
                b[j].q_hat,
                forest.weighted_quantile(&x, tau)?
            );
        }
    }
    Ok(())
}
