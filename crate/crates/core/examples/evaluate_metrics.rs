//! Scores censored and naive forest quantiles with the quantile losses and
//! the concordance index, printing one CSV row per method and level.

use cqrf::bench::{method_quantiles, replication_data, Method};
use cqrf::data::{SimModel, DEFAULT_NOISE_SD};
use cqrf::forest::{Forest, ForestConfig};
use cqrf::metrics::EvalReport;

fn main() -> cqrf::Result<()> {
    let model = SimModel::AftMultiD;
    let (train, test) = replication_data(model, model.default_lambda(), 400, 300, 17)?;
    let forest = Forest::fit(&train, &ForestConfig::new(5, 200, 20, 1))?;
    let view = train.uncensored_view().expect("latent times");
    let oracle = Forest::fit(&view, &ForestConfig::new(5, 200, 20, 2))?;
    let taus = [0.1, 0.3, 0.5, 0.7, 0.9];
    let t = test.latent().expect("latent times");

    println!("{}", EvalReport::HEADER.join(","));
    for method in [Method::Crf, Method::Qrf, Method::QrfOracle] {
        let q = method_quantiles(method, &forest, &train, Some((&oracle, &view)), &test, &taus)?;
        for (j, &tau) in taus.iter().enumerate() {
            let pred: Vec<f64> = q.iter().map(|r| r[j]).collect();
            let truth: Vec<f64> = test
                .rows()
                .map(|x| model.quantile(x, tau, DEFAULT_NOISE_SD))
                .collect::<cqrf::Result<_>>()?;
            let rep = EvalReport::evaluate(t, None, Some(&truth), &pred, tau)?
                .labelled(&model.to_string(), method.name(), 0);
            println!("{}", rep.record().join(","));
        }
    }
    Ok(())
}
