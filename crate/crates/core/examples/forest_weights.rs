//! Grows a forest on censored data and inspects the local weights it assigns
//! to the training rows around one test point.

use cqrf::data::{simulate, SimConfig, SimModel};
use cqrf::forest::{Forest, ForestConfig};

fn main() -> cqrf::Result<()> {
    let train = simulate(&SimConfig::new(SimModel::Aft1D, 500, 0.08, 3))?;
    let forest = Forest::fit(&train, &ForestConfig::new(1, 200, 25, 7))?;

    let x = [1.0];
    let w = forest.weights(&x)?;
    println!(
        "support {} of {} rows, total weight {:.12}, largest weight {:.4}",
        w.support_len(),
        train.n(),
        w.total(),
        w.max_weight()
    );

    let mut ranked: Vec<(usize, f64)> = w.iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("row,x1,y,delta,weight");
    for &(i, wi) in ranked.iter().take(10) {
        println!(
            "{i},{:.4},{:.4},{},{:.5}",
            train.row(i)[0],
            train.response()[i],
            u8::from(train.event()[i]),
            wi
        );
    }

    let lo = ranked.iter().map(|&(i, _)| train.row(i)[0]).fold(f64::INFINITY, f64::min);
    let hi = ranked.iter().map(|&(i, _)| train.row(i)[0]).fold(f64::NEG_INFINITY, f64::max);
    println!("weighted rows span x1 in [{lo:.3}, {hi:.3}]");
    println!("naive weighted mean of Y at x: {:.4}", forest.weighted_mean(&x)?);
    Ok(())
}
