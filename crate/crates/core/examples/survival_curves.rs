//! Estimates the censoring survival function at a few feature values with
//! every estimator in the crate and compares them with the truth.

use cqrf::bench::{comparison_grid, sup_distance};
use cqrf::data::{simulate, SimConfig, SimModel};
use cqrf::forest::{Forest, ForestConfig};
use cqrf::survival::{self, BeranNWConfig, Kernel};

fn main() -> cqrf::Result<()> {
    let model = SimModel::Aft1D;
    let lambda = 0.08;
    let n = 2000;
    let train = simulate(&SimConfig::new(model, n, lambda, 5))?;
    let forest = Forest::fit(&train, &ForestConfig::new(1, 200, n / 10, 9))?;
    let nw = BeranNWConfig {
        kernel: Kernel::Gaussian,
        bandwidth: 0.1,
    };

    let km = survival::km(train.response(), train.event())?;
    println!("pooled Kaplan-Meier has {} jumps", km.jump_times().len());

    println!("x,estimator,jumps,sup_error");
    for x in [0.4, 0.8, 1.2, 1.6] {
        let w = forest.weights(&[x])?;
        let truth = |q: f64| model.censoring_survival(&[x], lambda, q);
        let curves = [
            ("km", km.clone()),
            ("beran_nw", survival::beran_nw(&train, &[x], &nw)?),
            ("km_knn", survival::km_knn(&train, &w, n / 10)?),
            ("beran_rf", survival::beran_rf(&train, &w)?),
        ];
        for (name, c) in &curves {
            let grid = comparison_grid(c, &w, train.response())?;
            println!(
                "{x},{name},{},{:.4}",
                c.jump_times().len(),
                sup_distance(c, truth, &grid)
            );
        }
    }

    let w = forest.weights(&[1.0])?;
    let c = survival::beran_rf(&train, &w)?;
    println!("\nberan_rf curve at x = 1 (first rows):");
    println!("q,estimate,truth");
    for (&t, &v) in c.jump_times().iter().zip(c.values()).take(8) {
        println!("{t:.4},{v:.4},{:.4}", model.censoring_survival(&[1.0], lambda, t));
    }
    Ok(())
}
