//! The uncensored and censored estimating equations on uniform latent times
//! with normal censoring: their values on a grid and how their roots move
//! together as the sample grows.

use cqrf::bench::{illustrative_roots, illustrative_sample, uniform_equation};
use cqrf::survival::{self, SurvivalCurve};

fn main() -> cqrf::Result<()> {
    let tau = 0.5;
    let (t, y, event) = illustrative_sample(500, 1)?;
    let u1 = uniform_equation(&t, SurvivalCurve::constant_one())?;
    let u2 = uniform_equation(&y, survival::km(&y, &event)?)?;
    println!("q,u1,u2");
    for i in 0..=20 {
        let q = i as f64 * 0.05;
        println!("{q:.2},{:.4},{:.4}", u1.eval(q, tau), u2.eval(q, tau));
    }

    println!("\nn,seed,root_u1,root_u2,gap");
    for n in [100, 500, 1000, 5000] {
        for seed in 0..3 {
            let r = illustrative_roots(n, tau, seed)?;
            println!(
                "{n},{seed},{:.4},{:.4},{:.4}",
                r.uncensored,
                r.censored,
                (r.censored - r.uncensored).abs()
            );
        }
    }
    Ok(())
}
