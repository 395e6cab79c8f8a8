//! Draws a censored sample from each simulation model and reports how much of
//! it is censored.
//!
//! `cargo run --example simulate_and_censor -- [out_dir]`

use std::path::PathBuf;

use cqrf::data::{simulate, SimConfig, SimModel};

fn main() -> cqrf::Result<()> {
    let out_dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);

    println!("model,lambda,n,censored_fraction,file");
    for model in SimModel::ALL {
        let cfg = SimConfig::new(model, 5000, model.default_lambda(), 1);
        let d = simulate(&cfg)?;
        let path = out_dir.join(format!("{model}.csv"));
        d.save_csv(&path)?;
        println!(
            "{model},{},{},{:.4},{}",
            cfg.censor_rate_param,
            d.n(),
            d.censoring_fraction(),
            path.display()
        );
    }

    // heavier censoring on the one-dimensional AFT design
    let d = simulate(&SimConfig::new(SimModel::Aft1D, 5000, 0.2, 1))?;
    println!("aft1d,0.2,{},{:.4},", d.n(), d.censoring_fraction());
    Ok(())
}
