//! Runs a small replicated experiment from a TOML spec and prints the
//! aggregate table.
//!
//! `cargo run --release --example run_benchmark -- [spec.toml] [out_dir]`

use std::path::PathBuf;

use cqrf::bench::{run, ExperimentSpec};

const DEFAULT_SPEC: &str = r#"
scenario = "aft1d"
replications = 5
n_train = 300
n_test = 200
n_trees = 100
taus = [0.1, 0.5, 0.9]
seed = 2024
"#;

fn main() -> cqrf::Result<()> {
    let mut args = std::env::args().skip(1);
    let spec = match args.next() {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::from_toml(DEFAULT_SPEC)?,
    };
    let out_dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cqrf-bench"));

    let out = run(&spec, &out_dir)?;
    println!("wrote {} and {}", out.results_path.display(), out.aggregate_path.display());
    println!("method,tau,metric,mean,sd,count");
    for a in out.aggregates.iter().filter(|a| a.metric == "l_quantile" || a.metric == "l_mad") {
        println!(
            "{},{},{},{:.4},{:.4},{}",
            a.method,
            a.tau.map(|t| t.to_string()).unwrap_or_default(),
            a.metric,
            a.mean,
            a.sd,
            a.count
        );
    }
    Ok(())
}
