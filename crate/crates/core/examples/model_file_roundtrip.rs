//! Saves a fitted forest, loads it back and checks that predictions from the
//! loaded model are bitwise identical.

use cqrf::data::{simulate, SimConfig, SimModel};
use cqrf::estimator::{predict_quantiles, CqrConfig};
use cqrf::forest::{Forest, ForestConfig};

fn main() -> cqrf::Result<()> {
    let train = simulate(&SimConfig::new(SimModel::ComplexManifold, 400, 0.015, 8))?;
    let forest = Forest::fit(&train, &ForestConfig::new(5, 100, 15, 12))?;
    let path = std::env::temp_dir().join("cqrf-model.json");
    forest.save(&path)?;
    let loaded = Forest::load(&path)?;
    println!(
        "saved {} trees to {} ({} bytes)",
        loaded.trees().len(),
        path.display(),
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0)
    );

    let cfg = CqrConfig::beran_rf(vec![0.25, 0.5, 0.75])?;
    let mut same = 0;
    let mut total = 0;
    for x in train.rows().take(50) {
        let a = predict_quantiles(&forest, &train, x, &cfg)?;
        let b = predict_quantiles(&loaded, &train, x, &cfg)?;
        for (u, v) in a.iter().zip(&b) {
            total += 1;
            same += usize::from(u.q_hat.to_bits() == v.q_hat.to_bits());
        }
    }
    println!("{same} of {total} predictions identical after the round trip");
    assert_eq!(same, total);
    Ok(())
}
