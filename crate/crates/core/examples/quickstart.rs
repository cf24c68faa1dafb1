//! Train on a small synthetic table, score it, and round-trip the model file.
//!
//! `cargo run --release --example quickstart`

use oakboost::metrics::logloss;
use oakboost::{load_model, save_model, train, ColumnLayout, Dataset, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = ColumnLayout::parse("0\tLabel\n1\tNum\n2\tCateg\n").unwrap();
    let income: Vec<f64> = (0..n).map(|_| rng.gen_range(10.0..120.0)).collect();
    let city: Vec<String> = (0..n).map(|_| format!("city{}", rng.gen_range(0..20))).collect();
    let labels = income
        .iter()
        .zip(&city)
        .map(|(&x, c)| {
            let bonus = if c.ends_with('3') || c.ends_with('7') { 30.0 } else { 0.0 };
            (x + bonus + rng.gen_range(-15.0..15.0) > 70.0) as u8 as f64
        })
        .collect();
    Dataset::new(layout, vec![income], vec![city], labels).unwrap()
}

fn main() -> oakboost::Result<()> {
    let train_set = synthetic(5000, 1);
    let test_set = synthetic(2000, 2);
    let config = TrainConfig { iterations: 300, learning_rate: 0.1, ..Default::default() };
    let model = train(&train_set, &config)?;

    let p = model.predict_proba(&test_set)?;
    println!("trees: {}, binary features: {}", model.trees.len(), model.splits.len());
    println!("test logloss: {:.4}", logloss(test_set.labels(), &p)?);

    let path = std::env::temp_dir().join("quickstart.oakb");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    assert_eq!(loaded.predict(&test_set)?, model.predict(&test_set)?);
    println!("saved and reloaded {}", path.display());
    Ok(())
}
