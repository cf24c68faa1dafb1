//! Ordered boosting next to classic boosting on a small, noisy dataset.
//!
//! Classic boosting computes every gradient with a model that was fitted on
//! the same example. Ordered boosting reads each example's gradient from a
//! prefix model that never saw it. Prints train and test logloss of both,
//! then the prefix-model bookkeeping and a short training trace.
//!
//! `cargo run --release --example ordered_boosting`

use oakboost::booster::OrderedApproximations;
use oakboost::metrics::logloss;
use oakboost::{train, train_traced, ColumnLayout, Dataset, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = ColumnLayout::parse("0\tLabel\n1\tNum\n2\tNum\n3\tCateg\n").unwrap();
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c: Vec<String> = (0..n).map(|_| format!("g{}", rng.gen_range(0..40))).collect();
    let y = (0..n).map(|i| ((x0[i] + 0.5 * x1[i] + rng.gen_range(-1.0..1.0)) > 0.0) as u8 as f64).collect();
    Dataset::new(layout, vec![x0, x1], vec![c], y).unwrap()
}

fn main() -> oakboost::Result<()> {
    let train_set = noisy(800, 1);
    let test_set = noisy(5000, 2);
    for plain in [false, true] {
        let config = TrainConfig { iterations: 400, learning_rate: 0.1, plain, ..Default::default() };
        let model = train(&train_set, &config)?;
        let tr = logloss(train_set.labels(), &model.predict_proba(&train_set)?)?;
        let te = logloss(test_set.labels(), &model.predict_proba(&test_set)?)?;
        println!("{:8} train {tr:.4}  test {te:.4}", if plain { "classic" } else { "ordered" });
    }

    let n = train_set.n_rows();
    let approx = OrderedApproximations::new(n);
    println!("\n{n} examples: {} prefix models, {} stored values per permutation (< 4n = {})",
        approx.n_levels(), approx.stored_values(), 4 * n);

    let config = TrainConfig { iterations: 5, permutations: 2, ..Default::default() };
    let (_, trace) = train_traced(&train_set, &config, false)?;
    for (i, it) in trace.iterations.iter().enumerate() {
        println!("iteration {i}: permutation {}, depth {}, train logloss {:.4}", it.permutation, it.depth, it.train_loss);
    }
    Ok(())
}
