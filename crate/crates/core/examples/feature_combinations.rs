//! Learning a label that is the XOR of two categorical features.
//!
//! Neither feature alone says anything about the label. After the first
//! split, combinations of the categorical features already in the tree with
//! every other categorical feature become candidates, and the combination
//! separates the classes.
//!
//! `cargo run --release --example feature_combinations`

use oakboost::cat_encoder::{enumerate_combinations, CombinationDescriptor};
use oakboost::metrics::logloss;
use oakboost::{train, ColumnLayout, Dataset, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn xor(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = ColumnLayout::parse("0\tCateg\n1\tCateg\n2\tCateg\n3\tLabel\n").unwrap();
    let cols: Vec<Vec<u32>> = (0..3).map(|_| (0..n).map(|_| rng.gen_range(0..8)).collect()).collect();
    let y = (0..n).map(|i| ((cols[0][i] ^ cols[1][i]) & 1) as f64).collect();
    let tokens = cols.iter().map(|c| c.iter().map(|v| format!("v{v}")).collect()).collect();
    Dataset::new(layout, vec![], tokens, y).unwrap()
}

fn main() -> oakboost::Result<()> {
    let present = [CombinationDescriptor::single(0)];
    println!("candidates once feature 0 is in the tree:");
    for c in enumerate_combinations(&present, &[0, 1, 2], 4) {
        println!("  {:?}", c.cat_parts());
    }

    let train_set = xor(2000, 1);
    let test_set = xor(2000, 2);
    for max_ctr_complexity in [1, 4] {
        let config = TrainConfig { iterations: 200, learning_rate: 0.3, max_ctr_complexity, ..Default::default() };
        let model = train(&train_set, &config)?;
        let ll = logloss(test_set.labels(), &model.predict_proba(&test_set)?)?;
        let combos = model.ctrs.iter().filter(|c| c.descriptor.part_count() > 1).count();
        println!("max complexity {max_ctr_complexity}: test logloss {ll:.4}, combinations in model {combos}");
    }
    Ok(())
}
