//! Why target statistics are computed along a permutation.
//!
//! A categorical feature with one fresh category per row carries no signal.
//! Encoding it with the mean label of its own category (including the row
//! itself) makes it look perfect on training data. The ordered statistic
//! only uses rows earlier in the permutation, so it stays at the prior.
//!
//! `cargo run --release --example ordered_target_statistics`

use oakboost::cat_encoder::{ordered_target_statistic, CategoryDictionary, TsConfig};
use oakboost::data::generate_permutations;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> oakboost::Result<()> {
    let n = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tokens: Vec<String> = (0..n).map(|i| format!("user{i}")).collect();
    let labels: Vec<f64> = (0..n).map(|_| rng.gen_bool(0.3) as u8 as f64).collect();
    let ids = CategoryDictionary::fit(&tokens).encode(&tokens);
    let cfg = TsConfig::new(vec![0.5], 1.0)?;

    // leaky: smoothed mean label of the category over all rows
    let leaky: Vec<f64> = labels.iter().map(|&y| (y + 0.5) / 2.0).collect();
    let perm = generate_permutations(n, 1, 0)?.permutations.remove(0);
    let ordered = ordered_target_statistic(&ids, &labels, &perm, &cfg, 0)?;

    let separation = |values: &[f64]| {
        let mean = |cls: f64| {
            let v: Vec<f64> = values.iter().zip(&labels).filter(|(_, &y)| y == cls).map(|(&x, _)| x).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        mean(1.0) - mean(0.0)
    };
    println!("mean(value | y=1) - mean(value | y=0)");
    println!("  leaky encoding:   {:.3}", separation(&leaky));
    println!("  ordered encoding: {:.3}", separation(&ordered));

    // a repeated category: each value only sees earlier rows
    let ids = [0u32, 0, 0, 0, 1, 0];
    let labels = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    let perm = oakboost::data::Permutation::identity(ids.len());
    let ts = ordered_target_statistic(&ids, &labels, &perm, &cfg, 0)?;
    println!("\nids    {ids:?}\nlabels {labels:?}\nTS     {ts:?}");
    Ok(())
}
