//! Binarize once, then index leaves bit by bit.
//!
//! `cargo run --release --example scorer`

use std::time::Instant;

use oakboost::{train, ColumnLayout, Dataset, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = ColumnLayout::parse("0\tLabel\n1\tNum\n2\tNum\n3\tCateg\n").unwrap();
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let c: Vec<String> = (0..n).map(|_| format!("s{}", rng.gen_range(0..12))).collect();
    let y = (0..n).map(|i| ((a[i] * b[i] > 0.25) ^ rng.gen_bool(0.1)) as u8 as f64).collect();
    Dataset::new(layout, vec![a, b], vec![c], y).unwrap()
}

fn main() -> oakboost::Result<()> {
    let model = train(&table(5000, 1), &TrainConfig { iterations: 200, learning_rate: 0.1, ..Default::default() })?;
    let probe = table(200_000, 2);

    let binary = model.binarize_input(&table(3, 3))?;
    let tree = &model.trees[0];
    for x in 0..3 {
        let bits: Vec<u8> = tree.level_features.iter().map(|&f| binary.get(x, f as usize)).collect();
        println!("example {x}: level bits {bits:?} -> leaf {}", tree.leaf_index(&binary, x));
    }

    let start = Instant::now();
    let batched = model.predict(&probe)?;
    let elapsed = start.elapsed().as_secs_f64();
    println!("\n{} rows in {elapsed:.3}s ({:.0} rows/s)", probe.n_rows(), probe.n_rows() as f64 / elapsed);
    for block in [64, 100_000] {
        assert_eq!(model.predict_with_block_size(&probe, block)?, batched);
    }
    for row in (0..probe.n_rows()).step_by(20_000) {
        assert_eq!(model.predict_row(&probe, row)?.to_bits(), batched[row].to_bits());
    }
    println!("block size and single-row evaluation give identical scores");
    Ok(())
}
