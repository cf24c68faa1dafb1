//! Training and scoring throughput. Numbers depend on the machine.
//!
//! `cargo run --release --example benchmark -- [rows] [trees]`

use std::time::Instant;

use oakboost::{train, ColumnLayout, Dataset, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = ColumnLayout::parse("0\tLabel\n1\tNum\n2\tNum\n3\tNum\n4\tCateg\n5\tCateg\n").unwrap();
    let nums: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let cats: Vec<Vec<String>> = [50, 8]
        .iter()
        .map(|&k| (0..n).map(|_| format!("v{}", rng.gen_range(0..k))).collect())
        .collect();
    let y = (0..n)
        .map(|i| (nums[0][i] + nums[1][i] * nums[2][i] + rng.gen_range(-0.5..0.5) > 0.0) as u8 as f64)
        .collect();
    Dataset::new(layout, nums, cats, y).unwrap()
}

fn main() -> oakboost::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("numeric argument"));
    let rows = args.next().unwrap_or(50_000);
    let trees = args.next().unwrap_or(100);
    let data = table(rows, 1);
    println!("threads: {}", rayon::current_num_threads());

    for plain in [false, true] {
        let config = TrainConfig { iterations: trees, plain, ..Default::default() };
        let start = Instant::now();
        let model = train(&data, &config)?;
        let fit = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let scores = model.predict(&data)?;
        let score = start.elapsed().as_secs_f64();
        println!(
            "{:8} {rows} rows: {:.1} trees/s training, {:.0} rows/s scoring",
            if plain { "classic" } else { "ordered" },
            trees as f64 / fit,
            scores.len() as f64 / score
        );
    }
    Ok(())
}
