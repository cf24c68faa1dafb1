//! Trains with default settings on the Adult census data and reports test
//! logloss next to the constant-predictor baseline.
//!
//! Fetch the data first with `python3 scripts/fetch_adult.py`, then run
//! `cargo run --release --example adult`.

use std::path::PathBuf;
use std::time::Instant;

use oakboost::metrics::{constant_baseline_logloss, logloss};
use oakboost::{data::load_dataset_with_layout, load_dataset, train_with_progress, ColumnLayout, TrainConfig};

fn main() -> oakboost::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/adult"));
    let train_set = load_dataset(dir.join("train.tsv"), dir.join("train.cd"))?;
    let layout = ColumnLayout::load(dir.join("train.cd"))?;
    let test_set = load_dataset_with_layout(dir.join("test.tsv"), layout)?;

    let config = TrainConfig::default();
    let start = Instant::now();
    let model = train_with_progress(&train_set, &config, |i, loss| {
        if i % 100 == 99 {
            eprintln!("iter {:4}  train logloss {loss:.5}  {:.1}s", i + 1, start.elapsed().as_secs_f64());
        }
    })?;
    let p = model.predict_proba(&test_set)?;
    println!("train rows        {}", train_set.n_rows());
    println!("test rows         {}", test_set.n_rows());
    println!("training time     {:.1}s", start.elapsed().as_secs_f64());
    println!("test logloss      {:.6}", logloss(test_set.labels(), &p)?);
    println!("baseline logloss  {:.6}", constant_baseline_logloss(test_set.labels())?);
    Ok(())
}
