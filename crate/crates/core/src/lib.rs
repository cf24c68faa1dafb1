//! Gradient boosting on oblivious decision trees, with ordered target
//! statistics for categorical features and ordered boosting.
//!
//! ```no_run
//! use oakboost::{load_dataset, train, TrainConfig};
//!
//! let data = load_dataset("train.tsv", "train.cd")?;
//! let model = train(&data, &TrainConfig { iterations: 200, ..Default::default() })?;
//! let probabilities = model.predict_proba(&data)?;
//! oakboost::save_model(&model, "model.oakb")?;
//! # Ok::<(), oakboost::Error>(())
//! ```

pub mod booster;
pub mod cat_encoder;
pub mod cli;
pub mod data;
pub mod error;
pub mod metrics;
pub mod quantization;
pub mod scorer;
pub mod tree;

pub use booster::{train, train_traced, train_with_progress, Loss, TrainConfig};
pub use data::{load_dataset, ColumnKind, ColumnLayout, Dataset};
pub use error::{Error, Result};
pub use scorer::{load_model, save_model, Ensemble};
