//! `fit`, `predict` and `eval` subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::booster::{train_with_progress, Loss, TrainConfig};
use crate::data::load_dataset;
use crate::error::{Error, Result};
use crate::metrics;
use crate::scorer::{load_model, save_model};

#[derive(Debug, Parser)]
#[command(name = "oakboost", version, about = "Gradient boosting on oblivious trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it to --model-out.
    Fit(FitArgs),
    /// Write raw scores (and probabilities for Logloss) as TSV.
    Predict(PredictArgs),
    /// Print metrics of a model on a labeled dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub learn: PathBuf,
    #[arg(long)]
    pub cd: PathBuf,
    #[arg(long)]
    pub model_out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.03)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, default_value_t = 4)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "Logloss")]
    pub loss: Loss,
    #[arg(long, default_value_t = 2)]
    pub one_hot_max_size: usize,
    #[arg(long, default_value_t = 4)]
    pub max_ctr_complexity: usize,
    /// Bins per numeric feature.
    #[arg(long, default_value_t = 128)]
    pub bins: usize,
    /// Bins per categorical statistic.
    #[arg(long, default_value_t = 15)]
    pub ctr_bins: usize,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Classic boosting without ordered approximations.
    #[arg(long)]
    pub plain: bool,
    /// Suppress the per-iteration loss log.
    #[arg(long)]
    pub quiet: bool,
}

impl FitArgs {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            depth: self.depth,
            permutations: self.permutations,
            seed: self.seed,
            loss: self.loss,
            one_hot_max_size: self.one_hot_max_size,
            max_ctr_complexity: self.max_ctr_complexity,
            border_count: self.bins,
            ctr_border_count: self.ctr_bins,
            plain: self.plain,
            packed: true,
        }
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub cd: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub cd: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn fit(args: &FitArgs) -> Result<()> {
    set_threads(args.threads)?;
    let config = args.train_config();
    config.validate()?;
    let data = load_dataset(&args.learn, &args.cd)?;
    let stdout = std::io::stdout();
    let mut log = stdout.lock();
    let quiet = args.quiet;
    let model = train_with_progress(&data, &config, |iteration, loss| {
        if !quiet {
            let _ = writeln!(log, "{iteration}\t{loss}");
        }
    })?;
    save_model(&model, &args.model_out)
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    set_threads(args.threads)?;
    let model = load_model(&args.model)?;
    let data = load_dataset(&args.input, &args.cd)?;
    let scores = model.predict(&data)?;
    let mut out = create(&args.output)?;
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for &s in &scores {
            match model.loss {
                Loss::Logloss => writeln!(out, "{s}\t{}", metrics::sigmoid(s))?,
                Loss::Rmse => writeln!(out, "{s}")?,
            }
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(&args.output, e))
}

/// Metric lines printed by `eval`.
pub fn evaluate(args: &EvalArgs) -> Result<Vec<(&'static str, f64)>> {
    set_threads(args.threads)?;
    let model = load_model(&args.model)?;
    let data = load_dataset(&args.input, &args.cd)?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyInput);
    }
    let scores = model.predict(&data)?;
    Ok(match model.loss {
        Loss::Logloss => {
            let p: Vec<f64> = scores.iter().map(|&s| metrics::sigmoid(s)).collect();
            vec![("logloss", metrics::logloss(data.labels(), &p)?)]
        }
        Loss::Rmse => vec![("rmse", metrics::rmse(data.labels(), &scores)?)],
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => fit(&args),
        Command::Predict(args) => predict(&args),
        Command::Eval(args) => {
            for (name, value) in evaluate(&args)? {
                println!("{name}\t{value}");
            }
            Ok(())
        }
    }
}
