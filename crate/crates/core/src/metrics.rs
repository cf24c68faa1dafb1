//! Evaluation metrics.

use crate::error::{Error, Result};

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const LOGLOSS_EPS: f64 = 1e-15;

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

fn check(labels: &[f64], values: &[f64]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    if labels.len() != values.len() {
        return Err(Error::LengthMismatch(format!(
            "{} labels vs {} predictions",
            labels.len(),
            values.len()
        )));
    }
    Ok(())
}

/// Mean binary cross-entropy of probabilities `p`.
pub fn logloss(labels: &[f64], p: &[f64]) -> Result<f64> {
    check(labels, p)?;
    let sum: f64 = labels
        .iter()
        .zip(p)
        .map(|(&y, &p)| {
            let p = p.clamp(LOGLOSS_EPS, 1.0 - LOGLOSS_EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(sum / labels.len() as f64)
}

pub fn rmse(labels: &[f64], predictions: &[f64]) -> Result<f64> {
    check(labels, predictions)?;
    let sum: f64 = labels.iter().zip(predictions).map(|(&y, &a)| (y - a) * (y - a)).sum();
    Ok((sum / labels.len() as f64).sqrt())
}

/// Logloss of always predicting the empirical positive rate.
pub fn constant_baseline_logloss(labels: &[f64]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rate = labels.iter().sum::<f64>() / labels.len() as f64;
    logloss(labels, &vec![rate; labels.len()])
}
