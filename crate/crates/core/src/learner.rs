//! Importance-weighted training on distilled examples and 0-1 evaluation.

use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::kmm::ImportanceWeights;
use crate::logistic::{self, FitConfig, LinearModel};

/// Weighted logistic fit with `beta` rescaled to mean one.
pub fn train_weighted(
    distilled: &LabeledSample,
    beta: &ImportanceWeights,
    cfg: &FitConfig,
) -> Result<LinearModel> {
    if beta.beta.len() != distilled.len() {
        return Err(Error::Parameter(format!(
            "{} importance weights for {} examples",
            beta.beta.len(),
            distilled.len()
        )));
    }
    if beta.beta.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Degenerate("importance weights sum to zero".into()));
    }
    logistic::fit(distilled, Some(&beta.normalized()), cfg)
}

/// Fraction of `test` misclassified by `model`.
pub fn zero_one_risk(model: &LinearModel, test: &LabeledSample) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty("cannot evaluate on an empty test sample"));
    }
    let mut wrong = 0usize;
    for (x, y) in test.features().iter().zip(test.labels()) {
        if model.classify(x)? != *y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / test.len() as f64)
}

pub fn accuracy(model: &LinearModel, test: &LabeledSample) -> Result<f64> {
    zero_one_risk(model, test).map(|r| 1.0 - r)
}
