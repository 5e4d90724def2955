//! L2-regularized (optionally weighted) logistic regression.
//!
//! Used twice: to estimate the noisy posterior `P(noisy Y = +1 | x)` and as
//! the final classifier trained on distilled examples. Inputs are raw
//! feature rows; the intercept is handled internally as weight 0 and is not
//! penalized.

use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledSample};
use crate::error::{Error, Result};
use crate::math::{affine, sigmoid, softplus};

/// Probabilities are clamped to `[PROBA_FLOOR, 1 - PROBA_FLOOR]`.
pub const PROBA_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub l2: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Largest step tried by the line search.
    pub init_step: f64,
    pub shrink: f64,
    /// Armijo constant.
    pub sufficient_decrease: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iters: 5000,
            grad_tol: 1e-6,
            init_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 > 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!(
                "l2 must be positive (zero lets one-class samples diverge), got {}",
                self.l2
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Config(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if !(self.init_step > 0.0) {
            return Err(Error::Config("init_step must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config("shrink must lie in (0, 1)".into()));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return Err(Error::Config("sufficient_decrease must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Intercept first, then one weight per feature.
    pub weights: Vec<f64>,
    pub l2: f64,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

impl LinearModel {
    pub fn from_weights(weights: Vec<f64>) -> Self {
        Self { weights, l2: 0.0, converged: true, iterations: 0, objective: f64::NAN }
    }

    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.dim(), found: x.len() })
        }
    }

    /// `theta . [1, x]`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(affine(&self.weights, x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.score(x)?).clamp(PROBA_FLOOR, 1.0 - PROBA_FLOOR))
    }

    /// Sign of the score; a score of exactly zero is `+1`.
    pub fn classify(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_score(self.score(x)?))
    }

    /// `predict_proba` over every row of a sample.
    pub fn predict_proba_all(&self, sample: &LabeledSample) -> Result<Vec<f64>> {
        sample.features().iter().map(|x| self.predict_proba(x)).collect()
    }

    pub fn negated(&self) -> Self {
        Self { weights: self.weights.iter().map(|w| -w).collect(), ..self.clone() }
    }
}

/// `(1/n) sum_i w_i log(1 + exp(-y_i theta.[1, x_i])) + (l2/2) |theta[1..]|^2`.
pub struct LogisticObjective<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [Label],
    example_weights: Option<&'a [f64]>,
    l2: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(sample: &'a LabeledSample, example_weights: Option<&'a [f64]>, l2: f64) -> Self {
        Self { features: sample.features(), labels: sample.labels(), example_weights, l2 }
    }

    fn weight(&self, i: usize) -> f64 {
        self.example_weights.map_or(1.0, |w| w[i])
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let n = self.labels.len() as f64;
        let loss: f64 = self
            .features
            .iter()
            .zip(self.labels)
            .enumerate()
            .map(|(i, (x, y))| self.weight(i) * softplus(-y.sign() * affine(theta, x)))
            .sum();
        loss / n + 0.5 * self.l2 * theta[1..].iter().map(|t| t * t).sum::<f64>()
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.labels.len() as f64;
        let mut grad = vec![0.0; theta.len()];
        for (i, (x, y)) in self.features.iter().zip(self.labels).enumerate() {
            let s = y.sign();
            // d/dz softplus(-s z) = -s sigmoid(-s z)
            let coef = -s * sigmoid(-s * affine(theta, x)) * self.weight(i) / n;
            grad[0] += coef;
            for (g, v) in grad[1..].iter_mut().zip(x) {
                *g += coef * v;
            }
        }
        for (g, t) in grad[1..].iter_mut().zip(&theta[1..]) {
            *g += self.l2 * t;
        }
        grad
    }
}

fn validate_inputs(
    sample: &LabeledSample,
    example_weights: Option<&[f64]>,
    cfg: &FitConfig,
) -> Result<()> {
    cfg.validate()?;
    if sample.is_empty() {
        return Err(Error::Empty("cannot fit on an empty sample"));
    }
    if let Some(w) = example_weights {
        if w.len() != sample.len() {
            return Err(Error::Parameter(format!(
                "{} example weights for {} examples",
                w.len(),
                sample.len()
            )));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter("example weights must be finite and >= 0".into()));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Parameter("example weights must have a positive sum".into()));
        }
    }
    Ok(())
}

/// Fits by gradient descent with backtracking line search from `theta = 0`.
pub fn fit(
    sample: &LabeledSample,
    example_weights: Option<&[f64]>,
    cfg: &FitConfig,
) -> Result<LinearModel> {
    fit_traced(sample, example_weights, cfg).map(|(model, _)| model)
}

/// Like [`fit`], also returning the objective after every accepted step
/// (the first entry is the objective at the start point).
pub fn fit_traced(
    sample: &LabeledSample,
    example_weights: Option<&[f64]>,
    cfg: &FitConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    validate_inputs(sample, example_weights, cfg)?;
    let objective = LogisticObjective::new(sample, example_weights, cfg.l2);

    let mut theta = vec![0.0; sample.dim() + 1];
    let mut value = objective.value(&theta);
    let mut trace = vec![value];
    let mut step = cfg.init_step;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        let grad = objective.gradient(&theta);
        let grad_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_inf <= cfg.grad_tol {
            converged = true;
            break;
        }
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();

        // Warm-started backtracking: try twice the last accepted step first.
        step = (2.0 * step).min(cfg.init_step);
        let accepted = loop {
            let candidate: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let cand_value = objective.value(&candidate);
            if cand_value <= value - cfg.sufficient_decrease * step * grad_sq {
                break Some((candidate, cand_value));
            }
            step *= cfg.shrink;
            if step < f64::EPSILON * 1e-4 {
                break None;
            }
        };
        match accepted {
            Some((candidate, cand_value)) => {
                theta = candidate;
                value = cand_value;
                trace.push(value);
                iterations += 1;
            }
            // No representable decrease left.
            None => break,
        }
    }

    let model = LinearModel { weights: theta, l2: cfg.l2, converged, iterations, objective: value };
    Ok((model, trace))
}
