//! Two-Gaussian clean distribution, the random sigmoid-modulated noise
//! process, and the closed-form clean and noisy posteriors.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledSample, SampleKind};
use crate::error::{Error, Result};
use crate::math::{affine, dot, logit, sigmoid};
use crate::rng;

/// Resample cap when the sum condition `rho_pos + rho_neg < 1` has to be
/// enforced on probe points.
pub const MAX_NOISE_DRAWS: usize = 1000;

/// Number of probe points used for the sum-condition check.
pub const PROBE_COUNT: usize = 10_000;

/// Positives from `N(u, I)`, negatives from `N(-u, I)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPair {
    pub offset: Vec<f64>,
    pub prior_pos: f64,
}

impl Default for GaussianPair {
    fn default() -> Self {
        Self { offset: vec![-2.0, 2.0], prior_pos: 0.5 }
    }
}

impl GaussianPair {
    pub fn new(offset: Vec<f64>, prior_pos: f64) -> Result<Self> {
        let spec = Self { offset, prior_pos };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior_pos > 0.0 && self.prior_pos < 1.0) {
            return Err(Error::Parameter(format!(
                "prior_pos must lie in (0, 1), got {}",
                self.prior_pos
            )));
        }
        if self.offset.is_empty() || self.offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("offset must be a non-empty finite vector".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn sample_clean(&self, n: usize, seed: u64) -> LabeledSample {
        self.sample_from(&mut rng::stream(seed, rng::CLEAN_TRAIN), n)
    }

    /// Draws from an explicit RNG; used when several independent clean
    /// samples come out of one seed.
    pub fn sample_from<R: Rng>(&self, rng: &mut R, n: usize) -> LabeledSample {
        let mut out = LabeledSample::empty(self.dim(), SampleKind::Clean);
        for _ in 0..n {
            let label =
                if rng.random_bool(self.prior_pos) { Label::Positive } else { Label::Negative };
            let s = label.sign();
            let x = self
                .offset
                .iter()
                .map(|u| {
                    let z: f64 = StandardNormal.sample(rng);
                    s * u + z
                })
                .collect();
            out.push(x, label);
        }
        out
    }

    /// `P(Y = +1 | x) = sigmoid(2 u.x + logit(prior))`.
    pub fn clean_posterior(&self, x: &[f64]) -> f64 {
        sigmoid(2.0 * dot(&self.offset, x) + logit(self.prior_pos))
    }

    /// Label of the Bayes classifier `sgn(eta - 1/2)`, ties to `+1`.
    pub fn bayes_label(&self, x: &[f64]) -> Label {
        Label::from_score(self.clean_posterior(x) - 0.5)
    }

    /// `P(noisy Y = +1 | x)` under `noise`.
    pub fn noisy_posterior(&self, noise: &NoiseModel, x: &[f64]) -> f64 {
        mix_posterior(self.clean_posterior(x), noise.rho_pos(x), noise.rho_neg(x))
    }

    /// [`PROBE_COUNT`] clean draws for noise-model validation.
    pub fn probe_points(&self, seed: u64) -> Vec<Vec<f64>> {
        let sample = self.sample_from(&mut rng::stream(seed, rng::PROBES), PROBE_COUNT);
        sample.features().to_vec()
    }
}

/// Law of total probability for the observed label:
/// `(1 - rho_pos) eta + rho_neg (1 - eta)`.
pub fn mix_posterior(eta: f64, rho_pos: f64, rho_neg: f64) -> f64 {
    ((1.0 - rho_pos) * eta + rho_neg * (1.0 - eta)).clamp(0.0, 1.0)
}

/// Instance-dependent flip rates `rho_y(x) = rho_y_max * sigmoid(w_y . [1, x])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub rho_pos_max: f64,
    pub rho_neg_max: f64,
    pub w_pos: Vec<f64>,
    pub w_neg: Vec<f64>,
    /// Weight draws consumed, including rejected ones.
    pub draws: usize,
}

fn check_bound(name: &str, value: f64) -> Result<()> {
    if (0.0..1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must lie in [0, 1), got {value}")))
    }
}

impl NoiseModel {
    /// True when the per-point bounds alone do not imply the sum condition.
    pub fn needs_probe_check(rho_pos_max: f64, rho_neg_max: f64) -> bool {
        rho_pos_max + rho_neg_max >= 1.0
    }

    /// Builds a model from explicit weights (intercept first).
    pub fn from_weights(
        rho_pos_max: f64,
        rho_neg_max: f64,
        w_pos: Vec<f64>,
        w_neg: Vec<f64>,
    ) -> Result<Self> {
        check_bound("rho_pos_max", rho_pos_max)?;
        check_bound("rho_neg_max", rho_neg_max)?;
        if w_pos.len() != w_neg.len() || w_pos.is_empty() {
            return Err(Error::Dimension { expected: w_pos.len(), found: w_neg.len() });
        }
        Ok(Self { rho_pos_max, rho_neg_max, w_pos, w_neg, draws: 1 })
    }

    /// Draws `w_pos`, `w_neg` i.i.d. standard normal of length `dim + 1`.
    ///
    /// When `rho_pos_max + rho_neg_max >= 1` the model is redrawn until the
    /// sum condition holds at every point of `probes`; `probes` must then be
    /// non-empty.
    pub fn sample(
        rho_pos_max: f64,
        rho_neg_max: f64,
        dim: usize,
        probes: &[Vec<f64>],
        seed: u64,
    ) -> Result<Self> {
        check_bound("rho_pos_max", rho_pos_max)?;
        check_bound("rho_neg_max", rho_neg_max)?;
        let check = Self::needs_probe_check(rho_pos_max, rho_neg_max);
        if check && probes.is_empty() {
            return Err(Error::Parameter(
                "bounds sum to >= 1; probe points are required to validate the noise model".into(),
            ));
        }
        let mut rng = rng::stream(seed, rng::NOISE_MODEL);
        for draws in 1..=MAX_NOISE_DRAWS {
            let mut draw = || -> Vec<f64> {
                (0..=dim).map(|_| StandardNormal.sample(&mut rng)).collect()
            };
            let w_pos = draw();
            let w_neg = draw();
            let model = Self { rho_pos_max, rho_neg_max, w_pos, w_neg, draws };
            if !check || model.satisfies_sum_condition(probes) {
                return Ok(model);
            }
        }
        Err(Error::InfeasibleNoise { attempts: MAX_NOISE_DRAWS })
    }

    pub fn dim(&self) -> usize {
        self.w_pos.len() - 1
    }

    pub fn rho_pos(&self, x: &[f64]) -> f64 {
        self.rho_pos_max * sigmoid(affine(&self.w_pos, x))
    }

    pub fn rho_neg(&self, x: &[f64]) -> f64 {
        self.rho_neg_max * sigmoid(affine(&self.w_neg, x))
    }

    /// Flip probability of an example whose clean label is `label`.
    pub fn flip_rate(&self, label: Label, x: &[f64]) -> f64 {
        match label {
            Label::Positive => self.rho_pos(x),
            Label::Negative => self.rho_neg(x),
        }
    }

    pub fn satisfies_sum_condition(&self, points: &[Vec<f64>]) -> bool {
        points.iter().all(|x| self.rho_pos(x) + self.rho_neg(x) < 1.0)
    }

    /// Flips each clean label independently with probability `rho_y(x)`.
    /// Features are copied untouched.
    pub fn corrupt(&self, sample: &LabeledSample, seed: u64) -> Result<LabeledSample> {
        if sample.kind() != SampleKind::Clean {
            return Err(Error::Parameter("only clean samples can be corrupted".into()));
        }
        if !sample.is_empty() && sample.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: sample.dim() });
        }
        let mut rng = rng::stream(seed, rng::CORRUPT);
        let labels = sample
            .features()
            .iter()
            .zip(sample.labels())
            .map(|(x, &y)| {
                let u: f64 = rng.random();
                if u < self.flip_rate(y, x) {
                    y.flipped()
                } else {
                    y
                }
            })
            .collect();
        sample.relabeled(labels, SampleKind::Noisy)
    }
}
