//! Randomized checks of the guarantees the pipeline relies on, evaluated
//! with closed-form posteriors rather than estimates.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledSample, SampleKind};
use crate::distill::{self, PointBounds};
use crate::error::{Error, Result};
use crate::rng;
use crate::synthetic::{GaussianPair, NoiseModel};

/// Tolerance on the pointwise flip-rate bounds.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub checks: usize,
    pub violations: usize,
    pub detail: String,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Random bounds in `[0, 1)` and a model valid on `probes`; redraws the
/// bounds if the weight resampling cap is hit.
fn random_model<R: Rng>(rng: &mut R, probes: &[Vec<f64>], dim: usize) -> Result<NoiseModel> {
    for _ in 0..100 {
        let pos: f64 = rng.random();
        let neg: f64 = rng.random();
        match NoiseModel::sample(pos, neg, dim, probes, rng.random()) {
            Ok(m) => return Ok(m),
            Err(Error::InfeasibleNoise { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InfeasibleNoise { attempts: 100 })
}

/// Ten fixed points spread across the decision boundary of `spec`.
fn toy_points<R: Rng>(rng: &mut R) -> Vec<Vec<f64>> {
    (0..10)
        .map(|_| {
            (0..2)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    0.5 * z
                })
                .collect()
        })
        .collect()
}

/// Collection with the analytic noisy posterior, under both the global
/// bounds and the true per-point rates, must never contradict the Bayes
/// label.
pub fn distillation_soundness(seed: u64, models: usize) -> Result<SuiteOutcome> {
    let spec = GaussianPair::default();
    let mut rng = rng::stream(seed, rng::PROBES);
    let points = toy_points(&mut rng);
    let toy = LabeledSample::new(points.clone(), vec![Label::Positive; 10], SampleKind::Noisy)?;
    let bayes: Vec<Label> = points.iter().map(|x| spec.bayes_label(x)).collect();

    let (mut checks, mut violations, mut collected) = (0, 0, 0);
    for _ in 0..models {
        let model = random_model(&mut rng, &points, 2)?;
        let eta: Vec<f64> = points.iter().map(|x| spec.noisy_posterior(&model, x)).collect();
        let global = distill::collect_with_bounds(&toy, &eta, model.rho_pos_max, model.rho_neg_max)?;
        let exact = PointBounds {
            pos: points.iter().map(|x| model.rho_pos(x)).collect(),
            neg: points.iter().map(|x| model.rho_neg(x)).collect(),
        };
        let pointwise = distill::collect_pointwise(&toy, &eta, &exact)?;
        for outcome in [&global, &pointwise] {
            for (&i, &label) in outcome.source_indices.iter().zip(outcome.distilled.labels()) {
                checks += 1;
                if label != bayes[i] {
                    violations += 1;
                }
            }
            collected += outcome.auto_count();
        }
    }
    Ok(SuiteOutcome {
        name: "distillation soundness".into(),
        checks,
        violations,
        detail: format!("{models} noise models, {collected} auto-collected labels checked"),
    })
}

/// `rho_pos(x) <= 1 - noisy_eta(x)` and `rho_neg(x) <= noisy_eta(x)` at
/// every probe point.
pub fn flip_rate_bounds(seed: u64, models: usize, probes_per_model: usize) -> Result<SuiteOutcome> {
    let spec = GaussianPair::default();
    let mut rng = rng::stream(seed, rng::PROBES);
    let (mut checks, mut violations) = (0, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..models {
        let probes = spec.sample_from(&mut rng, probes_per_model).features().to_vec();
        let model = random_model(&mut rng, &probes, 2)?;
        for x in &probes {
            let eta = spec.noisy_posterior(&model, x);
            for gap in [model.rho_pos(x) - (1.0 - eta), model.rho_neg(x) - eta] {
                checks += 1;
                worst = worst.max(gap);
                if gap > BOUND_SLACK {
                    violations += 1;
                }
            }
        }
    }
    Ok(SuiteOutcome {
        name: "flip-rate bounds".into(),
        checks,
        violations,
        detail: format!("largest rate minus bound {worst:.3e}"),
    })
}

/// Empirical frequency of noisy `+1` labels at fixed points against the
/// mixing identity, with a 3 standard error band.
pub fn mixing_identity(seed: u64, points: usize, draws: usize) -> Result<SuiteOutcome> {
    let spec = GaussianPair::default();
    let mut rng = rng::stream(seed, rng::PROBES);
    let mut violations = 0;
    let mut worst_z = 0.0f64;
    for p in 0..points {
        let x: Vec<f64> = (0..2)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.6 * z
            })
            .collect();
        let pos_max = rng.random_range(0.0..0.49);
        let neg_max = rng.random_range(0.0..0.49);
        let model = NoiseModel::sample(pos_max, neg_max, 2, &[], rng.random())?;
        let eta = spec.clean_posterior(&x);
        let labels = (0..draws)
            .map(|_| if rng.random_bool(eta) { Label::Positive } else { Label::Negative })
            .collect();
        let clean = LabeledSample::new(vec![x.clone(); draws], labels, SampleKind::Clean)?;
        let noisy = model.corrupt(&clean, seed.wrapping_add(p as u64))?;
        let freq = noisy.labels().iter().filter(|y| **y == Label::Positive).count() as f64
            / draws as f64;
        let expect = spec.noisy_posterior(&model, &x);
        let se = (expect * (1.0 - expect) / draws as f64).sqrt();
        let z = if se > 0.0 { (freq - expect).abs() / se } else { 0.0 };
        worst_z = worst_z.max(z);
        if (freq - expect).abs() > 3.0 * se {
            violations += 1;
        }
    }
    Ok(SuiteOutcome {
        name: "mixing identity".into(),
        checks: points,
        violations,
        detail: format!("{draws} draws per point, largest |z| {worst_z:.2}"),
    })
}

/// Runs all suites with the given number of random noise models.
pub fn run_all(seed: u64, models: usize, mc_draws: usize) -> Result<Vec<SuiteOutcome>> {
    if models == 0 || mc_draws == 0 {
        return Err(Error::Config("draws and mc_draws must be at least 1".into()));
    }
    Ok(vec![
        distillation_soundness(seed, models)?,
        flip_rate_bounds(seed, models, 100)?,
        mixing_identity(seed, 20, mc_draws)?,
    ])
}
