//! Collecting distilled examples (examples whose label matches the clean
//! Bayes classifier) out of a noisy sample.
//!
//! An example at `x` is kept with label `+1` when the estimated noisy
//! posterior exceeds `(1 + ub_neg(x)) / 2` and with label `-1` when it falls
//! below `(1 - ub_pos(x)) / 2`, where `ub_pos`, `ub_neg` upper-bound the flip
//! rates of positives and negatives at `x`. The bounds are either the global
//! maxima or neighborhood averages of the estimated posterior. The remaining
//! examples form the pool for random active labeling.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledSample, SampleKind};
use crate::error::{Error, Result};
use crate::neighbors;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    AutoPos,
    AutoNeg,
    Active,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillOutcome {
    pub distilled: LabeledSample,
    /// Row of the noisy sample each distilled example came from.
    pub source_indices: Vec<usize>,
    pub provenance: Vec<Provenance>,
    /// Noisy rows not auto-collected; active labels are drawn from here.
    pub remaining_indices: Vec<usize>,
}

impl DistillOutcome {
    pub fn auto_count(&self) -> usize {
        self.provenance.iter().filter(|p| **p != Provenance::Active).count()
    }

    pub fn active_count(&self) -> usize {
        self.provenance.len() - self.auto_count()
    }

    /// Appends actively labeled examples. Every index must come from the
    /// remaining pool.
    pub fn add_active(&mut self, noisy: &LabeledSample, labeled: &[(usize, Label)]) -> Result<()> {
        if let Some((index, _)) =
            labeled.iter().find(|(i, _)| self.remaining_indices.binary_search(i).is_err())
        {
            return Err(Error::Parameter(format!("index {index} is not in the remaining pool")));
        }
        for &(index, label) in labeled {
            self.distilled.push(noisy.features()[index].clone(), label);
            self.source_indices.push(index);
            self.provenance.push(Provenance::Active);
        }
        Ok(())
    }
}

/// Per-example flip-rate upper bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointBounds {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

/// Which neighborhood average bounds which flip rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsReading {
    /// `ub_pos = mean(1 - eta)`, `ub_neg = mean(eta)`; consistent with the
    /// pointwise bounds `rho_pos <= 1 - eta`, `rho_neg <= eta`.
    #[default]
    Pointwise,
    /// The transposed assignment `ub_pos = mean(eta)`, `ub_neg = mean(1 - eta)`.
    Transposed,
}

fn check_posteriors(noisy: &LabeledSample, eta_hat: &[f64]) -> Result<()> {
    if eta_hat.len() != noisy.len() {
        return Err(Error::Parameter(format!(
            "{} posterior estimates for {} examples",
            eta_hat.len(),
            noisy.len()
        )));
    }
    if eta_hat.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Parameter("posterior estimates must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Collects with one upper bound per example (strict inequalities).
pub fn collect_pointwise(
    noisy: &LabeledSample,
    eta_hat: &[f64],
    bounds: &PointBounds,
) -> Result<DistillOutcome> {
    check_posteriors(noisy, eta_hat)?;
    if bounds.pos.len() != noisy.len() || bounds.neg.len() != noisy.len() {
        return Err(Error::Parameter("one bound pair per example required".into()));
    }
    let mut distilled = LabeledSample::empty(noisy.dim(), SampleKind::Distilled);
    let mut source_indices = Vec::new();
    let mut provenance = Vec::new();
    let mut remaining_indices = Vec::new();
    for (i, &eta) in eta_hat.iter().enumerate() {
        let (label, tag) = if eta > (1.0 + bounds.neg[i]) / 2.0 {
            (Label::Positive, Provenance::AutoPos)
        } else if eta < (1.0 - bounds.pos[i]) / 2.0 {
            (Label::Negative, Provenance::AutoNeg)
        } else {
            remaining_indices.push(i);
            continue;
        };
        distilled.push(noisy.features()[i].clone(), label);
        source_indices.push(i);
        provenance.push(tag);
    }
    Ok(DistillOutcome { distilled, source_indices, provenance, remaining_indices })
}

/// Collects with the global bounds `rho_pos_max`, `rho_neg_max`.
pub fn collect_with_bounds(
    noisy: &LabeledSample,
    eta_hat: &[f64],
    rho_pos_max: f64,
    rho_neg_max: f64,
) -> Result<DistillOutcome> {
    for (name, v) in [("rho_pos_max", rho_pos_max), ("rho_neg_max", rho_neg_max)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::Parameter(format!("{name} must lie in [0, 1), got {v}")));
        }
    }
    let n = noisy.len();
    let bounds = PointBounds { pos: vec![rho_pos_max; n], neg: vec![rho_neg_max; n] };
    collect_pointwise(noisy, eta_hat, &bounds)
}

/// Approximate bounds from the `k` nearest neighbors (self included) of
/// each example.
pub fn knn_bounds(
    noisy: &LabeledSample,
    eta_hat: &[f64],
    k: usize,
    reading: BoundsReading,
) -> Result<PointBounds> {
    check_posteriors(noisy, eta_hat)?;
    let hoods = neighbors::neighborhoods(noisy.features(), k)?;
    let mut pos = Vec::with_capacity(hoods.len());
    let mut neg = Vec::with_capacity(hoods.len());
    for hood in hoods {
        let mean_eta = hood.iter().map(|&j| eta_hat[j]).sum::<f64>() / k as f64;
        let mean_eta = mean_eta.clamp(0.0, 1.0);
        let (p, q) = match reading {
            BoundsReading::Pointwise => (1.0 - mean_eta, mean_eta),
            BoundsReading::Transposed => (mean_eta, 1.0 - mean_eta),
        };
        pos.push(p);
        neg.push(q);
    }
    Ok(PointBounds { pos, neg })
}

pub fn collect_knn(
    noisy: &LabeledSample,
    eta_hat: &[f64],
    k: usize,
    reading: BoundsReading,
) -> Result<DistillOutcome> {
    let bounds = knn_bounds(noisy, eta_hat, k, reading)?;
    collect_pointwise(noisy, eta_hat, &bounds)
}

/// Source of clean labels for active queries, counting every query.
#[derive(Debug)]
pub struct Oracle {
    labels: Vec<Label>,
    queries: AtomicUsize,
}

impl Oracle {
    pub fn new(labels: Vec<Label>) -> Self {
        Self { labels, queries: AtomicUsize::new(0) }
    }

    pub fn query(&self, index: usize) -> Result<Label> {
        let label = *self
            .labels
            .get(index)
            .ok_or_else(|| Error::Parameter(format!("oracle has no label for index {index}")))?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(label)
    }

    pub fn queries(&self) -> usize {
        self.queries.load(Ordering::Relaxed)
    }
}

/// Picks `n_act` indices uniformly without replacement from `remaining`
/// and asks the oracle for their labels.
pub fn active_label(
    remaining: &[usize],
    n_act: usize,
    oracle: &Oracle,
    seed: u64,
) -> Result<Vec<(usize, Label)>> {
    if n_act > remaining.len() {
        return Err(Error::Parameter(format!(
            "cannot actively label {n_act} of {} remaining examples",
            remaining.len()
        )));
    }
    let mut rng = rng::stream(seed, rng::ACTIVE);
    rand::seq::index::sample(&mut rng, remaining.len(), n_act)
        .into_iter()
        .map(|pos| {
            let index = remaining[pos];
            oracle.query(index).map(|label| (index, label))
        })
        .collect()
}
