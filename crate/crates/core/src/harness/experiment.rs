//! Seeded trials over the full pipeline and its baselines.
//!
//! Trial `t` uses seed `base_seed + t`. Within a trial every method sees the
//! same clean sample, noise realization, noisy labels and active draws, and
//! `noisy_act` relabels exactly the examples that `auto_act` queried.

use rayon::prelude::*;

use super::config::{Dataset, ExperimentConfig, Method, OracleSource};
use super::report::{
    KSweep, KmmAudit, MethodSummary, SelectionAudit, TrialAudit, TrialFailure, TrialReport,
};
use crate::data::{self, Label, LabeledSample, SampleKind, SplitConfig};
use crate::distill::{self, DistillOutcome, Oracle, Provenance};
use crate::error::{Error, Result};
use crate::kmm::{self, KernelSpec};
use crate::learner;
use crate::logistic::{self, LinearModel};
use crate::rng;
use crate::synthetic::{GaussianPair, NoiseModel};

/// Everything a trial's methods share.
#[derive(Clone, Debug)]
pub struct TrialData {
    pub clean_train: LabeledSample,
    pub noisy_train: LabeledSample,
    pub test: LabeledSample,
    /// Label returned for an active query of each training row.
    pub oracle_labels: Vec<Label>,
    pub noise: NoiseModel,
}

/// Data loaded once per experiment.
pub enum DataSource {
    Synthetic { spec: GaussianPair, n_train: usize, n_test: usize },
    Csv { sample: LabeledSample, train_fraction: f64 },
}

impl DataSource {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.dataset {
            Dataset::Synthetic { n_train, n_test, offset, prior_pos } => Ok(DataSource::Synthetic {
                spec: GaussianPair::new(offset.clone(), *prior_pos)?,
                n_train: *n_train,
                n_test: *n_test,
            }),
            Dataset::Csv { path, train_fraction } => {
                let sample = data::load_csv(path)?;
                if sample.len() < 2 {
                    return Err(Error::Config(format!(
                        "{} holds {} rows; need at least 2",
                        path.display(),
                        sample.len()
                    )));
                }
                Ok(DataSource::Csv { sample, train_fraction: *train_fraction })
            }
        }
    }
}

pub fn prepare_trial(cfg: &ExperimentConfig, source: &DataSource, seed: u64) -> Result<TrialData> {
    let (clean_train, test, probes) = match source {
        DataSource::Synthetic { spec, n_train, n_test } => {
            let train = spec.sample_from(&mut rng::stream(seed, rng::CLEAN_TRAIN), *n_train);
            let test = spec.sample_from(&mut rng::stream(seed, rng::CLEAN_TEST), *n_test);
            let probes = if NoiseModel::needs_probe_check(cfg.rho_pos_max, cfg.rho_neg_max) {
                spec.probe_points(seed)
            } else {
                Vec::new()
            };
            (train, test, probes)
        }
        DataSource::Csv { sample, train_fraction } => {
            let (train, test) = data::split(sample, SplitConfig::new(*train_fraction, seed)?)?;
            if test.is_empty() {
                return Err(Error::Degenerate("split left no test examples".into()));
            }
            let (train, mut others, _) = data::standardize(&train, &[&test])?;
            let probes = if NoiseModel::needs_probe_check(cfg.rho_pos_max, cfg.rho_neg_max) {
                train.features().to_vec()
            } else {
                Vec::new()
            };
            (train, others.remove(0), probes)
        }
    };
    let noise =
        NoiseModel::sample(cfg.rho_pos_max, cfg.rho_neg_max, clean_train.dim(), &probes, seed)?;
    let noisy_train = noise.corrupt(&clean_train, seed)?;
    let oracle_labels = match (cfg.oracle, source) {
        (OracleSource::Bayes, DataSource::Synthetic { spec, .. }) => {
            clean_train.features().iter().map(|x| spec.bayes_label(x)).collect()
        }
        _ => clean_train.labels().to_vec(),
    };
    Ok(TrialData { clean_train, noisy_train, test, oracle_labels, noise })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Route {
    /// Known global noise bounds.
    Bounds,
    /// Neighborhood-average bounds.
    Knn,
}

impl Route {
    fn of(method: Method) -> Self {
        if method.uses_knn() {
            Route::Knn
        } else {
            Route::Bounds
        }
    }

    fn slot(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        match self {
            Route::Bounds => "bounds",
            Route::Knn => "knn",
        }
    }
}

#[derive(Clone, Debug)]
struct Selection {
    /// Auto-collected examples only.
    outcome: DistillOutcome,
    /// The active draw, or why it could not be made.
    active: std::result::Result<Vec<(usize, Label)>, String>,
    queries: usize,
}

impl Selection {
    fn active(&self) -> Result<&[(usize, Label)]> {
        self.active.as_deref().map_err(|e| Error::Parameter(e.clone()))
    }
}

/// One trial's data plus the intermediate results its methods share.
pub struct TrialContext<'a> {
    cfg: &'a ExperimentConfig,
    data: TrialData,
    seed: u64,
    eta_hat: Option<Vec<f64>>,
    selections: [Option<Selection>; 2],
    kmm_audits: Vec<KmmAudit>,
}

impl<'a> TrialContext<'a> {
    pub fn new(cfg: &'a ExperimentConfig, data: TrialData, seed: u64) -> Self {
        Self { cfg, data, seed, eta_hat: None, selections: [None, None], kmm_audits: Vec::new() }
    }

    pub fn data(&self) -> &TrialData {
        &self.data
    }

    /// Estimated noisy posterior at every training row.
    pub fn eta_hat(&mut self) -> Result<&[f64]> {
        if self.eta_hat.is_none() {
            let model = logistic::fit(&self.data.noisy_train, None, &self.cfg.fit)?;
            self.eta_hat = Some(model.predict_proba_all(&self.data.noisy_train)?);
        }
        Ok(self.eta_hat.as_deref().unwrap_or_default())
    }

    fn selection(&mut self, route: Route) -> Result<Selection> {
        if let Some(sel) = &self.selections[route.slot()] {
            return Ok(sel.clone());
        }
        let eta = self.eta_hat()?.to_vec();
        let noisy = &self.data.noisy_train;
        let outcome = match route {
            Route::Bounds => distill::collect_with_bounds(
                noisy,
                &eta,
                self.cfg.rho_pos_max,
                self.cfg.rho_neg_max,
            )?,
            Route::Knn => distill::collect_knn(noisy, &eta, self.cfg.k, self.cfg.knn_bounds)?,
        };
        let oracle = Oracle::new(self.data.oracle_labels.clone());
        let active =
            distill::active_label(&outcome.remaining_indices, self.cfg.n_act, &oracle, self.seed)
                .map_err(|e| match e {
                    Error::Parameter(msg) => msg,
                    other => other.to_string(),
                });
        let sel = Selection { outcome, active, queries: oracle.queries() };
        self.selections[route.slot()] = Some(sel.clone());
        Ok(sel)
    }

    /// Trains `method` and returns its test accuracy in `[0, 1]`.
    pub fn run_method(&mut self, method: Method) -> Result<f64> {
        let model = self.train(method)?;
        learner::accuracy(&model, &self.data.test)
    }

    fn train(&mut self, method: Method) -> Result<LinearModel> {
        let fit = &self.cfg.fit;
        match method {
            Method::Clean => logistic::fit(&self.data.clean_train, None, fit),
            Method::Noisy => logistic::fit(&self.data.noisy_train, None, fit),
            Method::Auto | Method::AutoWo => {
                let sel = self.selection(Route::of(method))?;
                if sel.outcome.distilled.is_empty() {
                    return Err(Error::Degenerate("no examples were auto-collected".into()));
                }
                logistic::fit(&sel.outcome.distilled, None, fit)
            }
            Method::NoisyAct | Method::NoisyActWo => {
                let sel = self.selection(Route::of(method))?;
                let mut labels = self.data.noisy_train.labels().to_vec();
                for &(i, label) in sel.active()? {
                    labels[i] = label;
                }
                let relabeled = self.data.noisy_train.relabeled(labels, SampleKind::Noisy)?;
                logistic::fit(&relabeled, None, fit)
            }
            Method::AutoAct | Method::AutoActWo => {
                let sel = self.selection(Route::of(method))?;
                let active = sel.active()?.to_vec();
                let mut outcome = sel.outcome;
                outcome.add_active(&self.data.noisy_train, &active)?;
                if outcome.distilled.is_empty() {
                    return Err(Error::Degenerate(
                        "no examples were auto-collected and n_act is 0".into(),
                    ));
                }
                let m = outcome.distilled.len();
                let problem = kmm::build_problem(
                    outcome.distilled.features(),
                    self.data.noisy_train.features(),
                    KernelSpec::new(self.cfg.kernel_sigma())?,
                    self.cfg.kmm.cap,
                    kmm::default_eps(m),
                )?;
                let weights = kmm::solve(&problem, self.cfg.kmm.solver)?;
                let beta = &weights.beta;
                self.kmm_audits.push(KmmAudit {
                    method,
                    m,
                    beta_min: beta.iter().cloned().fold(f64::INFINITY, f64::min),
                    beta_max: beta.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    beta_mean: beta.iter().sum::<f64>() / m as f64,
                    objective: weights.objective,
                    kkt_residual: weights.kkt_residual,
                    iterations: weights.iterations,
                    converged: weights.converged,
                    box_violation: problem.box_violation(beta),
                    slab_violation: problem.slab_violation(beta),
                });
                learner::train_weighted(&outcome.distilled, &weights, fit)
            }
        }
    }

    /// Active-query indices of the `auto_act` (or `auto_act_wo`) route, if
    /// that route ran and its draw succeeded.
    pub fn active_indices(&self, knn: bool) -> Option<Vec<usize>> {
        let route = if knn { Route::Knn } else { Route::Bounds };
        let sel = self.selections[route.slot()].as_ref()?;
        sel.active.as_ref().ok().map(|a| a.iter().map(|p| p.0).collect())
    }

    fn audit(&self, trial: usize) -> TrialAudit {
        let clean = self.data.clean_train.labels();
        let flips =
            clean.iter().zip(self.data.noisy_train.labels()).filter(|(a, b)| a != b).count();
        let selections = [Route::Bounds, Route::Knn]
            .into_iter()
            .filter_map(|route| {
                let sel = self.selections[route.slot()].as_ref()?;
                let o = &sel.outcome;
                let count = |p: Provenance| o.provenance.iter().filter(|x| **x == p).count();
                let errors = o
                    .source_indices
                    .iter()
                    .zip(o.distilled.labels())
                    .filter(|(i, y)| clean[**i] != **y)
                    .count();
                Some(SelectionAudit {
                    route: route.name().to_string(),
                    auto_pos: count(Provenance::AutoPos),
                    auto_neg: count(Provenance::AutoNeg),
                    auto_label_errors: errors,
                    remaining: o.remaining_indices.len(),
                    active_indices: sel
                        .active
                        .as_ref()
                        .map(|a| a.iter().map(|p| p.0).collect())
                        .unwrap_or_default(),
                    oracle_queries: sel.queries,
                })
            })
            .collect();
        TrialAudit {
            trial,
            seed: self.seed,
            noise_model: Some(self.data.noise.clone()),
            noisy_label_flips: flips,
            selections,
            kmm: self.kmm_audits.clone(),
        }
    }
}

struct TrialOutcome {
    accuracies: Vec<Option<f64>>,
    failures: Vec<TrialFailure>,
    audit: TrialAudit,
}

fn run_trial(cfg: &ExperimentConfig, source: &DataSource, methods: &[Method], trial: usize) -> TrialOutcome {
    let seed = cfg.base_seed.wrapping_add(trial as u64);
    let data = match prepare_trial(cfg, source, seed) {
        Ok(d) => d,
        Err(e) => {
            let reason = format!("trial setup failed: {e}");
            return TrialOutcome {
                accuracies: vec![None; methods.len()],
                failures: methods
                    .iter()
                    .map(|&method| TrialFailure { trial, method, reason: reason.clone() })
                    .collect(),
                audit: TrialAudit {
                    trial,
                    seed,
                    noise_model: None,
                    noisy_label_flips: 0,
                    selections: Vec::new(),
                    kmm: Vec::new(),
                },
            };
        }
    };
    let mut ctx = TrialContext::new(cfg, data, seed);
    let mut accuracies = Vec::with_capacity(methods.len());
    let mut failures = Vec::new();
    for &method in methods {
        match ctx.run_method(method) {
            Ok(acc) => accuracies.push(Some(100.0 * acc)),
            Err(e) => {
                accuracies.push(None);
                failures.push(TrialFailure { trial, method, reason: e.to_string() });
            }
        }
    }
    TrialOutcome { accuracies, failures, audit: ctx.audit(trial) }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrialReport> {
    cfg.validate()?;
    let source = DataSource::from_config(cfg)?;
    let methods = cfg.method_list();
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &source, &methods, t))
        .collect();

    let summaries = methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            MethodSummary::from_accuracies(method, outcomes.iter().map(|o| o.accuracies[j]).collect())
        })
        .collect();
    let mut failures = Vec::new();
    let mut trials = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        failures.extend(o.failures);
        trials.push(o.audit);
    }
    Ok(TrialReport { setting: cfg.setting(), config: cfg.clone(), methods: summaries, failures, trials })
}

/// Reruns the experiment for each `k`, with identical seeds.
pub fn k_sweep(cfg: &ExperimentConfig, k_values: &[usize]) -> Result<KSweep> {
    if !cfg.methods.iter().any(|m| m.uses_knn()) {
        return Err(Error::Config(
            "k sweep needs at least one of auto_wo, noisy_act_wo, auto_act_wo".into(),
        ));
    }
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(Error::Config("k values must be a non-empty list of positive sizes".into()));
    }
    let points = k_values
        .iter()
        .map(|&k| {
            let cfg = ExperimentConfig { k, ..cfg.clone() };
            run_experiment(&cfg).map(|r| (k, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KSweep { points })
}
