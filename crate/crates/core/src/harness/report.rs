use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use crate::synthetic::NoiseModel;

/// Population mean and standard deviation, one pass (Welford).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    Some((mean, (m2 / values.len() as f64).max(0.0).sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Accuracy in percent per trial; `None` for failed trials.
    pub accuracies: Vec<Option<f64>>,
    pub mean_pct: Option<f64>,
    pub std_pct: Option<f64>,
    pub completed: usize,
    pub failed: usize,
}

impl MethodSummary {
    pub fn from_accuracies(method: Method, accuracies: Vec<Option<f64>>) -> Self {
        let done: Vec<f64> = accuracies.iter().flatten().copied().collect();
        let stats = mean_std(&done);
        Self {
            method,
            completed: done.len(),
            failed: accuracies.len() - done.len(),
            mean_pct: stats.map(|s| s.0),
            std_pct: stats.map(|s| s.1),
            accuracies,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub method: Method,
    pub reason: String,
}

/// Counts for one collection route (`bounds` or `knn`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionAudit {
    pub route: String,
    pub auto_pos: usize,
    pub auto_neg: usize,
    /// Auto-collected examples whose label disagrees with the clean label.
    pub auto_label_errors: usize,
    pub remaining: usize,
    pub active_indices: Vec<usize>,
    pub oracle_queries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmmAudit {
    pub method: Method,
    pub m: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_mean: f64,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub box_violation: f64,
    pub slab_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialAudit {
    pub trial: usize,
    pub seed: u64,
    /// `None` when the trial could not be set up.
    pub noise_model: Option<NoiseModel>,
    pub noisy_label_flips: usize,
    pub selections: Vec<SelectionAudit>,
    pub kmm: Vec<KmmAudit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub setting: String,
    pub config: ExperimentConfig,
    pub methods: Vec<MethodSummary>,
    pub failures: Vec<TrialFailure>,
    pub trials: Vec<TrialAudit>,
}

impl TrialReport {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn mean(&self, method: Method) -> Option<f64> {
        self.method(method).and_then(|m| m.mean_pct)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Rows `setting,method,mean_pct,std_pct` without a header.
    pub fn summary_rows(&self) -> String {
        let mut out = String::new();
        for m in &self.methods {
            let _ = writeln!(
                out,
                "\"{}\",{},{},{}",
                self.setting,
                m.method,
                fmt_opt(m.mean_pct),
                fmt_opt(m.std_pct)
            );
        }
        out
    }
}

pub const SUMMARY_HEADER: &str = "setting,method,mean_pct,std_pct";
pub const SWEEP_HEADER: &str = "k,method,mean_pct,std_pct";

pub fn summary_csv(reports: &[TrialReport]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in reports {
        out.push_str(&r.summary_rows());
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

/// One report per neighborhood size, all over the same seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSweep {
    pub points: Vec<(usize, TrialReport)>,
}

impl KSweep {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SWEEP_HEADER}\n");
        for (k, report) in &self.points {
            for m in &report.methods {
                let _ = writeln!(out, "{k},{},{},{}", m.method, fmt_opt(m.mean_pct), fmt_opt(m.std_pct));
            }
        }
        out
    }

    pub fn means(&self, method: Method) -> Vec<Option<f64>> {
        self.points.iter().map(|(_, r)| r.mean(method)).collect()
    }
}

/// Prints a fixed-width table of means and standard deviations.
pub fn render_table(reports: &[TrialReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(out, "setting {}", r.setting);
        for m in &r.methods {
            let cell = match (m.mean_pct, m.std_pct) {
                (Some(a), Some(b)) => format!("{a:6.2} +- {b:5.2}"),
                _ => "   n/a".to_string(),
            };
            let _ = writeln!(out, "  {:<14}{cell}  ({} failed)", m.method.as_str(), m.failed);
        }
    }
    out
}
