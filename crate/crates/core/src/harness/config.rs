use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distill::BoundsReading;
use crate::error::{Error, Result};
use crate::kmm::{SolveConfig, DEFAULT_CAP};
use crate::logistic::FitConfig;

/// Training procedures compared in an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fit on the clean training labels.
    Clean,
    /// Fit on the noisy training labels.
    Noisy,
    /// Fit on examples auto-collected with the known noise bounds.
    Auto,
    /// Noisy labels with the actively labeled examples of `auto_act` fixed.
    NoisyAct,
    /// Full pipeline: collect, label actively, reweight by KMM, fit.
    AutoAct,
    /// `auto` with neighborhood bounds instead of the known bounds.
    AutoWo,
    /// `noisy_act` sharing the active draw of `auto_act_wo`.
    NoisyActWo,
    /// `auto_act` with neighborhood bounds instead of the known bounds.
    AutoActWo,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Clean,
        Method::Noisy,
        Method::Auto,
        Method::NoisyAct,
        Method::AutoAct,
        Method::AutoWo,
        Method::NoisyActWo,
        Method::AutoActWo,
    ];

    pub fn uses_knn(self) -> bool {
        matches!(self, Method::AutoWo | Method::NoisyActWo | Method::AutoActWo)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Clean => "clean",
            Method::Noisy => "noisy",
            Method::Auto => "auto",
            Method::NoisyAct => "noisy_act",
            Method::AutoAct => "auto_act",
            Method::AutoWo => "auto_wo",
            Method::NoisyActWo => "noisy_act_wo",
            Method::AutoActWo => "auto_act_wo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Dataset {
    /// Fresh Gaussian-pair train and test draws per trial.
    Synthetic {
        #[serde(default = "default_n_train")]
        n_train: usize,
        #[serde(default = "default_n_test")]
        n_test: usize,
        #[serde(default = "default_offset")]
        offset: Vec<f64>,
        #[serde(default = "default_prior")]
        prior_pos: f64,
    },
    /// A labeled CSV file, re-split and standardized per trial.
    Csv {
        path: PathBuf,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
}

fn default_n_train() -> usize {
    400
}
fn default_n_test() -> usize {
    2000
}
fn default_offset() -> Vec<f64> {
    vec![-2.0, 2.0]
}
fn default_prior() -> f64 {
    0.5
}
fn default_train_fraction() -> f64 {
    0.75
}

impl Default for Dataset {
    fn default() -> Self {
        Dataset::Synthetic {
            n_train: default_n_train(),
            n_test: default_n_test(),
            offset: default_offset(),
            prior_pos: default_prior(),
        }
    }
}

/// Where active queries get their labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleSource {
    /// The stored clean label.
    #[default]
    Clean,
    /// The Bayes label `sgn(eta - 1/2)`; synthetic data only.
    Bayes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmmSettings {
    /// Kernel scale; `None` picks 1.0 for synthetic and 0.01 for CSV data.
    pub sigma: Option<f64>,
    pub cap: f64,
    pub solver: SolveConfig,
}

impl Default for KmmSettings {
    fn default() -> Self {
        Self { sigma: None, cap: DEFAULT_CAP, solver: SolveConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    pub rho_pos_max: f64,
    pub rho_neg_max: f64,
    pub n_act: usize,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub base_seed: u64,
    /// Neighborhood size for the `*_wo` methods.
    pub k: usize,
    pub kmm: KmmSettings,
    pub fit: FitConfig,
    pub oracle: OracleSource,
    pub knn_bounds: BoundsReading,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: Dataset::default(),
            rho_pos_max: 0.25,
            rho_neg_max: 0.25,
            n_act: 3,
            methods: Method::ALL.to_vec(),
            trials: 200,
            base_seed: 0,
            k: 10,
            kmm: KmmSettings::default(),
            fit: FitConfig::default(),
            oracle: OracleSource::default(),
            knn_bounds: BoundsReading::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        for (name, v) in [("rho_pos_max", self.rho_pos_max), ("rho_neg_max", self.rho_neg_max)] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1), got {v}"));
            }
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        match &self.dataset {
            Dataset::Synthetic { n_train, n_test, offset, prior_pos } => {
                if *n_train == 0 || *n_test == 0 {
                    return bad("synthetic n_train and n_test must be positive".into());
                }
                crate::synthetic::GaussianPair::new(offset.clone(), *prior_pos)
                    .map_err(|e| Error::Config(e.to_string()))?;
            }
            Dataset::Csv { train_fraction, .. } => {
                if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                    return bad(format!("train_fraction must lie in (0, 1), got {train_fraction}"));
                }
                if self.oracle == OracleSource::Bayes {
                    return bad("the Bayes oracle needs a synthetic dataset".into());
                }
            }
        }
        if let Some(sigma) = self.kmm.sigma {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return bad(format!("kmm.sigma must be positive, got {sigma}"));
            }
        }
        if !(self.kmm.cap > 0.0) {
            return bad("kmm.cap must be positive".into());
        }
        if self.kmm.solver.max_iters == 0 || !(self.kmm.solver.tol > 0.0) {
            return bad("kmm.solver needs max_iters >= 1 and tol > 0".into());
        }
        self.fit.validate()
    }

    pub fn kernel_sigma(&self) -> f64 {
        self.kmm.sigma.unwrap_or(match self.dataset {
            Dataset::Synthetic { .. } => 1.0,
            Dataset::Csv { .. } => 0.01,
        })
    }

    /// Methods in first-seen order without duplicates.
    pub fn method_list(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::new();
        for m in &self.methods {
            if !out.contains(m) {
                out.push(*m);
            }
        }
        out
    }

    /// `(rho_pos_max, rho_neg_max, n_act)` label used in tables.
    pub fn setting(&self) -> String {
        format!("({}, {}, {})", self.rho_pos_max, self.rho_neg_max, self.n_act)
    }
}
