//! Importance weights by empirical kernel mean matching.
//!
//! Given distilled points `x_1..x_m` and the full sample `X_1..X_n`, find
//! `beta` minimizing `1/2 beta'K beta - kappa'beta` subject to
//! `0 <= beta_i <= B` and `|sum(beta) - m| <= m * eps`, where
//! `K_ij = k(x_i, x_j)` and `kappa_i = (m/n) sum_j k(x_i, X_j)`.
//!
//! The solver is monotone accelerated projected gradient (FISTA with an
//! objective safeguard) using an exact Euclidean projection onto the
//! intersection of the box and the sum slab.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::squared_distance;

/// Added to the diagonal of `K`.
pub const JITTER: f64 = 1e-8;

/// Power-iteration steps for the Lipschitz bound.
const POWER_STEPS: usize = 50;


/// `k(x, x') = exp(-sigma |x - x'|^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub sigma: f64,
}

impl KernelSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Parameter(format!("kernel sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        (-self.sigma * squared_distance(a, b)).exp()
    }
}

/// `(sqrt(m) - 1) / sqrt(m)`.
pub fn default_eps(m: usize) -> f64 {
    let r = (m as f64).sqrt();
    (r - 1.0) / r
}

pub const DEFAULT_CAP: f64 = 1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmmProblem {
    m: usize,
    n: usize,
    /// Row-major `m x m`, jitter included.
    gram: Vec<f64>,
    kappa: Vec<f64>,
    cap: f64,
    eps: f64,
}

fn check_region(cap: f64, eps: f64) -> Result<()> {
    if !(cap > 0.0) || !(eps >= 0.0) || !cap.is_finite() || !eps.is_finite() {
        return Err(Error::Parameter(format!("need cap > 0 and eps >= 0, got {cap}, {eps}")));
    }
    if cap < 1.0 - eps {
        return Err(Error::InfeasibleKmm { cap, lower: 1.0 - eps });
    }
    Ok(())
}

pub fn build_problem(
    distilled: &[Vec<f64>],
    all: &[Vec<f64>],
    kernel: KernelSpec,
    cap: f64,
    eps: f64,
) -> Result<KmmProblem> {
    if distilled.is_empty() || all.is_empty() {
        return Err(Error::Empty("KMM needs at least one source and one target point"));
    }
    let d = distilled[0].len();
    if let Some(bad) = distilled.iter().chain(all).find(|x| x.len() != d) {
        return Err(Error::Dimension { expected: d, found: bad.len() });
    }
    check_region(cap, eps)?;
    let (m, n) = (distilled.len(), all.len());
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        gram[i * m + i] = 1.0 + JITTER;
        for j in (i + 1)..m {
            let v = kernel.eval(&distilled[i], &distilled[j]);
            gram[i * m + j] = v;
            gram[j * m + i] = v;
        }
    }
    let scale = m as f64 / n as f64;
    let kappa = distilled
        .iter()
        .map(|x| scale * all.iter().map(|y| kernel.eval(x, y)).sum::<f64>())
        .collect();
    Ok(KmmProblem { m, n, gram, kappa, cap, eps })
}

/// Mean of the target Gram matrix, `(1/n^2) sum_jl k(X_j, X_l)`.
pub fn target_gram_mean(all: &[Vec<f64>], kernel: KernelSpec) -> f64 {
    let n = all.len();
    let mut total = n as f64;
    for i in 0..n {
        for j in (i + 1)..n {
            total += 2.0 * kernel.eval(&all[i], &all[j]);
        }
    }
    total / (n * n) as f64
}

impl KmmProblem {
    /// Assembles a problem from an explicit Gram matrix (row-major, no
    /// jitter added) and `kappa`.
    pub fn from_parts(gram: Vec<f64>, kappa: Vec<f64>, n: usize, cap: f64, eps: f64) -> Result<Self> {
        let m = kappa.len();
        if m == 0 || gram.len() != m * m || n == 0 {
            return Err(Error::Parameter("gram must be m x m with m >= 1".into()));
        }
        check_region(cap, eps)?;
        Ok(Self { m, n, gram, kappa, cap, eps })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.m + j]
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Allowed range of `sum(beta)`.
    pub fn sum_bounds(&self) -> (f64, f64) {
        let m = self.m as f64;
        (m - m * self.eps, m + m * self.eps)
    }

    /// `out = K beta`, summing rows of the symmetric `K` over the non-zero
    /// entries of `beta`.
    fn apply(&self, beta: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (row, &b) in self.gram.chunks_exact(self.m).zip(beta) {
            if b != 0.0 {
                out.iter_mut().zip(row).for_each(|(o, k)| *o += b * k);
            }
        }
    }

    fn objective_with(&self, beta: &[f64], k_beta: &[f64]) -> f64 {
        beta.iter()
            .zip(k_beta)
            .zip(&self.kappa)
            .map(|((b, kb), c)| 0.5 * b * kb - c * b)
            .sum()
    }

    /// `1/2 beta'K beta - kappa'beta`.
    pub fn objective(&self, beta: &[f64]) -> f64 {
        let mut kb = vec![0.0; self.m];
        self.apply(beta, &mut kb);
        self.objective_with(beta, &kb)
    }

    /// Squared RKHS distance between the weighted source mean embedding and
    /// the target mean embedding; `target_mean` is [`target_gram_mean`].
    pub fn mean_matching_residual(&self, beta: &[f64], target_mean: f64) -> f64 {
        let m2 = (self.m * self.m) as f64;
        let jitter: f64 = beta.iter().map(|b| b * b).sum::<f64>() * JITTER;
        let quad = 2.0 * self.objective(beta) - jitter;
        quad / m2 + target_mean
    }

    /// Largest violation of `0 <= beta <= B`.
    pub fn box_violation(&self, beta: &[f64]) -> f64 {
        beta.iter().fold(0.0f64, |acc, &b| acc.max(-b).max(b - self.cap))
    }

    /// Distance of `sum(beta)` outside the slab.
    pub fn slab_violation(&self, beta: &[f64]) -> f64 {
        let (lo, hi) = self.sum_bounds();
        let s: f64 = beta.iter().sum();
        (lo - s).max(s - hi).max(0.0)
    }

    /// Euclidean projection onto `[0, B]^m` intersected with the slab.
    ///
    /// The projection is `clamp(v - lambda, 0, B)` for the scalar shift
    /// `lambda` that puts the sum on the nearest slab face (or zero when the
    /// plain clamp already lies in the slab). `lambda` is found exactly by
    /// sweeping the sorted breakpoints of the piecewise-linear sum.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let cap = self.cap;
        let clamped: Vec<f64> = v.iter().map(|x| x.clamp(0.0, cap)).collect();
        let s: f64 = clamped.iter().sum();
        let (lo, hi) = self.sum_bounds();
        if s >= lo && s <= hi {
            return clamped;
        }
        let target = if s > hi { hi } else { lo };

        // Coordinate i is at B for lambda <= v_i - B, free in between, 0 for
        // lambda >= v_i. Sweep lambda upward tracking sum and slope.
        let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * v.len());
        for &x in v {
            events.push((x - cap, -1));
            events.push((x, 1));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut lambda = events[0].0;
        let mut sum = cap * v.len() as f64;
        let mut slope = 0i64;
        let mut shift = None;
        for &(at, delta) in &events {
            let next = sum + slope as f64 * (at - lambda);
            if next <= target && slope != 0 {
                shift = Some(lambda + (sum - target) / (-slope) as f64);
                break;
            }
            sum = next;
            lambda = at;
            slope += delta as i64;
            if sum <= target {
                shift = Some(lambda);
                break;
            }
        }
        let shift = shift.unwrap_or(lambda);
        v.iter().map(|x| (x - shift).clamp(0.0, cap)).collect()
    }

    /// Upper bound on the largest eigenvalue of `K`: the Collatz-Wielandt
    /// ratio `max_i (K v)_i / v_i` of a power-iteration vector, valid for any
    /// entrywise non-negative matrix and positive `v`.
    pub fn lipschitz_bound(&self) -> f64 {
        let mut v = vec![1.0; self.m];
        let mut kv = vec![0.0; self.m];
        let mut bound = f64::INFINITY;
        for _ in 0..POWER_STEPS {
            self.apply(&v, &mut kv);
            let ratio = kv.iter().zip(&v).map(|(a, b)| a / b).fold(0.0f64, f64::max);
            bound = bound.min(ratio);
            let norm = kv.iter().cloned().fold(0.0f64, f64::max);
            v.iter_mut().zip(&kv).for_each(|(x, y)| *x = y / norm);
        }
        bound
    }

    /// Step-scaled projected gradient `|beta - P(beta - grad / L)|_inf`.
    fn stationarity(&self, beta: &[f64], k_beta: &[f64], lipschitz: f64) -> f64 {
        let trial: Vec<f64> = beta
            .iter()
            .zip(k_beta)
            .zip(&self.kappa)
            .map(|((b, kb), c)| b - (kb - c) / lipschitz)
            .collect();
        self.project(&trial)
            .iter()
            .zip(beta)
            .fold(0.0f64, |acc, (p, b)| acc.max((p - b).abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub max_iters: usize,
    /// Stop when the step-scaled projected gradient falls to this level.
    pub tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { max_iters: 20_000, tol: 1e-7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceWeights {
    pub beta: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ImportanceWeights {
    /// Weights rescaled to mean one.
    pub fn normalized(&self) -> Vec<f64> {
        let mean = self.beta.iter().sum::<f64>() / self.beta.len() as f64;
        self.beta.iter().map(|b| b / mean).collect()
    }
}

pub fn solve(problem: &KmmProblem, cfg: SolveConfig) -> Result<ImportanceWeights> {
    solve_traced(problem, cfg).map(|(w, _)| w)
}

/// Solves and also returns the objective at the start point and after each
/// iteration.
pub fn solve_traced(
    problem: &KmmProblem,
    cfg: SolveConfig,
) -> Result<(ImportanceWeights, Vec<f64>)> {
    check_region(problem.cap, problem.eps)?;
    if cfg.max_iters == 0 || !(cfg.tol > 0.0) {
        return Err(Error::Parameter("KMM solver needs max_iters >= 1 and tol > 0".into()));
    }
    let m = problem.m;
    let lipschitz = problem.lipschitz_bound();

    // Accepted iterate x and its image Kx.
    let mut x = problem.project(&vec![1.0; m]);
    let mut kx = vec![0.0; m];
    problem.apply(&x, &mut kx);
    let mut fx = problem.objective_with(&x, &kx);
    let mut trace = vec![fx];

    // Extrapolated point y and its image Ky, kept by linearity.
    let mut y = x.clone();
    let mut ky = kx.clone();
    let mut kz = vec![0.0; m];
    let mut t = 1.0f64;

    let mut residual = problem.stationarity(&x, &kx, lipschitz);
    let mut iterations = 0;
    while residual > cfg.tol && iterations < cfg.max_iters {
        iterations += 1;
        let step: Vec<f64> = y
            .iter()
            .zip(&ky)
            .zip(&problem.kappa)
            .map(|((yi, kyi), c)| yi - (kyi - c) / lipschitz)
            .collect();
        let z = problem.project(&step);
        problem.apply(&z, &mut kz);
        let fz = problem.objective_with(&z, &kz);

        let x_prev = x.clone();
        let kx_prev = kx.clone();
        let improved = fz <= fx;
        if improved {
            x.clone_from(&z);
            kx.clone_from(&kz);
            fx = fz;
        }
        trace.push(fx);

        // Gradient-based adaptive restart.
        let uphill: f64 = (0..m).map(|i| (y[i] - z[i]) * (z[i] - x_prev[i])).sum();
        if uphill > 0.0 || !improved {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let a = t / t_next;
        let b = (t - 1.0) / t_next;
        for i in 0..m {
            y[i] = x[i] + a * (z[i] - x[i]) + b * (x[i] - x_prev[i]);
            ky[i] = kx[i] + a * (kz[i] - kx[i]) + b * (kx[i] - kx_prev[i]);
        }
        t = t_next;
        if iterations % 64 == 0 {
            problem.apply(&y, &mut ky);
        }
        residual = problem.stationarity(&x, &kx, lipschitz);
    }

    Ok((
        ImportanceWeights {
            beta: x,
            objective: fx,
            kkt_residual: residual,
            iterations,
            converged: residual <= cfg.tol,
        },
        trace,
    ))
}
