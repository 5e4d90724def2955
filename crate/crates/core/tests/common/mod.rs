//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use biln::kmm::KmmProblem;
use biln::{Label, LabeledSample, SampleKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn sample(features: Vec<Vec<f64>>, labels: Vec<Label>) -> LabeledSample {
    LabeledSample::new(features, labels, SampleKind::Clean).unwrap()
}

pub fn gaussian_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    scale * z
                })
                .collect()
        })
        .collect()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<Label> {
    (0..n).map(|_| if rng.random_bool(0.5) { Label::Positive } else { Label::Negative }).collect()
}

/// Textbook two-pass population mean and standard deviation.
pub fn two_pass(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// O(n^2) neighbor search: sort everything by (distance, index).
pub fn brute_knn(points: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(j, p)| (p.iter().zip(&points[i]).map(|(a, b)| (a - b) * (a - b)).sum(), j))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    order.into_iter().take(k).map(|(_, j)| j).collect()
}

/// Central differences of `f` at `theta` with step `h`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|i| {
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn qp_value(p: &KmmProblem, beta: &[f64]) -> f64 {
    let m = beta.len();
    let mut v = 0.0;
    for i in 0..m {
        for j in 0..m {
            v += 0.5 * beta[i] * p.gram(i, j) * beta[j];
        }
        v -= p.kappa()[i] * beta[i];
    }
    v
}

fn feasible(p: &KmmProblem, beta: &[f64]) -> bool {
    let (lo, hi) = p.sum_bounds();
    let s: f64 = beta.iter().sum();
    beta.iter().all(|b| (0.0..=p.cap()).contains(b)) && s >= lo - 1e-12 && s <= hi + 1e-12
}

fn axis(from: f64, to: f64, step: f64) -> Vec<f64> {
    let steps = ((to - from) / step).ceil().max(0.0) as usize;
    (0..=steps).map(|i| (from + i as f64 * step).min(to)).collect()
}

/// Candidate points inside `window` (per-coordinate ranges clipped to the
/// box): a grid at `step`, for m = 2 also points along both slab faces, and
/// the vertices where slab faces meet box edges.
fn candidates(p: &KmmProblem, window: &[(f64, f64)], step: f64) -> Vec<[f64; 2]> {
    let (lo, hi) = p.sum_bounds();
    let cap = p.cap();
    let mut out: Vec<[f64; 2]> = Vec::new();
    match window {
        [(a0, a1)] => {
            for a in axis(*a0, *a1, step) {
                out.push([a, 0.0]);
            }
            for v in [0.0, cap, lo, hi] {
                out.push([v, 0.0]);
            }
        }
        [(a0, a1), (b0, b1)] => {
            let xs = axis(*a0, *a1, step);
            let ys = axis(*b0, *b1, step);
            for &a in &xs {
                for &b in &ys {
                    out.push([a, b]);
                }
                for s in [lo, hi] {
                    out.push([a, s - a]);
                }
            }
            for &b in &ys {
                for s in [lo, hi] {
                    out.push([s - b, b]);
                }
            }
            for s in [lo, hi] {
                for edge in [0.0, cap] {
                    out.push([edge, s - edge]);
                    out.push([s - edge, edge]);
                }
            }
            for a in [0.0, cap] {
                for b in [0.0, cap] {
                    out.push([a, b]);
                }
            }
        }
        _ => panic!("grid oracle supports m <= 2, got {}", window.len()),
    }
    out
}

fn best(p: &KmmProblem, cands: Vec<[f64; 2]>) -> (Vec<f64>, f64) {
    let m = p.m();
    let (x, v) = cands
        .iter()
        .map(|c| &c[..m])
        .filter(|b| feasible(p, b))
        .map(|b| (b, qp_value(p, b)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("feasible region is non-empty");
    (x.to_vec(), v)
}

/// Exhaustive search at resolution `step` over the feasible region of an
/// m = 1 or m = 2 problem. Returns the best candidate and its objective.
pub fn grid_minimum(p: &KmmProblem, step: f64) -> (Vec<f64>, f64) {
    let window = vec![(0.0, p.cap()); p.m()];
    best(p, candidates(p, &window, step))
}

/// [`grid_minimum`] followed by repeated zooming: a grid ten times finer
/// over a window of two coarse cells around the incumbent, down to a
/// resolution of `1e-9`.
pub fn refined_minimum(p: &KmmProblem, step: f64) -> (Vec<f64>, f64) {
    let (mut x, mut v) = grid_minimum(p, step);
    let mut h = step;
    while h > 1e-9 {
        let window: Vec<(f64, f64)> =
            x.iter().map(|&c| ((c - 2.0 * h).max(0.0), (c + 2.0 * h).min(p.cap()))).collect();
        h /= 10.0;
        let (nx, nv) = best(p, candidates(p, &window, h));
        if nv < v {
            x = nx;
            v = nv;
        }
    }
    (x, v)
}

pub fn kmm_value(p: &KmmProblem, beta: &[f64]) -> f64 {
    qp_value(p, beta)
}

/// Validation errors of a report JSON against `schema/report.schema.json`.
pub fn report_schema_errors(json: &str) -> Vec<String> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let instance: serde_json::Value = serde_json::from_str(json).unwrap();
    validator.iter_errors(&instance).map(|e| format!("{} at {}", e, e.instance_path())).collect()
}

/// Random small KMM instance with a shifted target, random kernel scale and a
/// feasible `(cap, eps)`.
pub fn random_kmm_problem(seed: u64, m: usize) -> KmmProblem {
    use biln::kmm::{self, KernelSpec};
    let mut r = biln::rng::stream(seed, 100);
    let n = r.random_range(3..30);
    let source = gaussian_points(&mut r, m, 2, 1.0);
    let mut target = gaussian_points(&mut r, n, 2, 1.0);
    let shift: f64 = r.random_range(-1.0..1.0);
    target.iter_mut().for_each(|x| x[0] += shift);
    let sigma = r.random_range(0.2..2.0);
    let eps = if r.random_bool(0.5) { kmm::default_eps(m) } else { r.random_range(0.0..0.9) };
    let cap = ((r.random_range((1.0 - eps).max(0.3)..2.5) * 1000.0).ceil() / 1000.0).max(1.0 - eps);
    kmm::build_problem(&source, &target, KernelSpec::new(sigma).unwrap(), cap, eps).unwrap()
}

/// Largest relative gap between the analytic logistic gradient and central
/// differences (h = 1e-6) on a random instance, unweighted then weighted.
/// Relative to `max(|g|_inf, 1e-3)`.
pub fn gradient_check(instance: u64) -> [f64; 2] {
    use biln::logistic::LogisticObjective;
    let mut r = biln::rng::stream(instance, 200);
    let n = r.random_range(1..40);
    let d = r.random_range(1..6);
    let s = sample(gaussian_points(&mut r, n, d, 1.5), random_labels(&mut r, n));
    let theta: Vec<f64> = (0..=d).map(|_| r.random_range(-2.0..2.0)).collect();
    let l2 = r.random_range(0.0..0.1);
    let weights: Vec<f64> = (0..n).map(|_| r.random_range(0.0..3.0)).collect();
    [None, Some(weights.as_slice())].map(|w| {
        let obj = LogisticObjective::new(&s, w, l2);
        let g = obj.gradient(&theta);
        let fd = finite_difference(|t| obj.value(t), &theta, 1e-6);
        let scale = g.iter().fold(1e-3f64, |m, v| m.max(v.abs()));
        g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
    })
}
