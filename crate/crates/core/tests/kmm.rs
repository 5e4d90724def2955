mod common;

use biln::kmm::{self, KernelSpec, KmmProblem, SolveConfig};
use biln::rng;
use biln::Error;
use proptest::prelude::*;
use rand::Rng;

use common::{gaussian_points, grid_minimum, kmm_value, random_kmm_problem, refined_minimum};

#[test]
fn small_problems_match_grid_oracle() {
    for m in [1, 2] {
        for seed in 0..50 {
            let p = random_kmm_problem(seed, m);
            let w = kmm::solve(&p, SolveConfig::default()).unwrap();
            let (_, coarse) = grid_minimum(&p, 1e-3);
            let (best, fine) = refined_minimum(&p, 1e-3);
            assert!(w.objective <= coarse + 1e-6, "m={m} seed={seed}: {} vs grid {coarse}", w.objective);
            assert!(
                (w.objective - fine).abs() <= 1e-6,
                "m={m} seed={seed}: {} vs refined {fine} at {best:?}, beta {:?}",
                w.objective,
                w.beta
            );
            assert!((w.objective - kmm_value(&p, &w.beta)).abs() < 1e-9);
        }
    }
}

#[test]
fn identical_source_and_target_gives_unit_weights() {
    for seed in 0..5 {
        let mut r = rng::stream(seed, 101);
        let pts = gaussian_points(&mut r, 60, 2, 1.0);
        let p = kmm::build_problem(&pts, &pts, KernelSpec::new(1.0).unwrap(), kmm::DEFAULT_CAP, kmm::default_eps(60))
            .unwrap();
        let w = kmm::solve(&p, SolveConfig::default()).unwrap();
        let worst = w.beta.iter().map(|b| (b - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-2, "max |beta - 1| = {worst}");
    }
}

#[test]
fn assembly_matches_definitions() {
    let a = vec![0.0, 0.0];
    let b = vec![1.0, 0.0];
    let k = KernelSpec::new(1.0).unwrap();
    assert!((k.eval(&a, &b) - (-1.0f64).exp()).abs() < 1e-15);
    assert!((k.eval(&a, &b) - 0.367879).abs() < 1e-6);

    let mut r = rng::stream(3, 102);
    let pts = gaussian_points(&mut r, 12, 3, 1.0);
    let p = kmm::build_problem(&pts, &pts, k, 10.0, 0.5).unwrap();
    for i in 0..12 {
        assert_eq!(p.gram(i, i), 1.0 + kmm::JITTER);
        let row: f64 = (0..12).map(|j| k.eval(&pts[i], &pts[j])).sum();
        assert!((p.kappa()[i] - row).abs() < 1e-12);
        for j in 0..12 {
            assert!((p.gram(i, j) - p.gram(j, i)).abs() <= 1e-12);
        }
    }
}

#[test]
fn descent_and_mean_matching() {
    for seed in 0..10 {
        let mut r = rng::stream(seed, 103);
        let source = gaussian_points(&mut r, 60, 2, 1.0);
        let mut target = gaussian_points(&mut r, 150, 2, 1.5);
        target.iter_mut().for_each(|x| x[1] += 0.5);
        let kernel = KernelSpec::new(1.0).unwrap();
        let p = kmm::build_problem(&source, &target, kernel, kmm::DEFAULT_CAP, kmm::default_eps(60)).unwrap();
        let (w, trace) = kmm::solve_traced(&p, SolveConfig::default()).unwrap();
        assert!(trace.windows(2).all(|t| t[1] <= t[0]), "objective increased");
        assert!(w.objective <= p.objective(&vec![1.0; 60]));
        let mean = kmm::target_gram_mean(&target, kernel);
        let fitted = p.mean_matching_residual(&w.beta, mean);
        let uniform = p.mean_matching_residual(&vec![1.0; 60], mean);
        assert!(fitted <= uniform + 1e-12, "{fitted} > {uniform}");
        assert!(fitted >= -1e-9);
    }
}

#[test]
fn doubling_a_slack_cap_changes_nothing() {
    let mut r = rng::stream(9, 104);
    let source = gaussian_points(&mut r, 40, 2, 1.0);
    let target = gaussian_points(&mut r, 100, 2, 1.2);
    let kernel = KernelSpec::new(1.0).unwrap();
    let eps = kmm::default_eps(40);
    let a = kmm::solve(&kmm::build_problem(&source, &target, kernel, 1000.0, eps).unwrap(), SolveConfig::default())
        .unwrap();
    assert!(a.beta.iter().all(|b| *b < 1000.0));
    let b = kmm::solve(&kmm::build_problem(&source, &target, kernel, 2000.0, eps).unwrap(), SolveConfig::default())
        .unwrap();
    for (x, y) in a.beta.iter().zip(&b.beta) {
        assert!((x - y).abs() <= 1e-6);
    }
}

#[test]
fn infeasible_region_is_rejected_before_solving() {
    let pts = vec![vec![0.0], vec![1.0]];
    let err = kmm::build_problem(&pts, &pts, KernelSpec::new(1.0).unwrap(), 0.5, 0.1).unwrap_err();
    assert!(matches!(err, Error::InfeasibleKmm { .. }));
    assert!(kmm::build_problem(&[], &pts, KernelSpec::new(1.0).unwrap(), 1.0, 0.0).is_err());
    assert!(KernelSpec::new(0.0).is_err());
}

fn problem_strategy() -> impl Strategy<Value = (KmmProblem, Vec<f64>)> {
    (1usize..12, any::<u64>(), 0.0f64..0.95, 0.05f64..5.0).prop_map(|(m, seed, eps, cap_raw)| {
        let cap = cap_raw.max(1.0 - eps);
        let mut r = rng::stream(seed, 105);
        let source = gaussian_points(&mut r, m, 2, 1.0);
        let target = gaussian_points(&mut r, 20, 2, 2.0);
        let p = kmm::build_problem(&source, &target, KernelSpec::new(0.7).unwrap(), cap, eps).unwrap();
        let v: Vec<f64> = (0..m).map(|_| r.random_range(-3.0..6.0)).collect();
        (p, v)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_are_feasible((p, _) in problem_strategy()) {
        let w = kmm::solve(&p, SolveConfig { max_iters: 2000, tol: 1e-7 }).unwrap();
        prop_assert!(p.box_violation(&w.beta) <= 1e-8);
        prop_assert!(p.slab_violation(&w.beta) <= 1e-8);
        prop_assert!(w.kkt_residual >= 0.0);
    }

    #[test]
    fn projection_satisfies_the_variational_inequality((p, v) in problem_strategy(), probe in any::<u64>()) {
        let proj = p.project(&v);
        prop_assert!(p.box_violation(&proj) <= 1e-12);
        prop_assert!(p.slab_violation(&proj) <= 1e-9);
        // (v - P v) . (z - P v) <= 0 for every feasible z.
        let mut r = rng::stream(probe, 106);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..v.len()).map(|_| r.random_range(0.0..p.cap())).collect();
            let z = p.project(&raw);
            let inner: f64 = v.iter().zip(&proj).zip(&z).map(|((a, b), c)| (a - b) * (c - b)).sum();
            prop_assert!(inner <= 1e-9, "inner product {}", inner);
        }
        let again = p.project(&proj);
        for (a, b) in again.iter().zip(&proj) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
