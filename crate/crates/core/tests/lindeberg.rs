use dkslab::disorder::{pair_count, pair_from_index, sample_disorder, DisorderMatrix, DistributionSpec};
use dkslab::lindeberg::*;
use dkslab::rng::trial_seed;
use dkslab::LabError;
use proptest::prelude::*;

fn gaussian(n: usize, seed: u64) -> DisorderMatrix {
    sample_disorder(n, &DistributionSpec::gaussian_half_quarter(), seed).unwrap()
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Every K-subset as a bitmask, with its edge sum.
fn subsets(m: &DisorderMatrix, k: usize) -> Vec<(u32, f64)> {
    let n = m.n();
    (0u32..1 << n)
        .filter(|s| s.count_ones() as usize == k)
        .map(|s| {
            let mut z = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    if s >> i & 1 == 1 && s >> j & 1 == 1 {
                        z += m.weight(i, j);
                    }
                }
            }
            (s, z)
        })
        .collect()
}

/// Plain `log Σ exp(β Z_S) / β`, shifted only by the first value.
fn naive_smooth_max(m: &DisorderMatrix, k: usize, beta: f64) -> f64 {
    let all = subsets(m, k);
    let c = all[0].1;
    let sum: f64 = all.iter().map(|&(_, z)| (beta * (z - c)).exp()).sum();
    c + sum.ln() / beta
}

fn naive_edge_mass(m: &DisorderMatrix, k: usize, beta: f64, (i, j): (usize, usize)) -> f64 {
    let all = subsets(m, k);
    let c = all[0].1;
    let (mut u, mut p) = (0.0, 0.0);
    for (s, z) in all {
        let t = (beta * (z - c)).exp();
        p += t;
        if s >> i & 1 == 1 && s >> j & 1 == 1 {
            u += t;
        }
    }
    u / p
}

fn bumped(m: &DisorderMatrix, (i, j): (usize, usize), h: f64) -> DisorderMatrix {
    DisorderMatrix::from_fn(m.n(), |a, b| m.weight(a, b) + if (a, b) == (i, j) { h } else { 0.0 }).unwrap()
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

#[test]
fn smooth_max_matches_naive_summation() {
    for seed in 0..10 {
        let m = gaussian(8, seed);
        for beta in [0.3, 1.0, 4.0] {
            let f = smooth_max(&m, 3, beta).unwrap();
            let g = naive_smooth_max(&m, 3, beta);
            assert!((f - g).abs() < 1e-10, "seed {seed} β {beta}: {f} vs {g}");
        }
    }
}

#[test]
fn smooth_max_of_constant_weights() {
    let m = DisorderMatrix::from_fn(8, |_, _| -1.25).unwrap();
    let f = smooth_max(&m, 4, 0.7).unwrap();
    assert!((f - (-1.25 * 6.0 + binom(8, 4).ln() / 0.7)).abs() < 1e-12);
}

#[test]
fn large_beta_survives_overflow() {
    let m = DisorderMatrix::from_fn(7, |i, j| 100.0 + (i * 7 + j) as f64).unwrap();
    let f = smooth_max(&m, 3, 1e3).unwrap();
    let max = subsets(&m, 3).iter().map(|s| s.1).fold(f64::MIN, f64::max);
    assert!(f.is_finite());
    assert!(f >= max && f - max <= binom(7, 3).ln() / 1e3 + 1e-12);
}

#[test]
fn edge_mass_matches_naive() {
    let m = gaussian(7, 3);
    for idx in 0..pair_count(7) {
        let e = pair_from_index(7, idx);
        let a = gibbs_edge_weight(&m, 3, 1.3, e).unwrap();
        let b = naive_edge_mass(&m, 3, 1.3, e);
        assert!((a - b).abs() < 1e-12, "{e:?}");
    }
}

#[test]
fn edge_mass_under_symmetry() {
    let m = DisorderMatrix::from_fn(8, |_, _| 0.5).unwrap();
    let p = binom(6, 2) / binom(8, 4);
    for idx in 0..pair_count(8) {
        let w = gibbs_edge_weight(&m, 4, 2.0, pair_from_index(8, idx)).unwrap();
        assert!((w - p).abs() < 1e-14);
    }
}

#[test]
fn edge_mass_grows_with_its_weight() {
    let base = gaussian(7, 11);
    let e = (2, 5);
    let masses: Vec<f64> = [-5.0, -1.0, 0.0, 1.0, 5.0, 20.0, 50.0]
        .iter()
        .map(|&w| {
            let m = DisorderMatrix::from_fn(7, |a, b| if (a, b) == e { w } else { base.weight(a, b) }).unwrap();
            gibbs_edge_weight(&m, 3, 1.0, e).unwrap()
        })
        .collect();
    assert!(masses.windows(2).all(|p| p[0] < p[1] || p[1] == 1.0), "{masses:?}");
    assert!(masses.last().unwrap() > &(1.0 - 1e-15));
}

#[test]
fn derivative_bounds_on_random_instances() {
    for seed in 0..100u64 {
        let n = 6 + (seed % 3) as usize;
        let m = gaussian(n, trial_seed(7, seed));
        let beta = 0.2 + (seed % 5) as f64;
        let e = pair_from_index(n, (seed as usize * 7) % pair_count(n));
        let d = smooth_max_derivatives(&m, 3, beta, e).unwrap();
        assert!((0.0..=1.0).contains(&d.d1));
        assert!(d.d2 >= 0.0 && d.d2 <= beta / 4.0 + 1e-15);
        assert!(d.d3.abs() <= beta * beta / 4.0 + 1e-15);
    }
}

#[test]
fn derivatives_match_finite_differences() {
    for seed in 0..8u64 {
        let m = gaussian(7, 100 + seed);
        let beta = [0.5, 1.0, 2.0, 3.0][seed as usize % 4];
        let e = pair_from_index(7, (seed as usize * 5) % pair_count(7));
        let d = smooth_max_derivatives(&m, 3, beta, e).unwrap();
        let f = |h: f64| smooth_max(&bumped(&m, e, h), 3, beta).unwrap();

        let h1 = 1e-4;
        let fd1 = (f(h1) - f(-h1)) / (2.0 * h1);
        let h = 1e-3;
        let f0 = f(0.0);
        let fd2 = (f(h) - 2.0 * f0 + f(-h)) / (h * h);
        // Fourth-order stencil; the plain one is off by h^2 β^4 / 4.
        let h3 = 5e-3;
        let fd3 = (-f(3.0 * h3) + 8.0 * f(2.0 * h3) - 13.0 * f(h3) + 13.0 * f(-h3) - 8.0 * f(-2.0 * h3) + f(-3.0 * h3))
            / (8.0 * h3 * h3 * h3);

        assert!(close(d.d1, fd1, 1e-5, 1e-7), "d1 {} vs {fd1}", d.d1);
        assert!(close(d.d2, fd2, 1e-5, 1e-7), "d2 {} vs {fd2}", d.d2);
        assert!(close(d.d3, fd3, 1e-5, 1e-7), "d3 {} vs {fd3}", d.d3);
    }
}

#[test]
fn second_derivative_under_symmetry() {
    let m = DisorderMatrix::from_fn(7, |_, _| 0.0).unwrap();
    let p = binom(5, 1) / binom(7, 3);
    let d = smooth_max_derivatives(&m, 3, 1.7, (0, 6)).unwrap();
    assert!((d.d2 - 1.7 * p * (1.0 - p)).abs() < 1e-14);
}

#[test]
fn gibbs_identity_n8_k3() {
    for seed in 0..10 {
        let r = gibbs_sum_identity(&gaussian(8, seed), 3, 1.0).unwrap();
        assert!(r <= 1e-9 * 3.0, "{r}");
    }
}

#[test]
fn gibbs_identity_zero_weights() {
    let m = DisorderMatrix::from_fn(8, |_, _| 0.0).unwrap();
    let g = GibbsState::new(&m, 3, 1.0).unwrap();
    let per_edge = binom(6, 1) / binom(8, 3);
    assert!(g.edge_weights.iter().all(|w| (w - per_edge).abs() < 1e-15));
    assert!(g.gibbs_residual() < 1e-13);
}

#[test]
fn gibbs_identity_sweep_n9_k4() {
    for seed in 0..50 {
        let r = gibbs_sum_identity(&gaussian(9, trial_seed(42, seed)), 4, 0.8).unwrap();
        assert!(r <= 1e-9 * 6.0, "seed {seed}: {r}");
    }
}

#[test]
fn cached_partition_matches_recomputation() {
    let m = gaussian(8, 5);
    let g = GibbsState::new(&m, 4, 1.5).unwrap();
    assert!((g.smooth_max() - smooth_max(&m, 4, 1.5).unwrap()).abs() < 1e-10);
    assert!((g.log_partition - 1.5 * naive_smooth_max(&m, 4, 1.5)).abs() < 1e-10);
}

#[test]
fn constant_path_when_weights_agree() {
    let w = gaussian(6, 1).weights().to_vec();
    let order: Vec<usize> = (0..pair_count(6)).rev().collect();
    let plan = InterpolationPlan::new(6, order, w.clone(), w, 1).unwrap();
    let path = interpolation_path(&plan, 3, 1.0).unwrap();
    assert!(path.iter().all(|v| (v - path[0]).abs() < 1e-12));
}

#[test]
fn path_telescopes_and_hits_endpoints() {
    for seed in 0..20 {
        let plan = InterpolationPlan::sample(6, &DistributionSpec::bernoulli_half(), seed).unwrap();
        let path = interpolation_path(&plan, 3, 1.0).unwrap();
        assert_eq!(path.len(), pair_count(6) + 1);
        let steps: f64 = path.windows(2).map(|p| p[1] - p[0]).sum();
        assert!((path[path.len() - 1] - path[0] - steps).abs() <= 1e-10);

        let x = DisorderMatrix::from_weights(6, plan.x_weights.clone()).unwrap();
        let y = DisorderMatrix::from_weights(6, plan.y_weights.clone()).unwrap();
        assert!((path[0] - smooth_max(&y, 3, 1.0).unwrap()).abs() < 1e-12);
        assert!((path[pair_count(6)] - smooth_max(&x, 3, 1.0).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn plan_rejects_bad_order() {
    let w = vec![0.0; pair_count(4)];
    let r = InterpolationPlan::new(4, vec![0, 1, 2, 3, 4, 4], w.clone(), w, 0);
    assert!(matches!(r, Err(LabError::InvalidArgument(_))));
}

#[test]
fn multiplicity_check_n4() {
    for seed in 0..3 {
        let plan = InterpolationPlan::sample(4, &DistributionSpec::bernoulli_half(), seed).unwrap();
        let c = aggregated_multiplicity_check(4, 3, 1.0, &plan.x_weights, &plan.y_weights).unwrap();
        assert!(c.residual <= 1e-8 * c.lhs, "{c:?}");
        assert!((c.b0 - 120.0 * 3.0).abs() < 1e-9);
        assert!((c.b_n - 120.0 * 3.0).abs() < 1e-9);
    }
}

#[test]
fn multiplicity_check_with_equal_weights() {
    let w = gaussian(4, 9).weights().to_vec();
    let c = aggregated_multiplicity_check(4, 3, 2.0, &w, &w).unwrap();
    assert!((c.lhs - 2.0 * 720.0 * 3.0).abs() < 1e-8);
    assert!(c.residual < 1e-8 * c.lhs);
}

#[test]
fn multiplicity_check_refuses_large_n() {
    let w = vec![0.0; pair_count(5)];
    assert!(matches!(aggregated_multiplicity_check(5, 3, 1.0, &w, &w), Err(LabError::Resource(_))));
}

#[test]
fn default_beta_balances_terms() {
    for (n, k) in [(24u64, 5u64), (1000, 20), (1_000_000, 1000)] {
        let b = default_beta(n, k);
        assert!((b.powi(3) * 2.0 * k as f64 * (n as f64).ln().sqrt() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gap_vanishes_for_identical_laws() {
    let g = universality_gap(10, 3, 1.0, &DistributionSpec::gaussian_half_quarter(), 50, 4).unwrap();
    assert!(g.gap_estimate <= g.ci_halfwidth);
    assert!(g.gap_estimate >= 0.0);
}

#[test]
fn bernoulli_gap_within_budget() {
    let g = universality_gap(12, 4, default_beta(12, 4), &DistributionSpec::bernoulli_half(), 200, 8).unwrap();
    assert!(g.gap_estimate >= 0.0 && g.gap_estimate <= g.budget, "{g:?}");
    assert!(g.smooth_gap.is_some());
    let expected = 4f64.powf(4.0 / 3.0) * 12f64.ln().powf(7.0 / 6.0);
    assert!((g.budget - expected).abs() < 1e-12);
}

#[test]
fn gap_rejects_moment_mismatch() {
    let r = universality_gap(10, 3, 1.0, &DistributionSpec::rademacher(), 10, 0);
    assert!(matches!(r, Err(LabError::HypothesisViolated(_))));
}

#[test]
fn gap_trials_are_paired() {
    let t = gap_trial(9, 3, 1.0, &DistributionSpec::gaussian_half_quarter(), 77, true).unwrap();
    assert_eq!(t.psi_gaussian, t.psi_target);
    assert_eq!(t.smooth_gaussian, t.smooth_target);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sandwich_holds(seed in any::<u64>(), beta in 0.05f64..20.0, k in 2usize..5) {
        let m = gaussian(7, seed);
        let f = smooth_max(&m, k, beta).unwrap();
        let max = subsets(&m, k).iter().map(|s| s.1).fold(f64::MIN, f64::max);
        prop_assert!(f >= max - 1e-12);
        prop_assert!(f <= max + sandwich_width(7, k, beta) + 1e-12);
    }

    #[test]
    fn gibbs_identity_always(seed in any::<u64>(), beta in 0.05f64..10.0) {
        let g = GibbsState::new(&gaussian(8, seed), 4, beta).unwrap();
        prop_assert!(g.gibbs_residual() <= 1e-9 * 6.0);
    }
}
