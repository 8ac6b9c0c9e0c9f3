//! Likelihood summaries against independent one-dimensional and
//! normal-equation oracles.

use dts_core::glm::{fit, newton_solve, LogisticLoss, NewtonOptions, Objective, Observation};
use dts_core::linalg::{Matrix, Vector};
use dts_core::model::RewardModel;
use nalgebra::dvector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unpenalised Bernoulli negative log-likelihood in one dimension.
fn nll_1d(data: &[(f64, f64)], theta: f64) -> f64 {
    data.iter()
        .map(|&(x, y)| {
            let u = x * theta;
            let softplus = if u > 0.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
            softplus - y * u
        })
        .sum()
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    while hi - lo > 1e-10 {
        if f(c) < f(d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - r * (hi - lo);
        d = lo + r * (hi - lo);
    }
    0.5 * (lo + hi)
}

/// Random 1-d logistic data; two opposite labels at the same point keep the
/// MLE finite.
pub fn logistic_dataset(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let theta = rng.random_range(-2.0..2.0);
    let n = rng.random_range(10..80);
    let mut data: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.5..1.5);
            let p = 1.0 / (1.0 + (-x * theta).exp());
            (x, f64::from(rng.random_bool(p)))
        })
        .collect();
    data.push((1.0, 0.0));
    data.push((1.0, 1.0));
    data
}

#[test]
fn logistic_mle_matches_golden_section() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let data = logistic_dataset(&mut rng);
        let oracle = golden_section(|t| nll_1d(&data, t), -30.0, 30.0);
        let log: Vec<Observation> = data.iter().map(|&(x, y)| Observation::new(dvector![x], y)).collect();
        let stats = fit(&log, &RewardModel::LogisticBernoulli, 1e-6, 1).unwrap();
        assert!(stats.converged);
        assert!((stats.b_hat[0] - oracle).abs() < 1e-3, "{} vs {oracle}", stats.b_hat[0]);
        // Hessian at the MLE, by central differences of the oracle objective.
        let h = 1e-4;
        let fd = (nll_1d(&data, oracle + h) - 2.0 * nll_1d(&data, oracle) + nll_1d(&data, oracle - h)) / (h * h);
        assert!((stats.g_hat[(0, 0)] - fd).abs() < 1e-3 * fd.max(1.0));
    }
}

#[test]
fn linear_fit_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let d = rng.random_range(1..5);
        let n = rng.random_range(d + 2..40);
        let sigma = rng.random_range(0.3..2.0);
        let x = Matrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let log: Vec<Observation> = (0..n).map(|i| Observation::new(x.row(i).transpose(), y[i])).collect();
        let stats = fit(&log, &RewardModel::linear(sigma).unwrap(), 0.0, d).unwrap();
        let xtx = x.transpose() * &x;
        let normal = xtx.clone().lu().solve(&(x.transpose() * &y)).unwrap();
        assert!((&stats.b_hat - &normal).amax() < 1e-10 * normal.amax().max(1.0));
        assert!((&stats.g_hat - xtx / (sigma * sigma)).amax() < 1e-10);
    }
}

proptest! {
    #[test]
    fn newton_gradient_vanishes_at_logistic_optimum(seed in 0u64..1000, d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(5..40);
        let log: Vec<Observation> = (0..n)
            .map(|_| Observation::new(Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)), f64::from(rng.random_bool(0.5))))
            .collect();
        let loss = LogisticLoss { log: &log, ridge: 0.1 };
        let out = newton_solve(&loss, Vector::zeros(d), &NewtonOptions::default());
        prop_assert!(out.converged);
        prop_assert!(loss.gradient_hessian(&out.point).0.norm() <= 1e-8);
        // Strict convexity: any perturbation increases the loss.
        let bumped = &out.point + Vector::from_element(d, 1e-3);
        prop_assert!(loss.value(&bumped) >= loss.value(&out.point));
    }
}
