//! Shared oracles for the integration tests. Everything here is computed by
//! brute force, independently of the hierarchical recursions.
#![allow(dead_code)]

use dts_core::glm::ActionStats;
use dts_core::linalg::{Matrix, Vector};
use dts_core::model::DiffusionPrior;
use nalgebra::Cholesky;
use rand::Rng;

/// `(action, context, reward)` triples.
pub type Log = Vec<(usize, Vector, f64)>;

pub struct Joint {
    /// Stacked `(ψ_L, …, ψ_1, θ_1, …, θ_K)` posterior mean.
    pub mean: Vector,
    pub cov: Matrix,
    pub d: usize,
    pub levels: usize,
}

impl Joint {
    pub fn theta(&self, a: usize) -> (Vector, Matrix) {
        let off = (self.levels + a) * self.d;
        (self.mean.rows(off, self.d).into_owned(), self.cov.view((off, off), (self.d, self.d)).into_owned())
    }

    /// Marginal of `ψ_level`.
    pub fn latent(&self, level: usize) -> (Vector, Matrix) {
        let off = (self.levels - level) * self.d;
        (self.mean.rows(off, self.d).into_owned(), self.cov.view((off, off), (self.d, self.d)).into_owned())
    }
}

fn chol(m: &Matrix) -> Matrix {
    Cholesky::new(m.clone()).expect("positive definite").l()
}

/// Writes the linear chain as `z = M ε` with standard normal `ε`, forms the
/// joint covariance `M Mᵀ`, then conditions on all rewards at once.
pub fn brute_force(prior: &DiffusionPrior, k: usize, log: &Log, sigma: f64) -> Joint {
    let d = prior.dim();
    let levels = prior.levels();
    let nz = (levels + k) * d;
    // Noise blocks: top, levels L..=2, then one per action.
    let ne = (levels + k) * d;
    let mut m = Matrix::zeros(nz, ne);
    // ψ_L = S_{L+1} e_top.
    m.view_mut((0, 0), (d, d)).copy_from(&chol(prior.top_cov().matrix()));
    // ψ_{ℓ-1} = W_ℓ ψ_ℓ + S_ℓ e_ℓ, rows stacked from the top down.
    for level in (2..=levels).rev() {
        let parent = (levels - level) * d;
        let row = (levels - level + 1) * d;
        let w = prior.weights(level).unwrap();
        let block = w * m.rows(parent, d);
        m.rows_mut(row, d).copy_from(&block);
        let e = (levels - level + 1) * d;
        m.view_mut((row, e), (d, d)).copy_from(&chol(prior.cov(level).matrix()));
    }
    let psi1 = (levels - 1) * d;
    let w1 = prior.weights(1).unwrap();
    let s1 = chol(prior.cov(1).matrix());
    for a in 0..k {
        let row = (levels + a) * d;
        let block = w1 * m.rows(psi1, d);
        m.rows_mut(row, d).copy_from(&block);
        m.view_mut((row, (levels + a) * d), (d, d)).copy_from(&s1);
    }
    let prior_cov = &m * m.transpose();
    if log.is_empty() {
        return Joint { mean: Vector::zeros(nz), cov: prior_cov, d, levels };
    }
    let mut h = Matrix::zeros(log.len(), nz);
    let mut y = Vector::zeros(log.len());
    for (i, (a, x, r)) in log.iter().enumerate() {
        h.view_mut((i, (levels + a) * d), (1, d)).copy_from(&x.transpose());
        y[i] = *r;
    }
    let s = &h * &prior_cov * h.transpose() + Matrix::identity(log.len(), log.len()) * (sigma * sigma);
    let s_inv = Cholesky::new(s).expect("innovation covariance").inverse();
    let gain = &prior_cov * h.transpose() * s_inv;
    let mean = &gain * y;
    let cov = &prior_cov - &gain * &h * &prior_cov;
    Joint { mean, cov: (&cov + cov.transpose()) * 0.5, d, levels }
}

/// Per-action summaries of a linear-Gaussian log.
pub fn summaries(log: &Log, k: usize, d: usize, sigma: f64) -> Vec<ActionStats> {
    let mut stats = vec![ActionStats::empty(d); k];
    for (a, x, y) in log {
        stats[*a].push_linear(x, *y, sigma, 0.0).unwrap();
    }
    stats
}

/// Random symmetric positive definite matrix with eigenvalues in roughly
/// `[lo, lo + spread]`.
pub fn random_spd(d: usize, lo: f64, spread: f64, rng: &mut impl Rng) -> Matrix {
    let a = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let q = a.qr().q();
    let eig = Matrix::from_diagonal(&Vector::from_fn(d, |_, _| lo + spread * rng.random::<f64>()));
    let m = &q * eig * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn random_matrix(d: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0))
}

/// Random linear prior with general covariances.
pub fn random_linear_prior(d: usize, levels: usize, rng: &mut impl Rng) -> DiffusionPrior {
    use dts_core::model::{Covariance, LinkFn};
    let links = (0..levels).map(|_| LinkFn::Linear { weights: random_matrix(d, rng) }).collect();
    let covs = (0..levels).map(|_| Covariance::from_matrix(&random_spd(d, 0.3, 1.5, rng)).unwrap()).collect();
    let top = Covariance::from_matrix(&random_spd(d, 0.3, 1.5, rng)).unwrap();
    DiffusionPrior::new(links, covs, top).unwrap()
}

/// Random log of `t` rounds with uniform actions and contexts.
pub fn random_log(d: usize, k: usize, t: usize, rng: &mut impl Rng) -> Log {
    (0..t)
        .map(|_| {
            let a = rng.random_range(0..k);
            let x = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            (a, x, rng.random_range(-3.0..3.0))
        })
        .collect()
}

pub fn rel_err_vec(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

pub fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}
