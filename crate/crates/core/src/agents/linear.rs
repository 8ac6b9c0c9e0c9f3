use super::{Agent, Decision};
use crate::linalg::{self, sample_gaussian, Matrix, Vector};
use crate::rng::StreamRng;
use crate::{Error, Result};

#[derive(Debug, Clone)]
struct Belief {
    precision: Matrix,
    info: Vector,
    mean: Vector,
    chol: Matrix,
}

/// Per-action Bayesian linear regression with Thompson sampling.
pub struct LinTsAgent {
    prior_cov: Matrix,
    /// `None` when the prior is a point mass at zero.
    prior_precision: Option<Matrix>,
    prior_chol: Matrix,
    sigma: f64,
    beliefs: Vec<Option<Belief>>,
    rng: StreamRng,
}

impl LinTsAgent {
    /// Prior `N(0, prior_cov)` on every action and known reward noise `sigma`.
    pub fn new(prior_cov: Matrix, sigma: f64, k: usize, rng: StreamRng) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("reward noise must be positive"));
        }
        let d = prior_cov.nrows();
        let (prior_precision, prior_chol) = if linalg::is_zero(&prior_cov) {
            (None, Matrix::zeros(d, d))
        } else {
            let c = linalg::cholesky(&prior_cov, "LinTS prior")?;
            (Some(linalg::symmetrize(&c.inverse())), c.l())
        };
        Ok(Self { prior_cov, prior_precision, prior_chol, sigma, beliefs: vec![None; k], rng })
    }

    /// Posterior mean and covariance of action `a`.
    pub fn belief(&self, a: usize) -> (Vector, Matrix) {
        let d = self.prior_cov.nrows();
        match &self.beliefs[a] {
            None => (Vector::zeros(d), self.prior_cov.clone()),
            Some(b) => (b.mean.clone(), b.chol.clone() * b.chol.transpose()),
        }
    }
}

impl Agent for LinTsAgent {
    fn name(&self) -> &str {
        "LinTS"
    }

    fn act(&mut self, x: &Vector) -> Result<Decision> {
        let d = x.len();
        let zero = Vector::zeros(d);
        let params: Vec<Vector> = self
            .beliefs
            .iter()
            .map(|b| match b {
                None => sample_gaussian(&zero, &self.prior_chol, &mut self.rng),
                Some(b) => sample_gaussian(&b.mean, &b.chol, &mut self.rng),
            })
            .collect();
        let scores = params.iter().map(|t| x.dot(t)).collect();
        Ok(Decision::from_scores(scores, params))
    }

    fn update(&mut self, x: &Vector, action: usize, reward: f64) -> Result<()> {
        let Some(prior_precision) = &self.prior_precision else {
            return Ok(());
        };
        let d = x.len();
        let w = 1.0 / (self.sigma * self.sigma);
        let slot = &mut self.beliefs[action];
        let mut b = slot.take().unwrap_or_else(|| Belief {
            precision: prior_precision.clone(),
            info: Vector::zeros(d),
            mean: Vector::zeros(d),
            chol: Matrix::zeros(d, d),
        });
        b.precision.ger(w, x, x, 1.0);
        b.info.axpy(w * reward, x, 1.0);
        let cov = linalg::spd_inverse(&b.precision, "LinTS posterior")?;
        b.mean = &cov * &b.info;
        b.chol = linalg::cholesky(&cov, "LinTS posterior")?.l();
        *slot = Some(b);
        Ok(())
    }
}

/// Per-action ridge regression with an upper-confidence bonus.
pub struct LinUcbAgent {
    alpha: f64,
    gram_inv: Vec<Matrix>,
    gram: Vec<Matrix>,
    rhs: Vec<Vector>,
    means: Vec<Vector>,
}

impl LinUcbAgent {
    pub fn new(d: usize, k: usize, alpha: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || alpha < 0.0 {
            return Err(Error::invalid("LinUCB needs lambda > 0 and alpha >= 0"));
        }
        let g = Matrix::identity(d, d) * lambda;
        Ok(Self {
            alpha,
            gram_inv: vec![Matrix::identity(d, d) / lambda; k],
            gram: vec![g; k],
            rhs: vec![Vector::zeros(d); k],
            means: vec![Vector::zeros(d); k],
        })
    }
}

impl Agent for LinUcbAgent {
    fn name(&self) -> &str {
        "LinUCB"
    }

    fn act(&mut self, x: &Vector) -> Result<Decision> {
        let scores = (0..self.means.len())
            .map(|a| x.dot(&self.means[a]) + self.alpha * quadratic_form(&self.gram_inv[a], x).max(0.0).sqrt())
            .collect();
        Ok(Decision::from_scores(scores, self.means.clone()))
    }

    fn update(&mut self, x: &Vector, action: usize, reward: f64) -> Result<()> {
        self.gram[action].ger(1.0, x, x, 1.0);
        self.rhs[action].axpy(reward, x, 1.0);
        self.gram_inv[action] = linalg::spd_inverse(&self.gram[action], "LinUCB gram")?;
        self.means[action] = &self.gram_inv[action] * &self.rhs[action];
        Ok(())
    }
}

/// `xᵀ M x`.
pub(crate) fn quadratic_form(m: &Matrix, x: &Vector) -> f64 {
    x.dot(&(m * x))
}
