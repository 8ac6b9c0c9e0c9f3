//! Per-action likelihood summaries: the MLE `B̂` and the Hessian `Ĝ` of the
//! negative log-likelihood at the MLE.

use crate::linalg::{self, Matrix, Vector};
use crate::model::reward::softplus;
use crate::model::{sigmoid, RewardModel};
use crate::{Error, Result};

/// Ridge used for logistic fits unless the caller overrides it.
pub const DEFAULT_LOGISTIC_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Vector,
    pub y: f64,
}

impl Observation {
    pub fn new(x: Vector, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionStats {
    pub b_hat: Vector,
    pub g_hat: Matrix,
    /// `Ĝ B̂`. For linear-Gaussian data this is kept as `Xᵀy / σ²` exactly,
    /// which is what the posterior consumes.
    pub info: Vector,
    pub count: usize,
    /// Ridge that was applied when solving for `B̂`.
    pub ridge: f64,
    pub converged: bool,
}

impl ActionStats {
    pub fn empty(d: usize) -> Self {
        Self {
            b_hat: Vector::zeros(d),
            g_hat: Matrix::zeros(d, d),
            info: Vector::zeros(d),
            count: 0,
            ridge: 0.0,
            converged: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.b_hat.len()
    }

    /// Exact rank-1 update for linear-Gaussian rewards.
    pub fn push_linear(&mut self, x: &Vector, y: f64, sigma: f64, ridge: f64) -> Result<()> {
        linalg::check_dim(self.dim(), x.len())?;
        check_finite(x, y)?;
        let w = 1.0 / (sigma * sigma);
        self.g_hat.ger(w, x, x, 1.0);
        self.info.axpy(w * y, x, 1.0);
        self.count += 1;
        self.ridge = ridge;
        self.b_hat = ridge_solve(&self.g_hat, &self.info, ridge);
        Ok(())
    }
}

fn check_finite(x: &Vector, y: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) && y.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("observation"))
    }
}

/// Solves `(G + ridge I) b = info`, falling back to the minimum-norm
/// solution when the system is singular.
fn ridge_solve(g: &Matrix, info: &Vector, ridge: f64) -> Vector {
    let d = g.nrows();
    let a = g + Matrix::identity(d, d) * ridge;
    match a.clone().cholesky() {
        Some(c) => c.solve(info),
        None => a.svd(true, true).solve(info, 1e-12).unwrap_or_else(|_| Vector::zeros(d)),
    }
}

/// Twice-differentiable loss for [`newton_solve`].
pub trait Objective {
    fn value(&self, theta: &Vector) -> f64;
    fn gradient_hessian(&self, theta: &Vector) -> (Vector, Matrix);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100, max_halvings: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub point: Vector,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

fn newton_direction(h: &Matrix, g: &Vector) -> Vector {
    let d = h.nrows();
    let mut reg = 0.0;
    loop {
        let m = linalg::symmetrize(h) + Matrix::identity(d, d) * reg;
        if let Some(c) = m.cholesky() {
            return -c.solve(g);
        }
        reg = if reg == 0.0 { 1e-8 } else { reg * 10.0 };
        if reg > 1e8 {
            return -g.clone();
        }
    }
}

/// Damped Newton minimisation with step halving.
pub fn newton_solve(obj: &impl Objective, init: Vector, opts: &NewtonOptions) -> NewtonOutcome {
    let mut x = init;
    let mut f = obj.value(&x);
    for iter in 0..opts.max_iter {
        let (g, h) = obj.gradient_hessian(&x);
        let gn = g.norm();
        if gn <= opts.tol {
            return NewtonOutcome { point: x, iterations: iter, grad_norm: gn, converged: true };
        }
        let step = newton_direction(&h, &g);
        let slack = 1e-12 * f.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand = &x + &step * t;
            let fc = obj.value(&cand);
            if fc.is_finite() && fc <= f + slack {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                x = cand;
                f = fc;
            }
            None => {
                return NewtonOutcome { point: x, iterations: iter + 1, grad_norm: gn, converged: false };
            }
        }
    }
    let gn = obj.gradient_hessian(&x).0.norm();
    NewtonOutcome { point: x, iterations: opts.max_iter, grad_norm: gn, converged: gn <= opts.tol }
}

/// Ridge-penalised negative Bernoulli log-likelihood with logistic link.
pub struct LogisticLoss<'a> {
    pub log: &'a [Observation],
    pub ridge: f64,
}

impl Objective for LogisticLoss<'_> {
    fn value(&self, theta: &Vector) -> f64 {
        let nll: f64 = self
            .log
            .iter()
            .map(|o| {
                let u = o.x.dot(theta);
                softplus(u) - o.y * u
            })
            .sum();
        nll + 0.5 * self.ridge * theta.norm_squared()
    }

    fn gradient_hessian(&self, theta: &Vector) -> (Vector, Matrix) {
        let d = theta.len();
        let mut g = theta * self.ridge;
        let mut h = Matrix::identity(d, d) * self.ridge;
        for o in self.log {
            let p = sigmoid(o.x.dot(theta));
            g.axpy(p - o.y, &o.x, 1.0);
            h.ger(p * (1.0 - p), &o.x, &o.x, 1.0);
        }
        (g, h)
    }
}

/// Fits the likelihood summary of one action's data.
pub fn fit(log: &[Observation], model: &RewardModel, ridge: f64, d: usize) -> Result<ActionStats> {
    fit_from(log, model, ridge, d, None)
}

/// As [`fit`], warm-starting logistic Newton iterations from `init`.
pub fn fit_from(
    log: &[Observation],
    model: &RewardModel,
    ridge: f64,
    d: usize,
    init: Option<&Vector>,
) -> Result<ActionStats> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid(format!("ridge must be non-negative, got {ridge}")));
    }
    for o in log {
        linalg::check_dim(d, o.x.len())?;
        check_finite(&o.x, o.y)?;
    }
    let mut stats = ActionStats::empty(d);
    if log.is_empty() {
        return Ok(stats);
    }
    match *model {
        RewardModel::LinearGaussian { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::invalid("linear-Gaussian fit needs positive noise"));
            }
            for o in log {
                stats.push_linear(&o.x, o.y, sigma, ridge)?;
            }
        }
        RewardModel::LogisticBernoulli => {
            if let Some(o) = log.iter().find(|o| o.y != 0.0 && o.y != 1.0) {
                return Err(Error::invalid(format!("Bernoulli reward must be 0 or 1, got {}", o.y)));
            }
            let start = init.cloned().unwrap_or_else(|| Vector::zeros(d));
            let out = newton_solve(&LogisticLoss { log, ridge }, start, &NewtonOptions::default());
            let mut g = Matrix::zeros(d, d);
            for o in log {
                g.ger(model.mean_derivative(o.x.dot(&out.point)), &o.x, &o.x, 1.0);
            }
            stats.info = &g * &out.point;
            stats.g_hat = linalg::symmetrize(&g);
            stats.b_hat = out.point;
            stats.count = log.len();
            stats.ridge = ridge;
            stats.converged = out.converged;
        }
    }
    Ok(stats)
}
