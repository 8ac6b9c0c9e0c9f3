//! Hierarchical posterior over the latent chain and action parameters.
//!
//! Data flows upwards: each action's likelihood summary is turned into a
//! Gaussian message on `ψ_1`, messages are summed over actions, and every
//! level passes a message to its parent. Sampling then flows downwards, from
//! the top latent to the actions.
//!
//! For linear chains the messages are wrapped by the level weights and the
//! result is the exact posterior. For non-linear chains the wrappers are
//! dropped, which treats each link as the identity when propagating
//! precision.

use std::fmt::Write as _;

use rand::Rng;

use crate::glm::ActionStats;
use crate::linalg::{self, sample_gaussian, Matrix, Vector};
use crate::model::{link_apply, Covariance, DiffusionPrior, PriorDraw};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMode {
    /// Exact recursions for linear links.
    LinearExact,
    /// Wrapper-free recursions for arbitrary links.
    NonLinearApprox,
    /// One parameter shared by all actions; recursions as in `NonLinearApprox`.
    SharedParam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: Vector,
    pub cov: Matrix,
}

/// Conditional posterior of one action parameter given `ψ_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTerm {
    sigma_hat: Matrix,
    chol: Matrix,
    /// `Σ̂ Σ_1⁻¹`; `None` stands for the identity (no data).
    prior_gain: Option<Matrix>,
    /// `Σ̂ Ĝ B̂`.
    data_mean: Vector,
    /// `Σ_1⁻¹ - Σ_1⁻¹ Σ̂ Σ_1⁻¹`; `None` when zero.
    precision_msg: Option<Matrix>,
    /// `Σ_1⁻¹ Σ̂ Ĝ B̂`.
    info_msg: Vector,
}

impl ActionTerm {
    pub fn new(cov1: &Covariance, stats: &ActionStats) -> Result<Self> {
        linalg::check_dim(cov1.dim(), stats.dim())?;
        if linalg::is_zero(&stats.g_hat) {
            let d = cov1.dim();
            return Ok(Self {
                sigma_hat: cov1.matrix().clone(),
                chol: cov1.chol_lower().clone(),
                prior_gain: None,
                data_mean: Vector::zeros(d),
                precision_msg: None,
                info_msg: Vector::zeros(d),
            });
        }
        let precision = cov1.precision() + &stats.g_hat;
        let sigma_hat = linalg::spd_inverse(&precision, "action posterior precision")?;
        let chol = linalg::cholesky(&sigma_hat, "action posterior covariance")?.l();
        let data_mean = &sigma_hat * &stats.info;
        // Σ₁⁻¹ Σ̂ Ĝ equals Σ₁⁻¹ − Σ₁⁻¹ Σ̂ Σ₁⁻¹ without the cancellation.
        let precision_msg = linalg::symmetrize(&(cov1.precision() * &sigma_hat * &stats.g_hat));
        let info_msg = cov1.precision() * &data_mean;
        Ok(Self {
            prior_gain: Some(&sigma_hat * cov1.precision()),
            sigma_hat,
            chol,
            data_mean,
            precision_msg: Some(precision_msg),
            info_msg,
        })
    }

    pub fn sigma_hat(&self) -> &Matrix {
        &self.sigma_hat
    }

    /// Posterior mean given the prior mean `f_1(ψ_1)`.
    pub fn mean(&self, prior_mean: &Vector) -> Vector {
        match &self.prior_gain {
            None => prior_mean + &self.data_mean,
            Some(g) => g * prior_mean + &self.data_mean,
        }
    }

    pub fn sample(&self, prior_mean: &Vector, rng: &mut impl Rng) -> Vector {
        sample_gaussian(&self.mean(prior_mean), &self.chol, rng)
    }
}

/// Conditional posterior of `ψ_ℓ` given `ψ_{ℓ+1}`, plus the message `(Ḡ, B̄)`
/// it received from below.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentLevel {
    pub g_bar: Matrix,
    pub b_bar: Vector,
    /// `Σ_{ℓ+1}⁻¹ + Ḡ`.
    pub precision: Matrix,
    pub sigma_bar: Matrix,
    chol: Matrix,
    /// `Σ̄ Σ_{ℓ+1}⁻¹`; `None` stands for the identity.
    prior_gain: Option<Matrix>,
    /// `Σ̄ B̄`.
    data_mean: Vector,
}

impl LatentLevel {
    fn new(cov: &Covariance, g_bar: Matrix, b_bar: Vector) -> Result<Self> {
        let precision = cov.precision() + &g_bar;
        if linalg::is_zero(&g_bar) {
            return Ok(Self {
                data_mean: cov.matrix() * &b_bar,
                g_bar,
                b_bar,
                precision,
                sigma_bar: cov.matrix().clone(),
                chol: cov.chol_lower().clone(),
                prior_gain: None,
            });
        }
        let sigma_bar = linalg::spd_inverse(&precision, "latent posterior precision")?;
        let chol = linalg::cholesky(&sigma_bar, "latent posterior covariance")?.l();
        Ok(Self {
            data_mean: &sigma_bar * &b_bar,
            prior_gain: Some(&sigma_bar * cov.precision()),
            g_bar,
            b_bar,
            precision,
            sigma_bar,
            chol,
        })
    }

    pub fn mean(&self, prior_mean: &Vector) -> Vector {
        match &self.prior_gain {
            None => prior_mean + &self.data_mean,
            Some(g) => g * prior_mean + &self.data_mean,
        }
    }

    fn gain_times(&self, m: &Matrix) -> Matrix {
        match &self.prior_gain {
            None => m.clone(),
            Some(g) => g * m,
        }
    }
}

/// Posterior state after some history. `levels[i]` describes `ψ_{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    mode: ChainMode,
    levels: Vec<LatentLevel>,
    actions: Vec<ActionTerm>,
}

/// Covariance of `θ_a` given the history with all latents integrated out.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticCov {
    pub sigma_check: Matrix,
    /// `P_{a,ℓ}` for `ℓ = 1..=L`.
    pub projections: Vec<Matrix>,
}

/// `max_ℓ 1 + λ_max(Σ_ℓ) / σ²` over `ℓ = 1..=L+1`.
pub fn sigma_max_sq(prior: &DiffusionPrior, sigma: f64) -> f64 {
    (1..=prior.levels() + 1)
        .map(|l| 1.0 + prior.cov(l).max_variance() / (sigma * sigma))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Builds the posterior from per-action likelihood summaries.
pub fn chain_update(prior: &DiffusionPrior, stats: &[ActionStats], mode: ChainMode) -> Result<PosteriorChain> {
    if mode == ChainMode::LinearExact && !prior.is_linear() {
        return Err(Error::ModeMismatch { required: "linear prior for exact" });
    }
    if mode == ChainMode::SharedParam && stats.len() != 1 {
        return Err(Error::invalid("shared-parameter chain takes exactly one summary"));
    }
    if stats.is_empty() {
        return Err(Error::invalid("need at least one action"));
    }
    let actions = stats.iter().map(|s| ActionTerm::new(prior.cov(1), s)).collect::<Result<Vec<_>>>()?;
    let mut chain = PosteriorChain { mode, levels: Vec::new(), actions };
    chain.rebuild_levels(prior)?;
    Ok(chain)
}

/// Posterior when every action shares one parameter observed through a
/// feature map.
pub fn shared_chain_update(prior: &DiffusionPrior, stats: &ActionStats) -> Result<PosteriorChain> {
    chain_update(prior, std::slice::from_ref(stats), ChainMode::SharedParam)
}

fn wrap(prior: &DiffusionPrior, level: usize, g: Matrix, b: Vector) -> (Matrix, Vector) {
    let w = prior.weights(level).expect("exact mode requires linear links");
    let wt = w.transpose();
    (linalg::symmetrize(&(&wt * g * w)), wt * b)
}

impl PosteriorChain {
    pub fn mode(&self) -> ChainMode {
        self.mode
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// Latent level `level`, 1-based.
    pub fn level(&self, level: usize) -> &LatentLevel {
        &self.levels[level - 1]
    }

    pub fn levels(&self) -> &[LatentLevel] {
        &self.levels
    }

    pub fn action(&self, a: usize) -> &ActionTerm {
        match self.mode {
            ChainMode::SharedParam => &self.actions[0],
            _ => &self.actions[a],
        }
    }

    /// Replaces one action's summary and recomputes the latent levels.
    pub fn refresh_action(&mut self, prior: &DiffusionPrior, a: usize, stats: &ActionStats) -> Result<()> {
        let idx = if self.mode == ChainMode::SharedParam { 0 } else { a };
        self.actions[idx] = ActionTerm::new(prior.cov(1), stats)?;
        self.rebuild_levels(prior)
    }

    fn rebuild_levels(&mut self, prior: &DiffusionPrior) -> Result<()> {
        let d = prior.dim();
        let exact = self.mode == ChainMode::LinearExact;
        let mut g = Matrix::zeros(d, d);
        let mut b = Vector::zeros(d);
        for t in &self.actions {
            if let Some(p) = &t.precision_msg {
                g += p;
                b += &t.info_msg;
            }
        }
        if exact {
            (g, b) = wrap(prior, 1, g, b);
        }
        let n = prior.levels();
        let mut levels = Vec::with_capacity(n);
        for l in 1..=n {
            let cov = prior.cov(l + 1);
            let level = LatentLevel::new(cov, g, b)?;
            if l < n {
                if level.prior_gain.is_some() {
                    g = linalg::symmetrize(&(cov.precision() * &level.sigma_bar * &level.g_bar));
                    b = cov.precision() * &level.data_mean;
                } else {
                    g = Matrix::zeros(d, d);
                    b = cov.precision() * &level.data_mean;
                }
                if exact {
                    (g, b) = wrap(prior, l + 1, g, b);
                }
            } else {
                g = Matrix::zeros(0, 0);
                b = Vector::zeros(0);
            }
            levels.push(level);
        }
        self.levels = levels;
        Ok(())
    }

    /// `θ_a | ψ_1, H`.
    pub fn action_posterior(&self, prior: &DiffusionPrior, a: usize, psi1: &Vector) -> Result<Gaussian> {
        if a >= self.actions.len() && self.mode != ChainMode::SharedParam {
            return Err(Error::invalid(format!("action {a} out of range")));
        }
        let f1 = link_apply(prior.link(1), psi1)?;
        let t = self.action(a);
        Ok(Gaussian { mean: t.mean(&f1), cov: t.sigma_hat.clone() })
    }

    /// `ψ_{level-1} | ψ_level, H` for `2 <= level <= L+1`; at `L+1` the
    /// parent is ignored and the top posterior is returned.
    pub fn latent_posterior(&self, prior: &DiffusionPrior, level: usize, parent: &Vector) -> Result<Gaussian> {
        let top = prior.levels() + 1;
        if !(2..=top).contains(&level) {
            return Err(Error::LevelOutOfRange { level, max: top });
        }
        let lv = &self.levels[level - 2];
        let mean = if level == top {
            lv.mean(&Vector::zeros(prior.dim()))
        } else {
            lv.mean(&link_apply(prior.link(level), parent)?)
        };
        Ok(Gaussian { mean, cov: lv.sigma_bar.clone() })
    }

    /// Draws all latents top-down, then each action parameter.
    pub fn hierarchical_sample(&self, prior: &DiffusionPrior, rng: &mut impl Rng) -> Result<PriorDraw> {
        let latents = self.sample_latents(prior, rng)?;
        let f1 = link_apply(prior.link(1), &latents[0])?;
        let thetas = self.actions.iter().map(|t| t.sample(&f1, rng)).collect();
        Ok(PriorDraw { latents, thetas })
    }

    /// Draws `ψ_L, …, ψ_1`; the result is indexed by level minus one.
    pub fn sample_latents(&self, prior: &DiffusionPrior, rng: &mut impl Rng) -> Result<Vec<Vector>> {
        let n = prior.levels();
        let d = prior.dim();
        let mut latents = vec![Vector::zeros(d); n];
        let top = &self.levels[n - 1];
        latents[n - 1] = sample_gaussian(&top.mean(&Vector::zeros(d)), &top.chol, rng);
        for l in (1..n).rev() {
            let f = link_apply(prior.link(l + 1), &latents[l])?;
            let lv = &self.levels[l - 1];
            latents[l - 1] = sample_gaussian(&lv.mean(&f), &lv.chol, rng);
        }
        Ok(latents)
    }

    fn require_exact(&self) -> Result<()> {
        if self.mode == ChainMode::LinearExact {
            Ok(())
        } else {
            Err(Error::ModeMismatch { required: "linear exact" })
        }
    }

    /// Marginal covariance of `θ_a` with the latents integrated out.
    pub fn marginal_covariance(&self, prior: &DiffusionPrior, a: usize) -> Result<DiagnosticCov> {
        self.require_exact()?;
        let t = &self.actions[a];
        let w1 = prior.weights(1).expect("linear");
        let mut p = match &t.prior_gain {
            None => w1.clone(),
            Some(g) => g * w1,
        };
        let mut sigma_check = t.sigma_hat.clone();
        let mut projections = Vec::with_capacity(prior.levels());
        for l in 1..=prior.levels() {
            let lv = &self.levels[l - 1];
            sigma_check += &p * &lv.sigma_bar * p.transpose();
            let next = (l < prior.levels()).then(|| &p * lv.gain_times(prior.weights(l + 1).expect("linear")));
            projections.push(p);
            if let Some(n) = next {
                p = n;
            } else {
                break;
            }
        }
        Ok(DiagnosticCov { sigma_check: linalg::symmetrize(&sigma_check), projections })
    }

    /// Marginal mean of `θ_a` with the latents integrated out.
    pub fn marginal_mean(&self, prior: &DiffusionPrior, a: usize) -> Result<Vector> {
        self.require_exact()?;
        let n = prior.levels();
        let mut m = self.levels[n - 1].mean(&Vector::zeros(prior.dim()));
        for l in (1..n).rev() {
            let w = prior.weights(l + 1).expect("linear");
            m = self.levels[l - 1].mean(&(w * m));
        }
        Ok(self.actions[a].mean(&(prior.weights(1).expect("linear") * m)))
    }

    /// Smallest eigenvalue per level of the precision gain between `self`
    /// and `next` minus the guaranteed information term for observing `x`
    /// on action `a` with reward noise `sigma`.
    pub fn info_gain_certificate(
        &self,
        next: &PosteriorChain,
        prior: &DiffusionPrior,
        x: &Vector,
        a: usize,
        sigma: f64,
    ) -> Result<Vec<f64>> {
        self.require_exact()?;
        next.require_exact()?;
        let smax2 = sigma_max_sq(prior, sigma);
        let diag = self.marginal_covariance(prior, a)?;
        let mut out = Vec::with_capacity(prior.levels());
        for (l, p) in diag.projections.iter().enumerate() {
            let delta = &next.levels[l].g_bar - &self.levels[l].g_bar;
            let u = p.transpose() * x;
            let scale = smax2.powi(-(l as i32 + 1)) / (sigma * sigma);
            let mut m = delta;
            m.ger(-scale, &u, &u, 1.0);
            out.push(linalg::min_eigenvalue(&m));
        }
        Ok(out)
    }

    /// Largest absolute entry of `inverse(Σ̄) - (Σ_{ℓ+1}⁻¹ + Ḡ)` over levels.
    pub fn reconstruction_error(&self, prior: &DiffusionPrior) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (i, lv) in self.levels.iter().enumerate() {
            let inv = linalg::spd_inverse(&lv.sigma_bar, "latent posterior covariance")?;
            let expected = prior.cov(i + 2).precision() + &lv.g_bar;
            worst = worst.max((inv - expected).amax());
        }
        Ok(worst)
    }

    /// Text dump of each level's message and covariance.
    pub fn dump(&self) -> String {
        fn row(out: &mut String, key: &str, v: impl Iterator<Item = f64>) {
            out.push_str(key);
            for x in v {
                let _ = write!(out, " {x:.16e}");
            }
            out.push('\n');
        }
        let mut out = String::new();
        let _ = writeln!(out, "mode {:?}\nlevels {}", self.mode, self.levels.len());
        for (i, lv) in self.levels.iter().enumerate() {
            let _ = writeln!(out, "level {}", i + 1);
            row(&mut out, "g_bar", lv.g_bar.transpose().iter().copied());
            row(&mut out, "b_bar", lv.b_bar.iter().copied());
            row(&mut out, "sigma_bar", lv.sigma_bar.transpose().iter().copied());
        }
        out
    }
}
