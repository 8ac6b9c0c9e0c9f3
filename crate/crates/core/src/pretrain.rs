//! Fits a diffusion prior to parameter samples by training a noise
//! predictor, then reads the chain's link functions off the predictor.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::linalg::{self, Matrix, Vector};
use crate::model::{Covariance, DiffusionPrior, Init, LinkFn, MlpNet, NoiseSchedule, VarianceChoice};
use crate::rng::{self, Purpose};
use crate::{Error, Result};

pub use crate::model::make_schedule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub levels: usize,
    pub hidden: usize,
    /// Number of hidden layers in the noise predictor.
    pub hidden_layers: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub variance: VarianceChoice,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            levels: 40,
            hidden: 64,
            hidden_layers: 2,
            lr: 1e-3,
            epochs: 20_000,
            batch: 2048,
            beta_min: 1e-4,
            beta_max: 0.2,
            variance: VarianceChoice::Tilde,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub prior: DiffusionPrior,
    /// Mean squared noise residual per epoch.
    pub losses: Vec<f64>,
}

/// First and second moment estimates for [`adam_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) {
    assert_eq!(params.len(), grads.len(), "gradient length");
    assert_eq!(params.len(), state.m.len(), "moment length");
    state.t += 1;
    let c1 = 1.0 - ADAM_B1.powi(state.t as i32);
    let c2 = 1.0 - ADAM_B2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = ADAM_B1 * state.m[i] + (1.0 - ADAM_B1) * g;
        state.v[i] = ADAM_B2 * state.v[i] + (1.0 - ADAM_B2) * g * g;
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        params[i] -= lr * mh / (vh.sqrt() + ADAM_EPS);
    }
}

/// Jumps `x0` straight to level `level`: `√ᾱ x0 + √(1-ᾱ) ε`.
pub fn forward_noise(x0: &Vector, level: usize, schedule: &NoiseSchedule, rng: &mut impl Rng) -> (Vector, Vector) {
    let eps = linalg::standard_normal(x0.len(), rng);
    let ab = schedule.alpha_bar(level);
    (x0 * ab.sqrt() + &eps * (1.0 - ab).sqrt(), eps)
}

fn validate(samples: &[Vector], cfg: &TrainConfig) -> Result<usize> {
    let d = samples.first().map(|s| s.len()).ok_or_else(|| Error::invalid("no training samples"))?;
    if d == 0 {
        return Err(Error::invalid("samples must have positive dimension"));
    }
    for s in samples {
        linalg::check_dim(d, s.len())?;
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training sample"));
        }
    }
    if cfg.levels == 0 || cfg.hidden == 0 || cfg.hidden_layers == 0 || cfg.batch == 0 {
        return Err(Error::invalid("levels, hidden, hidden_layers and batch must be positive"));
    }
    if !(cfg.lr > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    Ok(d)
}

/// Wraps a trained noise predictor as a diffusion prior.
pub fn prior_from_denoiser(net: MlpNet, schedule: NoiseSchedule, variance: VarianceChoice) -> Result<DiffusionPrior> {
    let d = net.output_dim();
    let levels = schedule.levels();
    let covs = (1..=levels).map(|l| Covariance::isotropic(d, schedule.variance(l, variance))).collect::<Result<_>>()?;
    let net = Arc::new(net);
    let schedule = Arc::new(schedule);
    let links = (1..=levels)
        .map(|level| LinkFn::DdpmEps { denoiser: net.clone(), schedule: schedule.clone(), level })
        .collect();
    DiffusionPrior::new(links, covs, Covariance::isotropic(d, 1.0)?)
}

pub fn train(samples: &[Vector], cfg: &TrainConfig) -> Result<TrainOutcome> {
    let d = validate(samples, cfg)?;
    let schedule = make_schedule(cfg.levels, cfg.beta_min, cfg.beta_max)?;
    let mut rng = rng::stream(cfg.seed, Purpose::Pretrain);
    let mut sizes = vec![d + 1];
    sizes.extend(std::iter::repeat_n(cfg.hidden, cfg.hidden_layers));
    sizes.push(d);
    let mut net = MlpNet::random(&sizes, true, Init::FanIn, &mut rng)?;
    let mut params = net.params();
    let mut adam = AdamState::new(params.len());
    let n = samples.len();
    let batch = cfg.batch.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let b = chunk.len();
            let mut input = Matrix::zeros(d + 1, b);
            let mut target = Matrix::zeros(d, b);
            for (col, &i) in chunk.iter().enumerate() {
                let level = rng.random_range(1..=cfg.levels);
                let (x, eps) = forward_noise(&samples[i], level, &schedule, &mut rng);
                input.view_mut((0, col), (d, 1)).copy_from(&x);
                input[(d, col)] = level as f64 / cfg.levels as f64;
                target.set_column(col, &eps);
            }
            let (loss, grads) = net.mse_gradient(&input, &target);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            adam_step(&mut params, &grads, &mut adam, cfg.lr);
            net.set_params(&params);
            total += loss * b as f64;
        }
        losses.push(total / n as f64);
    }
    Ok(TrainOutcome { prior: prior_from_denoiser(net, schedule, cfg.variance)?, losses })
}

/// `epoch,loss` CSV text.
pub fn loss_curve_csv(losses: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(out, "{i},{l:.16e}");
    }
    out
}

/// Draws `count` independent parameters from a prior.
pub fn generate(prior: &DiffusionPrior, count: usize, rng: &mut impl Rng) -> Result<Vec<Vector>> {
    (0..count).map(|_| Ok(prior.sample(1, rng)?.thetas.remove(0))).collect()
}
