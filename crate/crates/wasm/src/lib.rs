//! Browser bindings for the static demo page in `www/`.
//!
//! Three things can be done from the page: train a diffusion prior on a
//! Swiss roll and draw from it, watch the approximate posterior of a hidden
//! parameter concentrate as noisy rewards arrive, and compare cumulative
//! regret of dTS, LinTS and LinUCB on a random linear diffusion bandit.
//!
//! Points cross the boundary as flat `[x0, y0, x1, y1, ...]` arrays, and
//! seeds as `u32` so the page can pass plain numbers.

use dts_core::envs::{swiss_roll, SwissRollConfig};
use dts_core::glm::{ActionStats, DEFAULT_LOGISTIC_RIDGE};
use dts_core::harness::{aggregate, simulate_run, Environment, ExperimentConfig};
use dts_core::linalg::{self, Vector};
use dts_core::model::{ContextSampler, DiffusionPrior};
use dts_core::posterior::{chain_update, ChainMode};
use dts_core::pretrain::{generate, train, TrainConfig};
use dts_core::rng::{self, Purpose};
use dts_core::{Error, Result};
use wasm_bindgen::prelude::*;

pub const REGRET_AGENTS: [&str; 3] = ["dts", "lints", "linucb"];

fn flatten(points: &[Vector]) -> Vec<f64> {
    points.iter().flat_map(|p| p.iter().copied()).collect()
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
#[derive(Default)]
pub struct SwissRollDemo {
    data: Vec<Vector>,
    prior: Option<DiffusionPrior>,
}

impl SwissRollDemo {
    pub fn fit(&mut self, samples: usize, epochs: usize, levels: usize, hidden: usize, seed: u64) -> Result<Vec<f64>> {
        let roll = SwissRollConfig { count: samples, ..SwissRollConfig::default() };
        let data = swiss_roll(&roll, &mut rng::stream(seed, Purpose::Instance))?;
        let cfg = TrainConfig { levels, epochs, hidden, seed, ..TrainConfig::default() };
        let out = train(&data, &cfg)?;
        self.data = data;
        self.prior = Some(out.prior);
        Ok(out.losses)
    }

    fn trained(&self) -> Result<&DiffusionPrior> {
        self.prior.as_ref().ok_or_else(|| Error::InvalidParameter("train the prior first".into()))
    }

    pub fn draw(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        Ok(flatten(&generate(self.trained()?, count, &mut rng::stream(seed, Purpose::Evaluation))?))
    }

    /// Hides `theta`, observes `n` rewards `xᵀθ + σε` with uniform contexts
    /// and returns `count` approximate posterior draws.
    pub fn posterior_draws(&self, theta: &[f64], n: usize, sigma: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
        let prior = self.trained()?;
        linalg::check_dim(prior.dim(), theta.len())?;
        let theta = Vector::from_column_slice(theta);
        let contexts = ContextSampler::Uniform { d: theta.len(), unit_norm: false };
        let mut ctx_rng = rng::stream(seed, Purpose::Contexts);
        let mut noise_rng = rng::stream(seed, Purpose::Rewards);
        let mut stats = ActionStats::empty(theta.len());
        for _ in 0..n {
            let x = contexts.sample(&mut ctx_rng);
            let y = x.dot(&theta) + sigma * linalg::standard_normal(1, &mut noise_rng)[0];
            stats.push_linear(&x, y, sigma, DEFAULT_LOGISTIC_RIDGE)?;
        }
        let chain = chain_update(prior, std::slice::from_ref(&stats), ChainMode::NonLinearApprox)?;
        let mut r = rng::stream(seed, Purpose::Agent);
        let draws = (0..count)
            .map(|_| Ok(chain.hierarchical_sample(prior, &mut r)?.thetas.remove(0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(flatten(&draws))
    }
}

#[wasm_bindgen]
impl SwissRollDemo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Self {
        Self::default()
    }

    /// Trains on `samples` fresh Swiss-roll points; returns the loss curve.
    pub fn train(
        &mut self,
        samples: usize,
        epochs: usize,
        levels: usize,
        hidden: usize,
        seed: u32,
    ) -> std::result::Result<Vec<f64>, JsError> {
        self.fit(samples, epochs, levels, hidden, seed.into()).map_err(js)
    }

    #[wasm_bindgen(js_name = trainingData)]
    pub fn training_data(&self) -> Vec<f64> {
        flatten(&self.data)
    }

    pub fn sample(&self, count: usize, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
        self.draw(count, seed.into()).map_err(js)
    }

    pub fn posterior(
        &self,
        x: f64,
        y: f64,
        n: usize,
        sigma: f64,
        count: usize,
        seed: u32,
    ) -> std::result::Result<Vec<f64>, JsError> {
        self.posterior_draws(&[x, y], n, sigma, count, seed.into()).map_err(js)
    }
}

/// Mean cumulative regret per round for each of [`REGRET_AGENTS`],
/// concatenated. Runs are played one after another.
pub fn mean_regret_curves(k: usize, n: usize, runs: usize, seed: u64) -> Result<Vec<f64>> {
    let mut cfg = ExperimentConfig::default();
    cfg.env.k = k;
    cfg.env.sparsity = Some(vec![cfg.env.d, 2]);
    cfg.agent.names = REGRET_AGENTS.iter().map(|s| s.to_string()).collect();
    cfg.run.n = n;
    cfg.run.runs = runs;
    cfg.run.seed = seed;
    cfg.validate()?;
    let env = Environment::build(&cfg)?;
    let mut traces = vec![Vec::with_capacity(runs); REGRET_AGENTS.len()];
    for run in 0..runs {
        for (slot, (_, trace)) in traces.iter_mut().zip(simulate_run(&env, &cfg.agent.names, run)?) {
            slot.push(trace);
        }
    }
    Ok(traces.iter().flat_map(|t| aggregate(t).into_iter().map(|row| row.mean_cum)).collect())
}

#[wasm_bindgen(js_name = regretCurves)]
pub fn regret_curves(k: usize, n: usize, runs: usize, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    mean_regret_curves(k, n, runs, seed.into()).map_err(js)
}
