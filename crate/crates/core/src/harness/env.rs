use std::sync::Arc;

use rand::seq::index;
use rand::Rng;

use super::config::{ContextKind, EnvKind, ExperimentConfig, LinTsPrior, ModeChoice, RewardKind, AGENT_KEYS};
use crate::agents::{
    hierts_agent, Agent, DtsAgent, GlmTsAgent, HierVariant, LinTsAgent, LinUcbAgent, OracleAgent, UcbGlmAgent,
    UniformAgent,
};
use crate::envs::{
    als_factorize, ingest_ratings, perturb_prior, random_linear_prior, random_mlp_prior, sample_instance, swiss_roll,
    AlsConfig, SwissRollConfig,
};
use crate::linalg::{Matrix, Vector};
use crate::model::{load_prior, ActionParams, BanditInstance, ContextSampler, DiffusionPrior, RewardModel};
use crate::posterior::ChainMode;
use crate::pretrain::{self, TrainConfig};
use crate::rng::{self, Purpose, StreamRng};
use crate::{Error, Result};

/// Everything shared by the runs of one experiment: the true parameter
/// distribution and the prior handed to the agents.
///
/// With `resample_prior`, random priors are redrawn per run and
/// [`Environment::run_setup`] returns the run's own pair.
pub struct Environment {
    cfg: ExperimentConfig,
    reward: RewardModel,
    true_prior: Option<Arc<DiffusionPrior>>,
    agent_prior: Option<Arc<DiffusionPrior>>,
    /// Item parameters and normalised user contexts for ratings data.
    items: Option<(Vec<Vector>, Vec<Vector>)>,
}

impl Environment {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let e = &cfg.env;
        let reward = match e.reward {
            RewardKind::Linear => RewardModel::linear(e.sigma)?,
            RewardKind::Logistic => RewardModel::LogisticBernoulli,
        };
        let true_prior = match e.kind {
            EnvKind::LinearDiffusion | EnvKind::NonlinearDiffusion => Some(random_prior(cfg, cfg.run.seed)?),
            EnvKind::PriorFile => Some(load_prior(e.prior_file.as_ref().expect("validated"))?),
            EnvKind::SwissRoll | EnvKind::Movielens => None,
        }
        .map(Arc::new);
        let items = match e.kind {
            EnvKind::Movielens => {
                let table = ingest_ratings(e.ratings_file.as_ref().expect("validated"))?;
                let als = AlsConfig { rank: e.d, lambda: e.als_lambda, sweeps: e.als_sweeps, seed: cfg.run.seed };
                let inst =
                    crate::envs::movielens_instance(&als_factorize(&table, &als)?, e.sigma.max(f64::MIN_POSITIVE))?;
                match (inst.params, inst.contexts) {
                    (ActionParams::PerAction(thetas), ContextSampler::Pool(users)) => {
                        if thetas.len() < e.k {
                            return Err(Error::Config(format!(
                                "ratings have {} items, fewer than k = {}",
                                thetas.len(),
                                e.k
                            )));
                        }
                        Some((thetas, users))
                    }
                    _ => unreachable!("ratings instances use per-item parameters and a user pool"),
                }
            }
            _ => None,
        };
        let mut env = Self { cfg: cfg.clone(), reward, true_prior, agent_prior: None, items };
        let mut agent_prior = if let Some(path) = e.prior_file.as_ref().filter(|_| e.kind != EnvKind::PriorFile) {
            Some(Arc::new(load_prior(path)?))
        } else if e.pretrain_samples > 0 {
            let mut r = rng::stream(cfg.run.seed, Purpose::Pretrain);
            let samples = env.independent_thetas(e.pretrain_samples, &mut r)?;
            let tc = TrainConfig {
                levels: e.pretrain_levels,
                hidden: e.pretrain_hidden,
                epochs: e.pretrain_epochs,
                beta_max: e.beta_max,
                seed: cfg.run.seed,
                ..TrainConfig::default()
            };
            Some(Arc::new(pretrain::train(&samples, &tc)?.prior))
        } else {
            env.true_prior.clone()
        };
        if let (Some(shift), Some(p)) = (e.misspec_shift, &agent_prior) {
            agent_prior = Some(Arc::new(misspecify(p, shift, cfg.run.seed)?));
        }
        if let Some(p) = &agent_prior {
            if p.dim() != e.d {
                return Err(Error::Config(format!("agent prior has dimension {}, env.d is {}", p.dim(), e.d)));
            }
        }
        env.agent_prior = agent_prior;
        Ok(env)
    }

    fn resamples(&self) -> bool {
        self.cfg.env.resample_prior
            && matches!(self.cfg.env.kind, EnvKind::LinearDiffusion | EnvKind::NonlinearDiffusion)
            && self.cfg.env.pretrain_samples == 0
            && self.cfg.env.prior_file.is_none()
    }

    /// Instance and agent prior for the run with seed `seed`.
    pub fn run_setup(&self, seed: u64) -> Result<(BanditInstance, Option<Arc<DiffusionPrior>>)> {
        if !self.resamples() {
            return Ok((self.instance(seed)?, self.agent_prior.clone()));
        }
        let truth = random_prior(&self.cfg, seed)?;
        let instance = sample_instance(
            &truth,
            self.cfg.env.k,
            self.reward,
            self.contexts(),
            &mut rng::stream(seed, Purpose::Instance),
        )?;
        let agent = match self.cfg.env.misspec_shift {
            Some(shift) => misspecify(&truth, shift, seed)?,
            None => truth,
        };
        Ok((instance, Some(Arc::new(agent))))
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn reward(&self) -> RewardModel {
        self.reward
    }

    pub fn true_prior(&self) -> Option<&Arc<DiffusionPrior>> {
        self.true_prior.as_ref()
    }

    pub fn agent_prior(&self) -> Option<&Arc<DiffusionPrior>> {
        self.agent_prior.as_ref()
    }

    /// Independent draws of a single action parameter.
    pub fn independent_thetas(&self, count: usize, rng: &mut impl Rng) -> Result<Vec<Vector>> {
        if let Some(p) = &self.true_prior {
            return pretrain::generate(p, count, rng);
        }
        if let Some((thetas, _)) = &self.items {
            return Ok((0..count).map(|_| thetas[rng.random_range(0..thetas.len())].clone()).collect());
        }
        swiss_roll(&SwissRollConfig { count, ..Default::default() }, rng)
    }

    fn contexts(&self) -> ContextSampler {
        match &self.items {
            Some((_, users)) => ContextSampler::Pool(users.clone()),
            None => {
                ContextSampler::Uniform { d: self.cfg.env.d, unit_norm: self.cfg.env.contexts == ContextKind::UnitNorm }
            }
        }
    }

    /// Fresh instance for the run with seed `seed`.
    pub fn instance(&self, seed: u64) -> Result<BanditInstance> {
        let mut r = rng::stream(seed, Purpose::Instance);
        let k = self.cfg.env.k;
        if let Some(p) = &self.true_prior {
            return sample_instance(p, k, self.reward, self.contexts(), &mut r);
        }
        let thetas = match &self.items {
            Some((items, _)) => index::sample(&mut r, items.len(), k).into_iter().map(|i| items[i].clone()).collect(),
            None => swiss_roll(&SwissRollConfig { count: k, ..Default::default() }, &mut r)?,
        };
        BanditInstance::new(ActionParams::PerAction(thetas), self.reward, self.contexts())
    }

    fn lints_cov(&self, prior: Option<&Arc<DiffusionPrior>>) -> Result<Matrix> {
        let d = self.cfg.env.d;
        let iso = Matrix::identity(d, d) * self.cfg.agent.sigma0.powi(2);
        match (self.cfg.agent.lints_prior, prior) {
            (LinTsPrior::Auto, Some(p)) if p.is_linear() => p.marginal_covariance(),
            _ => Ok(iso),
        }
    }

    /// Noise level assumed by Gaussian-likelihood baselines.
    fn gaussian_sigma(&self) -> f64 {
        match self.reward {
            RewardModel::LinearGaussian { sigma } => sigma,
            RewardModel::LogisticBernoulli => 0.5,
        }
    }

    /// Builds agent `key` for one run; `prior` is the run's agent prior.
    pub fn make_agent(
        &self,
        key: &str,
        prior: Option<&Arc<DiffusionPrior>>,
        instance: &BanditInstance,
        rng: StreamRng,
    ) -> Result<Box<dyn Agent>> {
        let require_prior = |who: &str| {
            prior.ok_or_else(|| {
                Error::Config(format!("{who} needs a prior: set env.prior_file or env.pretrain_samples"))
            })
        };
        let a = &self.cfg.agent;
        let (d, k) = (self.cfg.env.d, self.cfg.env.k);
        Ok(match key {
            "dts" => {
                let p = require_prior("dts")?.clone();
                let mode = match a.mode {
                    ModeChoice::Exact => ChainMode::LinearExact,
                    ModeChoice::Approx => ChainMode::NonLinearApprox,
                    ModeChoice::Auto if p.is_linear() => ChainMode::LinearExact,
                    ModeChoice::Auto => ChainMode::NonLinearApprox,
                };
                Box::new(DtsAgent::new(p, k, self.reward, mode, a.ridge, rng)?)
            }
            "hierts1" | "hierts2" => {
                let v = if key == "hierts1" { HierVariant::KeepTop } else { HierVariant::KeepBottom };
                Box::new(hierts_agent(require_prior(key)?, v, k, self.reward, a.ridge, rng)?)
            }
            "lints" => Box::new(LinTsAgent::new(self.lints_cov(prior)?, self.gaussian_sigma(), k, rng)?),
            "linucb" => Box::new(LinUcbAgent::new(d, k, a.alpha, a.lambda)?),
            "glmts" => Box::new(GlmTsAgent::new(self.reward, d, k, a.lambda, a.inflation, rng)?),
            "ucbglm" => Box::new(UcbGlmAgent::new(self.reward, d, k, a.lambda, a.alpha)?),
            "uniform" => Box::new(UniformAgent::new(k, rng)),
            "oracle" => Box::new(OracleAgent::new(instance.clone())),
            other => return Err(Error::Config(format!("unknown agent {other:?}; expected one of {AGENT_KEYS:?}"))),
        })
    }
}

fn random_prior(cfg: &ExperimentConfig, seed: u64) -> Result<DiffusionPrior> {
    let e = &cfg.env;
    let mut r = rng::stream(seed, Purpose::Prior);
    let sigma2s = e.variances();
    match e.kind {
        EnvKind::LinearDiffusion => random_linear_prior(e.d, e.levels, e.sparsity.as_deref(), &sigma2s, &mut r),
        _ => random_mlp_prior(e.d, e.levels, e.hidden, &sigma2s, &mut r),
    }
}

fn misspecify(prior: &DiffusionPrior, shift: f64, seed: u64) -> Result<DiffusionPrior> {
    perturb_prior(prior, shift, &mut rng::stream(seed, Purpose::Misspecification))
}
