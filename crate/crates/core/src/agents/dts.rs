use std::sync::Arc;

use super::{Agent, Decision};
use crate::glm::{self, ActionStats, Observation};
use crate::linalg::Vector;
use crate::model::{link_apply, DiffusionPrior, FeatureMap, RewardModel};
use crate::posterior::{chain_update, shared_chain_update, ChainMode, PosteriorChain};
use crate::rng::StreamRng;
use crate::{Error, Result};

/// Thompson sampling with a diffusion prior over per-action parameters.
pub struct DtsAgent {
    name: String,
    prior: Arc<DiffusionPrior>,
    model: RewardModel,
    ridge: f64,
    logs: Vec<Vec<Observation>>,
    stats: Vec<ActionStats>,
    chain: PosteriorChain,
    rng: StreamRng,
}

impl DtsAgent {
    /// `model` is the reward model the agent assumes, which need not match
    /// the environment.
    pub fn new(
        prior: Arc<DiffusionPrior>,
        k: usize,
        model: RewardModel,
        mode: ChainMode,
        ridge: f64,
        rng: StreamRng,
    ) -> Result<Self> {
        if mode == ChainMode::SharedParam {
            return Err(Error::invalid("use SharedDtsAgent for the shared-parameter model"));
        }
        if let RewardModel::LinearGaussian { sigma } = model {
            if !(sigma > 0.0) {
                return Err(Error::invalid("agent reward noise must be positive"));
            }
        }
        let stats = vec![ActionStats::empty(prior.dim()); k];
        let chain = chain_update(&prior, &stats, mode)?;
        Ok(Self { name: "dTS".into(), prior, model, ridge, logs: vec![Vec::new(); k], stats, chain, rng })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn chain(&self) -> &PosteriorChain {
        &self.chain
    }

    pub fn stats(&self) -> &[ActionStats] {
        &self.stats
    }

    pub fn prior(&self) -> &DiffusionPrior {
        &self.prior
    }
}

impl Agent for DtsAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, x: &Vector) -> Result<Decision> {
        let draw = self.chain.hierarchical_sample(&self.prior, &mut self.rng)?;
        let scores = draw.thetas.iter().map(|t| self.model.expected_reward(x, t)).collect();
        Ok(Decision::from_scores(scores, draw.thetas))
    }

    fn update(&mut self, x: &Vector, action: usize, reward: f64) -> Result<()> {
        let k = self.stats.len();
        let s = self.stats.get_mut(action).ok_or_else(|| Error::invalid(format!("action {action} >= {k}")))?;
        match self.model {
            RewardModel::LinearGaussian { sigma } => s.push_linear(x, reward, sigma, self.ridge)?,
            RewardModel::LogisticBernoulli => {
                self.logs[action].push(Observation::new(x.clone(), reward));
                *s = glm::fit_from(&self.logs[action], &self.model, self.ridge, x.len(), Some(&s.b_hat))?;
            }
        }
        self.chain.refresh_action(&self.prior, action, &self.stats[action])
    }
}

/// Thompson sampling when all actions share one parameter seen through a
/// feature map.
pub struct SharedDtsAgent {
    prior: Arc<DiffusionPrior>,
    model: RewardModel,
    features: FeatureMap,
    ridge: f64,
    log: Vec<Observation>,
    stats: ActionStats,
    chain: PosteriorChain,
    rng: StreamRng,
}

impl SharedDtsAgent {
    pub fn new(
        prior: Arc<DiffusionPrior>,
        features: FeatureMap,
        model: RewardModel,
        ridge: f64,
        rng: StreamRng,
    ) -> Result<Self> {
        let stats = ActionStats::empty(prior.dim());
        let chain = shared_chain_update(&prior, &stats)?;
        Ok(Self { prior, model, features, ridge, log: Vec::new(), stats, chain, rng })
    }

    pub fn chain(&self) -> &PosteriorChain {
        &self.chain
    }
}

impl Agent for SharedDtsAgent {
    fn name(&self) -> &str {
        "dTS-shared"
    }

    fn act(&mut self, x: &Vector) -> Result<Decision> {
        let latents = self.chain.sample_latents(&self.prior, &mut self.rng)?;
        let f1 = link_apply(self.prior.link(1), &latents[0])?;
        let theta = self.chain.action(0).sample(&f1, &mut self.rng);
        let scores = (0..self.features.embeddings.len())
            .map(|a| self.model.expected_reward(&self.features.features(x, a), &theta))
            .collect();
        Ok(Decision::from_scores(scores, vec![theta]))
    }

    fn update(&mut self, x: &Vector, action: usize, reward: f64) -> Result<()> {
        let phi = self.features.features(x, action);
        match self.model {
            RewardModel::LinearGaussian { sigma } => self.stats.push_linear(&phi, reward, sigma, self.ridge)?,
            RewardModel::LogisticBernoulli => {
                self.log.push(Observation::new(phi, reward));
                self.stats = glm::fit_from(&self.log, &self.model, self.ridge, x.len(), Some(&self.stats.b_hat))?;
            }
        }
        self.chain.refresh_action(&self.prior, 0, &self.stats)
    }
}
