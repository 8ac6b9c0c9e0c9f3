use rand::Rng;

use super::RewardModel;
use crate::linalg::Vector;
use crate::{Error, Result};

/// How contexts are drawn each round.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextSampler {
    /// Uniform on `[-1, 1]^d`, optionally rescaled to unit norm.
    Uniform {
        d: usize,
        unit_norm: bool,
    },
    /// Uniformly chosen member of a fixed pool.
    Pool(Vec<Vector>),
    Fixed(Vector),
}

impl ContextSampler {
    pub fn dim(&self) -> usize {
        match self {
            ContextSampler::Uniform { d, .. } => *d,
            ContextSampler::Pool(p) => p.first().map_or(0, |v| v.len()),
            ContextSampler::Fixed(x) => x.len(),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vector {
        match self {
            ContextSampler::Uniform { d, unit_norm } => {
                let x = Vector::from_fn(*d, |_, _| rng.random_range(-1.0..=1.0));
                let norm = x.norm();
                if *unit_norm && norm > 0.0 {
                    x / norm
                } else {
                    x
                }
            }
            ContextSampler::Pool(pool) => pool[rng.random_range(0..pool.len())].clone(),
            ContextSampler::Fixed(x) => x.clone(),
        }
    }
}

/// Shared-parameter feature map `φ(x, a) = x ∘ e_a` (entrywise product with
/// a per-action embedding).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub embeddings: Vec<Vector>,
}

impl FeatureMap {
    pub fn features(&self, x: &Vector, action: usize) -> Vector {
        x.component_mul(&self.embeddings[action])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionParams {
    PerAction(Vec<Vector>),
    Shared { theta: Vector, features: FeatureMap },
}

/// True environment for one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    pub params: ActionParams,
    pub reward: RewardModel,
    pub contexts: ContextSampler,
    /// Latent draws that produced the parameters, kept for diagnostics.
    pub latents: Vec<Vector>,
}

impl BanditInstance {
    pub fn new(params: ActionParams, reward: RewardModel, contexts: ContextSampler) -> Result<Self> {
        let k = match &params {
            ActionParams::PerAction(t) => t.len(),
            ActionParams::Shared { features, .. } => features.embeddings.len(),
        };
        if k < 2 {
            return Err(Error::invalid(format!("need at least 2 actions, got {k}")));
        }
        let inst = Self { params, reward, contexts, latents: Vec::new() };
        let d = inst.dim();
        if inst.contexts.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: inst.contexts.dim() });
        }
        Ok(inst)
    }

    pub fn with_latents(mut self, latents: Vec<Vector>) -> Self {
        self.latents = latents;
        self
    }

    pub fn num_actions(&self) -> usize {
        match &self.params {
            ActionParams::PerAction(t) => t.len(),
            ActionParams::Shared { features, .. } => features.embeddings.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.params {
            ActionParams::PerAction(t) => t[0].len(),
            ActionParams::Shared { theta, .. } => theta.len(),
        }
    }

    pub fn expected_reward(&self, x: &Vector, action: usize) -> f64 {
        match &self.params {
            ActionParams::PerAction(t) => self.reward.expected_reward(x, &t[action]),
            ActionParams::Shared { theta, features } => {
                self.reward.expected_reward(&features.features(x, action), theta)
            }
        }
    }

    pub fn sample_reward(&self, x: &Vector, action: usize, rng: &mut impl Rng) -> f64 {
        match &self.params {
            ActionParams::PerAction(t) => self.reward.sample(x, &t[action], rng),
            ActionParams::Shared { theta, features } => self.reward.sample(&features.features(x, action), theta, rng),
        }
    }

    /// Best action (lowest index among ties) and its mean reward.
    pub fn best(&self, x: &Vector) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..self.num_actions() {
            let r = self.expected_reward(x, a);
            if r > best.1 {
                best = (a, r);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_norm_contexts() {
        let s = ContextSampler::Uniform { d: 4, unit_norm: true };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert!((s.sample(&mut rng).norm() - 1.0).abs() < 1e-12);
        }
        let raw = ContextSampler::Uniform { d: 4, unit_norm: false };
        assert!(raw.sample(&mut rng).amax() <= 1.0);
    }

    #[test]
    fn best_action_and_shared_features() {
        let inst = BanditInstance::new(
            ActionParams::PerAction(vec![dvector![1.0, 0.0], dvector![0.0, 1.0]]),
            RewardModel::linear(0.0).unwrap(),
            ContextSampler::Fixed(dvector![1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(inst.best(&dvector![1.0, 0.0]), (0, 1.0));
        assert_eq!(inst.best(&dvector![0.0, 2.0]), (1, 2.0));

        let shared = BanditInstance::new(
            ActionParams::Shared {
                theta: dvector![1.0, 2.0],
                features: FeatureMap { embeddings: vec![dvector![1.0, 0.0], dvector![0.0, 1.0]] },
            },
            RewardModel::linear(0.0).unwrap(),
            ContextSampler::Fixed(dvector![1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(shared.expected_reward(&dvector![1.0, 1.0], 1), 2.0);
    }

    #[test]
    fn rejects_single_action() {
        let r = BanditInstance::new(
            ActionParams::PerAction(vec![dvector![1.0]]),
            RewardModel::LogisticBernoulli,
            ContextSampler::Fixed(dvector![1.0]),
        );
        assert!(r.is_err());
    }
}
