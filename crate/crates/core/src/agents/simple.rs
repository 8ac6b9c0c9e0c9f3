use rand::Rng;

use super::{Agent, Decision};
use crate::linalg::Vector;
use crate::model::BanditInstance;
use crate::rng::StreamRng;
use crate::Result;

/// Acts on the true parameters; its regret is zero by construction.
pub struct OracleAgent {
    instance: BanditInstance,
}

impl OracleAgent {
    pub fn new(instance: BanditInstance) -> Self {
        Self { instance }
    }
}

impl Agent for OracleAgent {
    fn name(&self) -> &str {
        "Oracle"
    }

    fn act(&mut self, x: &Vector) -> Result<Decision> {
        let scores = (0..self.instance.num_actions()).map(|a| self.instance.expected_reward(x, a)).collect();
        Ok(Decision::from_scores(scores, Vec::new()))
    }

    fn update(&mut self, _: &Vector, _: usize, _: f64) -> Result<()> {
        Ok(())
    }
}

/// Picks an action uniformly at random.
pub struct UniformAgent {
    k: usize,
    rng: StreamRng,
}

impl UniformAgent {
    pub fn new(k: usize, rng: StreamRng) -> Self {
        Self { k, rng }
    }
}

impl Agent for UniformAgent {
    fn name(&self) -> &str {
        "Uniform"
    }

    fn act(&mut self, _: &Vector) -> Result<Decision> {
        let action = self.rng.random_range(0..self.k);
        let mut scores = vec![0.0; self.k];
        scores[action] = 1.0;
        Ok(Decision { action, scores, params: Vec::new() })
    }

    fn update(&mut self, _: &Vector, _: usize, _: f64) -> Result<()> {
        Ok(())
    }
}
