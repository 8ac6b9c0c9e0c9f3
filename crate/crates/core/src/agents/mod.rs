//! Decision policies. Every agent owns its random stream, so a run is
//! reproducible given the seed.

mod dts;
mod glm_agents;
mod hierts;
mod linear;
mod simple;

pub use dts::{DtsAgent, SharedDtsAgent};
pub use glm_agents::{GlmTsAgent, UcbGlmAgent};
pub use hierts::{hierts_agent, hierts_prior, HierVariant};
pub use linear::{LinTsAgent, LinUcbAgent};
pub use simple::{OracleAgent, UniformAgent};

use crate::linalg::Vector;
use crate::Result;

/// Outcome of one `act` call.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: usize,
    pub scores: Vec<f64>,
    /// Sampled parameters for Thompson agents, empty otherwise.
    pub params: Vec<Vector>,
}

impl Decision {
    pub fn from_scores(scores: Vec<f64>, params: Vec<Vector>) -> Self {
        Self { action: argmax(&scores), scores, params }
    }
}

pub trait Agent: Send {
    fn name(&self) -> &str;
    fn act(&mut self, x: &Vector) -> Result<Decision>;
    fn update(&mut self, x: &Vector, action: usize, reward: f64) -> Result<()>;
}

/// Index of the largest score, lowest index among ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
