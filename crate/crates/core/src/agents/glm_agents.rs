use super::linear::quadratic_form;
use super::{Agent, Decision};
use crate::glm::{self, ActionStats, Observation};
use crate::linalg::{self, sample_gaussian, Matrix, Vector};
use crate::model::RewardModel;
use crate::rng::StreamRng;
use crate::{Error, Result};

/// Per-action GLM fits shared by the two GLM baselines.
struct GlmBeliefs {
    model: RewardModel,
    lambda: f64,
    ridge: f64,
    logs: Vec<Vec<Observation>>,
    stats: Vec<ActionStats>,
    /// `(Ĝ + λI)⁻¹` and its Cholesky factor.
    cov: Vec<(Matrix, Matrix)>,
}

impl GlmBeliefs {
    fn new(model: RewardModel, d: usize, k: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::invalid("lambda must be positive"));
        }
        let ridge = match model {
            RewardModel::LogisticBernoulli => glm::DEFAULT_LOGISTIC_RIDGE,
            RewardModel::LinearGaussian { .. } => 1e-6,
        };
        let c = Matrix::identity(d, d) / lambda;
        let l = Matrix::identity(d, d) / lambda.sqrt();
        Ok(Self {
            model,
            lambda,
            ridge,
            logs: vec![Vec::new(); k],
            stats: vec![ActionStats::empty(d); k],
            cov: vec![(c, l); k],
        })
    }

    fn update(&mut self, x: &Vector, a: usize, y: f64) -> Result<()> {
        self.logs[a].push(Observation::new(x.clone(), y));
        let d = x.len();
        self.stats[a] = glm::fit_from(&self.logs[a], &self.model, self.ridge, d, Some(&self.stats[a].b_hat))?;
        let m = &self.stats[a].g_hat + Matrix::identity(d, d) * self.lambda;
        let c = linalg::spd_inverse(&m, "GLM precision")?;
        let l = linalg::cholesky(&c, "GLM covariance")?.l();
        self.cov[a] = (c, l);
        Ok(())
    }
}

/// Thompson sampling from a per-action Laplace approximation.
pub struct GlmTsAgent {
    beliefs: GlmBeliefs,
    inflation: f64,
    rng: StreamRng,
}

impl GlmTsAgent {
    pub fn new(model: RewardModel, d: usize, k: usize, lambda: f64, inflation: f64, rng: StreamRng) -> Result<Self> {
        if !(inflation > 0.0) {
            return Err(Error::invalid("inflation must be positive"));
        }
        Ok(Self { beliefs: GlmBeliefs::new(model, d, k, lambda)?, inflation, rng })
    }
}

impl Agent for GlmTsAgent {
    fn name(&self) -> &str {
        "GLM-TS"
    }

    fn act(&mut self, x: &Vector) -> Result<Decision> {
        let s = self.inflation.sqrt();
        let b = &self.beliefs;
        let params: Vec<Vector> =
            (0..b.stats.len()).map(|a| sample_gaussian(&b.stats[a].b_hat, &(&b.cov[a].1 * s), &mut self.rng)).collect();
        let scores = params.iter().map(|t| b.model.expected_reward(x, t)).collect();
        Ok(Decision::from_scores(scores, params))
    }

    fn update(&mut self, x: &Vector, action: usize, reward: f64) -> Result<()> {
        self.beliefs.update(x, action, reward)
    }
}

/// Optimism in the face of uncertainty for GLM rewards.
pub struct UcbGlmAgent {
    beliefs: GlmBeliefs,
    alpha: f64,
}

impl UcbGlmAgent {
    pub fn new(model: RewardModel, d: usize, k: usize, lambda: f64, alpha: f64) -> Result<Self> {
        Ok(Self { beliefs: GlmBeliefs::new(model, d, k, lambda)?, alpha })
    }
}

impl Agent for UcbGlmAgent {
    fn name(&self) -> &str {
        "UCB-GLM"
    }

    fn act(&mut self, x: &Vector) -> Result<Decision> {
        let b = &self.beliefs;
        let scores = (0..b.stats.len())
            .map(|a| {
                b.model.expected_reward(x, &b.stats[a].b_hat)
                    + self.alpha * quadratic_form(&b.cov[a].0, x).max(0.0).sqrt()
            })
            .collect();
        Ok(Decision::from_scores(scores, b.stats.iter().map(|s| s.b_hat.clone()).collect()))
    }

    fn update(&mut self, x: &Vector, action: usize, reward: f64) -> Result<()> {
        self.beliefs.update(x, action, reward)
    }
}
