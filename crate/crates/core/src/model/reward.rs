use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::Vector;
use crate::{Error, Result};

/// Numerically stable logistic function.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^u)` without overflow.
pub fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardModel {
    /// `y ~ N(xᵀθ, sigma²)`.
    LinearGaussian { sigma: f64 },
    /// `y ~ Bernoulli(sigmoid(xᵀθ))`.
    LogisticBernoulli,
}

impl RewardModel {
    pub fn linear(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("reward noise must be non-negative, got {sigma}")));
        }
        Ok(RewardModel::LinearGaussian { sigma })
    }

    /// Mean function `g`.
    pub fn mean(&self, u: f64) -> f64 {
        match self {
            RewardModel::LinearGaussian { .. } => u,
            RewardModel::LogisticBernoulli => sigmoid(u),
        }
    }

    /// Derivative of the mean function.
    pub fn mean_derivative(&self, u: f64) -> f64 {
        match self {
            RewardModel::LinearGaussian { .. } => 1.0,
            RewardModel::LogisticBernoulli => {
                let p = sigmoid(u);
                p * (1.0 - p)
            }
        }
    }

    pub fn expected_reward(&self, x: &Vector, theta: &Vector) -> f64 {
        self.mean(x.dot(theta))
    }

    /// Draws one reward. Consumes exactly one variate from `rng` per call so
    /// that agents facing the same instance see common random numbers.
    pub fn sample(&self, x: &Vector, theta: &Vector, rng: &mut impl Rng) -> f64 {
        let u = x.dot(theta);
        match self {
            RewardModel::LinearGaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                u + sigma * z
            }
            RewardModel::LogisticBernoulli => {
                let v: f64 = rng.random();
                if v < sigmoid(u) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RewardModel::LinearGaussian { .. } => "linear",
            RewardModel::LogisticBernoulli => "logistic",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_linear_reward_is_inner_product() {
        let m = RewardModel::linear(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(m.sample(&dvector![1.0, 0.0], &dvector![3.0, 5.0], &mut rng), 3.0);
        assert_eq!(m.expected_reward(&dvector![2.0], &dvector![1.5]), 3.0);
    }

    #[test]
    fn logistic_means() {
        let m = RewardModel::LogisticBernoulli;
        assert_eq!(m.expected_reward(&dvector![0.0], &dvector![1.0]), 0.5);
        assert!((m.mean(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn logistic_frequency_at_zero() {
        let m = RewardModel::LogisticBernoulli;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = dvector![1.0];
        let th = dvector![0.0];
        let n = 100_000;
        let ones: f64 = (0..n).map(|_| m.sample(&x, &th, &mut rng)).sum();
        assert!((ones / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn logistic_saturates() {
        let m = RewardModel::LogisticBernoulli;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(1.0 - sigmoid(50.0) <= 1e-20);
        for _ in 0..1000 {
            assert_eq!(m.sample(&dvector![1.0], &dvector![50.0], &mut rng), 1.0);
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
    }
}
