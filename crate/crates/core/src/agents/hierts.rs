use std::sync::Arc;

use super::DtsAgent;
use crate::linalg::{self, Matrix};
use crate::model::{Covariance, DiffusionPrior, LinkFn, RewardModel};
use crate::posterior::ChainMode;
use crate::rng::StreamRng;
use crate::Result;

/// Diagonal added to a marginalised covariance that is numerically singular.
pub const SINGULAR_EPS: f64 = 1e-8;

/// Which latent the two-level marginalisation keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HierVariant {
    /// Keep the top latent; fold intermediate levels into the action noise.
    KeepTop,
    /// Keep the bottom latent; fold all higher levels into its prior.
    KeepBottom,
}

fn regularised(m: Matrix) -> Result<Covariance> {
    let d = m.nrows();
    let m = linalg::symmetrize(&m);
    let scale = linalg::max_eigenvalue(&m).max(1.0);
    if linalg::min_eigenvalue(&m) < SINGULAR_EPS * scale {
        Covariance::from_matrix(&(m + Matrix::identity(d, d) * SINGULAR_EPS))
    } else {
        Covariance::from_matrix(&m)
    }
}

/// Collapses a linear chain into a one-level chain with identity link.
pub fn hierts_prior(prior: &DiffusionPrior, variant: HierVariant) -> Result<DiffusionPrior> {
    let products = prior.weight_products()?;
    let n = prior.levels();
    let d = prior.dim();
    let term = |l: usize| {
        let b = &products[l - 1];
        b * prior.cov(l + 1).matrix() * b.transpose()
    };
    let (action_cov, top_cov) = match variant {
        HierVariant::KeepTop => {
            let mut omega = prior.cov(1).matrix().clone();
            for l in 1..n {
                omega += term(l);
            }
            (Covariance::from_matrix(&omega)?, regularised(term(n))?)
        }
        HierVariant::KeepBottom => {
            let mut omega = Matrix::zeros(d, d);
            for l in 1..=n {
                omega += term(l);
            }
            (prior.cov(1).clone(), regularised(omega)?)
        }
    };
    DiffusionPrior::new(vec![LinkFn::Linear { weights: Matrix::identity(d, d) }], vec![action_cov], top_cov)
}

/// Two-level hierarchical Thompson sampling built from a linear chain.
pub fn hierts_agent(
    prior: &DiffusionPrior,
    variant: HierVariant,
    k: usize,
    model: RewardModel,
    ridge: f64,
    rng: StreamRng,
) -> Result<DtsAgent> {
    let two_level = Arc::new(hierts_prior(prior, variant)?);
    let name = match variant {
        HierVariant::KeepTop => "HierTS-1",
        HierVariant::KeepBottom => "HierTS-2",
    };
    Ok(DtsAgent::new(two_level, k, model, ChainMode::LinearExact, ridge, rng)?.with_name(name))
}
