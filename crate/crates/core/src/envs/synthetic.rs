use rand::Rng;

use crate::linalg::Matrix;
use crate::model::ActionParams;
use crate::model::{BanditInstance, ContextSampler, Covariance, DiffusionPrior, Init, LinkFn, MlpNet, RewardModel};
use crate::{Error, Result};

fn isotropic_covs(d: usize, sigma2s: &[f64], levels: usize) -> Result<(Vec<Covariance>, Covariance)> {
    if sigma2s.len() != levels + 1 {
        return Err(Error::invalid(format!("need {} variances, got {}", levels + 1, sigma2s.len())));
    }
    let covs = sigma2s[..levels].iter().map(|&s| Covariance::isotropic(d, s)).collect::<Result<_>>()?;
    Ok((covs, Covariance::isotropic(d, sigma2s[levels])?))
}

/// Linear chain with weights uniform in `[-1, 1]`. When `active` is given,
/// level `ℓ` keeps only its first `active[ℓ-1]` columns.
pub fn random_linear_prior(
    d: usize,
    levels: usize,
    active: Option<&[usize]>,
    sigma2s: &[f64],
    rng: &mut impl Rng,
) -> Result<DiffusionPrior> {
    if d == 0 || levels == 0 {
        return Err(Error::invalid("d and levels must be positive"));
    }
    if let Some(a) = active {
        if a.len() != levels || a.iter().any(|&k| k == 0 || k > d) {
            return Err(Error::invalid(format!("sparsity dims {a:?} must have {levels} entries in 1..={d}")));
        }
    }
    let weights = (0..levels)
        .map(|l| {
            let keep = active.map_or(d, |a| a[l]);
            let mut w = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..=1.0));
            w.columns_mut(keep, d - keep).fill(0.0);
            w
        })
        .collect();
    DiffusionPrior::linear(weights, sigma2s)
}

/// Chain whose links are random two-layer rectifier networks with weights
/// uniform in `[-1, 1]`.
pub fn random_mlp_prior(
    d: usize,
    levels: usize,
    hidden: usize,
    sigma2s: &[f64],
    rng: &mut impl Rng,
) -> Result<DiffusionPrior> {
    let (covs, top) = isotropic_covs(d, sigma2s, levels)?;
    let links = (0..levels)
        .map(|_| Ok(LinkFn::MlpDirect { net: MlpNet::random(&[d, hidden, d], false, Init::Uniform(1.0), rng)? }))
        .collect::<Result<_>>()?;
    DiffusionPrior::new(links, covs, top)
}

/// Misspecified copy of a prior: every weight entry and every variance is
/// shifted by an independent draw from `U[shift, shift + 0.5]`.
/// Non-isotropic covariances and non-linear links are kept as they are.
pub fn perturb_prior(prior: &DiffusionPrior, shift: f64, rng: &mut impl Rng) -> Result<DiffusionPrior> {
    let mut draw = || rng.random_range(shift..=shift + 0.5);
    let links = prior
        .links()
        .iter()
        .map(|l| match l {
            LinkFn::Linear { weights } => LinkFn::Linear { weights: weights.map(|w| w + draw()) },
            other => other.clone(),
        })
        .collect();
    let mut bump = |c: &Covariance| match c.isotropic_variance() {
        Some(s) => Covariance::isotropic(c.dim(), s + draw()),
        None => Ok(c.clone()),
    };
    let covs = prior.covs().iter().map(&mut bump).collect::<Result<_>>()?;
    let top = bump(prior.top_cov())?;
    DiffusionPrior::new(links, covs, top)
}

/// Draws a bandit instance from the prior.
pub fn sample_instance(
    prior: &DiffusionPrior,
    k: usize,
    reward: RewardModel,
    contexts: ContextSampler,
    rng: &mut impl Rng,
) -> Result<BanditInstance> {
    let draw = prior.sample(k, rng)?;
    Ok(BanditInstance::new(ActionParams::PerAction(draw.thetas), reward, contexts)?.with_latents(draw.latents))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sparsity_zeroes_trailing_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = random_linear_prior(5, 2, Some(&[5, 2]), &[1.0; 3], &mut rng).unwrap();
        assert_eq!(p.link(1).active_columns(), Some(5));
        assert_eq!(p.link(2).active_columns(), Some(2));
        assert!(random_linear_prior(5, 2, Some(&[6, 2]), &[1.0; 3], &mut rng).is_err());
    }

    #[test]
    fn perturbation_shifts_weights_and_variances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_linear_prior(3, 2, None, &[1.0; 3], &mut rng).unwrap();
        let q = perturb_prior(&p, 0.5, &mut rng).unwrap();
        let diff = q.weights(1).unwrap() - p.weights(1).unwrap();
        assert!(diff.iter().all(|&v| (0.5..=1.0).contains(&v)));
        let s = q.cov(2).isotropic_variance().unwrap();
        assert!((1.5..=2.0).contains(&s));
    }

    #[test]
    fn instances_are_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_mlp_prior(2, 2, 8, &[1.0; 3], &mut rng).unwrap();
        let ctx = ContextSampler::Uniform { d: 2, unit_norm: false };
        let r = RewardModel::LogisticBernoulli;
        let a = sample_instance(&p, 4, r, ctx.clone(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_instance(&p, 4, r, ctx, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.latents.len(), 2);
    }
}
