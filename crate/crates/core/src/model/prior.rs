use rand::Rng;

use super::{link_apply, Covariance, LinkFn};
use crate::linalg::{sample_gaussian, Matrix, Vector};
use crate::{Error, Result};

/// Chain `ψ_L ~ N(0, Σ_top)`, `ψ_{ℓ-1} | ψ_ℓ ~ N(f_ℓ(ψ_ℓ), Σ_ℓ)`,
/// `θ_a | ψ_1 ~ N(f_1(ψ_1), Σ_1)`.
///
/// `links[i]` and `covs[i]` belong to level `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionPrior {
    d: usize,
    links: Vec<LinkFn>,
    covs: Vec<Covariance>,
    top_cov: Covariance,
    top_link: LinkFn,
}

/// One draw from the chain. `latents[i]` is `ψ_{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDraw {
    pub latents: Vec<Vector>,
    pub thetas: Vec<Vector>,
}

impl DiffusionPrior {
    pub fn new(links: Vec<LinkFn>, covs: Vec<Covariance>, top_cov: Covariance) -> Result<Self> {
        if links.is_empty() || links.len() != covs.len() {
            return Err(Error::invalid(format!(
                "need one link per covariance and at least one level, got {} links and {} covariances",
                links.len(),
                covs.len()
            )));
        }
        let d = top_cov.dim();
        for l in &links {
            if l.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: l.dim() });
            }
            match l {
                LinkFn::Linear { weights } if !weights.is_square() => {
                    return Err(Error::invalid("linear link must be square"));
                }
                LinkFn::DdpmEps { schedule, level, .. } if *level == 0 || *level > schedule.levels() => {
                    return Err(Error::invalid(format!("ddpm level {level} outside its schedule")));
                }
                LinkFn::Zero { .. } => return Err(Error::invalid("zero link inside the chain")),
                _ => {}
            }
        }
        if let Some(c) = covs.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: c.dim() });
        }
        Ok(Self { d, links, covs, top_cov, top_link: LinkFn::Zero { d } })
    }

    /// Linear chain with isotropic covariances `sigma2s[ℓ-1] I` for `ℓ = 1..=L+1`.
    pub fn linear(weights: Vec<Matrix>, sigma2s: &[f64]) -> Result<Self> {
        if sigma2s.len() != weights.len() + 1 {
            return Err(Error::invalid("need L + 1 variances for L levels"));
        }
        let d = weights.first().map_or(0, |w| w.nrows());
        let covs = sigma2s[..weights.len()].iter().map(|&s| Covariance::isotropic(d, s)).collect::<Result<_>>()?;
        let top = Covariance::isotropic(d, sigma2s[weights.len()])?;
        let links = weights.into_iter().map(|w| LinkFn::Linear { weights: w }).collect();
        Self::new(links, covs, top)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn levels(&self) -> usize {
        self.links.len()
    }

    /// Link of level `level`, 1-based; `levels() + 1` gives the zero map.
    pub fn link(&self, level: usize) -> &LinkFn {
        if level == self.levels() + 1 {
            &self.top_link
        } else {
            &self.links[level - 1]
        }
    }

    /// Covariance of level `level`, 1-based; `levels() + 1` is the top.
    pub fn cov(&self, level: usize) -> &Covariance {
        if level == self.levels() + 1 {
            &self.top_cov
        } else {
            &self.covs[level - 1]
        }
    }

    pub fn links(&self) -> &[LinkFn] {
        &self.links
    }

    pub fn covs(&self) -> &[Covariance] {
        &self.covs
    }

    pub fn top_cov(&self) -> &Covariance {
        &self.top_cov
    }

    pub fn is_linear(&self) -> bool {
        self.links.iter().all(|l| matches!(l, LinkFn::Linear { .. }))
    }

    /// Weight matrix of level `level` if the chain is linear there.
    pub fn weights(&self, level: usize) -> Option<&Matrix> {
        self.link(level).weights()
    }

    fn require_linear(&self) -> Result<()> {
        if self.is_linear() {
            Ok(())
        } else {
            Err(Error::ModeMismatch { required: "linear prior" })
        }
    }

    /// Products `W_1 ⋯ W_ℓ` for `ℓ = 1..=L`.
    pub fn weight_products(&self) -> Result<Vec<Matrix>> {
        self.require_linear()?;
        let mut out: Vec<Matrix> = Vec::with_capacity(self.levels());
        for l in 1..=self.levels() {
            let w = self.weights(l).expect("linear");
            let next = match out.last() {
                Some(b) => b * w,
                None => w.clone(),
            };
            out.push(next);
        }
        Ok(out)
    }

    /// Marginal covariance of each `θ_a`, `Σ_1 + Σ_ℓ B_ℓ Σ_{ℓ+1} B_ℓᵀ`.
    pub fn marginal_covariance(&self) -> Result<Matrix> {
        let products = self.weight_products()?;
        let mut cov = self.covs[0].matrix().clone();
        for (l, b) in products.iter().enumerate() {
            cov += b * self.cov(l + 2).matrix() * b.transpose();
        }
        Ok(cov)
    }

    /// Samples latents and `k` action parameters.
    pub fn sample(&self, k: usize, rng: &mut impl Rng) -> Result<PriorDraw> {
        let l_count = self.levels();
        let mut latents = vec![Vector::zeros(self.d); l_count];
        latents[l_count - 1] = sample_gaussian(&Vector::zeros(self.d), self.top_cov.chol_lower(), rng);
        for l in (1..l_count).rev() {
            let mean = link_apply(self.link(l + 1), &latents[l])?;
            latents[l - 1] = sample_gaussian(&mean, self.cov(l + 1).chol_lower(), rng);
        }
        let mean = link_apply(self.link(1), &latents[0])?;
        let thetas = (0..k).map(|_| sample_gaussian(&mean, self.covs[0].chol_lower(), rng)).collect();
        Ok(PriorDraw { latents, thetas })
    }
}
