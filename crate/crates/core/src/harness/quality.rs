use crate::glm::ActionStats;
use crate::linalg::{self, Matrix, Vector};
use crate::model::{ContextSampler, Covariance, DiffusionPrior, LinkFn};
use crate::posterior::{chain_update, ChainMode, Gaussian};
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Hierarchical draws used to fit a Gaussian when no closed form exists.
pub const QUALITY_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub exact: Gaussian,
    pub approx: Gaussian,
    pub mean_distance: f64,
    /// Absolute Frobenius distance between the covariances.
    pub cov_distance: f64,
}

/// Compares the conjugate posterior under a Gaussian prior with the
/// posterior a diffusion prior yields on the same single-action data stream
/// of `n` linear-Gaussian rewards with noise `sigma`.
pub fn posterior_quality_report(
    truth: &Gaussian,
    learned: &DiffusionPrior,
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<QualityReport> {
    let d = truth.mean.len();
    linalg::check_dim(d, learned.dim())?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("reward noise must be positive"));
    }
    let truth_chol = linalg::cholesky(&truth.cov, "true prior covariance")?;
    let theta = linalg::sample_gaussian(&truth.mean, &truth_chol.l(), &mut rng::stream(seed, Purpose::Instance));
    let contexts = ContextSampler::Uniform { d, unit_norm: false };
    let mut ctx_rng = rng::stream(seed, Purpose::Contexts);
    let mut noise_rng = rng::stream(seed, Purpose::Rewards);
    let mut stats = ActionStats::empty(d);
    let mut precision = truth_chol.inverse();
    let mut info = &precision * &truth.mean;
    for _ in 0..n {
        let x = contexts.sample(&mut ctx_rng);
        let y = x.dot(&theta) + sigma * linalg::standard_normal(1, &mut noise_rng)[0];
        precision.ger(1.0 / (sigma * sigma), &x, &x, 1.0);
        info.axpy(y / (sigma * sigma), &x, 1.0);
        stats.push_linear(&x, y, sigma, crate::glm::DEFAULT_LOGISTIC_RIDGE)?;
    }
    let cov = linalg::spd_inverse(&precision, "exact posterior precision")?;
    let exact = Gaussian { mean: &cov * info, cov };

    let approx = if learned.is_linear() {
        let chain = chain_update(learned, std::slice::from_ref(&stats), ChainMode::LinearExact)?;
        Gaussian { mean: chain.marginal_mean(learned, 0)?, cov: chain.marginal_covariance(learned, 0)?.sigma_check }
    } else {
        let chain = chain_update(learned, std::slice::from_ref(&stats), ChainMode::NonLinearApprox)?;
        let mut r = rng::stream(seed, Purpose::Evaluation);
        let draws = (0..QUALITY_SAMPLES)
            .map(|_| Ok(chain.hierarchical_sample(learned, &mut r)?.thetas.remove(0)))
            .collect::<Result<Vec<Vector>>>()?;
        let (mean, cov) = linalg::mean_and_covariance(&draws);
        Gaussian { mean, cov }
    };
    let mean_distance = (&exact.mean - &approx.mean).norm();
    let cov_distance = (&exact.cov - &approx.cov).norm();
    Ok(QualityReport { exact, approx, mean_distance, cov_distance })
}

/// `N(0, cov)` as a one-level linear chain whose link is zero.
pub fn gaussian_as_prior(cov: &Matrix) -> Result<DiffusionPrior> {
    let d = cov.nrows();
    DiffusionPrior::new(
        vec![LinkFn::Linear { weights: Matrix::zeros(d, d) }],
        vec![Covariance::from_matrix(cov)?],
        Covariance::isotropic(d, 1.0)?,
    )
}
