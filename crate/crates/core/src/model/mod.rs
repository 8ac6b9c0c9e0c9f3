//! The generative model: a chain of Gaussian latent levels whose means are
//! link functions, per-action parameters hanging off the bottom level, and a
//! generalized linear reward model.

mod covariance;
mod instance;
mod link;
mod prior;
pub(crate) mod reward;
mod serialize;

pub use covariance::Covariance;
pub use instance::{ActionParams, BanditInstance, ContextSampler, FeatureMap};
pub use link::{link_apply, make_schedule, Dense, Init, LinkFn, MlpNet, NoiseSchedule, VarianceChoice};
pub use prior::{DiffusionPrior, PriorDraw};
pub use reward::{sigmoid, RewardModel};
pub use serialize::{load_prior, prior_from_text, prior_to_text, save_prior};
