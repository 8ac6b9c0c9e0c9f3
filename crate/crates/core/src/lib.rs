//! Thompson sampling for contextual bandits with diffusion-model priors.
//!
//! The crate is organised bottom-up: [`model`] holds the generative chain and
//! reward models, [`glm`] summarises per-action data, [`posterior`] runs the
//! hierarchical recursions, [`agents`] turns posteriors into decisions,
//! [`envs`] builds bandit instances, [`pretrain`] fits diffusion priors from
//! samples, and [`harness`] runs experiments and bound calculations.

// Parameter checks use `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod envs;
pub mod error;
pub mod glm;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod posterior;
pub mod pretrain;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
