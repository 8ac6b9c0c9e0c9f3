//! Bandit environments: synthetic chains, Swiss-roll parameter sets and
//! ratings-derived instances.

mod ratings;
mod samples;
mod swiss_roll;
mod synthetic;

pub use ratings::{
    als_factorize, ingest_ratings, movielens_instance, parse_ratings, AlsConfig, FactorModel, RatingsTable,
};
pub use samples::{read_samples_csv, samples_to_csv, write_samples_csv};
pub use swiss_roll::{swiss_roll, swiss_roll_point, SwissRollConfig};
pub use synthetic::{perturb_prior, random_linear_prior, random_mlp_prior, sample_instance};
