//! Experiment runner, regret bounds, posterior-quality checks and sweeps.

mod bounds;
mod config;
mod env;
mod quality;
mod run;
mod sweep;

pub use bounds::{compute_bound, BoundParams, BoundReport, BoundVariant};
pub use config::{
    apply_override, AgentConfig, BoundsConfig, ContextKind, EnvConfig, EnvKind, ExperimentConfig, LinTsPrior,
    ModeChoice, RewardKind, RunConfig, AGENT_KEYS,
};
pub use env::Environment;
pub use quality::{gaussian_as_prior, posterior_quality_report, QualityReport, QUALITY_SAMPLES};
pub use run::{
    aggregate, aggregate_csv, mean_stderr, run_agents, run_experiment, simulate, simulate_run, traces_csv,
    write_outputs, AgentResult, AggregateRow, ExperimentResult, RegretTrace,
};
pub use sweep::{regret_ratio_sweep, sweep_csv, SweepRow, SweepVar, RATIO_FLOOR};
