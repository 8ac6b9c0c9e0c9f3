use super::config::ExperimentConfig;
use super::env::Environment;
use super::run::run_agents;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    K,
    L,
    D,
    PretrainSamples,
}

impl std::str::FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "K" | "k" => Self::K,
            "L" | "levels" => Self::L,
            "d" => Self::D,
            "pretrain_samples" => Self::PretrainSamples,
            other => {
                return Err(Error::invalid(format!(
                    "unknown sweep variable {other:?}; expected K, L, d or pretrain_samples"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: usize,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// Denominator floor for regret ratios.
pub const RATIO_FLOOR: f64 = 1e-9;

fn with_value(template: &ExperimentConfig, var: SweepVar, value: usize) -> ExperimentConfig {
    let mut cfg = template.clone();
    match var {
        SweepVar::K => cfg.env.k = value,
        SweepVar::D => cfg.env.d = value,
        SweepVar::PretrainSamples => cfg.env.pretrain_samples = value,
        SweepVar::L => {
            if let Some(s) = cfg.env.sigma2s.as_mut() {
                let last = *s.last().expect("validated non-empty");
                s.resize(value + 1, last);
            }
            if let Some(s) = cfg.env.sparsity.as_mut() {
                let last = *s.last().unwrap_or(&cfg.env.d);
                s.resize(value, last);
            }
            cfg.env.levels = value;
        }
    }
    cfg
}

/// Final cumulative regret ratio `numerator / denominator` per value, both
/// agents playing the same instances.
pub fn regret_ratio_sweep(
    template: &ExperimentConfig,
    var: SweepVar,
    values: &[usize],
    numerator: &str,
    denominator: &str,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    values
        .iter()
        .map(|&value| {
            let cfg = with_value(template, var, value);
            let env = Environment::build(&cfg)?;
            let res = run_agents(&env, &[numerator.to_string(), denominator.to_string()])?;
            let num = res.agents[0].final_mean();
            let den = res.agents[1].final_mean();
            Ok(SweepRow { value, numerator: num, denominator: den, ratio: num / den.max(RATIO_FLOOR) })
        })
        .collect()
}

pub fn sweep_csv(var: SweepVar, rows: &[SweepRow]) -> String {
    let name = match var {
        SweepVar::K => "K",
        SweepVar::L => "L",
        SweepVar::D => "d",
        SweepVar::PretrainSamples => "pretrain_samples",
    };
    let mut out = format!("{name},numerator,denominator,ratio\n");
    for r in rows {
        out.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", r.value, r.numerator, r.denominator, r.ratio));
    }
    out
}
