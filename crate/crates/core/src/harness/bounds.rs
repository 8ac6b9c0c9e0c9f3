use std::fmt;
use std::str::FromStr;

use super::config::ExperimentConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    Dts,
    DtsSparse,
    LinTs,
    HierTs1,
    HierTs2,
}

impl FromStr for BoundVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dts" => Self::Dts,
            "dts_sparse" => Self::DtsSparse,
            "lints" => Self::LinTs,
            "hierts1" => Self::HierTs1,
            "hierts2" => Self::HierTs2,
            other => {
                return Err(Error::invalid(format!(
                    "unknown bound variant {other:?}; expected dts, dts_sparse, lints, hierts1 or hierts2"
                )))
            }
        })
    }
}

impl fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dts => "dts",
            Self::DtsSparse => "dts_sparse",
            Self::LinTs => "lints",
            Self::HierTs1 => "hierts1",
            Self::HierTs2 => "hierts2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub levels: usize,
    pub delta: f64,
    /// Reward noise.
    pub sigma: f64,
    /// Standard deviations of levels `1..=L+1`.
    pub sigmas: Vec<f64>,
    /// Active columns per level; only read by the sparse variant.
    pub sparsity: Option<Vec<usize>>,
    pub c: f64,
}

impl BoundParams {
    /// Defaults `δ = 1/n` and `c = 1`.
    pub fn new(n: usize, d: usize, k: usize, sigma: f64, sigmas: Vec<f64>) -> Self {
        let levels = sigmas.len().saturating_sub(1);
        Self { n, d, k, levels, delta: 1.0 / n as f64, sigma, sigmas, sparsity: None, c: 1.0 }
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let e = &cfg.env;
        let sigmas = e.variances().iter().map(|v| v.sqrt()).collect();
        let mut p = Self::new(cfg.run.n, e.d, e.k, e.sigma, sigmas);
        p.delta = cfg.bounds.delta.unwrap_or(p.delta);
        p.c = cfg.bounds.c;
        p.sparsity = cfg.bounds.sparsity.clone().or_else(|| e.sparsity.clone());
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.k == 0 || self.levels == 0 {
            return Err(Error::invalid("n, d, K and L must be positive"));
        }
        if self.sigmas.len() != self.levels + 1 {
            return Err(Error::invalid(format!(
                "need {} level deviations, got {}",
                self.levels + 1,
                self.sigmas.len()
            )));
        }
        if !(self.sigma > 0.0) || self.sigmas.iter().any(|s| !(*s > 0.0)) || !(self.c > 0.0) {
            return Err(Error::invalid("noise levels and c must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta must lie in (0, 1)"));
        }
        if let Some(s) = &self.sparsity {
            if s.len() != self.levels || s.iter().any(|&x| x == 0 || x > self.d) {
                return Err(Error::invalid(format!("sparsity needs {} entries in 1..={}", self.levels, self.d)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub variant: BoundVariant,
    pub total: f64,
    pub terms: Vec<(String, f64)>,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "variant {}", self.variant)?;
        for (name, v) in &self.terms {
            writeln!(f, "{name} {v:.10}")?;
        }
        write!(f, "bound {:.10}", self.total)
    }
}

/// Bayes regret bound for dTS, or the order expressions (unit constants) for
/// the baselines.
pub fn compute_bound(p: &BoundParams, variant: BoundVariant) -> Result<BoundReport> {
    p.validate()?;
    let (n, d, k, l) = (p.n as f64, p.d as f64, p.k as f64, p.levels);
    let s2: Vec<f64> = p.sigmas.iter().map(|s| s * s).collect();
    let noise2 = p.sigma * p.sigma;
    let mut terms = Vec::new();
    let total = match variant {
        BoundVariant::Dts | BoundVariant::DtsSparse => {
            let smax2 = s2.iter().map(|v| 1.0 + v / noise2).fold(f64::MIN, f64::max);
            let c0 = s2[0] / s2[0].ln_1p();
            let r_act = c0 * d * k * (n * s2[0] / d).ln_1p();
            terms.push(("sigma_max_sq".into(), smax2));
            terms.push(("r_act".into(), r_act));
            let mut sum = r_act;
            for lv in 1..=l {
                let (below, above) = (s2[lv - 1], s2[lv]);
                let c_l = above * smax2.powi(lv as i32) / above.ln_1p();
                let dim = match (variant, &p.sparsity) {
                    (BoundVariant::DtsSparse, Some(s)) => s[lv - 1] as f64,
                    _ => d,
                };
                let r = c_l * dim * (above / below).ln_1p();
                terms.push((format!("r_lat_{lv}"), r));
                sum += r;
            }
            let sqrt_term = (2.0 * n * sum * (1.0 / p.delta).ln()).sqrt();
            terms.push(("sqrt_term".into(), sqrt_term));
            terms.push(("tail_term".into(), p.c * n * p.delta));
            sqrt_term + p.c * n * p.delta
        }
        BoundVariant::LinTs => (n * d * k * s2.iter().sum::<f64>()).sqrt(),
        BoundVariant::HierTs1 => (n * d * (k * s2[..l].iter().sum::<f64>() + l as f64 * s2[l])).sqrt(),
        BoundVariant::HierTs2 => (n * d * (k * s2[0] + s2[1..].iter().sum::<f64>())).sqrt(),
    };
    Ok(BoundReport { variant, total, terms })
}
