use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    LinearDiffusion,
    NonlinearDiffusion,
    PriorFile,
    SwissRoll,
    Movielens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Linear,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextKind {
    Uniform,
    UnitNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    /// Exact recursion for linear priors, approximate otherwise.
    Auto,
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinTsPrior {
    /// Marginal of a linear agent prior, `sigma0² I` otherwise.
    Auto,
    Isotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub d: usize,
    pub levels: usize,
    pub k: usize,
    /// Variances of levels `1..=L+1`; all ones when absent.
    pub sigma2s: Option<Vec<f64>>,
    /// Active columns per level for linear priors.
    pub sparsity: Option<Vec<usize>>,
    /// Hidden width of random network links.
    pub hidden: usize,
    pub reward: RewardKind,
    pub sigma: f64,
    pub contexts: ContextKind,
    pub prior_file: Option<PathBuf>,
    pub ratings_file: Option<PathBuf>,
    pub rank: usize,
    pub als_lambda: f64,
    pub als_sweeps: usize,
    /// Redraw random priors for every run instead of once per experiment.
    pub resample_prior: bool,
    /// Agents get a perturbed prior when set.
    pub misspec_shift: Option<f64>,
    /// When positive, the agents' prior is trained on this many samples of
    /// true action parameters instead of being given.
    pub pretrain_samples: usize,
    pub pretrain_levels: usize,
    pub pretrain_epochs: usize,
    pub pretrain_hidden: usize,
    pub beta_max: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            kind: EnvKind::LinearDiffusion,
            d: 5,
            levels: 2,
            k: 100,
            sigma2s: None,
            sparsity: None,
            hidden: 16,
            reward: RewardKind::Linear,
            sigma: 1.0,
            contexts: ContextKind::Uniform,
            prior_file: None,
            ratings_file: None,
            rank: 5,
            als_lambda: 0.1,
            als_sweeps: 20,
            resample_prior: false,
            misspec_shift: None,
            pretrain_samples: 0,
            pretrain_levels: 40,
            pretrain_epochs: 2000,
            pretrain_hidden: 64,
            beta_max: 0.2,
        }
    }
}

impl EnvConfig {
    pub fn variances(&self) -> Vec<f64> {
        self.sigma2s.clone().unwrap_or_else(|| vec![1.0; self.levels + 1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub names: Vec<String>,
    pub alpha: f64,
    pub lambda: f64,
    pub inflation: f64,
    pub ridge: f64,
    pub mode: ModeChoice,
    pub lints_prior: LinTsPrior,
    pub sigma0: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            names: vec!["dts".into(), "lints".into(), "linucb".into()],
            alpha: 1.0,
            lambda: 1.0,
            inflation: 1.0,
            ridge: crate::glm::DEFAULT_LOGISTIC_RIDGE,
            mode: ModeChoice::Auto,
            lints_prior: LinTsPrior::Auto,
            sigma0: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub runs: usize,
    pub seed: u64,
    /// Worker threads; 0 means all cores.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { n: 2000, runs: 20, seed: 0, jobs: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    /// Defaults to `1/n`.
    pub delta: Option<f64>,
    pub c: f64,
    pub variant: String,
    pub sparsity: Option<Vec<usize>>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { delta: None, c: 1.0, variant: "dts".into(), sparsity: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub run: RunConfig,
    pub bounds: BoundsConfig,
}

pub const AGENT_KEYS: [&str; 9] =
    ["dts", "lints", "linucb", "hierts1", "hierts2", "glmts", "ucbglm", "uniform", "oracle"];

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.env;
        let bad = |m: String| Err(Error::Config(m));
        if self.run.n == 0 || self.run.runs == 0 {
            return bad("run.n and run.runs must be at least 1".into());
        }
        if e.d == 0 || e.levels == 0 || e.k < 2 {
            return bad("env.d and env.levels must be positive and env.k at least 2".into());
        }
        let s = e.variances();
        if s.len() != e.levels + 1 || s.iter().any(|v| !(*v > 0.0)) {
            return bad(format!("env.sigma2s needs {} positive entries", e.levels + 1));
        }
        if !(e.sigma >= 0.0) || (e.reward == RewardKind::Linear && e.sigma == 0.0 && self.needs_noise()) {
            return bad("env.sigma must be positive for linear rewards".into());
        }
        if self.agent.names.is_empty() {
            return bad("agent.names is empty".into());
        }
        for n in &self.agent.names {
            if !AGENT_KEYS.contains(&n.as_str()) {
                return bad(format!("unknown agent {n:?}; expected one of {AGENT_KEYS:?}"));
            }
        }
        match e.kind {
            EnvKind::PriorFile if e.prior_file.is_none() => bad("env.prior_file is required".into()),
            EnvKind::Movielens if e.ratings_file.is_none() => bad("env.ratings_file is required".into()),
            EnvKind::SwissRoll if e.d != 2 => bad("swiss_roll needs env.d = 2".into()),
            _ => Ok(()),
        }
    }

    /// True when some configured agent models Gaussian reward noise.
    fn needs_noise(&self) -> bool {
        self.agent.names.iter().any(|n| !matches!(n.as_str(), "uniform" | "oracle" | "linucb"))
    }
}

/// Applies `section.key=value`; the value is read as a TOML literal, or as a
/// bare string when it does not parse.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| Error::Config(format!("override {spec:?} lacks '='")))?;
    let (section, field) =
        key.trim().split_once('.').ok_or_else(|| Error::Config(format!("override key {key:?} must be section.key")))?;
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(field.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Config(format!("{section} is not a section"))),
    }
}
