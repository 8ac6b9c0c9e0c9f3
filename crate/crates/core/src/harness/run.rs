use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::config::{ExperimentConfig, AGENT_KEYS};
use super::env::Environment;
use crate::agents::Agent;
use crate::model::BanditInstance;
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// One agent's trajectory in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub run: usize,
    pub actions: Vec<usize>,
    pub regrets: Vec<f64>,
}

impl RegretTrace {
    pub fn cumulative(&self) -> Vec<f64> {
        self.regrets
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.regrets.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentResult {
    /// Config key, e.g. `dts`.
    pub key: String,
    /// Display name, e.g. `dTS`.
    pub name: String,
    /// Ordered by run id.
    pub traces: Vec<RegretTrace>,
}

impl AgentResult {
    pub fn final_mean(&self) -> f64 {
        self.traces.iter().map(RegretTrace::total).sum::<f64>() / self.traces.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub agents: Vec<AgentResult>,
}

impl ExperimentResult {
    pub fn agent(&self, key: &str) -> Option<&AgentResult> {
        self.agents.iter().find(|a| a.key == key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub round: usize,
    pub mean_regret: f64,
    pub stderr: f64,
    pub mean_cum: f64,
    pub stderr_cum: f64,
}

/// Two-pass mean and standard error (sample deviation over `√R`, zero for
/// a single run).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn aggregate(traces: &[RegretTrace]) -> Vec<AggregateRow> {
    let cums: Vec<Vec<f64>> = traces.iter().map(RegretTrace::cumulative).collect();
    let rounds = traces.iter().map(|t| t.regrets.len()).min().unwrap_or(0);
    (0..rounds)
        .map(|t| {
            let (mean_regret, stderr) = mean_stderr(&traces.iter().map(|tr| tr.regrets[t]).collect::<Vec<_>>());
            let (mean_cum, stderr_cum) = mean_stderr(&cums.iter().map(|c| c[t]).collect::<Vec<_>>());
            AggregateRow { round: t + 1, mean_regret, stderr, mean_cum, stderr_cum }
        })
        .collect()
}

pub fn traces_csv(traces: &[RegretTrace]) -> String {
    let mut out = String::from("run,round,action,regret,cum_regret\n");
    for tr in traces {
        for (t, (c, (a, r))) in tr.cumulative().iter().zip(tr.actions.iter().zip(&tr.regrets)).enumerate() {
            let _ = writeln!(out, "{},{},{},{:.16e},{:.16e}", tr.run, t + 1, a, r, c);
        }
    }
    out
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("round,mean_regret,stderr,mean_cum,stderr_cum\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.round, r.mean_regret, r.stderr, r.mean_cum, r.stderr_cum
        );
    }
    out
}

fn agent_stream_index(key: &str) -> u64 {
    AGENT_KEYS.iter().position(|k| *k == key).unwrap_or(AGENT_KEYS.len()) as u64
}

/// Plays `agent` for `n` rounds on `instance`. Contexts and reward noise come
/// from the run's own streams, so every agent given the same seed faces the
/// same sequence.
pub fn simulate(
    instance: &BanditInstance,
    agent: &mut dyn Agent,
    n: usize,
    seed: u64,
    run: usize,
) -> Result<RegretTrace> {
    let mut ctx_rng = rng::stream(seed, Purpose::Contexts);
    let mut reward_rng = rng::stream(seed, Purpose::Rewards);
    let mut actions = Vec::with_capacity(n);
    let mut regrets = Vec::with_capacity(n);
    for _ in 0..n {
        let x = instance.contexts.sample(&mut ctx_rng);
        let action = agent.act(&x)?.action;
        let y = instance.sample_reward(&x, action, &mut reward_rng);
        let (_, best) = instance.best(&x);
        regrets.push(best - instance.expected_reward(&x, action));
        actions.push(action);
        agent.update(&x, action, y)?;
    }
    Ok(RegretTrace { run, actions, regrets })
}

/// Plays every agent in `keys` on the instance of run `run`. This is one unit
/// of the parallel loop in [`run_agents`].
pub fn simulate_run(env: &Environment, keys: &[String], run: usize) -> Result<Vec<(String, RegretTrace)>> {
    let cfg = env.config();
    let seed = cfg.run.seed + run as u64;
    let (instance, prior) = env.run_setup(seed)?;
    keys.iter()
        .map(|key| {
            let agent_rng = rng::substream(seed, Purpose::Agent, agent_stream_index(key));
            let mut agent = env.make_agent(key, prior.as_ref(), &instance, agent_rng)?;
            let trace = simulate(&instance, agent.as_mut(), cfg.run.n, seed, run)?;
            Ok((agent.name().to_string(), trace))
        })
        .collect()
}

/// Runs an already built environment with the given agent keys.
pub fn run_agents(env: &Environment, keys: &[String]) -> Result<ExperimentResult> {
    let cfg = env.config();
    let work = || (0..cfg.run.runs).into_par_iter().map(|r| simulate_run(env, keys, r)).collect::<Result<Vec<_>>>();
    let per_run = if cfg.run.jobs == 0 {
        work()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?
    };
    let mut agents: Vec<AgentResult> = keys
        .iter()
        .map(|k| AgentResult { key: k.clone(), name: String::new(), traces: Vec::with_capacity(cfg.run.runs) })
        .collect();
    for run in per_run {
        for (slot, (name, trace)) in agents.iter_mut().zip(run) {
            slot.name = name;
            slot.traces.push(trace);
        }
    }
    Ok(ExperimentResult { agents })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let env = Environment::build(cfg)?;
    run_agents(&env, &cfg.agent.names)
}

/// Writes `<key>.csv` and `<key>_aggregate.csv` per agent, a `summary.csv`
/// of final cumulative regret, and the resolved config.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: String, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    let mut summary = String::from("agent,name,mean_cum,stderr_cum\n");
    for a in &result.agents {
        write(format!("{}.csv", a.key), traces_csv(&a.traces))?;
        let rows = aggregate(&a.traces);
        write(format!("{}_aggregate.csv", a.key), aggregate_csv(&rows))?;
        if let Some(last) = rows.last() {
            let _ = writeln!(summary, "{},{},{:.16e},{:.16e}", a.key, a.name, last.mean_cum, last.stderr_cum);
        }
    }
    write("summary.csv".into(), summary)?;
    write("config.toml".into(), cfg.to_toml())
}
