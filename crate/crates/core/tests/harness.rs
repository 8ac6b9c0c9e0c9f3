//! Experiment runner, sweeps and posterior-quality checks on small problems.

use dts_core::agents::UniformAgent;
use dts_core::harness::{
    aggregate, gaussian_as_prior, mean_stderr, posterior_quality_report, regret_ratio_sweep, run_experiment, simulate,
    traces_csv, write_outputs, ExperimentConfig, SweepVar,
};
use dts_core::linalg::{Matrix, Vector};
use dts_core::model::{ActionParams, BanditInstance, ContextSampler, RewardModel};
use dts_core::posterior::Gaussian;
use dts_core::rng::{self, Purpose};
use nalgebra::dvector;

fn small(agents: &[&str], n: usize, runs: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.env.d = 3;
    cfg.env.k = 6;
    cfg.agent.names = agents.iter().map(|s| s.to_string()).collect();
    cfg.run.n = n;
    cfg.run.runs = runs;
    cfg
}

#[test]
fn oracle_has_zero_regret() {
    let res = run_experiment(&small(&["oracle"], 200, 3)).unwrap();
    for t in &res.agents[0].traces {
        assert!(t.regrets.iter().all(|&r| r == 0.0));
    }
}

#[test]
fn uniform_agent_pays_half_the_gap() {
    let instance = BanditInstance::new(
        ActionParams::PerAction(vec![dvector![1.0], dvector![0.0]]),
        RewardModel::linear(0.0).unwrap(),
        ContextSampler::Fixed(dvector![1.0]),
    )
    .unwrap();
    let mut agent = UniformAgent::new(2, rng::stream(3, Purpose::Agent));
    let trace = simulate(&instance, &mut agent, 10_000, 3, 0).unwrap();
    let mean = trace.total() / 10_000.0;
    assert!((mean - 0.5).abs() <= 0.02, "{mean}");
}

#[test]
fn row_count_and_cumulative_regret() {
    let res = run_experiment(&small(&["dts", "lints", "linucb", "uniform"], 10, 3)).unwrap();
    for agent in &res.agents {
        let csv = traces_csv(&agent.traces);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("run,round,action,regret,cum_regret"));
        assert_eq!(lines.count(), 30);
        for t in &agent.traces {
            assert!(t.regrets.iter().all(|&r| r >= -1e-12));
            let cum = t.cumulative();
            assert!(cum.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}

#[test]
fn aggregate_matches_two_pass_reference() {
    let res = run_experiment(&small(&["lints"], 25, 4)).unwrap();
    let traces = &res.agents[0].traces;
    let rows = aggregate(traces);
    for (i, row) in rows.iter().enumerate() {
        let cum: Vec<f64> = traces.iter().map(|t| t.cumulative()[i]).collect();
        let mean = cum.iter().sum::<f64>() / cum.len() as f64;
        let var = cum.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (cum.len() - 1) as f64;
        assert!((row.mean_cum - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((row.stderr_cum - (var / cum.len() as f64).sqrt()).abs() <= 1e-12 * mean.abs().max(1.0));
    }
    assert_eq!(mean_stderr(&[2.0, 2.0]), (2.0, 0.0));
}

#[test]
fn runs_are_bit_reproducible_across_thread_counts() {
    let mut cfg = small(&["dts", "lints", "hierts2"], 80, 5);
    cfg.run.jobs = 1;
    let a = run_experiment(&cfg).unwrap();
    cfg.run.jobs = 4;
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    cfg.run.seed = 1;
    assert_ne!(a, run_experiment(&cfg).unwrap());
}

#[test]
fn output_directory_layout() {
    let cfg = small(&["dts", "linucb"], 12, 2);
    let res = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &cfg, &res).unwrap();
    for f in ["dts.csv", "dts_aggregate.csv", "linucb.csv", "linucb_aggregate.csv", "summary.csv", "config.toml"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let saved = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&saved, &[]).unwrap(), cfg);
}

#[test]
fn self_ratio_is_one() {
    let rows = regret_ratio_sweep(&small(&["dts"], 100, 4), SweepVar::K, &[3, 9], "lints", "lints").unwrap();
    for r in rows {
        assert_eq!(r.ratio, 1.0);
    }
}

#[test]
fn single_round_ratios_are_finite() {
    let rows = regret_ratio_sweep(&small(&["dts"], 1, 2), SweepVar::K, &[2, 4], "lints", "oracle").unwrap();
    for r in rows {
        assert!(r.ratio.is_finite());
        assert_eq!(r.denominator, 0.0);
    }
}

#[test]
fn depth_sweep_resizes_variances() {
    let mut cfg = small(&["dts"], 20, 2);
    cfg.env.sigma2s = Some(vec![1.0, 0.5, 0.25]);
    cfg.env.sparsity = Some(vec![3, 2]);
    let rows = regret_ratio_sweep(&cfg, SweepVar::L, &[1, 4], "lints", "dts").unwrap();
    assert_eq!(rows.len(), 2);
}

#[test]
fn identical_priors_agree_exactly() {
    let cov = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let truth = Gaussian { mean: Vector::zeros(2), cov: cov.clone() };
    let prior = gaussian_as_prior(&cov).unwrap();
    for n in [0, 1, 50] {
        let q = posterior_quality_report(&truth, &prior, n, 0.8, 11).unwrap();
        assert!(q.mean_distance <= 1e-6 && q.cov_distance <= 1e-6, "n={n}: {} {}", q.mean_distance, q.cov_distance);
    }
    // No data: the two priors themselves.
    let q = posterior_quality_report(&truth, &prior, 0, 1.0, 0).unwrap();
    assert!((&q.exact.cov - &cov).amax() < 1e-12);
}

#[test]
fn mismatched_prior_is_detected() {
    let truth = Gaussian { mean: Vector::zeros(2), cov: Matrix::identity(2, 2) };
    let prior = gaussian_as_prior(&(Matrix::identity(2, 2) * 9.0)).unwrap();
    let q = posterior_quality_report(&truth, &prior, 0, 1.0, 0).unwrap();
    assert!((q.cov_distance - 8.0 * 2f64.sqrt()).abs() < 1e-9);
}
