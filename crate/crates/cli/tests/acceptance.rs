//! End-to-end acceptance suite. Every criterion prints one PASS/FAIL line,
//! written straight to stdout so it shows up without `--nocapture`, and the
//! test fails if any criterion does.
//!
//! Run with `cargo test -p dts-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use dts_core::envs::{swiss_roll, SwissRollConfig};
use dts_core::glm::{fit, Observation};
use dts_core::harness::{
    compute_bound, posterior_quality_report, regret_ratio_sweep, run_experiment, BoundParams, BoundVariant,
    ExperimentConfig, SweepVar,
};
use dts_core::linalg::{self, Matrix, Vector};
use dts_core::metrics::energy_distance;
use dts_core::model::{DiffusionPrior, RewardModel};
use dts_core::posterior::{chain_update, ChainMode, Gaussian};
use dts_core::pretrain::{generate, train, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Runs one criterion; a panic counts as a failure.
fn criterion(id: usize, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    let tag = if v.pass { "PASS" } else { "FAIL" };
    say(&format!("{tag} criterion {id:>2} ({name}): {} [{:.1}s]", v.detail, start.elapsed().as_secs_f64()));
    v.pass
}

// 1 ----------------------------------------------------------------------

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let d = rng.random_range(1..=3);
        let levels = rng.random_range(1..=3);
        let k = rng.random_range(1..=4);
        let t = rng.random_range(0..=50);
        let prior = random_linear_prior(d, levels, &mut rng);
        let log = random_log(d, k, t, &mut rng);
        let sigma = rng.random_range(0.5..1.5);
        let joint = brute_force(&prior, k, &log, sigma);
        let chain = chain_update(&prior, &summaries(&log, k, d, sigma), ChainMode::LinearExact).unwrap();
        for a in 0..k {
            let (m, c) = joint.theta(a);
            worst = worst.max(rel_err_vec(&chain.marginal_mean(&prior, a).unwrap(), &m));
            worst = worst.max(rel_err(&chain.marginal_covariance(&prior, a).unwrap().sigma_check, &c));
        }
    }
    verdict(worst <= 1e-8, format!("worst relative error {worst:.2e} over 50 instances (tol 1e-8)"))
}

// 2 ----------------------------------------------------------------------

fn marginal_covariance_lemma() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_exact: f64 = 0.0;
    let mut worst_mc: f64 = 0.0;
    for case in 0..3 {
        let (d, levels, k, t) = (3, 2 + case % 2, 3, 30);
        let prior = random_linear_prior(d, levels, &mut rng);
        let log = random_log(d, k, t, &mut rng);
        let sigma = 1.0;
        let joint = brute_force(&prior, k, &log, sigma);
        let chain = chain_update(&prior, &summaries(&log, k, d, sigma), ChainMode::LinearExact).unwrap();
        let covs: Vec<Matrix> = (0..k).map(|a| chain.marginal_covariance(&prior, a).unwrap().sigma_check).collect();
        for (a, c) in covs.iter().enumerate() {
            worst_exact = worst_exact.max(rel_err(c, &joint.theta(a).1));
        }
        let mut per_action: Vec<Vec<Vector>> = vec![Vec::with_capacity(100_000); k];
        for _ in 0..100_000 {
            let draw = chain.hierarchical_sample(&prior, &mut rng).unwrap();
            for (a, th) in draw.thetas.into_iter().enumerate() {
                per_action[a].push(th);
            }
        }
        for (a, samples) in per_action.iter().enumerate() {
            let (_, mc) = linalg::mean_and_covariance(samples);
            worst_mc = worst_mc.max(linalg::frobenius_rel(&mc, &covs[a]));
        }
    }
    verdict(
        worst_exact <= 1e-8 && worst_mc <= 0.03,
        format!("brute force {worst_exact:.2e} (tol 1e-8), Monte Carlo {:.2}% Frobenius (tol 3%)", 100.0 * worst_mc),
    )
}

// 3 ----------------------------------------------------------------------

/// Linear prior with unit spectral-norm mixing matrices and isotropic
/// covariances.
fn normalized_prior(d: usize, levels: usize, rng: &mut ChaCha8Rng) -> DiffusionPrior {
    let weights = (0..levels)
        .map(|_| {
            let w = random_matrix(d, rng);
            let top = linalg::max_eigenvalue(&(w.transpose() * &w)).sqrt();
            w / top
        })
        .collect();
    let sigma2s: Vec<f64> = (0..=levels).map(|_| rng.random_range(0.2..2.0)).collect();
    DiffusionPrior::linear(weights, &sigma2s).unwrap()
}

fn unit_context(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let x = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        if x.norm() > 1e-3 {
            return x.normalize();
        }
    }
}

fn information_gain() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let d = rng.random_range(1..=4);
        let levels = rng.random_range(1..=3);
        let k = rng.random_range(1..=4);
        let t = rng.random_range(0..=40);
        let sigma = rng.random_range(0.5..1.5);
        let prior = normalized_prior(d, levels, &mut rng);
        let mut log: Log =
            (0..t).map(|_| (rng.random_range(0..k), unit_context(d, &mut rng), rng.random_range(-3.0..3.0))).collect();
        let before = chain_update(&prior, &summaries(&log, k, d, sigma), ChainMode::LinearExact).unwrap();
        let (a, x) = (rng.random_range(0..k), unit_context(d, &mut rng));
        log.push((a, x.clone(), rng.random_range(-3.0..3.0)));
        let after = chain_update(&prior, &summaries(&log, k, d, sigma), ChainMode::LinearExact).unwrap();
        for v in before.info_gain_certificate(&after, &prior, &x, a, sigma).unwrap() {
            worst = worst.min(v);
        }
    }
    verdict(worst >= -1e-9, format!("smallest eigenvalue {worst:.3e} over 100 instance/round pairs (tol -1e-9)"))
}

// 4, 5 -------------------------------------------------------------------

fn regret_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.env.d = 5;
    cfg.env.levels = 2;
    cfg.env.k = 100;
    cfg.env.sparsity = Some(vec![5, 2]);
    cfg.run.n = 2000;
    cfg.run.runs = 20;
    cfg.run.seed = 0;
    cfg
}

fn regret_ordering() -> Verdict {
    let mut cfg = regret_config();
    cfg.agent.names = vec!["dts".into(), "lints".into(), "hierts1".into()];
    let res = run_experiment(&cfg).unwrap();
    let dts = res.agent("dts").unwrap().final_mean();
    let lints = res.agent("lints").unwrap().final_mean();
    let hier = res.agent("hierts1").unwrap().final_mean();
    verdict(
        dts <= 0.8 * lints && dts <= hier,
        format!(
            "dTS {dts:.1}, LinTS {lints:.1} (ratio {:.3}, need <= 0.8), HierTS-1 {hier:.1} (need dTS <= it)",
            dts / lints
        ),
    )
}

fn widening_gap() -> Verdict {
    let mut cfg = regret_config();
    cfg.agent.names = vec!["lints".into(), "dts".into()];
    let rows = regret_ratio_sweep(&cfg, SweepVar::K, &[10, 1000], "lints", "dts").unwrap();
    let (small, large) = (rows[0].ratio, rows[1].ratio);
    verdict(large > small, format!("LinTS/dTS ratio {small:.3} at K=10, {large:.3} at K=1000"))
}

// 6 ----------------------------------------------------------------------

fn bound_monotonicity() -> Verdict {
    let mut failures = Vec::new();
    let bases =
        [(5000, 5, 100, vec![1.0, 1.0, 1.0]), (2000, 10, 50, vec![0.5, 1.0, 2.0, 0.7]), (100, 2, 3, vec![3.0, 0.2])];
    let bound = |p: &BoundParams| compute_bound(p, BoundVariant::Dts).unwrap().total;
    for (n, d, k, sigmas) in bases {
        let base = BoundParams::new(n, d, k, 1.0, sigmas.clone());
        let b0 = bound(&base);
        let bump = |x: usize| ((x as f64) * 1.1).ceil() as usize;
        let mut bumped = vec![
            ("n", BoundParams::new(bump(n), d, k, 1.0, sigmas.clone())),
            ("d", BoundParams::new(n, bump(d), k, 1.0, sigmas.clone())),
            ("K", BoundParams::new(n, d, bump(k), 1.0, sigmas.clone())),
        ];
        let mut deeper = sigmas.clone();
        deeper.push(*sigmas.last().unwrap());
        bumped.push(("L", BoundParams::new(n, d, k, 1.0, deeper)));
        for l in 0..sigmas.len() {
            let mut s = sigmas.clone();
            s[l] *= 1.1;
            bumped.push(("sigma_l", BoundParams::new(n, d, k, 1.0, s)));
        }
        for (what, p) in &bumped {
            let b = bound(p);
            if b.partial_cmp(&b0) != Some(std::cmp::Ordering::Greater) {
                failures.push(format!("{what} at n={n} d={d} K={k}: {b} <= {b0}"));
            }
        }
        let mut sparse = base.clone();
        sparse.sparsity = Some((0..base.levels).map(|i| if i == 0 { 1.max(d / 2) } else { d }).collect());
        let s = compute_bound(&sparse, BoundVariant::DtsSparse).unwrap().total;
        if s > b0 {
            failures.push(format!("sparse {s} > dense {b0} at n={n} d={d} K={k}"));
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() { "all bumps increase the bound, sparse <= dense".into() } else { failures.join("; ") },
    )
}

// 7, 8 -------------------------------------------------------------------

fn pretrain_config(seed: u64) -> TrainConfig {
    TrainConfig { levels: 40, epochs: 5000, seed, ..TrainConfig::default() }
}

fn posterior_quality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let samples: Vec<Vector> = (0..1000).map(|_| linalg::standard_normal(2, &mut rng)).collect();
    let prior = train(&samples, &pretrain_config(7)).unwrap().prior;
    let truth = Gaussian { mean: Vector::zeros(2), cov: Matrix::identity(2, 2) };
    let q = posterior_quality_report(&truth, &prior, 100, 1.0, 0).unwrap();
    verdict(
        q.mean_distance <= 0.15 && q.cov_distance <= 0.2,
        format!("mean distance {:.4} (tol 0.15), covariance distance {:.4} (tol 0.2)", q.mean_distance, q.cov_distance),
    )
}

fn pretraining_sample_size() -> Verdict {
    let roll = |count: usize, seed: u64| {
        swiss_roll(&SwissRollConfig { count, ..SwissRollConfig::default() }, &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap()
    };
    let held_out = roll(1000, 80);
    let large = train(&roll(1000, 81), &pretrain_config(8)).unwrap().prior;
    let small = train(&roll(50, 82), &pretrain_config(8)).unwrap().prior;
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let e_large = energy_distance(&generate(&large, 1000, &mut rng).unwrap(), &held_out);
    let e_small = energy_distance(&generate(&small, 1000, &mut rng).unwrap(), &held_out);
    verdict(e_large < e_small, format!("energy distance {e_large:.4} with 1000 samples, {e_small:.4} with 50"))
}

// 9 ----------------------------------------------------------------------

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-10 {
        let c = hi - r * (hi - lo);
        let d = lo + r * (hi - lo);
        if f(c) < f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    0.5 * (lo + hi)
}

fn glm_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst_logistic: f64 = 0.0;
    for _ in 0..50 {
        let theta = rng.random_range(-2.0..2.0);
        let n = rng.random_range(10..80);
        let mut data: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(-1.5..1.5);
                (x, f64::from(rng.random_bool(1.0 / (1.0 + (-x * theta).exp()))))
            })
            .collect();
        // Both labels at one point keep the maximiser finite.
        data.extend([(1.0, 0.0), (1.0, 1.0)]);
        let nll = |t: f64| {
            data.iter()
                .map(|&(x, y)| {
                    let u = x * t;
                    let softplus = if u > 0.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
                    softplus - y * u
                })
                .sum::<f64>()
        };
        let oracle = golden_section(nll, -30.0, 30.0);
        let log: Vec<Observation> =
            data.iter().map(|&(x, y)| Observation::new(Vector::from_element(1, x), y)).collect();
        let stats = fit(&log, &RewardModel::LogisticBernoulli, 1e-6, 1).unwrap();
        worst_logistic = worst_logistic.max((stats.b_hat[0] - oracle).abs());
    }
    let mut worst_linear: f64 = 0.0;
    for _ in 0..20 {
        let d = rng.random_range(1..5);
        let n = rng.random_range(d + 2..40);
        let x = Matrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let log: Vec<Observation> = (0..n).map(|i| Observation::new(x.row(i).transpose(), y[i])).collect();
        let stats = fit(&log, &RewardModel::linear(0.7).unwrap(), 0.0, d).unwrap();
        let normal = (x.transpose() * &x).lu().solve(&(x.transpose() * &y)).unwrap();
        worst_linear = worst_linear.max((&stats.b_hat - &normal).amax() / normal.amax().max(1.0));
    }
    verdict(
        worst_logistic <= 1e-3 && worst_linear <= 1e-10,
        format!("logistic vs golden section {worst_logistic:.2e} (tol 1e-3), linear vs normal equations {worst_linear:.2e} (tol 1e-10)"),
    )
}

// 10 ---------------------------------------------------------------------

fn dts(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_dts")).args(args).output().expect("spawn dts");
    assert!(out.status.success(), "dts {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

/// Every file under `dir`, sorted, with contents.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn cli_session(root: &Path, jobs: &str) -> Vec<(String, Vec<u8>)> {
    let out = root.join("out");
    std::fs::create_dir_all(&out).unwrap();
    let config = root.join("exp.toml");
    std::fs::write(
        &config,
        "[env]\nd = 3\nk = 8\n\n[agent]\nnames = [\"dts\", \"lints\", \"linucb\", \"hierts1\", \"hierts2\"]\n\n[run]\nn = 150\nruns = 4\n",
    )
    .unwrap();
    let p = |name: &str| out.join(name).to_string_lossy().into_owned();
    let config = config.to_string_lossy().into_owned();
    let run_dir = p("run");
    dts(&["run", "--config", &config, "--seed", "5", "--jobs", jobs, "--out", &run_dir]);
    dts(&[
        "sweep",
        "--config",
        &config,
        "--seed",
        "5",
        "--jobs",
        jobs,
        "--var",
        "K",
        "--values",
        "4,12",
        "--out",
        &p("sweep.csv"),
    ]);
    let samples = root.join("samples.csv");
    let mut text = String::from("dim0,dim1\n");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..64 {
        text.push_str(&format!("{},{}\n", rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    }
    std::fs::write(&samples, text).unwrap();
    let prior = p("prior.txt");
    let samples = samples.to_string_lossy().into_owned();
    dts(&[
        "pretrain",
        "--samples",
        &samples,
        "--out",
        &prior,
        "--L",
        "6",
        "--epochs",
        "40",
        "--hidden",
        "8",
        "--seed",
        "2",
        "--loss-out",
        &p("loss.csv"),
    ]);
    dts(&["inspect-prior", "--prior", &prior, "--sample", "50", "--seed", "9", "--out", &p("draws.csv")]);
    let mut files = snapshot(&out);
    files.extend(snapshot(Path::new(&run_dir)).into_iter().map(|(n, b)| (format!("run/{n}"), b)));
    files
}

fn determinism() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    // The saved config echoes --jobs, so it is the one file allowed to differ.
    let echo = |(n, _): &(String, Vec<u8>)| n != "run/config.toml";
    let mut first = cli_session(a.path(), "1");
    let mut second = cli_session(b.path(), "3");
    first.retain(echo);
    second.retain(echo);
    let csvs = first.iter().filter(|(n, _)| n.ends_with(".csv")).count();
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|((na, ba), (nb, bb))| na != nb || ba != bb)
        .map(|((n, _), _)| n.as_str())
        .collect();
    let same_listing = first.len() == second.len();
    verdict(
        same_listing && differing.is_empty() && csvs > 0,
        if differing.is_empty() && same_listing {
            format!("{} files ({csvs} CSV) byte-identical across two sessions with different --jobs", first.len())
        } else {
            format!("differing outputs: {differing:?}")
        },
    )
}

#[test]
fn acceptance_criteria() {
    // libtest has already printed "test acceptance_criteria ... " without a newline.
    say("");
    let results = [
        criterion(1, "oracle equivalence", oracle_equivalence),
        criterion(2, "marginal covariance", marginal_covariance_lemma),
        criterion(3, "information gain certificate", information_gain),
        criterion(4, "regret ordering", regret_ordering),
        criterion(5, "gap widens with K", widening_gap),
        criterion(6, "bound monotonicity", bound_monotonicity),
        criterion(7, "posterior approximation quality", posterior_quality),
        criterion(8, "pretraining sample size", pretraining_sample_size),
        criterion(9, "GLM correctness", glm_correctness),
        criterion(10, "CLI determinism", determinism),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    say(&format!("acceptance: {}/10 passed", 10 - failed.len()));
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
