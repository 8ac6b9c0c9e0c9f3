//! `dts`: pretrain diffusion priors, run bandit experiments, sweep, and
//! evaluate regret bounds.
//!
//! Exit status is 0 on success, 1 for bad arguments or inputs, 2 when a
//! computation fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use dts_core::envs::{read_samples_csv, write_samples_csv};
use dts_core::harness::{
    compute_bound, posterior_quality_report, regret_ratio_sweep, run_experiment, sweep_csv, write_outputs, BoundParams,
    BoundVariant, ExperimentConfig, SweepVar,
};
use dts_core::linalg::{Matrix, Vector};
use dts_core::model::{load_prior, save_prior, LinkFn};
use dts_core::posterior::Gaussian;
use dts_core::pretrain::{self, TrainConfig};
use dts_core::rng::{self, Purpose};
use dts_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "dts",
    version,
    about = "Thompson sampling with diffusion-model priors",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a diffusion prior on parameter samples.
    Pretrain(PretrainArgs),
    /// Run a regret experiment.
    Run(RunArgs),
    /// Regret ratio of two agents across values of one setting.
    Sweep(SweepArgs),
    /// Evaluate a regret bound.
    Bounds(BoundsArgs),
    /// Compare exact and diffusion-prior posteriors on a Gaussian problem.
    Quality(QualityArgs),
    /// Describe a saved prior, optionally writing samples from it.
    InspectPrior(InspectArgs),
}

#[derive(Args, Debug)]
struct PretrainArgs {
    /// CSV of samples with header dim0,dim1,...
    #[arg(long)]
    samples: PathBuf,
    /// Where to write the trained prior.
    #[arg(long)]
    out: PathBuf,
    /// Diffusion levels.
    #[arg(long = "L", default_value_t = 40)]
    levels: usize,
    #[arg(long, default_value_t = 20_000)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 2)]
    hidden_layers: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 2048)]
    batch: usize,
    #[arg(long, default_value_t = 1e-4)]
    beta_min: f64,
    #[arg(long, default_value_t = 0.2)]
    beta_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional loss curve CSV (epoch,loss).
    #[arg(long)]
    loss_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (TOML with [env], [agent], [run], [bounds]).
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. --set env.k=1000. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Base seed; overrides run.seed [default: run.seed, which defaults to 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel runs [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn load(&self) -> dts_core::Result<ExperimentConfig> {
        let mut set = self.set.clone();
        if let Some(s) = self.seed {
            set.push(format!("run.seed={s}"));
        }
        if let Some(j) = self.jobs {
            set.push(format!("run.jobs={j}"));
        }
        ExperimentConfig::load(&self.config, &set)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// One of K, L, d, pretrain_samples.
    #[arg(long)]
    var: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    /// Agent whose regret is the numerator.
    #[arg(long, default_value = "lints")]
    numerator: String,
    /// Agent whose regret is the denominator.
    #[arg(long, default_value = "dts")]
    denominator: String,
    /// Optional CSV path; the table is printed either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "L")]
    levels: usize,
    /// Level standard deviations for levels 1..=L+1.
    #[arg(long, value_delimiter = ',', required = true)]
    sigmas: Vec<f64>,
    /// Reward noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Confidence parameter [default: 1/n].
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Active columns per level, for dts_sparse.
    #[arg(long, value_delimiter = ',')]
    sparsity: Option<Vec<usize>>,
    /// dts, dts_sparse, lints, hierts1 or hierts2.
    #[arg(long, default_value = "dts")]
    variant: String,
}

#[derive(Args, Debug)]
struct QualityArgs {
    /// Diffusion prior to evaluate.
    #[arg(long)]
    prior: PathBuf,
    /// Rounds of data.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Reward noise.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Variance of the true isotropic zero-mean Gaussian prior.
    #[arg(long, default_value_t = 1.0)]
    true_var: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    prior: PathBuf,
    /// Number of parameter samples to draw.
    #[arg(long, default_value_t = 0)]
    sample: usize,
    /// CSV for the drawn samples.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn pretrain_cmd(a: PretrainArgs) -> dts_core::Result<()> {
    let samples = read_samples_csv(&a.samples)?;
    let cfg = TrainConfig {
        levels: a.levels,
        hidden: a.hidden,
        hidden_layers: a.hidden_layers,
        lr: a.lr,
        epochs: a.epochs,
        batch: a.batch,
        beta_min: a.beta_min,
        beta_max: a.beta_max,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let out = pretrain::train(&samples, &cfg)?;
    save_prior(&out.prior, &a.out)?;
    if let Some(path) = &a.loss_out {
        std::fs::write(path, pretrain::loss_curve_csv(&out.losses))
            .map_err(|e| Error::Io { path: path.clone(), source: e })?;
    }
    match (out.losses.first(), out.losses.last()) {
        (Some(f), Some(l)) => println!("trained on {} samples; loss {f:.6} -> {l:.6}", samples.len()),
        _ => println!("initialised prior without training"),
    }
    Ok(())
}

fn run_cmd(a: RunArgs) -> dts_core::Result<()> {
    let cfg = a.common.load()?;
    let result = run_experiment(&cfg)?;
    write_outputs(&a.out, &cfg, &result)?;
    println!("agent\tfinal_cum_regret");
    for ag in &result.agents {
        println!("{}\t{:.4}", ag.name, ag.final_mean());
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> dts_core::Result<()> {
    let cfg = a.common.load()?;
    let var: SweepVar = a.var.parse()?;
    let rows = regret_ratio_sweep(&cfg, var, &a.values, &a.numerator, &a.denominator)?;
    let text = sweep_csv(var, &rows);
    if let Some(path) = &a.out {
        std::fs::write(path, &text).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    }
    print!("{text}");
    Ok(())
}

fn bounds_cmd(a: BoundsArgs) -> dts_core::Result<()> {
    let variant: BoundVariant = a.variant.parse()?;
    if a.sigmas.len() != a.levels + 1 {
        return Err(Error::InvalidParameter(format!("--sigmas needs L+1 = {} values", a.levels + 1)));
    }
    let mut p = BoundParams::new(a.n, a.d, a.k, a.sigma, a.sigmas);
    if let Some(d) = a.delta {
        p.delta = d;
    }
    p.c = a.c;
    p.sparsity = a.sparsity;
    println!("{}", compute_bound(&p, variant)?);
    Ok(())
}

fn quality_cmd(a: QualityArgs) -> dts_core::Result<()> {
    let prior = load_prior(&a.prior)?;
    let d = prior.dim();
    let truth = Gaussian { mean: Vector::zeros(d), cov: Matrix::identity(d, d) * a.true_var };
    let r = posterior_quality_report(&truth, &prior, a.n, a.sigma, a.seed)?;
    println!("mean_distance {:.6}", r.mean_distance);
    println!("cov_distance {:.6}", r.cov_distance);
    Ok(())
}

fn inspect_cmd(a: InspectArgs) -> dts_core::Result<()> {
    let prior = load_prior(&a.prior)?;
    println!("d {}\nlevels {}", prior.dim(), prior.levels());
    for l in 1..=prior.levels() {
        let kind = match prior.link(l) {
            LinkFn::Linear { .. } => "linear",
            LinkFn::MlpDirect { .. } => "mlp",
            LinkFn::DdpmEps { .. } => "ddpm",
            LinkFn::Zero { .. } => "zero",
        };
        println!("level {l} {kind} max_variance {:.6e}", prior.cov(l).max_variance());
    }
    println!("top max_variance {:.6e}", prior.top_cov().max_variance());
    if a.sample > 0 {
        let draws = pretrain::generate(&prior, a.sample, &mut rng::stream(a.seed, Purpose::Evaluation))?;
        match &a.out {
            Some(path) => write_samples_csv(path, &draws)?,
            None => return Err(Error::InvalidParameter("--sample needs --out".into())),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Pretrain(a) => pretrain_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Quality(a) => quality_cmd(a),
        Command::InspectPrior(a) => inspect_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
