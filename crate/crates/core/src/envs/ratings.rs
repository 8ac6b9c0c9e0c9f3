use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{Matrix, Vector};
use crate::model::{ActionParams, BanditInstance, ContextSampler, RewardModel};
use crate::{Error, Result};

/// Ratings with users and items remapped to dense indices in order of first
/// appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsTable {
    pub triples: Vec<(usize, usize, f64)>,
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
}

impl RatingsTable {
    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    /// Tab-separated form accepted by [`parse_ratings`].
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for &(u, i, r) in &self.triples {
            let _ = writeln!(out, "{}\t{}\t{}", self.user_ids[u], self.item_ids[i], r);
        }
        out
    }
}

fn intern(ids: &mut Vec<String>, index: &mut HashMap<String, usize>, key: &str) -> usize {
    *index.entry(key.to_string()).or_insert_with(|| {
        ids.push(key.to_string());
        ids.len() - 1
    })
}

/// Parses `user<TAB>item<TAB>rating[<TAB>timestamp]` rows.
pub fn parse_ratings(text: &str, source: &Path) -> Result<RatingsTable> {
    let mut table = RatingsTable { triples: Vec::new(), user_ids: Vec::new(), item_ids: Vec::new() };
    let mut users = HashMap::new();
    let mut items = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !(3..=4).contains(&fields.len()) || fields[..3].iter().any(|f| f.is_empty()) {
            return Err(Error::Parse { line: line_no, msg: "expected user, item, rating separated by tabs".into() });
        }
        let rating = fields[2]
            .parse::<f64>()
            .ok()
            .filter(|r| r.is_finite())
            .ok_or_else(|| Error::Parse { line: line_no, msg: format!("bad rating `{}`", fields[2]) })?;
        let u = intern(&mut table.user_ids, &mut users, fields[0]);
        let it = intern(&mut table.item_ids, &mut items, fields[1]);
        table.triples.push((u, it, rating));
    }
    if table.triples.is_empty() {
        return Err(Error::EmptyFile(source.to_path_buf()));
    }
    Ok(table)
}

pub fn ingest_ratings(path: &Path) -> Result<RatingsTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ratings(&text, path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsConfig {
    pub rank: usize,
    pub lambda: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self { rank: 5, lambda: 0.1, sweeps: 20, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    /// One row per user.
    pub user_factors: Matrix,
    /// One row per item.
    pub item_factors: Matrix,
    pub rank: usize,
    pub lambda: f64,
    pub rmse: f64,
    /// Objective after initialisation and after each sweep.
    pub objective: Vec<f64>,
}

fn objective(table: &RatingsTable, u: &Matrix, v: &Matrix, lambda: f64) -> (f64, f64) {
    let sq: f64 = table.triples.iter().map(|&(a, b, r)| (r - u.row(a).dot(&v.row(b))).powi(2)).sum();
    (sq + lambda * (u.norm_squared() + v.norm_squared()), (sq / table.triples.len() as f64).sqrt())
}

/// Solves each row of `target` as a ridge regression against `fixed`.
fn half_sweep(groups: &[Vec<(usize, f64)>], fixed: &Matrix, target: &mut Matrix, lambda: f64) {
    let d = fixed.ncols();
    for (row, obs) in groups.iter().enumerate() {
        let mut a = Matrix::identity(d, d) * lambda;
        let mut b = Vector::zeros(d);
        for &(j, r) in obs {
            let f = fixed.row(j).transpose();
            a.ger(1.0, &f, &f, 1.0);
            b.axpy(r, &f, 1.0);
        }
        let sol = a.cholesky().expect("ridge system is positive definite").solve(&b);
        target.set_row(row, &sol.transpose());
    }
}

/// Alternating least squares on `Σ (r - u·v)² + λ(‖U‖² + ‖V‖²)`.
pub fn als_factorize(table: &RatingsTable, cfg: &AlsConfig) -> Result<FactorModel> {
    if cfg.rank == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    if !(cfg.lambda > 0.0) {
        return Err(Error::invalid("lambda must be positive"));
    }
    let d = cfg.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = 1.0 / (d as f64).sqrt();
    let mut u = Matrix::from_fn(table.num_users(), d, |_, _| rng.random_range(0.0..init));
    let mut v = Matrix::from_fn(table.num_items(), d, |_, _| rng.random_range(0.0..init));
    let mut by_user = vec![Vec::new(); table.num_users()];
    let mut by_item = vec![Vec::new(); table.num_items()];
    for &(a, b, r) in &table.triples {
        by_user[a].push((b, r));
        by_item[b].push((a, r));
    }
    let mut trace = vec![objective(table, &u, &v, cfg.lambda).0];
    for _ in 0..cfg.sweeps {
        half_sweep(&by_user, &v, &mut u, cfg.lambda);
        half_sweep(&by_item, &u, &mut v, cfg.lambda);
        trace.push(objective(table, &u, &v, cfg.lambda).0);
    }
    let rmse = objective(table, &u, &v, cfg.lambda).1;
    Ok(FactorModel { user_factors: u, item_factors: v, rank: d, lambda: cfg.lambda, rmse, objective: trace })
}

/// Items become actions and sampled users become contexts.
///
/// User factors are divided by the largest user norm so contexts lie in the
/// unit ball; item factors are multiplied by the same norm, which keeps every
/// predicted rating unchanged.
pub fn movielens_instance(factors: &FactorModel, sigma: f64) -> Result<BanditInstance> {
    let users = &factors.user_factors;
    let max_norm = users.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return Err(Error::invalid("all user factors are zero"));
    }
    let pool = users.row_iter().map(|r| r.transpose() / max_norm).collect();
    let thetas = factors.item_factors.row_iter().map(|r| r.transpose() * max_norm).collect();
    BanditInstance::new(ActionParams::PerAction(thetas), RewardModel::linear(sigma)?, ContextSampler::Pool(pool))
}
