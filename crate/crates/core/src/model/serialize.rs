//! Line-oriented text format for diffusion priors.
//!
//! ```text
//! dts-prior
//! version 1
//! d 2
//! levels 2
//! top_sigma2 1.0000000000000000e0
//! denoiser step_input 1 layers 2      (present when any level is ddpm)
//! dense 3 64
//! w <out*in values, row-major>
//! b <out values>
//! ...
//! schedule <levels betas>
//! layer 1 linear
//! weights <d*d values, row-major>
//! sigma2 <value>                      (or: cov <d*d values>)
//! layer 2 ddpm
//! sigma2 <value>
//! ```
//! An `mlp` layer carries its own `net step_input s layers n` block in the
//! same `dense`/`w`/`b` layout. Floats use 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{Covariance, Dense, DiffusionPrior, LinkFn, MlpNet, NoiseSchedule};
use crate::linalg::{Matrix, Vector};
use crate::{Error, Result};

const MAGIC: &str = "dts-prior";
const VERSION: u32 = 1;

fn fmt_floats<'a>(out: &mut String, key: &str, values: impl Iterator<Item = &'a f64>) {
    out.push_str(key);
    for v in values {
        let _ = write!(out, " {v:.16e}");
    }
    out.push('\n');
}

fn write_matrix(out: &mut String, key: &str, m: &Matrix) {
    let rows: Vec<f64> = (0..m.nrows()).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect();
    fmt_floats(out, key, rows.iter());
}

fn write_cov(out: &mut String, prefix: &str, c: &Covariance) {
    match c.isotropic_variance() {
        Some(s) => {
            let _ = writeln!(out, "{prefix}sigma2 {s:.16e}");
        }
        None => write_matrix(out, &format!("{prefix}cov"), c.matrix()),
    }
}

fn write_net(out: &mut String, header: &str, net: &MlpNet) {
    let _ = writeln!(out, "{header} step_input {} layers {}", u8::from(net.step_input), net.layers.len());
    for l in &net.layers {
        let _ = writeln!(out, "dense {} {}", l.weights.ncols(), l.weights.nrows());
        write_matrix(out, "w", &l.weights);
        fmt_floats(out, "b", l.bias.iter());
    }
}

pub fn prior_to_text(prior: &DiffusionPrior) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}\nversion {VERSION}\nd {}\nlevels {}", prior.dim(), prior.levels());
    write_cov(&mut out, "top_", prior.top_cov());
    let shared = prior.links().iter().find_map(|l| match l {
        LinkFn::DdpmEps { denoiser, schedule, .. } => Some((denoiser.clone(), schedule.clone())),
        _ => None,
    });
    if let Some((net, sched)) = &shared {
        write_net(&mut out, "denoiser", net);
        fmt_floats(&mut out, "schedule", sched.betas().iter());
    }
    for (i, (link, cov)) in prior.links().iter().zip(prior.covs()).enumerate() {
        let _ = writeln!(out, "layer {} {}", i + 1, link.kind());
        match link {
            LinkFn::Linear { weights } => write_matrix(&mut out, "weights", weights),
            LinkFn::MlpDirect { net } => write_net(&mut out, "net", net),
            LinkFn::DdpmEps { denoiser, schedule, level } => {
                let (n, s) = shared.as_ref().expect("found above");
                if **denoiser != **n || **schedule != **s || *level != i + 1 {
                    return Err(Error::invalid("ddpm levels must share one denoiser and schedule"));
                }
            }
            LinkFn::Zero { .. } => return Err(Error::invalid("zero link inside the chain")),
        }
        write_cov(&mut out, "", cov);
    }
    Ok(out)
}

struct Lines<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, t)| !t.is_empty() && !t[0].starts_with('#'))
            .collect();
        Self { lines, pos: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let line = self.lines.get(self.pos.saturating_sub(1)).map_or(0, |l| l.0);
        Error::Parse { line, msg: msg.into() }
    }

    fn peek_key(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|l| l.1[0])
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let Some((line, toks)) = self.lines.get(self.pos).cloned() else {
            return Err(Error::Parse { line: 0, msg: format!("unexpected end of file, wanted `{key}`") });
        };
        self.pos += 1;
        if toks[0] != key {
            return Err(Error::Parse { line, msg: format!("expected `{key}`, found `{}`", toks[0]) });
        }
        Ok(toks[1..].to_vec())
    }

    fn usize_field(&mut self, key: &str) -> Result<usize> {
        let t = self.expect(key)?;
        t.first().and_then(|v| v.parse().ok()).ok_or_else(|| self.err(format!("bad integer for `{key}`")))
    }

    fn floats(&mut self, key: &str, count: usize) -> Result<Vec<f64>> {
        let t = self.expect(key)?;
        if t.len() != count {
            return Err(self.err(format!("`{key}` needs {count} values, found {}", t.len())));
        }
        t.iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| self.err(format!("bad number in `{key}`")))
    }

    fn matrix(&mut self, key: &str, rows: usize, cols: usize) -> Result<Matrix> {
        let v = self.floats(key, rows * cols)?;
        Ok(Matrix::from_row_slice(rows, cols, &v))
    }

    fn cov(&mut self, prefix: &str, d: usize) -> Result<Covariance> {
        let iso = format!("{prefix}sigma2");
        if self.peek_key() == Some(iso.as_str()) {
            let s = self.floats(&iso, 1)?[0];
            Covariance::isotropic(d, s)
        } else {
            let m = self.matrix(&format!("{prefix}cov"), d, d)?;
            Covariance::from_matrix(&m)
        }
    }

    fn net(&mut self, header: &str) -> Result<MlpNet> {
        let t = self.expect(header)?;
        let parsed = match t.as_slice() {
            ["step_input", s, "layers", n] => s.parse::<u8>().ok().zip(n.parse::<usize>().ok()),
            _ => None,
        };
        let (step, n) = parsed.ok_or_else(|| self.err(format!("malformed `{header}` line")))?;
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            let dims = self.expect("dense")?;
            let dims: Vec<usize> = dims.iter().filter_map(|v| v.parse().ok()).collect();
            let [fan_in, fan_out] = dims[..] else {
                return Err(self.err("`dense` needs input and output sizes"));
            };
            let weights = self.matrix("w", fan_out, fan_in)?;
            let bias = Vector::from_vec(self.floats("b", fan_out)?);
            if let Some(prev) = layers.last().map(|l: &Dense| l.weights.nrows()) {
                if prev != fan_in {
                    return Err(self.err("layer sizes do not chain"));
                }
            }
            layers.push(Dense { weights, bias });
        }
        if layers.is_empty() {
            return Err(self.err("network without layers"));
        }
        Ok(MlpNet { layers, step_input: step == 1 })
    }
}

pub fn prior_from_text(text: &str) -> Result<DiffusionPrior> {
    let mut p = Lines::new(text);
    p.expect(MAGIC)?;
    let version = p.usize_field("version")?;
    if version != VERSION as usize {
        return Err(p.err(format!("unsupported version {version}")));
    }
    let d = p.usize_field("d")?;
    let levels = p.usize_field("levels")?;
    if d == 0 || levels == 0 {
        return Err(p.err("d and levels must be positive"));
    }
    let top = p.cov("top_", d)?;
    let mut shared: Option<(Arc<MlpNet>, Arc<NoiseSchedule>)> = None;
    if p.peek_key() == Some("denoiser") {
        let net = p.net("denoiser")?;
        if net.state_dim() != d || net.output_dim() != d || !net.step_input {
            return Err(p.err("denoiser shape does not match d"));
        }
        let count = p.lines.get(p.pos).map_or(0, |l| l.1.len().saturating_sub(1));
        let betas = p.floats("schedule", count)?;
        let sched = NoiseSchedule::from_betas(betas).map_err(|e| p.err(e.to_string()))?;
        shared = Some((Arc::new(net), Arc::new(sched)));
    }
    let mut links = Vec::with_capacity(levels);
    let mut covs = Vec::with_capacity(levels);
    for i in 1..=levels {
        let t = p.expect("layer")?;
        if t.first().and_then(|v| v.parse::<usize>().ok()) != Some(i) || t.len() != 2 {
            return Err(p.err(format!("expected `layer {i} <kind>`")));
        }
        let link = match t[1] {
            "linear" => LinkFn::Linear { weights: p.matrix("weights", d, d)? },
            "mlp" => LinkFn::MlpDirect { net: p.net("net")? },
            "ddpm" => {
                let (denoiser, schedule) = shared.clone().ok_or_else(|| p.err("ddpm layer without denoiser"))?;
                if i > schedule.levels() {
                    return Err(p.err("ddpm layer beyond the schedule"));
                }
                LinkFn::DdpmEps { denoiser, schedule, level: i }
            }
            other => return Err(p.err(format!("unknown layer kind `{other}`"))),
        };
        links.push(link);
        covs.push(p.cov("", d)?);
    }
    if p.pos != p.lines.len() {
        p.pos += 1;
        return Err(p.err("trailing content"));
    }
    DiffusionPrior::new(links, covs, top)
}

pub fn save_prior(prior: &DiffusionPrior, path: &Path) -> Result<()> {
    std::fs::write(path, prior_to_text(prior)?).map_err(|e| Error::io(path, e))
}

pub fn load_prior(path: &Path) -> Result<DiffusionPrior> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    prior_from_text(&text)
}
