use std::sync::Arc;

use rand::Rng;

use crate::linalg::{check_dim, Matrix, Vector};
use crate::{Error, Result};

/// One fully connected layer, `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vector,
}

/// Weight initialisation scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    FanIn,
    /// Uniform in `[-a, a]`.
    Uniform(f64),
}

/// Rectifier network with a linear output layer.
///
/// When `step_input` is set the network expects one extra trailing input
/// carrying the diffusion step as `level / levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet {
    pub layers: Vec<Dense>,
    pub step_input: bool,
}

impl MlpNet {
    /// `sizes` lists layer widths from input to output, e.g. `[3, 64, 2]`.
    pub fn random(sizes: &[usize], step_input: bool, init: Init, rng: &mut impl Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(format!("bad layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let a = match init {
                    Init::FanIn => 1.0 / (fan_in as f64).sqrt(),
                    Init::Uniform(a) => a,
                };
                let mut draw = || rng.random_range(-a..=a);
                Dense {
                    weights: Matrix::from_fn(fan_out, fan_in, |_, _| draw()),
                    bias: Vector::from_fn(fan_out, |_, _| draw()),
                }
            })
            .collect();
        Ok(Self { layers, step_input })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.nrows())
    }

    /// Dimension of the state part of the input (excluding the step feature).
    pub fn state_dim(&self) -> usize {
        self.input_dim() - usize::from(self.step_input)
    }

    pub fn forward(&self, x: &Vector) -> Vector {
        let n = self.layers.len();
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.bias + &layer.weights * &a;
            if i + 1 < n {
                z.apply(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a
    }

    /// Forward pass on a batch stored column-wise.
    pub fn forward_batch(&self, input: &Matrix) -> Matrix {
        self.forward_cached(input).pop().expect("network has layers")
    }

    fn forward_cached(&self, input: &Matrix) -> Vec<Matrix> {
        let n = self.layers.len();
        let mut acts = Vec::with_capacity(n + 1);
        acts.push(input.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.weights * acts.last().expect("non-empty");
            for mut col in z.column_iter_mut() {
                col += &layer.bias;
            }
            if i + 1 < n {
                z.apply(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    /// Mean squared error over all output entries and its gradient with
    /// respect to [`MlpNet::params`].
    pub fn mse_gradient(&self, input: &Matrix, target: &Matrix) -> (f64, Vec<f64>) {
        let acts = self.forward_cached(input);
        let out = acts.last().expect("non-empty");
        let scale = 1.0 / (out.len() as f64);
        let resid = out - target;
        let loss = resid.norm_squared() * scale;
        let mut delta = resid * (2.0 * scale);
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let prev = &acts[i];
            let dw = &delta * prev.transpose();
            let db = delta.column_sum();
            let mut g = dw.as_slice().to_vec();
            g.extend_from_slice(db.as_slice());
            grads.push(g);
            if i > 0 {
                let mut back = self.layers[i].weights.transpose() * &delta;
                // prev holds rectified activations, positive exactly where the unit was active
                back.zip_apply(prev, |b, p| {
                    if p <= 0.0 {
                        *b = 0.0
                    }
                });
                delta = back;
            }
        }
        grads.reverse();
        (loss, grads.concat())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Flattened parameters: per layer, weights column-major then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            p.extend_from_slice(l.weights.as_slice());
            p.extend_from_slice(l.bias.as_slice());
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count(), "parameter length");
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.as_mut_slice().copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.as_mut_slice().copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

/// Per-level variance increments of a denoising diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

/// Which conditional variance a trained diffusion uses at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceChoice {
    /// `β̃_ℓ = β_ℓ (1 - ᾱ_{ℓ-1}) / (1 - ᾱ_ℓ)`, with `β̃_1 = β_1`.
    #[default]
    Tilde,
    Beta,
}

impl NoiseSchedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::invalid("schedule needs at least one level"));
        }
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::invalid(format!("beta {b} outside (0, 1)")));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let alpha_bars = alphas
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Ok(Self { betas, alphas, alpha_bars })
    }

    pub fn levels(&self) -> usize {
        self.betas.len()
    }

    /// `level` is 1-based throughout.
    pub fn beta(&self, level: usize) -> f64 {
        self.betas[level - 1]
    }

    pub fn alpha(&self, level: usize) -> f64 {
        self.alphas[level - 1]
    }

    pub fn alpha_bar(&self, level: usize) -> f64 {
        self.alpha_bars[level - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    pub fn variance(&self, level: usize, choice: VarianceChoice) -> f64 {
        match choice {
            VarianceChoice::Beta => self.beta(level),
            VarianceChoice::Tilde if level == 1 => self.beta(1),
            VarianceChoice::Tilde => {
                self.beta(level) * (1.0 - self.alpha_bar(level - 1)) / (1.0 - self.alpha_bar(level))
            }
        }
    }
}

/// Linear schedule from `beta_min` to `beta_max` over `levels` steps.
pub fn make_schedule(levels: usize, beta_min: f64, beta_max: f64) -> Result<NoiseSchedule> {
    if levels == 0 {
        return Err(Error::invalid("schedule needs at least one level"));
    }
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::invalid(format!("need 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]")));
    }
    let betas = if levels == 1 {
        vec![beta_min]
    } else {
        (0..levels).map(|i| beta_min + i as f64 / (levels - 1) as f64 * (beta_max - beta_min)).collect()
    };
    NoiseSchedule::from_betas(betas)
}

/// Mean map of one level of the chain.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkFn {
    Linear {
        weights: Matrix,
    },
    MlpDirect {
        net: MlpNet,
    },
    /// Reverse-diffusion mean derived from a shared noise predictor.
    DdpmEps {
        denoiser: Arc<MlpNet>,
        schedule: Arc<NoiseSchedule>,
        level: usize,
    },
    /// The constant zero map above the top level.
    Zero {
        d: usize,
    },
}

impl LinkFn {
    pub fn dim(&self) -> usize {
        match self {
            LinkFn::Linear { weights } => weights.nrows(),
            LinkFn::MlpDirect { net } => net.output_dim(),
            LinkFn::DdpmEps { denoiser, .. } => denoiser.output_dim(),
            LinkFn::Zero { d } => *d,
        }
    }

    pub fn weights(&self) -> Option<&Matrix> {
        match self {
            LinkFn::Linear { weights } => Some(weights),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LinkFn::Linear { .. } => "linear",
            LinkFn::MlpDirect { .. } => "mlp",
            LinkFn::DdpmEps { .. } => "ddpm",
            LinkFn::Zero { .. } => "zero",
        }
    }

    /// Number of leading columns that are not identically zero (linear only).
    pub fn active_columns(&self) -> Option<usize> {
        self.weights()
            .map(|w| (0..w.ncols()).rev().find(|&j| w.column(j).iter().any(|&v| v != 0.0)).map_or(0, |j| j + 1))
    }
}

/// Evaluates the link at `psi`.
pub fn link_apply(link: &LinkFn, psi: &Vector) -> Result<Vector> {
    match link {
        LinkFn::Linear { weights } => {
            check_dim(weights.ncols(), psi.len())?;
            Ok(weights * psi)
        }
        LinkFn::MlpDirect { net } => {
            check_dim(net.input_dim(), psi.len())?;
            Ok(net.forward(psi))
        }
        LinkFn::DdpmEps { denoiser, schedule, level } => {
            check_dim(denoiser.state_dim(), psi.len())?;
            let l = *level;
            let input = psi.clone().push(l as f64 / schedule.levels() as f64);
            let eps = denoiser.forward(&input);
            let coef = schedule.beta(l) / (1.0 - schedule.alpha_bar(l)).sqrt();
            Ok((psi - eps * coef) / schedule.alpha(l).sqrt())
        }
        LinkFn::Zero { d } => {
            check_dim(*d, psi.len())?;
            Ok(Vector::zeros(*d))
        }
    }
}
