use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::Vector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwissRollConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub scale: f64,
    pub noise_std: f64,
    pub count: usize,
}

impl Default for SwissRollConfig {
    /// Angles in `[1.5π, 4.5π]` scaled so the roll fits in the unit disc.
    fn default() -> Self {
        Self { t_min: 1.5 * PI, t_max: 4.5 * PI, scale: 1.0 / (4.5 * PI), noise_std: 0.05, count: 1000 }
    }
}

pub fn swiss_roll_point(t: f64, scale: f64) -> Vector {
    Vector::from_vec(vec![scale * t * t.cos(), scale * t * t.sin()])
}

pub fn swiss_roll(cfg: &SwissRollConfig, rng: &mut impl Rng) -> Result<Vec<Vector>> {
    if !(cfg.t_min < cfg.t_max && cfg.scale > 0.0 && cfg.noise_std >= 0.0) {
        return Err(Error::invalid(format!("bad swiss roll config {cfg:?}")));
    }
    Ok((0..cfg.count)
        .map(|_| {
            let t = rng.random_range(cfg.t_min..cfg.t_max);
            let mut p = swiss_roll_point(t, cfg.scale);
            if cfg.noise_std > 0.0 {
                p[0] += cfg.noise_std * rng.sample::<f64, _>(StandardNormal);
                p[1] += cfg.noise_std * rng.sample::<f64, _>(StandardNormal);
            }
            p
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_formula() {
        let s = 1.0 / (4.5 * PI);
        let p = swiss_roll_point(2.0 * PI, s);
        assert_eq!(p[0], s * 2.0 * PI);
        assert!(p[1].abs() < 1e-15);
    }

    #[test]
    fn noiseless_radius_identity() {
        let cfg = SwissRollConfig { noise_std: 0.0, count: 2000, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for p in swiss_roll(&cfg, &mut rng).unwrap() {
            let r = p.norm();
            assert!(r >= cfg.scale * cfg.t_min - 1e-12 && r <= cfg.scale * cfg.t_max + 1e-12);
        }
    }

    #[test]
    fn noisy_radius_range() {
        let cfg = SwissRollConfig { count: 10_000, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let three = 3.0 * cfg.noise_std * 2f64.sqrt();
        for p in swiss_roll(&cfg, &mut rng).unwrap() {
            let r = p.norm();
            assert!(r >= cfg.scale * cfg.t_min - three && r <= cfg.scale * cfg.t_max + three);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SwissRollConfig { t_min: 2.0, t_max: 1.0, ..Default::default() };
        assert!(swiss_roll(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
