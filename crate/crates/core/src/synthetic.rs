//! Synthetic regression benchmark with a known low-dimensional structure.
//!
//! A 2-d latent `z ~ U[-1,1]²` drives the label `y = tanh(z₁ + 0.5·z₂²)`,
//! min-max rescaled to `[-1,1]`. The observed features are a fixed random
//! nonlinear lift of `z` into `dim` dimensions plus isotropic Gaussian noise.

use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub dim: usize,
    pub noise_std: f64,
    /// Scale of the random frequencies of the lift; larger values make the
    /// features more oscillatory in `z`.
    pub frequency: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            dim: 200,
            noise_std: 0.1,
            frequency: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub latent: Matrix,
    pub features: Matrix,
    pub labels: Vec<f64>,
}

/// Feature `j` is `sin(ω_j·z + φ_j)` with `ω_j ~ N(0, frequency²·I)` and
/// `φ_j ~ U[0, 2π)`, plus `N(0, noise_std²)` noise.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    if config.n < 2 || config.dim == 0 || config.noise_std.is_nan() || config.noise_std < 0.0 || config.frequency.is_nan() || config.frequency <= 0.0 {
        return Err(Error::InvalidConfig(alloc::format!("invalid synthetic settings {config:?}")));
    }
    let mut lift_rng = rng::seeded(rng::derive_seed(config.seed, &[0]));
    let mut sample_rng = rng::seeded(rng::derive_seed(config.seed, &[1]));
    let omega: Vec<[f64; 2]> = (0..config.dim)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut lift_rng);
            let b: f64 = StandardNormal.sample(&mut lift_rng);
            [config.frequency * a, config.frequency * b]
        })
        .collect();
    let phase: Vec<f64> = (0..config.dim)
        .map(|_| lift_rng.random_range(0.0..core::f64::consts::TAU))
        .collect();
    let noise = Normal::new(0.0, config.noise_std).map_err(|_| Error::InvalidConfig("noise_std".into()))?;

    let mut latent = Matrix::zeros(config.n, 2);
    let mut features = Matrix::zeros(config.n, config.dim);
    let mut raw = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let z = [sample_rng.random_range(-1.0..=1.0), sample_rng.random_range(-1.0..=1.0)];
        latent.row_mut(i).copy_from_slice(&z);
        raw.push(libm::tanh(z[0] + 0.5 * z[1] * z[1]));
        for (j, x) in features.row_mut(i).iter_mut().enumerate() {
            *x = libm::sin(omega[j][0] * z[0] + omega[j][1] * z[1] + phase[j]) + noise.sample(&mut sample_rng);
        }
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::DegenerateRange("label"));
    }
    let labels = raw.iter().map(|v| 2.0 * (v - lo) / (hi - lo) - 1.0).collect();
    Ok(SyntheticData {
        latent,
        features,
        labels,
    })
}
