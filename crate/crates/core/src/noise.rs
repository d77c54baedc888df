//! Seeded multiplicative complex Gaussian noise on frequency data.
//!
//! Standard normals come from Box-Muller over `ChaCha8Rng::seed_from_u64(seed)`:
//! each node draws two uniforms `u1` in (0, 1], `u2` in [0, 1) and uses
//! `alpha = R cos(2 pi u2)`, `beta = R sin(2 pi u2)` with `R = sqrt(-2 ln u1)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loewner::FrequencyDataSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    nu: u32,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(nu: u32, seed: u64) -> Result<Self> {
        if nu == 0 {
            return Err(Error::InvalidParameter {
                field: "nu",
                reason: "noise level must be at least 1".into(),
            });
        }
        Ok(Self { nu, seed })
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Noise power `10^-nu`.
    pub fn epsilon(&self) -> f64 {
        10f64.powi(-(self.nu as i32))
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Pairs of independent standard normals `(alpha, beta)`.
pub struct NormalPairs {
    rng: ChaCha8Rng,
}

impl NormalPairs {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Iterator for NormalPairs {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (sin, cos) = (std::f64::consts::TAU * u2).sin_cos();
        Some((radius * cos, radius * sin))
    }
}

/// `h -> h (1 + epsilon (alpha + i beta))` node by node.
pub fn perturb(data: &FrequencyDataSet, spec: &NoiseSpec) -> Result<FrequencyDataSet> {
    perturb_with_power(data, spec.epsilon(), spec.seed())
}

/// [`perturb`] with an explicit noise power, including zero.
pub fn perturb_with_power(data: &FrequencyDataSet, epsilon: f64, seed: u64) -> Result<FrequencyDataSet> {
    let values = data
        .values()
        .iter()
        .zip(NormalPairs::new(seed))
        .map(|(&h, (alpha, beta))| h * (1.0 + epsilon * Complex64::new(alpha, beta)))
        .collect();
    data.with_values(values)
}
