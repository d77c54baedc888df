//! Frequency response of a hinged Euler-Bernoulli beam with Kelvin-Voigt damping,
//! driven by a force acting on a spring-mass shaker attached at `l0`, observed
//! through the curvature `w''` at a sensor position `l1 <= l0`.
//!
//! In the Laplace domain the deflection obeys `W'''' = -4 gamma^4 W` on each side of
//! the shaker. The fundamental matrix of that first-order system is built from the
//! four Krylov functions `z1..z4`; the hinge conditions leave four unknown boundary
//! values, fixed by continuity of `W, W', W''` and the force balance at the shaker.

mod oracle;

pub use oracle::oracle_fd;

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::solve_linear;
use crate::loewner::FrequencyDataSet;

/// Damping coefficient of the strongly damped reference configuration.
pub const DAMPING_LARGE: f64 = 0.0249;
/// Damping coefficient of the lightly damped reference configuration.
pub const DAMPING_SMALL: f64 = 0.001;

/// Physical constants of the beam-shaker system, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Beam length `l` [m].
    pub length: f64,
    /// Shaker attachment point `l0` [m].
    pub shaker_position: f64,
    /// Curvature sensor position `l1` [m], must not exceed `l0`.
    pub sensor_position: f64,
    /// Material density `rho0` [kg/m^3].
    pub density: f64,
    /// Cross-section area `S` [m^2].
    pub area: f64,
    /// Mass per unit length `rho = rho0 * S` [kg/m].
    pub linear_density: f64,
    /// Young's modulus `E` [Pa].
    pub youngs_modulus: f64,
    /// Second moment of area `I` [m^4].
    pub area_moment: f64,
    /// Shaker mass `m` [kg].
    pub shaker_mass: f64,
    /// Shaker spring stiffness `kappa` [N/m].
    pub spring_stiffness: f64,
    /// Structural damping coefficient `d`, as it multiplies `w_t''''`.
    pub damping: f64,
}

impl BeamParams {
    /// Aluminium test rig: 1.905 m beam, shaker at 1.4 m, sensor at 732.5 mm,
    /// 0.1 kg shaker on a 7 N/mm spring.
    pub fn reference_rig(damping: f64) -> Self {
        let density = 2700.0;
        let area = 2.25e-4;
        Self {
            length: 1.905,
            shaker_position: 1.4,
            sensor_position: 0.7325,
            density,
            area,
            linear_density: density * area,
            youngs_modulus: 6.9e10,
            area_moment: 1.6875e-10,
            shaker_mass: 0.1,
            spring_stiffness: 7000.0,
            damping,
        }
    }

    pub fn flexural_rigidity(&self) -> f64 {
        self.youngs_modulus * self.area_moment
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("length", self.length),
            ("shaker_position", self.shaker_position),
            ("sensor_position", self.sensor_position),
            ("density", self.density),
            ("area", self.area),
            ("linear_density", self.linear_density),
            ("youngs_modulus", self.youngs_modulus),
            ("area_moment", self.area_moment),
            ("shaker_mass", self.shaker_mass),
            ("spring_stiffness", self.spring_stiffness),
            ("damping", self.damping),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        for (field, value) in &fields[..10] {
            if *value <= 0.0 {
                return Err(invalid(field, format!("must be positive, got {value}")));
            }
        }
        if self.damping < 0.0 {
            return Err(invalid(
                "damping",
                format!("must be non-negative, got {}", self.damping),
            ));
        }
        if self.shaker_position >= self.length {
            return Err(invalid("shaker_position", "must lie strictly inside the beam"));
        }
        if self.sensor_position > self.shaker_position {
            return Err(invalid(
                "sensor_position",
                "must not exceed shaker_position",
            ));
        }
        let expected = self.density * self.area;
        if (self.linear_density - expected).abs() > 1e-12 * expected {
            return Err(invalid(
                "linear_density",
                format!("must equal density * area = {expected}"),
            ));
        }
        Ok(())
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// Laplace node for a physical frequency in Hz: `s = 2 pi i f`.
pub fn laplace_node(freq_hz: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * freq_hz)
}

/// Quantities of the spatial ODE that depend on the Laplace variable only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    pub s: Complex64,
    /// `alpha^4 = rho / (EI + rho d s)`
    pub alpha4: Complex64,
    /// `gamma = alpha sqrt(2 s) / 2`, principal branches.
    pub gamma: Complex64,
    /// `beta = (m s^2 + kappa) / EI`
    pub beta: Complex64,
    /// `4 gamma^4 = rho s^2 / (EI + rho d s)`, computed without roots.
    pub four_gamma4: Complex64,
}

pub fn spectral_params(s: Complex64, p: &BeamParams) -> Result<SpectralParams> {
    let ei = p.flexural_rigidity();
    let rho = p.linear_density;
    let denom = ei + rho * p.damping * s;
    if denom.norm() < 1e-30 {
        return Err(Error::DegenerateParameter(format!(
            "EI + rho d s vanishes at s = {s}"
        )));
    }
    let alpha4 = rho / denom;
    let alpha = alpha4.sqrt().sqrt();
    let gamma = alpha * (2.0 * s).sqrt() / 2.0;
    Ok(SpectralParams {
        s,
        alpha4,
        gamma,
        beta: (s * s * p.shaker_mass + p.spring_stiffness) / ei,
        four_gamma4: alpha4 * s * s,
    })
}

/// Values of the Krylov functions `z1..z4` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovQuad {
    pub z1: Complex64,
    pub z2: Complex64,
    pub z3: Complex64,
    pub z4: Complex64,
}

/// Below this `|gamma x|` the closed forms lose digits to cancellation.
const SERIES_RADIUS: f64 = 1.0;
const SERIES_TERMS: usize = 10;

/// Krylov functions of the beam operator:
///
/// ```text
/// z1 = cosh(u) cos(u)
/// z2 = (cosh(u) sin(u) + sinh(u) cos(u)) / (2 gamma)
/// z3 = sinh(u) sin(u) / (2 gamma^2)
/// z4 = (cosh(u) sin(u) - sinh(u) cos(u)) / (4 gamma^3),     u = gamma x
/// ```
///
/// Each `zk` is an entire function of `gamma^4`, so the branch of `gamma` is
/// irrelevant. For `|u| <= 1` the Taylor series in `-4 u^4` is summed instead.
pub fn krylov_z(gamma: Complex64, x: f64) -> KrylovQuad {
    let u = gamma * x;
    if u.norm() <= SERIES_RADIUS {
        let q = -4.0 * u * u * u * u;
        let mut sums = [Complex64::new(0.0, 0.0); 4];
        let mut power = Complex64::new(1.0, 0.0);
        let mut fact = 1.0_f64; // (4m)!
        for m in 0..SERIES_TERMS {
            let base = 4 * m;
            let mut f = fact;
            for (k, sum) in sums.iter_mut().enumerate() {
                if k > 0 {
                    f *= (base + k) as f64;
                }
                *sum += power / f;
            }
            fact = f * (base + 4) as f64;
            power *= q;
        }
        KrylovQuad {
            z1: sums[0],
            z2: sums[1] * x,
            z3: sums[2] * x * x,
            z4: sums[3] * x * x * x,
        }
    } else {
        let (ch, sh, c, s) = (u.cosh(), u.sinh(), u.cos(), u.sin());
        let g2 = gamma * gamma;
        KrylovQuad {
            z1: ch * c,
            z2: (ch * s + sh * c) / (2.0 * gamma),
            z3: sh * s / (2.0 * g2),
            z4: (ch * s - sh * c) / (4.0 * g2 * gamma),
        }
    }
}

/// Closed-form `exp(x A)` for the companion matrix `A` with `A^4 = -4 gamma^4 I`.
pub fn spatial_exponential(gamma: Complex64, x: f64) -> Mat<Complex64> {
    let z = krylov_z(gamma, x);
    let g = -4.0 * gamma.powu(4);
    let row = [z.z1, z.z2, z.z3, z.z4];
    Mat::from_fn(4, 4, |i, j| {
        if j >= i {
            row[j - i]
        } else {
            // below the diagonal: -4 gamma^4 z_{4 - (i - j) + 1}
            g * row[4 - (i - j)]
        }
    })
}

/// Coefficient matrix of the continuity and force-balance conditions at `l0`,
/// acting on `(W0_2, W0_4, Wl_2, Wl_4)`.
pub fn interface_matrix(sp: &SpectralParams, p: &BeamParams) -> Mat<Complex64> {
    let left = krylov_z(sp.gamma, p.shaker_position);
    let right = krylov_z(sp.gamma, p.shaker_position - p.length);
    let g = sp.four_gamma4;
    let b = sp.beta;
    let rows = [
        [-left.z2, -left.z4, right.z2, right.z4],
        [-left.z1, -left.z3, right.z1, right.z3],
        [g * left.z4, -left.z2, -g * right.z4, right.z2],
        [
            b * left.z2 + g * left.z3,
            b * left.z4 - left.z1,
            -g * right.z3,
            right.z1,
        ],
    ];
    Mat::from_fn(4, 4, |i, j| rows[i][j])
}

/// Unknown boundary values for a unit shaker force: `W(0) = (0, W0_2, 0, W0_4)`,
/// `W(l) = (0, Wl_2, 0, Wl_4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConstants {
    pub w0_2: Complex64,
    pub w0_4: Complex64,
    pub wl_2: Complex64,
    pub wl_4: Complex64,
}

/// Solves `M W = R` for a unit force, where only `R_4 = 1 / EI` is nonzero.
pub fn boundary_constants(sp: &SpectralParams, p: &BeamParams) -> Result<BoundaryConstants> {
    let m = interface_matrix(sp, p);
    let zero = Complex64::new(0.0, 0.0);
    let col = solve_linear(m.as_ref(), &[zero, zero, zero, Complex64::new(1.0, 0.0)])?;
    let ei = p.flexural_rigidity();
    Ok(BoundaryConstants {
        w0_2: col[0] / ei,
        w0_4: col[1] / ei,
        wl_2: col[2] / ei,
        wl_4: col[3] / ei,
    })
}

/// Transfer function from shaker force to curvature at the sensor, together
/// with the boundary constants it was assembled from.
pub fn transfer_function_detailed(
    s: Complex64,
    p: &BeamParams,
) -> Result<(Complex64, BoundaryConstants)> {
    let sp = spectral_params(s, p)?;
    let bc = boundary_constants(&sp, p)?;
    let z = krylov_z(sp.gamma, p.sensor_position);
    let h = -sp.four_gamma4 * z.z4 * bc.w0_2 + z.z2 * bc.w0_4;
    if !(h.re.is_finite() && h.im.is_finite()) {
        return Err(Error::NonFinite("transfer function value"));
    }
    Ok((h, bc))
}

pub fn transfer_function(s: Complex64, p: &BeamParams) -> Result<Complex64> {
    transfer_function_detailed(s, p).map(|(h, _)| h)
}

/// `count` equally spaced frequencies in `[f_min, f_max]`, endpoints included.
pub fn frequency_grid(f_min: f64, f_max: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidData(format!(
            "grid needs at least 2 points, got {count}"
        )));
    }
    if !(f_min >= 0.0 && f_max > f_min && f_max.is_finite()) {
        return Err(Error::InvalidData(format!(
            "grid range [{f_min}, {f_max}] must satisfy 0 <= f_min < f_max"
        )));
    }
    let step = (f_max - f_min) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                f_max
            } else {
                f_min + step * i as f64
            }
        })
        .collect())
}

/// Evaluates the transfer function at `s = 2 pi i f` for every frequency,
/// preserving input order.
pub fn sample_frequencies(p: &BeamParams, freqs_hz: &[f64]) -> Result<FrequencyDataSet> {
    p.validate()?;
    let values: Vec<Complex64> = freqs_hz
        .par_iter()
        .map(|&f| {
            transfer_function(laplace_node(f), p).map_err(|e| Error::SampleFailed {
                freq_hz: f,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let nodes = freqs_hz.iter().map(|&f| laplace_node(f)).collect();
    FrequencyDataSet::new(nodes, values)
}

pub fn sample_grid(p: &BeamParams, f_min: f64, f_max: f64, count: usize) -> Result<FrequencyDataSet> {
    let freqs = frequency_grid(f_min, f_max, count)?;
    sample_frequencies(p, &freqs)
}
