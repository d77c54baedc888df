//! Experiment configuration: JSON, schema version 1, SI units after loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::beam::BeamParams;
use crate::loewner::{PartitionScheme, Truncation};
use crate::noise::NoiseSpec;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 0;

/// A number in SI units, or `{"value": x, "unit": "..."}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Quantity {
    Si(f64),
    WithUnit { value: f64, unit: String },
}

#[derive(Debug, Clone, Copy)]
enum Dimension {
    Length,
    Area,
    Density,
    LinearDensity,
    Pressure,
    SecondMoment,
    Mass,
    Stiffness,
    Damping,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[("m", 1.0), ("cm", 1e-2), ("mm", 1e-3)],
            Dimension::Area => &[("m^2", 1.0), ("cm^2", 1e-4), ("mm^2", 1e-6)],
            Dimension::Density => &[("kg/m^3", 1.0), ("g/cm^3", 1e3)],
            Dimension::LinearDensity => &[("kg/m", 1.0), ("g/m", 1e-3)],
            Dimension::Pressure => &[("Pa", 1.0), ("kPa", 1e3), ("MPa", 1e6), ("GPa", 1e9)],
            Dimension::SecondMoment => &[("m^4", 1.0), ("cm^4", 1e-8), ("mm^4", 1e-12)],
            Dimension::Mass => &[("kg", 1.0), ("g", 1e-3)],
            Dimension::Stiffness => &[("N/m", 1.0), ("N/mm", 1e3), ("kN/m", 1e3)],
            Dimension::Damping => &[("m^4/s", 1.0)],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    length: Quantity,
    shaker_position: Quantity,
    sensor_position: Quantity,
    density: Quantity,
    area: Quantity,
    #[serde(default)]
    linear_density: Option<Quantity>,
    youngs_modulus: Quantity,
    area_moment: Quantity,
    shaker_mass: Quantity,
    spring_stiffness: Quantity,
    damping: Quantity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub count: usize,
}

/// Frequencies on which the fitted model is scored against the analytic response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationGrid {
    /// The sampling grid itself.
    #[default]
    Sampling,
    /// Twice as many points, each in the middle of a cell of the doubled grid.
    Offset,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    nu: u32,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    beam: RawBeam,
    grid: GridSpec,
    #[serde(default)]
    partition_scheme: PartitionScheme,
    #[serde(default)]
    truncation: Truncation,
    #[serde(default)]
    noise: Option<RawNoise>,
    #[serde(default)]
    verification_grid: VerificationGrid,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

/// Validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub beam: BeamParams,
    pub grid: GridSpec,
    pub partition_scheme: PartitionScheme,
    pub truncation: Truncation,
    pub noise: Option<NoiseSpec>,
    pub verification_grid: VerificationGrid,
    pub output_dir: PathBuf,
    /// Unit conversions applied while loading, e.g. `beam.spring_stiffness: 7 N/mm -> 7000 N/m`.
    pub provenance: Vec<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            format!("at `{path}`: {}", e.into_inner())
        })?;
        raw.validate(base_dir)
    }

    pub fn with_output_dir(mut self, dir: PathBuf) -> Self {
        self.output_dir = dir;
        self
    }

    /// Replaces the noise seed; has no effect without a noise block.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.noise = self.noise.map(|n| n.with_seed(seed));
        self
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    ExperimentConfig::parse(&text, base).map_err(|message| CliError::Config {
        path: path.to_path_buf(),
        message,
    })
}

impl RawConfig {
    fn validate(self, base_dir: &Path) -> Result<ExperimentConfig, String> {
        if self.version != SCHEMA_VERSION {
            return Err(format!(
                "at `version`: unsupported schema version {}, expected {SCHEMA_VERSION}",
                self.version
            ));
        }
        let mut provenance = Vec::new();
        let beam = self.beam.into_si(&mut provenance)?;
        beam.validate().map_err(|e| match e {
            crate::Error::InvalidParameter { field, reason } => {
                format!("at `beam.{field}`: {reason}")
            }
            other => other.to_string(),
        })?;
        let g = self.grid;
        if g.count < 2 {
            return Err(format!("at `grid.count`: at least 2 points required, got {}", g.count));
        }
        if !(g.f_min_hz >= 0.0 && g.f_max_hz > g.f_min_hz && g.f_max_hz.is_finite()) {
            return Err(format!(
                "at `grid`: need 0 <= f_min_hz < f_max_hz, got [{}, {}]",
                g.f_min_hz, g.f_max_hz
            ));
        }
        match self.truncation {
            Truncation::Order(0) => return Err("at `truncation.order`: must be at least 1".into()),
            Truncation::Tol(t) if !(t > 0.0 && t < 1.0) => {
                return Err(format!("at `truncation.tol`: must lie in (0, 1), got {t}"))
            }
            _ => {}
        }
        let noise = self
            .noise
            .map(|n| NoiseSpec::new(n.nu, n.seed.unwrap_or(DEFAULT_SEED)))
            .transpose()
            .map_err(|e| format!("at `noise.nu`: {e}"))?;
        let output_dir = match self.output_dir {
            Some(dir) if dir.is_absolute() => dir,
            Some(dir) => base_dir.join(dir),
            None => base_dir.join("out"),
        };
        Ok(ExperimentConfig {
            beam,
            grid: g,
            partition_scheme: self.partition_scheme,
            truncation: self.truncation,
            noise,
            verification_grid: self.verification_grid,
            output_dir,
            provenance,
        })
    }
}

impl RawBeam {
    fn into_si(self, provenance: &mut Vec<String>) -> Result<BeamParams, String> {
        let mut si = |field: &str, q: Quantity, dim: Dimension| -> Result<f64, String> {
            match q {
                Quantity::Si(x) => Ok(x),
                Quantity::WithUnit { value, unit } => {
                    let units = dim.units();
                    let (si_unit, _) = units[0];
                    let factor = units
                        .iter()
                        .find(|(name, _)| *name == unit)
                        .map(|&(_, f)| f)
                        .ok_or_else(|| {
                            let known: Vec<_> = units.iter().map(|(n, _)| *n).collect();
                            format!("at `beam.{field}.unit`: unknown unit `{unit}`, expected one of {known:?}")
                        })?;
                    let converted = value * factor;
                    if factor != 1.0 {
                        provenance.push(format!("beam.{field}: {value} {unit} -> {converted} {si_unit}"));
                    }
                    Ok(converted)
                }
            }
        };
        let density = si("density", self.density, Dimension::Density)?;
        let area = si("area", self.area, Dimension::Area)?;
        let linear_density = match self.linear_density {
            Some(q) => si("linear_density", q, Dimension::LinearDensity)?,
            None => density * area,
        };
        Ok(BeamParams {
            length: si("length", self.length, Dimension::Length)?,
            shaker_position: si("shaker_position", self.shaker_position, Dimension::Length)?,
            sensor_position: si("sensor_position", self.sensor_position, Dimension::Length)?,
            density,
            area,
            linear_density,
            youngs_modulus: si("youngs_modulus", self.youngs_modulus, Dimension::Pressure)?,
            area_moment: si("area_moment", self.area_moment, Dimension::SecondMoment)?,
            shaker_mass: si("shaker_mass", self.shaker_mass, Dimension::Mass)?,
            spring_stiffness: si("spring_stiffness", self.spring_stiffness, Dimension::Stiffness)?,
            damping: si("damping", self.damping, Dimension::Damping)?,
        })
    }
}
