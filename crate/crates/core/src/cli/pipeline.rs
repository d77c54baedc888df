//! Stages of an experiment run. Each stage writes its artifacts as soon as it
//! finishes, so a failure later on leaves the earlier outputs in place.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, VerificationGrid};
use super::io::{self, RomFile};
use super::CliError;
use crate::beam::{frequency_grid, sample_frequencies};
use crate::loewner::{
    build_pencil, conjugate_close, partition, realify, reduce, stagnation_index, svd_augmented,
    FrequencyDataSet, SvdReport,
};
use crate::noise::{perturb, NoiseSpec};
use crate::rom::{error_report, poles, ReducedModel};

/// Successive normalized singular-value ratio above which the decay counts as stagnant.
pub const STAGNATION_RATIO: f64 = 0.9;
/// Number of consecutive stagnant ratios that mark a plateau.
pub const STAGNATION_RUN: usize = 10;
/// Noise levels visited by `noise-sweep`.
pub const SWEEP_LEVELS: [u32; 4] = [1, 2, 3, 4];

/// Wall-clock time per stage in milliseconds.
pub type Timings = BTreeMap<String, f64>;

fn timed<T>(timings: &mut Timings, stage: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    let start = Instant::now();
    let out = f()?;
    timings.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
    Ok(out)
}

fn stage<T>(name: &'static str, r: crate::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Stage { stage: name, source })
}

#[derive(Debug, Clone)]
pub struct Samples {
    pub freqs: Vec<f64>,
    /// Analytic response on the sampling grid.
    pub clean: FrequencyDataSet,
    /// Data handed to the fit: `clean`, perturbed when noise is configured.
    pub data: FrequencyDataSet,
}

/// Samples the beam on the configured grid, applies noise and writes `samples.csv`.
pub fn run_sample(cfg: &ExperimentConfig, timings: &mut Timings) -> Result<Samples, CliError> {
    let g = cfg.grid;
    let (freqs, clean) = timed(timings, "sample", || {
        let freqs = stage("sample", frequency_grid(g.f_min_hz, g.f_max_hz, g.count))?;
        let clean = stage("sample", sample_frequencies(&cfg.beam, &freqs))?;
        Ok((freqs, clean))
    })?;
    let data = match &cfg.noise {
        Some(spec) => timed(timings, "perturb", || stage("perturb", perturb(&clean, spec)))?,
        None => clean.clone(),
    };
    io::write_samples(&io::artifact(&cfg.output_dir, io::SAMPLES_CSV)?, &freqs, &data)?;
    Ok(Samples { freqs, clean, data })
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub svd: SvdReport<f64>,
    pub model: ReducedModel<f64>,
}

/// Builds the real Loewner pencil, writes `singvals.csv`, reduces and writes `rom.json`.
pub fn run_fit(cfg: &ExperimentConfig, data: &FrequencyDataSet, timings: &mut Timings) -> Result<Fit, CliError> {
    let (pencil, svd) = timed(timings, "pencil", || {
        let closed = stage("close", conjugate_close(data))?;
        let parts = stage("partition", partition(&closed, cfg.partition_scheme))?;
        let complex = stage("pencil", build_pencil(&parts))?;
        let pencil = stage("realify", realify(&complex))?;
        let svd = stage("svd", svd_augmented(&pencil))?;
        Ok((pencil, svd))
    })?;
    io::write_singvals(&io::artifact(&cfg.output_dir, io::SINGVALS_CSV)?, &svd)?;
    let model = timed(timings, "reduce", || stage("reduce", reduce(&pencil, &svd, cfg.truncation)))?;
    io::write_json(&io::artifact(&cfg.output_dir, io::ROM_JSON)?, &RomFile::from_model(&model))?;
    Ok(Fit { svd, model })
}

/// Frequencies on which the model is scored.
pub fn verification_frequencies(cfg: &ExperimentConfig) -> crate::Result<Vec<f64>> {
    let g = cfg.grid;
    match cfg.verification_grid {
        VerificationGrid::Sampling => frequency_grid(g.f_min_hz, g.f_max_hz, g.count),
        VerificationGrid::Offset => {
            let n = 2 * g.count;
            let step = (g.f_max_hz - g.f_min_hz) / n as f64;
            Ok((0..n).map(|k| g.f_min_hz + (k as f64 + 0.5) * step).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub order: usize,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub max_pole_re: f64,
    pub stable: bool,
    /// Plateau onset in the normalized `sigma_col`, when the run produced singular values.
    pub stagnation_index: Option<usize>,
    pub timings_ms: Timings,
    pub config_echo: ExperimentConfig,
}

/// Poles and errors against the noiseless response; writes `poles.csv`,
/// `error.csv` and `summary.json`.
pub fn run_analyze(
    cfg: &ExperimentConfig,
    model: &ReducedModel<f64>,
    clean_samples: Option<&Samples>,
    svd: Option<&SvdReport<f64>>,
    mut timings: Timings,
) -> Result<Summary, CliError> {
    let (freqs, pole_report, errors) = timed(&mut timings, "analyze", || {
        let pole_report = stage("analyze", poles(model))?;
        let freqs = stage("analyze", verification_frequencies(cfg))?;
        let reference = match (cfg.verification_grid, clean_samples) {
            (VerificationGrid::Sampling, Some(s)) => s.clean.clone(),
            _ => stage("analyze", sample_frequencies(&cfg.beam, &freqs))?,
        };
        let errors = stage("analyze", error_report(model, &reference))?;
        Ok((freqs, pole_report, errors))
    })?;
    io::write_poles(&io::artifact(&cfg.output_dir, io::POLES_CSV)?, &pole_report)?;
    io::write_errors(&io::artifact(&cfg.output_dir, io::ERROR_CSV)?, &freqs, &errors)?;
    let summary = Summary {
        order: model.order(),
        max_abs_err: errors.max_abs,
        max_rel_err: errors.max_rel,
        max_pole_re: pole_report.max_real_part,
        stable: pole_report.stable,
        stagnation_index: svd.and_then(plateau_index),
        timings_ms: timings,
        config_echo: cfg.clone(),
    };
    io::write_json(&io::artifact(&cfg.output_dir, io::SUMMARY_JSON)?, &summary)?;
    Ok(summary)
}

pub fn plateau_index<T>(svd: &SvdReport<T>) -> Option<usize> {
    stagnation_index(&svd.sigma_col_normalized(), STAGNATION_RATIO, STAGNATION_RUN)
}

/// Reads `rom.json` from the output directory and analyzes it.
pub fn analyze_saved(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let path = cfg.output_dir.join(io::ROM_JSON);
    let file: RomFile = io::read_json(&path)?;
    let model = file.to_model().map_err(|message| CliError::Artifact { path, message })?;
    run_analyze(cfg, &model, None, None, Timings::new())
}

/// Sample, fit and analyze in one go.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let mut timings = Timings::new();
    let samples = run_sample(cfg, &mut timings)?;
    let fit = run_fit(cfg, &samples.data, &mut timings)?;
    run_analyze(cfg, &fit.model, Some(&samples), Some(&fit.svd), timings)
}

#[derive(Debug)]
pub struct SweepRow {
    pub nu: u32,
    pub epsilon: f64,
    pub stagnation_index: Option<usize>,
    pub outcome: Result<Summary, CliError>,
}

/// Runs the pipeline once per noise level into `nu{level}/` and writes `sweep.csv`.
/// A level whose fit fails keeps its partial outputs and is recorded as failed.
pub fn run_noise_sweep(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<SweepRow>, CliError> {
    let mut rows = Vec::new();
    for nu in SWEEP_LEVELS {
        let spec = stage("perturb", NoiseSpec::new(nu, seed))?;
        let mut level = cfg.clone().with_output_dir(cfg.output_dir.join(format!("nu{nu}")));
        level.noise = Some(spec);
        let outcome = run_pipeline(&level);
        let stagnation = match &outcome {
            Ok(s) => s.stagnation_index,
            Err(_) => saved_plateau(&level.output_dir)?,
        };
        rows.push(SweepRow {
            nu,
            epsilon: spec.epsilon(),
            stagnation_index: stagnation,
            outcome,
        });
    }
    write_sweep(&io::artifact(&cfg.output_dir, io::SWEEP_CSV)?, &rows)?;
    Ok(rows)
}

/// Plateau index recomputed from a `singvals.csv` left by a failed run.
fn saved_plateau(dir: &Path) -> Result<Option<usize>, CliError> {
    let path = dir.join(io::SINGVALS_CSV);
    if !path.exists() {
        return Ok(None);
    }
    let (header, rows) = io::read_csv(&path)?;
    let col = header.iter().position(|h| h == "sigma_col_norm").ok_or_else(|| CliError::Artifact {
        path: path.clone(),
        message: "missing column sigma_col_norm".into(),
    })?;
    let sigma: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.get(col).filter(|c| !c.is_empty()))
        .map(|c| c.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Artifact {
            path: path.clone(),
            message: e.to_string(),
        })?;
    Ok(stagnation_index(&sigma, STAGNATION_RATIO, STAGNATION_RUN))
}

fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let opt = |x: Option<f64>| x.map(io::fmt_f64).unwrap_or_default();
    let lines = rows.iter().map(|r| {
        let ok = r.outcome.as_ref().ok();
        vec![
            r.nu.to_string(),
            io::fmt_f64(r.epsilon),
            r.stagnation_index.map(|i| i.to_string()).unwrap_or_default(),
            ok.map(|s| s.order.to_string()).unwrap_or_default(),
            opt(ok.map(|s| s.max_abs_err)),
            opt(ok.map(|s| s.max_rel_err)),
            opt(ok.map(|s| s.max_pole_re)),
            ok.map(|s| s.stable.to_string()).unwrap_or_default(),
            match &r.outcome {
                Ok(_) => "ok".to_string(),
                Err(e) => e.to_string(),
            },
        ]
    });
    io::write_csv(
        path,
        &[
            "nu",
            "epsilon",
            "stagnation_index",
            "order",
            "max_abs_err",
            "max_rel_err",
            "max_pole_re",
            "stable",
            "status",
        ],
        lines,
    )
}
