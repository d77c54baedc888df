//! Config-driven experiment runner.

pub mod config;
pub mod io;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{load_config, ExperimentConfig, GridSpec, VerificationGrid, DEFAULT_SEED};
pub use pipeline::{run_noise_sweep, run_pipeline, Summary, SweepRow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: crate::Error,
    },
}

#[derive(Debug, Parser)]
#[command(name = "beam-loewner", version, about = "Loewner reduced-order models of a shaker-driven beam")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Noise seed, overriding `noise.seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the analytic transfer function and write samples.csv.
    Sample(CommonArgs),
    /// Sample and fit; writes samples.csv, singvals.csv and rom.json.
    Fit(CommonArgs),
    /// Analyze rom.json from the output directory; writes poles.csv, error.csv and summary.json.
    Analyze(CommonArgs),
    /// Sample, fit and analyze.
    Pipeline(CommonArgs),
    /// Run the pipeline at every noise level into nu1/ .. nu4/ and write sweep.csv.
    NoiseSweep(CommonArgs),
}

impl CommonArgs {
    pub fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = load_config(&self.config)?;
        if let Some(dir) = &self.output {
            cfg = cfg.with_output_dir(dir.clone());
        }
        if let Some(seed) = self.seed {
            cfg = cfg.with_seed(seed);
        }
        Ok(cfg)
    }
}

/// Executes one subcommand and returns a short report for the terminal.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let mut timings = pipeline::Timings::new();
    match cli.command {
        Command::Sample(args) => {
            let cfg = args.load()?;
            let samples = pipeline::run_sample(&cfg, &mut timings)?;
            Ok(format!("{} samples written to {}", samples.freqs.len(), cfg.output_dir.display()))
        }
        Command::Fit(args) => {
            let cfg = args.load()?;
            let samples = pipeline::run_sample(&cfg, &mut timings)?;
            let fit = pipeline::run_fit(&cfg, &samples.data, &mut timings)?;
            Ok(format!("order {} model written to {}", fit.model.order(), cfg.output_dir.display()))
        }
        Command::Analyze(args) => {
            let cfg = args.load()?;
            Ok(describe(&pipeline::analyze_saved(&cfg)?))
        }
        Command::Pipeline(args) => {
            let cfg = args.load()?;
            Ok(describe(&run_pipeline(&cfg)?))
        }
        Command::NoiseSweep(args) => {
            let cfg = args.load()?;
            let seed = args
                .seed
                .or(cfg.noise.map(|n| n.seed()))
                .unwrap_or(DEFAULT_SEED);
            let rows = run_noise_sweep(&cfg, seed)?;
            let lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    let plateau = r.stagnation_index.map_or("-".into(), |i| i.to_string());
                    match &r.outcome {
                        Ok(s) => format!("nu={} plateau={plateau} {}", r.nu, describe(s)),
                        Err(e) => format!("nu={} plateau={plateau} failed: {e}", r.nu),
                    }
                })
                .collect();
            Ok(lines.join("\n"))
        }
    }
}

fn describe(s: &Summary) -> String {
    format!(
        "order={} max_abs_err={:e} max_rel_err={:e} max_pole_re={:e} stable={}",
        s.order, s.max_abs_err, s.max_rel_err, s.max_pole_re, s.stable
    )
}
