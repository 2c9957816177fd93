//! `contact-lab run <config.toml>`: runs one experiment and writes its reports.
//!
//! Exit codes: 0 when every asserted check passes, 1 when a check fails or the
//! experiment errors, 2 when the configuration cannot be used.
//! `CONTACT_LAB_WORKERS` sets the number of worker threads.

pub mod config;
pub mod experiments;
pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::LabError;
use crate::expr::compile_hamiltonian;
use crate::manifold::build_model;
pub use config::ExperimentConfig;
use experiments::{build_sets, run_experiment, Context};
pub use experiments::Outcome;
use report::ReportWriter;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const WORKERS_ENV: &str = "CONTACT_LAB_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "contact-lab", version, about = "Contact dynamics, quasi-state and quasi-measure experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum RunError {
    Config(LabError),
    Experiment(LabError),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Experiment(e) => write!(f, "experiment error: {e}"),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Experiment(_) => EXIT_FAIL,
        }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.outcome.passed {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

/// Resolves names and expressions; every failure here is a configuration error.
pub fn prepare(mut config: ExperimentConfig, seed: Option<u64>, out: Option<&Path>) -> Result<Context, LabError> {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(dir) = out {
        config.output.dir = dir.to_path_buf();
    }
    let model = build_model::<f64>(&config.model)?;
    let hamiltonians = config
        .hamiltonians
        .iter()
        .map(|(k, src)| {
            compile_hamiltonian(src, model.kind())
                .map(|h| (k.clone(), h))
                .map_err(|e| LabError::Invalid(format!("hamiltonian `{k}`: {e}")))
        })
        .collect::<Result<BTreeMap<_, _>, _>>()?;
    if let Some(q) = &config.quasimeasure {
        build_sets(&model, &q.sets)?;
    }
    Ok(Context { seed: config.seed, model, hamiltonians, config })
}

pub fn run(config_path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<RunReport, RunError> {
    let config = ExperimentConfig::load(config_path).map_err(RunError::Config)?;
    let ctx = prepare(config, seed, out).map_err(RunError::Config)?;
    let mut writer = ReportWriter::new(&ctx.config.output.dir, &ctx.config.report_name()).map_err(RunError::Experiment)?;
    let outcome = run_experiment(&ctx, &mut writer).map_err(RunError::Experiment)?;
    Ok(RunReport { outcome, files: writer.into_files() })
}

fn configure_workers() -> Result<(), LabError> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| LabError::Invalid(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| LabError::Invalid(format!("cannot start {n} workers: {e}")))
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    if let Err(e) = configure_workers() {
        eprintln!("configuration error: {e}");
        return EXIT_CONFIG;
    }
    match cli.command {
        Command::Run { config, seed, out } => match run(&config, seed, out.as_deref()) {
            Ok(report) => {
                println!("{}", report.outcome.summary);
                for f in &report.files {
                    println!("wrote {}", f.display());
                }
                println!("{}", if report.outcome.passed { "PASS" } else { "FAIL" });
                report.exit_code()
            }
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_configs_are_config_errors() {
        for text in [
            "experiment = \"nope\"\nmodel = \"S1_CIRCLE\"",
            "experiment = \"big-fibre\"\nmodel = \"S1_CIRCLE\"\nbogus = 1",
            "experiment = \"big-fibre\"\nmodel = \"S1_CIRCLE\"\n[quasimeasure]",
            "experiment = \"verify-dynamics\"\nmodel = \"S1_CIRCLE\"\n[verify-dynamics]\nexplicit_pairs = [[\"g\", \"h\"]]",
            "experiment = \"verify-dynamics\"\nmodel = \"S1_CIRCLE\"\n[verify-dynamics]\ndistance_tolerance = -1.0",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
        let bad_model = ExperimentConfig::parse("experiment = \"big-fibre\"\nmodel = \"K3\"").unwrap();
        assert!(matches!(prepare(bad_model, None, None), Err(LabError::UnknownModel(_))));
        let bad_expr =
            ExperimentConfig::parse("experiment = \"verify-dynamics\"\nmodel = \"S1_CIRCLE\"\n[hamiltonians]\nh = \"sin(q1\"")
                .unwrap();
        assert!(prepare(bad_expr, None, None).is_err());
    }

    #[test]
    fn seed_and_output_overrides() {
        let cfg = ExperimentConfig::parse(
            "experiment = \"spectral-contract\"\nmodel = \"S1_CIRCLE\"\nseed = 3\n[hamiltonians]\nh = \"sin(theta) + t\"",
        )
        .unwrap();
        let ctx = prepare(cfg, Some(9), Some(Path::new("elsewhere"))).unwrap();
        assert_eq!(ctx.seed, 9);
        assert_eq!(ctx.config.output.dir, PathBuf::from("elsewhere"));
        assert!(!ctx.hamiltonians["h"].is_autonomous());
        assert_eq!(ctx.config.report_name(), "spectral-contract");
    }
}
