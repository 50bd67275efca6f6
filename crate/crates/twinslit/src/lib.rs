//! Scenario runner for structured-pump SPDC double-slit simulations:
//! config files, output formats and the command-line driver around
//! [`twinslit_core`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod runs;
pub mod scenario;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{ConfigError, Fidelity, ScenarioConfig};
use crate::error::RunError;
use crate::output::{sha256_hex, Metadata, OutputDir, RunManifest, DETERMINISM};
use crate::runs::{CurvesReport, CutsReport, NearfieldReport, RingReport, ValidateReport, VdReport};
use crate::scenario::Scenario;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Ring,
    Curves,
    Cuts,
    Vd,
    Nearfield,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ring => "ring",
            Command::Curves => "curves",
            Command::Cuts => "cuts",
            Command::Vd => "vd",
            Command::Nearfield => "nearfield",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Ring(RingReport),
    Curves(CurvesReport),
    Cuts(CutsReport),
    Vd(VdReport),
    Nearfield(NearfieldReport),
    Validate(ValidateReport),
}

/// Command-line settings that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub workers: Option<usize>,
    pub fast: bool,
    /// Map size for `ring`, 1-D grid size otherwise.
    pub grid: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, command: Command, config: &mut ScenarioConfig) -> Result<(), ConfigError> {
        if let Some(out) = &self.out {
            config.run.out = out.clone();
        }
        if let Some(w) = self.workers {
            config.run.workers = w;
        }
        if self.fast {
            config.run.mode = Fidelity::Fast;
        }
        if let Some(n) = self.grid {
            match command {
                Command::Ring => config.ring.map_n = n,
                _ => config.grid.n = n,
            }
        }
        config.validate().map_err(|(key, message)| ConfigError {
            line: None,
            key: Some(key.into()),
            message: format!("{key}: {message} (after command-line overrides)"),
        })
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub manifest: Option<RunManifest>,
    pub out_dir: Option<PathBuf>,
}

/// Worker count actually used for `requested` (0 = all cores).
pub fn resolve_workers(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Runs one subcommand on a dedicated pool of `config.run.workers` threads.
/// Everything but `validate` writes its outputs and a manifest into
/// `config.run.out`.
pub fn execute(command: Command, config: ScenarioConfig) -> Result<Outcome, RunError> {
    let workers = resolve_workers(config.run.workers);
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| RunError::Pool(e.to_string()))?;
    pool.install(|| execute_on_pool(command, config, workers))
}

fn execute_on_pool(command: Command, config: ScenarioConfig, workers: usize) -> Result<Outcome, RunError> {
    let started = Instant::now();
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let text = config.serialize();
    let scenario = Scenario::new(config)?;
    if command == Command::Validate {
        return Ok(Outcome { report: Report::Validate(runs::validate(&scenario)?), manifest: None, out_dir: None });
    }
    let config_sha256 = sha256_hex(text.as_bytes());
    let c = &scenario.config.crystal;
    let meta = Metadata {
        lines: vec![
            ("software".into(), format!("twinslit {VERSION}")),
            ("command".into(), command.name().into()),
            ("config_sha256".into(), config_sha256.clone()),
            ("preset".into(), scenario.config.preset.clone()),
            ("k_z".into(), format!("{:?}", scenario.config.run.mode).to_lowercase()),
            (
                "sellmeier".into(),
                format!("{} o={:?} e={:?}", c.sellmeier_source, c.sellmeier_ordinary, c.sellmeier_extraordinary),
            ),
            ("pump_waist".into(), format!("w0 = {} um, 1/e field radius", scenario.config.pump.waist_um)),
        ],
    };
    let mut out = OutputDir::create(&scenario.config.run.out, meta)?;
    out.write("config.txt", text.as_bytes())?;
    let report = match command {
        Command::Ring => Report::Ring(runs::run_ring(&scenario, &mut out)?),
        Command::Curves => Report::Curves(runs::run_curves(&scenario, &mut out)?),
        Command::Cuts => Report::Cuts(runs::run_cuts(&scenario, &mut out)?),
        Command::Vd => Report::Vd(runs::run_vd(&scenario, &mut out)?),
        Command::Nearfield => Report::Nearfield(runs::run_nearfield(&scenario, &mut out)?),
        Command::Validate => unreachable!("handled above"),
    };
    let manifest = RunManifest {
        software: "twinslit",
        version: VERSION,
        command: command.name().into(),
        config_sha256,
        config: text,
        started_unix_s,
        elapsed_s: started.elapsed().as_secs_f64(),
        workers,
        determinism: DETERMINISM,
        outputs: out.files().to_vec(),
    };
    manifest.write(out.root())?;
    Ok(Outcome { report, manifest: Some(manifest), out_dir: Some(out.root().to_path_buf()) })
}
