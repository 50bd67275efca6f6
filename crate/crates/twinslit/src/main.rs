use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use twinslit::config::{ConfigError, ScenarioConfig};
use twinslit::error::RunError;
use twinslit::{execute, Command, Overrides, Report};

/// Structured-pump SPDC double-slit simulations.
#[derive(Debug, Parser)]
#[command(name = "twinslit", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Config file (`key = value` lines); defaults apply otherwise.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Preset used when no config file is given.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Paraxial k_z instead of the exact solution.
    #[arg(long)]
    fast: bool,
    /// Map size for `ring`, 1-D grid size for the other commands.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
}

fn load(cli: &Cli) -> Result<ScenarioConfig, RunError> {
    let mut config = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::general(
                "give either --config or --preset; a config file selects its preset with scenario.preset",
            )
            .into())
        }
        (Some(path), None) => {
            // An unreadable config file is a setup problem, not an I/O failure of the run.
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
            ScenarioConfig::parse(&text)
                .map_err(|e| ConfigError { message: format!("{}: {}", path.display(), e.message), ..e })?
        }
        (None, Some(name)) => ScenarioConfig::preset(name)?,
        (None, None) => ScenarioConfig::default(),
    };
    let overrides = Overrides { out: cli.out.clone(), workers: cli.workers, fast: cli.fast, grid: cli.grid };
    overrides.apply(cli.command, &mut config)?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|config| execute(cli.command, config));
    match result {
        Ok(outcome) => {
            if let Report::Validate(v) = &outcome.report {
                print!("{}", v.config);
                eprintln!("config valid; ring q_y extent [{:.5}, {:.5}] rad/um", v.ring_extent.0, v.ring_extent.1);
            } else {
                match serde_json::to_string_pretty(&outcome.report) {
                    Ok(s) => println!("{s}"),
                    Err(e) => eprintln!("warning: report not printable: {e}"),
                }
                if let Some(dir) = &outcome.out_dir {
                    eprintln!("outputs written to {}", dir.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
