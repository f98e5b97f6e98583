//! `risroad` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input, 3 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use risroad::output::stepped_values;
use risroad::{run_custom, run_preset, run_regionmap, CustomSweep, Error, PresetName, PresetOptions, SweepVariable};

#[derive(Parser)]
#[command(name = "risroad", version, about = "RIS blockage pre-avoidance simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a figure preset (fig2 … fig6).
    Run {
        #[arg(long)]
        preset: String,
        /// Number of RIS (3 adds RIS 3; fig2 only).
        #[arg(long, default_value_t = 2)]
        ris: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario file, optionally sweeping one variable.
    Sim {
        #[arg(long)]
        config: PathBuf,
        /// tx_power_dbm, ris_elements, phase_noise_bound or vpl_db.
        #[arg(long, requires_all = ["from", "to", "step"])]
        sweep: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the region map of a scenario file.
    Regionmap {
        #[arg(long)]
        config: PathBuf,
        /// Blocker x positions; the full grid when omitted.
        #[arg(long = "blocker", allow_hyphen_values = true)]
        blockers: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cmd: Command) -> risroad::Result<Vec<String>> {
    match cmd {
        Command::Run { preset, ris, common } => {
            let name: PresetName = preset.parse()?;
            run_preset(name, &PresetOptions { ris_count: ris }, common.seed, common.trials, &common.out)
        }
        Command::Sim { config, sweep, from, to, step, common } => {
            let custom = match sweep {
                Some(var) => {
                    let variable: SweepVariable = var.parse()?;
                    let values = stepped_values(
                        from.unwrap_or_default(),
                        to.unwrap_or_default(),
                        step.unwrap_or_default(),
                    )?;
                    Some(CustomSweep { variable, values })
                }
                None => None,
            };
            run_custom(&config, custom.as_ref(), common.seed, common.trials, &common.out)
        }
        Command::Regionmap { config, blockers, out } => run_regionmap(&config, &blockers, &out),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
