//! `sirate`: rate-distortions computations from the command line.
//!
//! Every subcommand reads a TOML manifest (`--input`, optional), applies
//! `--config KEY=VALUE` overrides on top, and writes CSV or JSON to
//! `--output` or stdout. Errors go to stderr as a JSON object and set the
//! exit status: 2 parse, 3 assumption or domain, 4 infeasible, 5 resource cap.

mod commands;
mod format;
mod manifest;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sirate::{Error, Result};

use commands::Format;
use manifest::Manifest;

#[derive(Parser)]
#[command(
    name = "sirate",
    version,
    about = "Rate-distortions with decoder side information and an encoder-side reconstruction constraint"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML manifest with the instance and run parameters.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Where to write the result; stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for everything random; echoed into the output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Manifest override, `KEY=VALUE`; dotted keys reach tables
    /// (`solver.z_size=3`). Repeatable.
    #[arg(long = "config", global = true, value_name = "KEY=VALUE")]
    config: Vec<String>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Minimal rate for one (dd_target, de_target) pair.
    DiscreteSolve,
    /// Rates over dd_grid x de_grid.
    DiscreteSweep,
    /// Gaussian closed forms over dd_grid x de_grid.
    GaussianCurve,
    /// Monte-Carlo run of the sphere-codebook scheme.
    SphereSim,
    /// The K-constraint problem.
    ExtSolve,
    /// Shrink the auxiliary alphabet of an extended witness to K values.
    ReduceU,
    /// Wyner-Ziv baseline.
    Wz,
    /// Common-reconstruction baseline.
    Cr,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::DiscreteSolve => "discrete-solve",
            Command::DiscreteSweep => "discrete-sweep",
            Command::GaussianCurve => "gaussian-curve",
            Command::SphereSim => "sphere-sim",
            Command::ExtSolve => "ext-solve",
            Command::ReduceU => "reduce-u",
            Command::Wz => "wz",
            Command::Cr => "cr",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Command::DiscreteSolve | Command::ExtSolve | Command::ReduceU => Format::Json,
            _ => Format::Csv,
        }
    }
}

fn exit_status(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Dimension(_) => 2,
        Error::Assumption(_) | Error::Domain(_) => 3,
        Error::Infeasible(_) => 4,
        Error::ResourceCap(_) => 5,
        Error::Numerical(_) => 1,
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    spec_version: &'static str,
    command: &'a str,
    error: ErrorBody<'a>,
}

fn run(cmd: Command, common: Common) -> Result<()> {
    let m = Manifest::load(
        cmd.name(),
        common.input.as_deref(),
        common.output,
        common.seed,
        &common.config,
    )?;
    let format = common.format.unwrap_or(cmd.default_format());
    let bytes = match cmd {
        Command::DiscreteSolve => commands::discrete_solve(&m, format),
        Command::DiscreteSweep => commands::discrete_sweep(&m, format),
        Command::GaussianCurve => commands::gaussian_curve(&m, format),
        Command::SphereSim => commands::sphere_sim(&m, format),
        Command::ExtSolve => commands::ext_solve(&m, format),
        Command::ReduceU => commands::reduce_u(&m, format),
        Command::Wz => commands::wz(&m, format),
        Command::Cr => commands::cr(&m, format),
    }?;
    let written = match &m.output {
        Some(p) => std::fs::write(p, &bytes),
        None => std::io::stdout().lock().write_all(&bytes),
    };
    written.map_err(|e| Error::Numerical(format!("cannot write output: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = cli.command;
    match run(cmd, cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = ErrorReport {
                spec_version: format::SPEC_VERSION,
                command: cmd.name(),
                error: ErrorBody {
                    kind: e.kind(),
                    message: e.to_string(),
                },
            };
            let text = serde_json::to_string(&report).expect("plain strings serialize");
            eprintln!("{text}");
            ExitCode::from(exit_status(&e))
        }
    }
}
