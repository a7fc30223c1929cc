//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{run_solve, run_sweep, run_verify, DumpFormat, Suite};
use crate::config::{parse_fourier_list, read_config, ProblemSpec, RawSpec};
use crate::{CliError, ExitStatus};

#[derive(Debug, Parser)]
#[command(name = "ktcy", version)]
#[command(about = "T^2-invariant Calabi-Yau equation on the Kodaira-Thurston manifold")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve along the continuity path and write the report.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Write phi, u, nu and the residual at every accepted t.
        #[arg(long, value_enum)]
        dump_fields: Option<DumpFormat>,
    },
    /// Run a property suite; exits 3 if any check fails.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Perturbed starts for the uniqueness suite.
        #[arg(long, default_value_t = 4)]
        starts: usize,
    },
    /// Solve at several grid sizes and compare.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Comma-separated, even and increasing.
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        resolutions: Vec<usize>,
    },
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Config file: `key = value` lines or a JSON object.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grid size.
    #[arg(long)]
    pub n: Option<usize>,
    /// zero, oneD, checker or skew.
    #[arg(long)]
    pub preset: Option<String>,
    /// Preset amplitude a.
    #[arg(long)]
    pub a: Option<f64>,
    /// Preset amplitude b.
    #[arg(long)]
    pub b: Option<f64>,
    /// Fourier density `k,l,cos,sin; ...`.
    #[arg(long)]
    pub fourier: Option<String>,
    /// Density read from a KTCY field dump.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "ktcy-out")]
    pub out_dir: PathBuf,
}

impl ProblemArgs {
    pub fn spec(&self) -> Result<ProblemSpec, CliError> {
        let base = match &self.config {
            Some(path) => read_config(path)?,
            None => RawSpec::default(),
        };
        let flags = RawSpec {
            preset: self.preset.clone(),
            a: self.a,
            b: self.b,
            fourier: self
                .fourier
                .as_deref()
                .map(parse_fourier_list)
                .transpose()
                .map_err(|e| CliError::Invalid(format!("--fourier: {e}")))?,
            field: self.field.clone(),
            n: self.n,
            seed: self.seed,
            ..RawSpec::default()
        };
        base.merged(flags).resolve()
    }
}

fn dispatch(cli: &Cli) -> Result<ExitStatus, CliError> {
    match &cli.command {
        Command::Solve { problem, dump_fields } => run_solve(&problem.spec()?, &problem.out_dir, *dump_fields),
        Command::Verify { problem, suite, starts } => {
            let (status, checks) = run_verify(&problem.spec()?, *suite, *starts, &problem.out_dir)?;
            for c in checks.iter().filter(|c| !c.pass) {
                eprintln!("FAIL {}", c.describe());
            }
            Ok(status)
        }
        Command::Sweep { problem, resolutions } => run_sweep(&problem.spec()?, resolutions, &problem.out_dir),
    }
}

/// Runs the parsed command, reporting errors on stderr.
pub fn run(cli: &Cli) -> ExitStatus {
    match dispatch(cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("ktcy: {e}");
            ExitStatus::Invalid
        }
    }
}
