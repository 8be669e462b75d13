//! Command-line front end of `moment-sos`: JSON problem files in, JSON
//! reports or CSV grids out.

pub mod run;
pub mod schema;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use run::{execute, run, Artifact, CliError, Command, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "momsos", version, about = "Moment-SOS bounds, Christoffel functions and log-det representations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Moment relaxation lower bounds, certificates and minimizers.
    Lowerbound(Flags),
    /// Generalized-eigenvalue upper bounds against a reference measure.
    Upperbound(Flags),
    /// Christoffel function at given points (JSON) or on a grid (CSV).
    Cf(Flags),
    /// Log-det Christoffel representation of a positive polynomial.
    ChristoffelRep(Flags),
    /// Generalized Pell identity residuals per order.
    PellCheck(Flags),
    /// Constant-polynomial log-det solutions on a reference set.
    Equilibrium(Flags),
    /// Conditional Christoffel function factorization at given points.
    Disintegrate(Flags),
    /// Scaled Christoffel function on a grid (CSV).
    SupportScore(Flags),
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Problem file (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// Result file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    /// Relative duality gap target of the SDP solver.
    #[arg(long = "tol-gap")]
    pub tol_gap: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points per axis, `nx[,ny,...]`.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<usize>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Sub {
    pub fn config(self) -> RunConfig {
        let (command, f) = match self {
            Sub::Lowerbound(f) => (Command::Lowerbound, f),
            Sub::Upperbound(f) => (Command::Upperbound, f),
            Sub::Cf(f) => (Command::Cf, f),
            Sub::ChristoffelRep(f) => (Command::ChristoffelRep, f),
            Sub::PellCheck(f) => (Command::PellCheck, f),
            Sub::Equilibrium(f) => (Command::Equilibrium, f),
            Sub::Disintegrate(f) => (Command::Disintegrate, f),
            Sub::SupportScore(f) => (Command::SupportScore, f),
        };
        RunConfig {
            command,
            input: f.input,
            output: f.output,
            t: f.t,
            t_max: f.t_max,
            tol_gap: f.tol_gap,
            seed: f.seed,
            grid: f.grid,
            threads: f.threads,
        }
    }
}

fn emit_error(err: &CliError, command: Option<Command>) -> i32 {
    let report = err.report(command);
    eprintln!("{}", serde_json::to_string(&report).expect("serializable"));
    err.kind.exit_code()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => return emit_error(&CliError::validation(anyhow::anyhow!(e.to_string().trim().to_string())), None),
    };
    let cfg = cli.command.config();
    match execute(&cfg) {
        Ok(()) => 0,
        Err(e) => emit_error(&e, Some(cfg.command)),
    }
}
