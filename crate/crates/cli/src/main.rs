use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ipocp::Method;

mod error;
mod output;
mod report;
mod solve;
mod table;

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ipocp", version, about = "Interior-point continuation for constrained optimal control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a benchmark problem and write its trajectory and report.
    Solve(SolveArgs),
    /// Render run reports as a performance table.
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Primal,
    PrimalDual,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Primal => Method::Primal,
            MethodArg::PrimalDual => Method::PrimalDual,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// Benchmark name: vdp, zermelo or goddard.
    #[arg(long)]
    problem: String,
    #[arg(long, value_enum, default_value = "primal-dual")]
    method: MethodArg,
    /// Initial barrier parameter.
    #[arg(long)]
    eps0: Option<f64>,
    /// Decay ratio of the barrier parameter.
    #[arg(long)]
    alpha: Option<f64>,
    /// Continuation stops once the barrier parameter falls to this value.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    #[arg(long)]
    mesh_tol: Option<f64>,
    /// Trajectory CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct TableArgs {
    /// Report files written by `solve`.
    reports: Vec<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => solve::cmd_solve(&args),
        Command::Table(args) => {
            let text = table::cmd_table(&args.reports)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(error::EX_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
