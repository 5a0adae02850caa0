//! Command-line layer: scenario files, the `simulate`, `example3`,
//! `manifold` and `verify` commands, and exit codes.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 sampling or numerical failure during a run.

mod commands;
mod scenario;

pub use commands::{
    cmd_example3, cmd_manifold, cmd_simulate, cmd_verify, parse_manifold_utility, GridSpec, LadderRow, Overrides,
    SimulateReport, Summary, TerminalCounts, SCHEMA_VERSION,
};
pub use scenario::{EconomySection, EngineSection, HouseholdEntry, OutputSection, Process, ScenarioFile, BUNDLED};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::geometry::ManifoldKind;
use crate::verify::Fault;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SAMPLING: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sntp", version, about = "Stochastic non-tatonnement trade simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write outcomes.csv and summary.json.
    Simulate {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        pareto_tol: Option<f64>,
        /// Also write trajectories.csv.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the coin-toss ladder against its exact distribution.
    Example3 {
        #[arg(long, default_value_t = 10_000)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a canonical manifold in the consumption, normalized and flat domains.
    Manifold {
        /// Utility JSON, `{"base": <spec>, "exp_scale": k}`, or `product`.
        #[arg(long, default_value = "product")]
        utility: String,
        /// Comma-separated anchor bundle.
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        anchor: Vec<f64>,
        /// indifference, offer or trade_hyperplane.
        #[arg(long)]
        kind: String,
        /// lo:hi:n log-spaced values per coordinate.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the numeric verification suites.
    Verify {
        /// Only run checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Deliberately break the implementation (scaled_demand).
        #[arg(long)]
        inject_fault: Option<String>,
    },
}

/// Maps a failure to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_sampling_failure() {
        return EXIT_SAMPLING;
    }
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::InvalidSpec(_)
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::NonPositive { .. } => EXIT_CONFIG,
        _ => EXIT_SAMPLING,
    }
}

fn execute(command: Command) -> Result<i32, Error> {
    match command {
        Command::Simulate {
            scenario,
            runs,
            seed,
            max_steps,
            pareto_tol,
            trace,
            out,
        } => {
            let s = ScenarioFile::load(&scenario)?;
            let ov = Overrides {
                runs,
                seed,
                max_steps,
                pareto_tol,
                trace,
                out,
            };
            let r = cmd_simulate(&s, &ov)?;
            println!(
                "{}: {} runs, mean {} = {:.6}, 5-95% band width {:.6}, wrote {}",
                r.summary.scenario,
                r.summary.runs,
                r.summary.projection,
                r.summary.mean,
                r.distribution.band90().width(),
                r.out_dir.display()
            );
            Ok(EXIT_OK)
        }
        Command::Example3 { runs, seed, out } => {
            cmd_example3(runs, seed, out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Manifold {
            utility,
            anchor,
            kind,
            grid,
            out,
        } => {
            let u = parse_manifold_utility(&utility)?;
            let kind: ManifoldKind = kind.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
            let grid = grid.map(|g| g.parse()).transpose()?.unwrap_or_default();
            let n = cmd_manifold(u.as_ref(), &anchor, kind, grid, &out)?;
            println!("wrote {n} points to {}", out.join("manifold.csv").display());
            Ok(EXIT_OK)
        }
        Command::Verify {
            filter,
            seed,
            inject_fault,
        } => {
            let fault = inject_fault
                .map(|f| f.parse::<Fault>())
                .transpose()
                .map_err(|e| Error::Config(e.to_string()))?;
            let reports = cmd_verify(filter.as_deref(), seed, fault)?;
            Ok(if reports.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
