//! `tfc`: sweep runner, self-check and surface export.

mod artifact;
mod run;
mod surface;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tfc_core::problems::ProblemId;
use tfc_core::verify::{run_suite, Fault, SuiteConfig};
use tfc_core::BasisKind;

/// Exit status for a strict-mode miss or a failed self-check.
const EXIT_FAILURE: u8 = 1;
/// Exit status for bad arguments or missing inputs.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "tfc",
    version,
    about = "Constrained-expression PDE solver harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a benchmark problem over a grid of (n, m) cells and write a CSV.
    Run {
        #[arg(long)]
        problem: ProblemId,
        #[arg(long, default_value = "chebyshev")]
        basis: BasisKind,
        /// Collocation points per axis.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Total degree of the free-function basis.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Fail (exit 1) if any cell misses its published error by more than the allowed margin.
        #[arg(long)]
        strict: bool,
        /// Repeats per cell; timing columns report the median.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Allowed ratio to the published error in strict mode.
        #[arg(long, default_value_t = tfc_core::problems::STRICT_FACTOR, hide = true)]
        strict_factor: f64,
    },
    /// Run the worked-example and invariant suite.
    Check {
        #[arg(long, default_value_t = SuiteConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = SuiteConfig::default().random_cases)]
        random_cases: usize,
        /// Corrupt a switching coefficient so the suite must fail.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Evaluate a saved solution on a uniform grid.
    Surface {
        #[arg(long)]
        problem: ProblemId,
        /// Directory holding the coefficient files written by `run`.
        #[arg(long)]
        from: PathBuf,
        #[arg(long, default_value_t = 100)]
        res: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        basis: Option<BasisKind>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
    },
}

/// Error with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            problem,
            basis,
            n,
            m,
            out,
            strict,
            repeats,
            strict_factor,
        } => run::run(&run::RunConfig {
            problem,
            basis,
            n,
            m,
            out,
            strict,
            repeats,
            strict_factor,
        }),
        Command::Check {
            seed,
            random_cases,
            inject_fault,
        } => {
            let cfg = SuiteConfig {
                seed,
                random_cases,
                fault: inject_fault.then_some(Fault::CorruptSwitching),
                ..SuiteConfig::default()
            };
            let report = run_suite(&cfg);
            print!("{report}");
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::failure("invariant suite failed"))
            }
        }
        Command::Surface {
            problem,
            from,
            res,
            out,
            basis,
            n,
            m,
        } => surface::export(&surface::SurfaceConfig {
            problem,
            from,
            res,
            out,
            basis,
            n,
            m,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
