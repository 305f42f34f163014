//! Scenario-driven command line.
//!
//! Exit status: 0 success, 1 invalid input or output failure, 2 a
//! verification check failed, 3 numerical failure.

mod commands;
pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::mode_solver::ModeError;
use crate::observables::ObservableError;
use crate::profiles::ProfileError;
use crate::states::StateError;
use crate::verification::VerifyError;

pub use scenario::Scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Output(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

macro_rules! numerical {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Numerical(e.to_string())
            }
        }
    )*};
}

numerical!(
    ModeError,
    StateError,
    ObservableError,
    ProfileError,
    VerifyError
);

#[derive(Debug, Parser)]
#[command(
    name = "tdho",
    version,
    about = "Exact states of the oscillator with time-dependent mass and frequency"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    /// Output directory; overrides `outputs.dir` of the scenario.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the mode trajectory on the scenario time grid.
    Evolve(Common),
    /// Write one wave function.
    Wavefunction {
        #[command(flatten)]
        common: Common,
        /// Index into the scenario's state list.
        #[arg(long, default_value_t = 0)]
        state_index: usize,
        /// Replaces the selected state's number index.
        #[arg(long)]
        n: Option<usize>,
        /// Time; defaults to `time_grid.t_start`.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
    },
    /// Analytic and quadrature moments for every state and time sample.
    Moments(Common),
    /// Run the invariant and cross-check suite.
    Verify(Common),
    /// Compare the general pipeline with the static closed forms.
    StaticCompare(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Evolve(c)
            | Command::Moments(c)
            | Command::Verify(c)
            | Command::StaticCompare(c) => c,
            Command::Wavefunction { common, .. } => common,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TDHO_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        CliError::Validation(format!(
            "TDHO_THREADS must be a non-negative integer (got {raw:?})"
        ))
    })?;
    if threads > 0 {
        // a pool configured earlier in the same process is kept
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let common = cli.command.common();
    let scenario = Scenario::load(&common.scenario)?;
    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| scenario.outputs.dir.clone());
    let ctx = commands::Context {
        scenario: &scenario,
        out_dir: &out_dir,
    };
    let failures = match &cli.command {
        Command::Evolve(_) => commands::evolve(&ctx).map(|_| 0)?,
        Command::Wavefunction {
            state_index, n, t, ..
        } => commands::wavefunction(&ctx, *state_index, *n, *t).map(|_| 0)?,
        Command::Moments(_) => commands::moments(&ctx).map(|_| 0)?,
        Command::Verify(_) => commands::verify(&ctx)?,
        Command::StaticCompare(_) => commands::static_compare(&ctx)?,
    };
    Ok(if failures == 0 {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
