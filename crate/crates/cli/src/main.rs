//! `gksl`: decay rates, box functions, annihilation scans, Fock-space
//! evolution and invariant checks from the command line.

mod commands;
mod config;
mod state;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gksl::probability::KernelRoute;

use commands::{EvolveOptions, Process, ScanOptions, Suite};
use config::{CommonArgs, RunConfig};

/// Failure with the exit code it maps to. `message` goes to stderr, except
/// for numeric and invariant failures, whose report still goes to stdout.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
    pub report: Option<String>,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: msg.into(),
            report: None,
        }
    }

    pub fn not_converged(report: String) -> Self {
        Self {
            code: 2,
            message: "numerical integration did not converge".into(),
            report: Some(report),
        }
    }

    pub fn invariant(report: String) -> Self {
        Self {
            code: 3,
            message: "invariant check failed".into(),
            report: Some(report),
        }
    }
}

impl From<gksl::Error> for CliError {
    fn from(e: gksl::Error) -> Self {
        let code = match e {
            gksl::Error::InvalidInput(_) | gksl::Error::ShapeMismatch { .. } | gksl::Error::ValidityGuard(_) => 1,
            gksl::Error::NonFinite { .. } => 2,
            gksl::Error::KernelNotPsd { .. } => 3,
        };
        Self {
            code,
            message: e.to_string(),
            report: None,
        }
    }
}

#[derive(Parser)]
#[command(name = "gksl", version, about = "Open-system generators from scattering amplitudes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay rate of the system scalar: closed form and phase-space integral.
    Decay {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Box function 𝒜(s, t, u) with its iε diagnostics.
    LoopA {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
    },
    /// Annihilation σ against sqrt(-s)/(2 m_E), closed form and numeric.
    SigmaScan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.5)]
        x_min: f64,
        #[arg(long, default_value_t = 5.0)]
        x_max: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Relative phases, comma separated; `pi`, `pi/2` and `2*pi` accepted.
        #[arg(long, default_value = "0,pi/2,pi")]
        deltas: String,
        /// Output CSV (default `sigma_scan.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Kernel integration for the numeric column.
        #[arg(long, value_enum, default_value_t = RouteArg::Mc)]
        route: RouteArg,
    },
    /// Explicit evolution of a pure initial state on the box Fock space.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        /// Box side length.
        #[arg(long)]
        grid_l: Option<f64>,
        /// Largest integer mode label per axis.
        #[arg(long)]
        n_max: Option<i32>,
        /// Time regulator fixing the energy bin 2π/t_eff.
        #[arg(long)]
        t_eff: Option<f64>,
        /// Initial-state file.
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// Output CSV (default `evolve.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Process::Auto)]
        process: Process,
        /// Use the phase-space decay rate instead of the closed form.
        #[arg(long)]
        numeric_rate: bool,
        /// Also write the nonzero generator matrix entries to this CSV.
        #[arg(long)]
        export_generator: Option<PathBuf>,
    },
    /// Invariant suites; exit code 3 if any check fails.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum RouteArg {
    /// Phase-space Monte Carlo.
    Mc,
    /// Gauss rule over CM directions.
    Angular,
}

fn run(command: Command) -> Result<String, CliError> {
    match command {
        Command::Decay { common } => commands::decay(&RunConfig::resolve(&common)?),
        Command::LoopA { common, s, t, u } => commands::loop_a(&RunConfig::resolve(&common)?, s, t, u),
        Command::SigmaScan {
            common,
            x_min,
            x_max,
            steps,
            deltas,
            out,
            route,
        } => {
            let route = match route {
                RouteArg::Mc => KernelRoute::MonteCarlo,
                RouteArg::Angular => KernelRoute::Angular,
            };
            let opts = ScanOptions {
                x_min,
                x_max,
                steps,
                deltas,
                out,
                route,
            };
            commands::sigma_scan_cmd(&RunConfig::resolve(&common)?, &opts)
        }
        Command::Evolve {
            common,
            grid_l,
            n_max,
            t_eff,
            state,
            steps,
            dt,
            out,
            process,
            numeric_rate,
            export_generator,
        } => {
            let opts = EvolveOptions {
                grid_l,
                n_max,
                t_eff,
                state,
                steps,
                dt,
                out,
                process,
                numeric_rate,
                export_generator,
            };
            commands::evolve(&RunConfig::resolve(&common)?, &opts)
        }
        Command::Check { common, suite } => commands::check(&RunConfig::resolve(&common)?, suite),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(cli.command) {
        Ok(out) => {
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(err) => {
            if let Some(report) = &err.report {
                let _ = stdout.write_all(report.as_bytes());
            }
            let _ = stdout.flush();
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
