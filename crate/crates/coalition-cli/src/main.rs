use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coalition::solver::Method;
use coalition_cli::{commands, CliError};

#[derive(Parser)]
#[command(name = "coalition", version, about = "Risk-adaptive multi-robot coalition formation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and report the allocation.
    Solve {
        /// Problem description (JSON).
        problem: PathBuf,
        /// Solver: adaptive, neutral, averse, or random.
        #[arg(long, default_value = "adaptive")]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of multi-start restarts.
        #[arg(long, default_value_t = 16)]
        starts: usize,
        /// Variance penalty weight for the averse method.
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Where to write the result JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record measured wall time in the result file instead of 0.0.
        #[arg(long)]
        timing: bool,
    },
    /// Cross-check allocations: closed-form probabilities vs Monte Carlo.
    Eval {
        /// Problem description (JSON).
        problem: PathBuf,
        /// Allocations file, or an inline JSON matrix like [[6,1],[0,8]].
        allocation: String,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Clamp sampled traits at zero (diverges from the closed form).
        #[arg(long)]
        clamp_nonnegative: bool,
        /// Where to write the evaluation report JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate random instances, run each method, and summarize.
    Bench {
        #[arg(long, default_value_t = 100)]
        instances: u64,
        #[arg(long, value_delimiter = ',', default_value = "adaptive,neutral,averse,random")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for records.csv and summary.txt.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Record measured wall times in records.csv instead of 0.0.
        #[arg(long)]
        timing: bool,
    },
    /// Write a named demo problem and its reference allocations.
    Preset {
        #[arg(long)]
        name: String,
        /// Problem file path; allocations land next to it.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { problem, method, seed, starts, lambda, out, timing } => {
            commands::solve(&problem, method, seed, starts, lambda, out.as_deref(), timing)
        }
        Command::Eval { problem, allocation, trials, seed, clamp_nonnegative, out } => {
            commands::eval(&problem, &allocation, trials, seed, clamp_nonnegative, out.as_deref())
        }
        Command::Bench { instances, methods, seed, out_dir, starts, lambda, timing } => {
            commands::bench(instances, &methods, seed, &out_dir, starts, lambda, timing)
        }
        Command::Preset { name, out } => commands::preset(&name, &out),
    }
}

fn main() -> ExitCode {
    // Die quietly when the downstream pipe closes, like other Unix filters.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
