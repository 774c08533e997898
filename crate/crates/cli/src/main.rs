//! `statespace`: analysis and simulation of density operators from the
//! command line.
//!
//! Exit codes: 0 success, 2 unreadable or malformed input, 3 validation
//! failure, 4 dimension or configuration error.

mod commands;
mod io;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use statespace::Subsystem;

use crate::io::{CliResult, Report};

#[derive(Parser)]
#[command(name = "statespace", version, about = "Density-operator analysis and measurement simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Positivity and trace tolerance for loaded states.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for every stochastic command.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of samples.
    #[arg(long, global = true)]
    n: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Output::Human)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Human,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    A,
    B,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a matrix file holds a valid state.
    Validate { state: PathBuf },
    /// Spectrum, rank, extremality, support and purity of a state.
    Analyze { state: PathBuf },
    /// Support faces of one or two states and their order, meet and join.
    Face {
        #[arg(num_args = 1..=2, required = true)]
        states: Vec<PathBuf>,
    },
    /// Largest weight with which the first state is a convex component of the second.
    Component {
        first: PathBuf,
        second: PathBuf,
        /// `eigen`, or a JSON file with an orthonormal basis.
        #[arg(long, default_value = "eigen")]
        basis: String,
    },
    /// Partial trace of a bipartite state.
    Ptrace {
        state: PathBuf,
        /// Subsystem dimensions as `dA,dB`.
        #[arg(long, value_parser = commands::parse_dims)]
        dims: (usize, usize),
        /// Subsystem to trace out.
        #[arg(long, value_enum, ignore_case = true, default_value_t = Side::B)]
        over: Side,
    },
    /// CHSH value of a two-qubit state, sampled as well when `--n` is positive.
    Chsh {
        state: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Repeated registrations of an observable on a preparation tree.
    Ensemble { preparation: PathBuf, observable: PathBuf },
    /// Boolean property laws on random states next to the projection-lattice counterexample.
    LatticeDemo,
    /// Singlet against the anticorrelated mixture, locally and on the composite.
    Distinguish { config: Option<PathBuf> },
}

fn run(cli: &Cli) -> CliResult<Report> {
    match &cli.command {
        Command::Validate { state } => commands::validate(state, cli.tol),
        Command::Analyze { state } => commands::analyze(state, cli.tol),
        Command::Face { states } => commands::face(states, cli.tol),
        Command::Component { first, second, basis } => {
            let basis = (basis != "eigen").then(|| PathBuf::from(basis));
            commands::component(first, second, basis.as_deref(), cli.tol)
        }
        Command::Ptrace { state, dims, over } => {
            let over = match over {
                Side::A => Subsystem::A,
                Side::B => Subsystem::B,
            };
            commands::ptrace(state, *dims, over, cli.tol)
        }
        Command::Chsh { state, config } => {
            let cfg = commands::load_chsh_config(config.as_deref(), cli.seed, cli.n)?;
            commands::chsh(state, &cfg, cli.tol)
        }
        Command::Ensemble { preparation, observable } => commands::ensemble(preparation, observable, cli.n, cli.seed),
        Command::LatticeDemo => commands::lattice_demo(cli.seed, cli.n),
        Command::Distinguish { config } => {
            let cfg = commands::load_chsh_config(config.as_deref(), cli.seed, cli.n)?;
            commands::distinguish(&cfg)
        }
    }
}

fn emit(report: &Report, output: Output) {
    let mut out = std::io::stdout().lock();
    let _ = match output {
        Output::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report.json).expect("reports serialize")),
        Output::Human => write!(out, "{}", report.human),
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            emit(&report, cli.output);
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let Some(report) = &e.report {
                emit(report, cli.output);
            }
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
