//! `mechsim`: spin-mechanical post-selection simulator front-end.
//!
//! Exit codes: 0 success, 2 validation error, 3 no solution of the
//! equal-superposition condition, 4 numerical failure (truncation overflow,
//! degenerate post-selection, integrator breakdown).

use clap::{Parser, Subcommand};

use mechsim_cli::commands::{self, AavArgs, CommonArgs, McArgs, ModelArg, PhysArgs, SolverArgs};
use mechsim_cli::error::CliError;
use mechsim_cli::figures::{self, Preset};
use mechsim_cli::output::write_report;

#[derive(Parser, Debug)]
#[command(name = "mechsim", version, about = "Mechanical qubit, Fock and cat state preparation via spin post-selection")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve the equal-superposition condition for the post-selection angle.
    SolveAngle {
        #[command(flatten)]
        phys: PhysArgs,
    },
    /// Integrate the thermal master equation and post-select.
    Evolve {
        #[command(flatten)]
        phys: PhysArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also emit a Wigner grid of the post-selected state.
        #[arg(long)]
        wigner: bool,
    },
    /// Grid-evaluate preparation figures of merit over one or two parameter
    /// axes (`--axis key=start:stop:points`).
    Sweep {
        #[command(flatten)]
        phys: PhysArgs,
        #[arg(long = "axis")]
        axes: Vec<String>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte-Carlo preparation statistics under jittered selection angles.
    MonteCarlo {
        #[command(flatten)]
        phys: PhysArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare the weak-value position readout with the exact average.
    AavCompare {
        #[command(flatten)]
        phys: PhysArgs,
        #[command(flatten)]
        aav: AavArgs,
    },
    /// Reproduce a figure preset; writes CSV data files into --out.
    Figure {
        #[arg(value_enum)]
        preset: Preset,
        #[command(flatten)]
        phys: PhysArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Sample count override for the Monte-Carlo preset.
        #[arg(long)]
        n_samples: Option<usize>,
    },
}

fn run(cli: &Cli) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.common.threads {
        // Ignore the error if a global pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    match &cli.cmd {
        Cmd::SolveAngle { phys } => {
            let report = commands::run_solve_angle(phys, &cli.common)?;
            write_report(&report, cli.common.format(), cli.common.out.as_deref())
        }
        Cmd::Evolve { phys, solver, wigner } => {
            let report = commands::run_evolve(phys, solver, *wigner, &cli.common)?;
            write_report(&report, cli.common.format(), cli.common.out.as_deref())
        }
        Cmd::Sweep { phys, axes, model, solver } => {
            let report = commands::run_sweep(phys, axes, *model, solver, &cli.common)?;
            write_report(&report, cli.common.format(), cli.common.out.as_deref())
        }
        Cmd::MonteCarlo { phys, mc, solver } => {
            let report = commands::run_monte_carlo(phys, mc, solver, &cli.common)?;
            write_report(&report, cli.common.format(), cli.common.out.as_deref())
        }
        Cmd::AavCompare { phys, aav } => {
            let report = commands::run_aav_compare(phys, aav, &cli.common)?;
            write_report(&report, cli.common.format(), cli.common.out.as_deref())
        }
        Cmd::Figure { preset, phys, solver, n_samples } => {
            // Data files land in --out (a directory); the summary goes to
            // stdout so pipelines can grab the headline numbers.
            let report = figures::run_figure(*preset, phys, solver, *n_samples, &cli.common)?;
            write_report(&report, cli.common.format(), None)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
