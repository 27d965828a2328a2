//! Command-line front end for the `rcp-core` analyses and simulators.
//!
//! Every subcommand is a pure function of its flags. Reports carry a
//! `schema` field and floats are printed with 17 significant digits, so two
//! runs with the same flags produce byte-identical files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use args::{FluidArgs, VariantArg};
pub use commands::analyze::{analysis_report, AnalysisReport};
pub use commands::packets::PacketArgs;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "rcp", version, about = "RCP fluid-model workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium, stability, convergence rate and Hopf criticality.
    Analyze {
        #[command(flatten)]
        params: FluidArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hopf boundary of the queue variant in the (a, b) plane.
    StabilityChart(commands::charts::ChartArgs),
    /// Linear decay rate across a range of `a` or `b`.
    Convergence(commands::charts::ConvergenceArgs),
    /// Sign surface of mu2 over coefficient or utilization grids.
    HopfSurface(commands::charts::SurfaceArgs),
    /// Integrate the delay equation from a constant history.
    SimulateFluid(commands::fluid::SimulateArgs),
    /// Continuation in kappa, optionally forward then backward.
    Sweep(commands::fluid::SweepArgs),
    /// Discrete-event bottleneck simulation.
    SimulatePackets(PacketArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { params, out } => commands::analyze::run(&params, out),
        Command::StabilityChart(a) => commands::charts::stability_chart(&a),
        Command::Convergence(a) => commands::charts::convergence(&a),
        Command::HopfSurface(a) => commands::charts::hopf_surface(&a),
        Command::SimulateFluid(a) => commands::fluid::simulate(&a),
        Command::Sweep(a) => commands::fluid::sweep(&a),
        Command::SimulatePackets(a) => commands::packets::run(&a),
    }
}
