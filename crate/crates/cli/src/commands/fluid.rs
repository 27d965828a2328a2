use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rcp_core::dde_sim::{
    hysteresis_sweep, integrate, sweep_bifurcation, SignatureThresholds, SweepConfig,
    SweepDirection, SweepPoint, MIN_STEPS_PER_DELAY,
};
use rcp_core::fluid_model::equilibrium;
use rcp_core::linear_analysis::stability;
use serde::Serialize;

use crate::args::{FluidArgs, InputsEcho};
use crate::error::{CliError, Result};
use crate::output::{fmt17, opt, Provenance, Sink, F17, SCHEMA};

pub const TRAJECTORY_FILE: &str = "fluid_trajectory.csv";
pub const SWEEP_FILE: &str = "bifurcation.csv";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.json";

fn positive(flag: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::flag(flag, "must be finite and > 0"))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: FluidArgs,
    /// Constant initial history; defaults to 1% above equilibrium.
    #[arg(long, allow_negative_numbers = true)]
    pub r0: Option<f64>,
    /// End time; defaults to 200 delays.
    #[arg(long = "t-end", allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    /// Step; defaults to a thousandth of the delay.
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Write every `stride`-th sample.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let p = args.params.params()?;
    let eq = equilibrium(&p)?.rate;
    let r0 = args.r0.unwrap_or(1.01 * eq);
    let t_end = args.t_end.unwrap_or(200.0 * p.tau);
    let dt = args.dt.unwrap_or(p.tau / 1000.0);
    positive("--r0", r0)?;
    positive("--t-end", t_end)?;
    positive("--dt", dt)?;
    if args.stride == 0 {
        return Err(CliError::flag("--stride", "must be >= 1"));
    }
    let traj = integrate(&p, r0, t_end, dt).map_err(|e| match e {
        rcp_core::Error::InvalidParameter {
            name: "rate0",
            reason,
        } => CliError::flag("--r0", reason),
        rcp_core::Error::InvalidParameter { name: "dt", reason } => CliError::flag("--dt", reason),
        rcp_core::Error::InvalidParameter {
            name: "t_end",
            reason,
        } => CliError::flag("--t-end", reason),
        other => other.into(),
    })?;
    if let Some(t) = traj.divergence {
        eprintln!("trajectory left the admissible region at t = {}", fmt17(t));
    }
    let last = traj.rates.len().saturating_sub(1);
    let rows = traj
        .rates
        .iter()
        .enumerate()
        .filter(|(i, _)| i % args.stride == 0 || *i == last)
        .map(|(i, &r)| vec![fmt17(traj.time(i)), fmt17(r)]);
    Sink::new(args.out.clone())?.csv(TRAJECTORY_FILE, true, &["t", "rate"], rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Backward,
    Both,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: FluidArgs,
    #[arg(
        long = "kappa-min",
        default_value_t = 0.95,
        allow_negative_numbers = true
    )]
    pub kappa_min: f64,
    #[arg(
        long = "kappa-max",
        default_value_t = 1.05,
        allow_negative_numbers = true
    )]
    pub kappa_max: f64,
    #[arg(
        long = "kappa-step",
        default_value_t = 0.01,
        allow_negative_numbers = true
    )]
    pub kappa_step: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub direction: DirectionArg,
    /// Length of each run, in delays.
    #[arg(long, default_value_t = 2000.0, allow_negative_numbers = true)]
    pub duration: f64,
    #[arg(long = "steps-per-delay", default_value_t = rcp_core::dde_sim::DEFAULT_STEPS_PER_DELAY)]
    pub steps_per_delay: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    schema: u32,
    inputs: InputsEcho,
    equilibrium_rate: F17,
    kappa_c: F17,
    direction: &'static str,
    duration_delays: F17,
    steps_per_delay: usize,
    /// Present only when both directions were run.
    hysteresis: Option<bool>,
    hysteresis_at: Vec<F17>,
    jump_at: Option<F17>,
    provenance: Provenance,
}

fn kappa_grid(args: &SweepArgs) -> Result<Vec<f64>> {
    positive("--kappa-min", args.kappa_min)?;
    positive("--kappa-step", args.kappa_step)?;
    if !(args.kappa_max.is_finite() && args.kappa_max >= args.kappa_min) {
        return Err(CliError::flag(
            "--kappa-max",
            "must be finite and >= --kappa-min",
        ));
    }
    let n = ((args.kappa_max - args.kappa_min) / args.kappa_step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(CliError::flag(
            "--kappa-step",
            "grid would exceed 100000 points",
        ));
    }
    Ok((0..=n)
        .map(|i| args.kappa_min + args.kappa_step * i as f64)
        .collect())
}

fn row(dir: &str, pt: &SweepPoint) -> Vec<String> {
    vec![
        fmt17(pt.kappa),
        dir.to_string(),
        fmt17(pt.amplitude),
        pt.converged_to_equilibrium.to_string(),
        pt.diverged.to_string(),
    ]
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    // the grid supplies kappa
    if args.params.kappa != 1.0 {
        return Err(CliError::flag(
            "--kappa",
            "sweeps take kappa from --kappa-min/--kappa-max",
        ));
    }
    let p = args.params.params()?;
    let grid = kappa_grid(args)?;
    positive("--duration", args.duration)?;
    if args.steps_per_delay < MIN_STEPS_PER_DELAY {
        return Err(CliError::flag("--steps-per-delay", "must be >= 100"));
    }
    let cfg = SweepConfig {
        steps_per_delay: args.steps_per_delay,
        duration_delays: args.duration,
        ..SweepConfig::default()
    };
    let mut rows = Vec::new();
    let (mut hysteresis, mut hysteresis_at, mut jump_at) = (None, Vec::new(), None);
    let direction = match args.direction {
        DirectionArg::Both => {
            let report = hysteresis_sweep(&p, &grid, &cfg, &SignatureThresholds::default())?;
            rows.extend(report.forward.iter().map(|pt| row("forward", pt)));
            rows.extend(report.backward.iter().map(|pt| row("backward", pt)));
            hysteresis = Some(report.hysteresis());
            hysteresis_at = report.hysteresis_at.iter().copied().map(F17).collect();
            jump_at = report.jump_at;
            "both"
        }
        DirectionArg::Forward => {
            let pts = sweep_bifurcation(&p, &grid, SweepDirection::Forward, &cfg)?;
            rows.extend(pts.iter().map(|pt| row("forward", pt)));
            "forward"
        }
        DirectionArg::Backward => {
            let pts = sweep_bifurcation(&p, &grid, SweepDirection::Backward, &cfg)?;
            rows.extend(pts.iter().map(|pt| row("backward", pt)));
            "backward"
        }
    };
    let summary = SweepSummary {
        schema: SCHEMA,
        inputs: args.params.echo(),
        equilibrium_rate: F17(equilibrium(&p)?.rate),
        kappa_c: F17(stability(&p)?.kappa_c),
        direction,
        duration_delays: F17(args.duration),
        steps_per_delay: args.steps_per_delay,
        hysteresis,
        hysteresis_at,
        jump_at: opt(jump_at),
        provenance: Provenance::new(None),
    };
    let sink = Sink::new(args.out.clone())?;
    sink.csv(
        SWEEP_FILE,
        true,
        &["kappa", "direction", "amplitude", "converged", "diverged"],
        rows,
    )?;
    sink.json(SWEEP_SUMMARY_FILE, false, &summary)
}
