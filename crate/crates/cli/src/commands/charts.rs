use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rcp_core::fluid_model::{b_for_utilization, equilibrium};
use rcp_core::hopf::{mu2_closed_form, mu2_cubics_only, mu2_numerator, mu2_quadratics_only};
use rcp_core::linear_analysis::{convergence_rate, stability_boundary};
use rcp_core::FluidParams;

use crate::args::VariantArg;
use crate::error::{CliError, Result};
use crate::output::{fmt17, linspace, Sink};

pub const BOUNDARY_FILE: &str = "fig2_boundary.csv";
pub const SIGMA_A_FILE: &str = "fig3_sigma.csv";
pub const SIGMA_B_FILE: &str = "fig4_sigma_b.csv";
pub const QUADRATICS_FILE: &str = "fig_mu2_quadratics.csv";
pub const CUBICS_FILE: &str = "fig_mu2_cubics.csv";
pub const UTILIZATION_FILE: &str = "fig5_mu2_utilization.csv";

fn check_range(lo_flag: &str, lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CliError::flag(
            lo_flag,
            "range must be finite with min < max",
        ));
    }
    Ok(())
}

fn check_points(points: usize) -> Result<()> {
    if points < 2 {
        return Err(CliError::flag("--points", "must be >= 2"));
    }
    Ok(())
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

#[derive(Debug, Args)]
pub struct ChartArgs {
    /// Defaults to just inside the band (pi/4, pi/2) where a boundary exists.
    #[arg(long = "a-min", allow_negative_numbers = true)]
    pub a_min: Option<f64>,
    #[arg(long = "a-max", allow_negative_numbers = true)]
    pub a_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn stability_chart(args: &ChartArgs) -> Result<()> {
    let margin = 1e-3 * (FRAC_PI_2 - FRAC_PI_4);
    let lo = args.a_min.unwrap_or(FRAC_PI_4 + margin);
    let hi = args.a_max.unwrap_or(FRAC_PI_2 - margin);
    check_range("--a-min", lo, hi)?;
    check_points(args.points)?;
    let rows = stability_boundary(&linspace(lo, hi, args.points))
        .into_iter()
        .map(|pt| {
            let rho = pt.b.map(|_| FRAC_PI_2 / pt.a - 1.0);
            vec![fmt17(pt.a), cell(pt.b), cell(rho)]
        });
    Sink::new(args.out.clone())?.csv(BOUNDARY_FILE, true, &["a", "b", "rho_star"], rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    A,
    B,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum, default_value = "without-queue")]
    pub variant: VariantArg,
    /// Parameter swept along the x axis.
    #[arg(long, value_enum, default_value = "a")]
    pub vary: Vary,
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Fixed `a` when sweeping `b`.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Fixed `b` when sweeping `a` with queue feedback.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn convergence(args: &ConvergenceArgs) -> Result<()> {
    if !(args.tau > 0.0 && args.tau.is_finite()) {
        return Err(CliError::flag("--tau", "must be finite and > 0"));
    }
    check_points(args.points)?;
    // (a, b) pairs along the sweep
    let (file, pairs): (&str, Vec<(f64, Option<f64>)>) = match (args.vary, args.variant) {
        (Vary::A, variant) => {
            let b = match variant {
                VariantArg::WithQueue => Some(args.b.ok_or_else(|| {
                    CliError::flag("--b", "needed when sweeping a with queue feedback")
                })?),
                VariantArg::WithoutQueue => {
                    if args.b.is_some() {
                        return Err(CliError::flag("--b", "only used with queue feedback"));
                    }
                    None
                }
            };
            let lo = args.min.unwrap_or(1e-3);
            let hi = args.max.unwrap_or(FRAC_PI_2 - 1e-3);
            check_range("--min", lo, hi)?;
            if lo <= 0.0 {
                return Err(CliError::flag("--min", "a must be > 0"));
            }
            (
                SIGMA_A_FILE,
                linspace(lo, hi, args.points)
                    .into_iter()
                    .map(|a| (a, b))
                    .collect(),
            )
        }
        (Vary::B, VariantArg::WithoutQueue) => {
            return Err(CliError::flag(
                "--vary",
                "b only exists with --variant with-queue",
            ))
        }
        (Vary::B, VariantArg::WithQueue) => {
            let a = args
                .a
                .ok_or_else(|| CliError::flag("--a", "needed when sweeping b"))?;
            let lo = args.min.unwrap_or(0.0);
            let hi = args.max.unwrap_or(10.0);
            check_range("--min", lo, hi)?;
            if lo < 0.0 {
                return Err(CliError::flag("--min", "b must be >= 0"));
            }
            (
                SIGMA_B_FILE,
                linspace(lo, hi, args.points)
                    .into_iter()
                    .map(|b| (a, Some(b)))
                    .collect(),
            )
        }
    };

    let mut rows = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let p = match b {
            Some(b) => FluidParams::with_queue(a, b, 1.0, args.tau),
            None => FluidParams::without_queue(a, 1.0, 1.0, args.tau),
        };
        p.validate()?;
        let rho = b
            .map(|_| equilibrium(&p).map(|e| e.utilization))
            .transpose()?;
        let gain = a * (1.0 + rho.unwrap_or(0.0));
        let report = convergence_rate(gain, args.tau)?;
        rows.push(vec![
            fmt17(a),
            cell(b),
            cell(rho),
            fmt17(gain),
            fmt17(report.sigma),
            report.branch.name().to_string(),
        ]);
    }
    Sink::new(args.out.clone())?.csv(
        file,
        true,
        &["a", "b", "rho_star", "effective_gain", "sigma", "branch"],
        rows,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Surface {
    /// mu2 over (xi_xy, xi_yy) with the cubic terms zero.
    Quadratics,
    /// mu2 over (xi_xyy, xi_yyy) with the quadratic terms zero.
    Cubics,
    /// mu2 of the queue variant against equilibrium utilization.
    Utilization,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long, value_enum)]
    pub which: Surface,
    /// Half-width of the square coefficient grid.
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub extent: f64,
    /// Grid points per axis (coefficient grids) or along rho (utilization).
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Linear coefficient held fixed on coefficient grids; must be negative.
    #[arg(long = "xi-y", default_value_t = -1.0, allow_negative_numbers = true)]
    pub xi_y: f64,
    /// Capacity for the utilization curve.
    #[arg(long = "C", default_value_t = 1.0, allow_negative_numbers = true)]
    pub capacity: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn hopf_surface(args: &SurfaceArgs) -> Result<()> {
    check_points(args.points)?;
    let sink = Sink::new(args.out.clone())?;
    match args.which {
        Surface::Quadratics | Surface::Cubics => {
            if !(args.extent > 0.0 && args.extent.is_finite()) {
                return Err(CliError::flag("--extent", "must be finite and > 0"));
            }
            if !(args.xi_y < 0.0 && args.xi_y.is_finite()) {
                return Err(CliError::flag("--xi-y", "must be finite and < 0"));
            }
            let axis = linspace(-args.extent, args.extent, args.points);
            let quad = args.which == Surface::Quadratics;
            let mut rows = Vec::with_capacity(axis.len() * axis.len());
            for &u in &axis {
                for &v in &axis {
                    let mu2 = if quad {
                        mu2_quadratics_only(u, v, args.xi_y)?
                    } else {
                        mu2_cubics_only(u, v, args.xi_y)?
                    };
                    rows.push(vec![fmt17(u), fmt17(v), fmt17(mu2)]);
                }
            }
            let (file, header) = if quad {
                (QUADRATICS_FILE, ["xi_xy", "xi_yy", "mu2"])
            } else {
                (CUBICS_FILE, ["xi_xyy", "xi_yyy", "mu2"])
            };
            sink.csv(file, true, &header, rows)
        }
        Surface::Utilization => {
            if !(args.capacity > 0.0 && args.capacity.is_finite()) {
                return Err(CliError::flag("--C", "must be finite and > 0"));
            }
            // open interval (0, 1)
            let n = args.points;
            let mut rows = Vec::with_capacity(n);
            for i in 1..=n {
                let rho = i as f64 / (n + 1) as f64;
                rows.push(vec![
                    fmt17(rho),
                    fmt17(b_for_utilization(rho)?),
                    fmt17(mu2_closed_form(rho, args.capacity)?),
                    fmt17(mu2_numerator(rho)),
                ]);
            }
            sink.csv(
                UTILIZATION_FILE,
                true,
                &["rho_star", "b", "mu2", "numerator"],
                rows,
            )
        }
    }
}
