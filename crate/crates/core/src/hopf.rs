//! Criticality of the first Hopf bifurcation.
//!
//! For a scalar delay equation
//!
//! ```text
//! du/dt = eta * ( -b u(t-tau) + xi_xx x^2 + xi_xy x y + xi_yy y^2
//!                 + xi_xxx x^3 + xi_xxy x^2 y + xi_xyy x y^2 + xi_yyy y^3 )
//! ```
//!
//! with `x = u(t)`, `y = u(t - tau)`, the bifurcation at `eta b tau = pi/2` is
//! super-critical when `mu2 > 0` and sub-critical when `mu2 < 0`. The RCP
//! expansions fit this form with `eta = kappa` and `b = -xi_y`.

use core::f64::consts::PI;

use crate::error::invalid;
use crate::fluid_model::{equilibrium, taylor_coeffs, TaylorCoeffs};
use crate::linear_analysis::stability;
use crate::roots::bisect;
use crate::{FluidParams, Result, Variant};

/// Band around zero (in units of `mu2 * C^2`) reported as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-10;

/// Direction of the bifurcation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    /// Stable, small-amplitude limit cycles emerge past `kappa_c`.
    SuperCritical,
    /// The bifurcating cycles are unstable.
    SubCritical,
    /// `mu2` within [`DEGENERATE_TOL`] of zero.
    Degenerate,
}

impl Criticality {
    /// Label used in reports.
    pub fn name(self) -> &'static str {
        match self {
            Criticality::SuperCritical => "super-critical",
            Criticality::SubCritical => "sub-critical",
            Criticality::Degenerate => "degenerate",
        }
    }
}

/// Summary of the Hopf analysis at the first bifurcation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfReport {
    /// Critical value of the bifurcation parameter.
    pub kappa_c: f64,
    /// `mu2` from the general formula with the model's Taylor coefficients.
    pub mu2: f64,
    /// `mu2` from the simplified closed form in `rho*` (queue variant only).
    pub mu2_closed_form: Option<f64>,
    /// Classification from the sign of `mu2`.
    pub criticality: Criticality,
    /// `R* sqrt(20 pi / (3 pi - 2))`; the limit-cycle amplitude is this times
    /// `sqrt(kappa - kappa_c)` (queue-free variant only).
    pub amplitude_coefficient: Option<f64>,
}

/// `mu2` for the general cubic delay equation with linear gain `b_lin`.
pub fn mu2_general(c: &TaylorCoeffs, b_lin: f64) -> Result<f64> {
    if !(b_lin > 0.0) {
        return Err(invalid("b_lin", "must be > 0"));
    }
    let b = b_lin;
    let quadratic = c.xi_xx * c.xi_xx * 4.0 * (PI - 9.0)
        + c.xi_xy * c.xi_xy * (3.0 * PI - 2.0)
        + c.xi_yy * c.xi_yy * 2.0 * (11.0 * PI - 4.0)
        + c.xi_xx * c.xi_xy * (7.0 * PI - 18.0)
        + c.xi_xx * c.xi_yy * 2.0 * (7.0 * PI - 18.0)
        + c.xi_xy * c.xi_yy * (7.0 * PI - 18.0);
    let cubic = -6.0 * c.xi_xxx + PI * c.xi_xxy - 2.0 * c.xi_xyy + 3.0 * PI * c.xi_yyy;
    Ok((quadratic / (5.0 * b) + cubic) / (PI * b))
}

/// `mu2` restricted to the two quadratic terms of the RCP expansion.
pub fn mu2_quadratics_only(xi_xy: f64, xi_yy: f64, xi_y: f64) -> Result<f64> {
    if xi_y == 0.0 {
        return Err(invalid("xi_y", "must be non-zero"));
    }
    let d = 5.0 * PI * xi_y * xi_y;
    Ok(xi_xy * xi_xy * (3.0 * PI - 2.0) / d
        + xi_yy * xi_yy * 2.0 * (11.0 * PI - 4.0) / d
        + xi_xy * xi_yy * (7.0 * PI - 18.0) / d)
}

/// `mu2` restricted to the two cubic terms of the RCP expansion.
pub fn mu2_cubics_only(xi_xyy: f64, xi_yyy: f64, xi_y: f64) -> Result<f64> {
    if xi_y == 0.0 {
        return Err(invalid("xi_y", "must be non-zero"));
    }
    Ok(2.0 * xi_xyy / (PI * xi_y) - 3.0 * xi_yyy / xi_y)
}

/// Numerator polynomial of the closed-form `mu2` of the queue variant.
pub fn mu2_numerator(rho: f64) -> f64 {
    let c4 = 3.0 * PI - 2.0;
    let c3 = -(22.0 * PI - 8.0);
    let c2 = -(4.0 - PI);
    let c1 = 7.0 * PI - 8.0;
    let c0 = 3.0 * PI - 2.0;
    (((c4 * rho + c3) * rho + c2) * rho + c1) * rho + c0
}

/// Closed-form `mu2` of the queue variant at utilization `rho` and capacity `C`.
pub fn mu2_closed_form(rho: f64, capacity: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid("rho_star", "must lie in (0, 1)"));
    }
    if !(capacity > 0.0) {
        return Err(invalid("capacity", "must be > 0"));
    }
    let one_minus_sq = 1.0 - rho * rho;
    Ok(mu2_numerator(rho)
        / (capacity * capacity * 5.0 * PI * rho * rho * one_minus_sq * one_minus_sq))
}

/// Both evaluations of `mu2` for the queue variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueMu2 {
    /// Table coefficients substituted into the general formula.
    pub from_coefficients: f64,
    /// Closed form in `rho*`.
    pub closed_form: f64,
}

/// `mu2` of the queue variant by both routes.
pub fn mu2_with_queue(params: &FluidParams) -> Result<QueueMu2> {
    if params.variant != Variant::WithQueue {
        return Err(invalid("variant", "mu2_with_queue needs the queue variant"));
    }
    let eq = equilibrium(params)?;
    if !(eq.utilization > 0.0 && eq.utilization < 1.0) {
        return Err(invalid("b", "rho* must lie in (0, 1)"));
    }
    let coeffs = taylor_coeffs(params)?;
    Ok(QueueMu2 {
        from_coefficients: mu2_general(&coeffs, -coeffs.xi_y)?,
        closed_form: mu2_closed_form(eq.utilization, params.capacity)?,
    })
}

/// Utilization above which the queue variant's bifurcation is sub-critical:
/// the root of [`mu2_numerator`] in `(0, 1)`.
pub fn critical_utilization() -> f64 {
    // numerator(0) = 3 pi - 2 > 0 and numerator(1) = -8 (pi + 1) < 0
    bisect(mu2_numerator, 0.0, 1.0, "critical utilization").unwrap_or(f64::NAN)
}

/// Predicted limit-cycle amplitude `R* sqrt(20 pi (kappa - kappa_c) / (3 pi - 2))`
/// for the queue-free variant.
pub fn supercritical_amplitude(params: &FluidParams, kappa: f64) -> Result<f64> {
    if params.variant != Variant::WithoutQueue {
        return Err(invalid(
            "variant",
            "amplitude law needs the queue-free variant",
        ));
    }
    let eq = equilibrium(params)?;
    let kappa_c = stability(params)?.kappa_c;
    if !(kappa >= kappa_c) {
        return Err(invalid("kappa", "must be >= kappa_c"));
    }
    Ok(eq.rate * libm::sqrt(20.0 * PI * (kappa - kappa_c) / (3.0 * PI - 2.0)))
}

fn classify(normalized_mu2: f64) -> Criticality {
    if normalized_mu2 > DEGENERATE_TOL {
        Criticality::SuperCritical
    } else if normalized_mu2 < -DEGENERATE_TOL {
        Criticality::SubCritical
    } else {
        Criticality::Degenerate
    }
}

/// Full Hopf analysis for either variant.
pub fn hopf_report(params: &FluidParams) -> Result<HopfReport> {
    let kappa_c = stability(params)?.kappa_c;
    let coeffs = taylor_coeffs(params)?;
    let mu2 = mu2_general(&coeffs, -coeffs.xi_y)?;
    let c2 = params.capacity * params.capacity;
    match params.variant {
        Variant::WithQueue => {
            let both = mu2_with_queue(params)?;
            Ok(HopfReport {
                kappa_c,
                mu2,
                mu2_closed_form: Some(both.closed_form),
                criticality: classify(mu2 * c2),
                amplitude_coefficient: None,
            })
        }
        Variant::WithoutQueue => {
            let eq = equilibrium(params)?;
            Ok(HopfReport {
                kappa_c,
                mu2,
                mu2_closed_form: None,
                criticality: classify(mu2 * c2),
                amplitude_coefficient: Some(eq.rate * libm::sqrt(20.0 * PI / (3.0 * PI - 2.0))),
            })
        }
    }
}
