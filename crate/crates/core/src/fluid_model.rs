//! Single-bottleneck RCP fluid model.
//!
//! With a common round-trip delay `tau` the router's fair rate obeys
//!
//! ```text
//! dR/dt = kappa * a * R(t) / (C tau) * (C - y - b C p(y))       (with queue)
//! dR/dt = kappa * a * R(t) / (gamma C tau) * (gamma C - y)      (without)
//! ```
//!
//! where `y = R(t - tau)` is the arriving load and `p(y) = y sigma2 / (2 (C - y))`
//! the mean queue.

use crate::error::invalid;
use crate::{Error, FluidParams, Result, Variant};

/// Equilibrium rate and the corresponding link utilization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    /// Equilibrium fair rate `R*`.
    pub rate: f64,
    /// `R* / C`.
    pub utilization: f64,
}

/// Coefficients of the cubic Taylor expansion of the right-hand side about
/// the equilibrium, in the deviation `u`, with `x = u(t)` and `y = u(t - tau)`.
///
/// The coefficients are polynomial coefficients (derivatives divided by the
/// factorials of the multi-index) and do not carry `kappa`; callers scale by
/// `kappa` where the coefficients are used.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaylorCoeffs {
    /// Coefficient of `y`.
    pub xi_y: f64,
    /// Coefficient of `x^2`.
    pub xi_xx: f64,
    /// Coefficient of `x y`.
    pub xi_xy: f64,
    /// Coefficient of `y^2`.
    pub xi_yy: f64,
    /// Coefficient of `x^3`.
    pub xi_xxx: f64,
    /// Coefficient of `x^2 y`.
    pub xi_xxy: f64,
    /// Coefficient of `x y^2`.
    pub xi_xyy: f64,
    /// Coefficient of `y^3`.
    pub xi_yyy: f64,
}

impl TaylorCoeffs {
    /// Every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        TaylorCoeffs {
            xi_y: self.xi_y * factor,
            xi_xx: self.xi_xx * factor,
            xi_xy: self.xi_xy * factor,
            xi_yy: self.xi_yy * factor,
            xi_xxx: self.xi_xxx * factor,
            xi_xxy: self.xi_xxy * factor,
            xi_xyy: self.xi_xyy * factor,
            xi_yyy: self.xi_yyy * factor,
        }
    }
}

/// Utilization `rho*` solving `2 (1 - rho)^2 = b sigma2 rho` on `(0, 1]`.
///
/// Written as `4 / (b' + 4 + sqrt(b'^2 + 8 b'))`, which is the textbook
/// `(b' + 4 - sqrt(b'^2 + 8 b')) / 4` without the cancellation for large `b'`.
fn utilization_for(b_eff: f64) -> f64 {
    4.0 / (b_eff + 4.0 + libm::sqrt(b_eff * b_eff + 8.0 * b_eff))
}

/// Equilibrium of the model for the selected variant.
pub fn equilibrium(params: &FluidParams) -> Result<Equilibrium> {
    params.validate()?;
    let utilization = match params.variant {
        Variant::WithQueue => utilization_for(params.b * params.sigma2),
        Variant::WithoutQueue => params.gamma,
    };
    Ok(Equilibrium {
        rate: utilization * params.capacity,
        utilization,
    })
}

/// Queue-feedback gain `b` that places the equilibrium at `rho_star`
/// (unit traffic variability).
pub fn b_for_utilization(rho_star: f64) -> Result<f64> {
    if !(rho_star > 0.0 && rho_star < 1.0) {
        return Err(invalid("rho_star", "must lie in (0, 1)"));
    }
    let slack = 1.0 - rho_star;
    Ok(2.0 * slack * slack / rho_star)
}

/// Mean queue `y sigma2 / (2 (C - y))` at arriving load `y`.
pub fn mean_queue(load: f64, capacity: f64, sigma2: f64) -> Result<f64> {
    if !(capacity > 0.0) {
        return Err(invalid("capacity", "must be > 0"));
    }
    if !(load >= 0.0) {
        return Err(invalid("load", "must be >= 0"));
    }
    if load >= capacity {
        return Err(Error::QueuePole { load, capacity });
    }
    Ok(load * sigma2 / (2.0 * (capacity - load)))
}

/// Instantaneous derivative `dR/dt` given the current rate and the rate one
/// delay ago.
pub fn rhs(params: &FluidParams, rate_now: f64, rate_delayed: f64) -> Result<f64> {
    params.validate()?;
    if !(rate_now > 0.0) {
        return Err(invalid("rate_now", "must be > 0"));
    }
    if !(rate_delayed >= 0.0) {
        return Err(invalid("rate_delayed", "must be >= 0"));
    }
    if params.variant == Variant::WithQueue && rate_delayed >= params.capacity {
        return Err(Error::QueuePole {
            load: rate_delayed,
            capacity: params.capacity,
        });
    }
    Ok(rhs_unchecked(params, rate_now, rate_delayed))
}

/// [`rhs`] without validation, for inner integration loops. The caller
/// guarantees `rate_delayed < C` for the queue variant.
#[inline]
pub(crate) fn rhs_unchecked(params: &FluidParams, rate_now: f64, rate_delayed: f64) -> f64 {
    let c = params.capacity;
    match params.variant {
        Variant::WithQueue => {
            let queue = rate_delayed * params.sigma2 / (2.0 * (c - rate_delayed));
            params.kappa * params.a * rate_now / (c * params.tau)
                * (c - rate_delayed - params.b * c * queue)
        }
        Variant::WithoutQueue => {
            let target = params.gamma * c;
            params.kappa * params.a * rate_now / (target * params.tau) * (target - rate_delayed)
        }
    }
}

/// Taylor coefficients of the right-hand side about the equilibrium, without
/// the factor `kappa`.
pub fn taylor_coeffs(params: &FluidParams) -> Result<TaylorCoeffs> {
    let eq = equilibrium(params)?;
    let (a, c, tau) = (params.a, params.capacity, params.tau);
    match params.variant {
        Variant::WithQueue => {
            let rho = eq.utilization;
            if rho >= 1.0 {
                return Err(invalid("b", "must be > 0 so that rho* < 1"));
            }
            let slack = 1.0 - rho;
            Ok(TaylorCoeffs {
                xi_y: -a * (1.0 + rho) / tau,
                xi_xy: -a * (1.0 + rho) / (c * tau * rho),
                xi_yy: -a / (c * tau * slack),
                xi_xyy: -a / (c * c * tau * rho * slack),
                xi_yyy: -a / (c * c * tau * slack * slack),
                ..TaylorCoeffs::default()
            })
        }
        Variant::WithoutQueue => Ok(TaylorCoeffs {
            xi_y: -a / tau,
            xi_xy: -a / (params.gamma * c * tau),
            ..TaylorCoeffs::default()
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equilibrium_examples() {
        let eq = equilibrium(&FluidParams::with_queue(1.0, 0.736, 10.0, 1.0)).unwrap();
        assert!((eq.rate - 5.5).abs() < 1e-3);
        assert!((eq.utilization - 0.55).abs() < 1e-4);

        let eq = equilibrium(&FluidParams::with_queue(1.0, 0.0, 10.0, 1.0)).unwrap();
        assert_eq!(eq.rate, 10.0);
        assert_eq!(eq.utilization, 1.0);

        let eq = equilibrium(&FluidParams::with_queue(1.0, 0.022, 10.0, 1.0)).unwrap();
        assert!((eq.rate - 9.0).abs() < 5e-3);

        let eq = equilibrium(&FluidParams::without_queue(1.0, 0.95, 10.0, 1.0)).unwrap();
        assert_eq!(eq.rate, 9.5);
    }

    #[test]
    fn equilibrium_matches_textbook_form() {
        for b in [0.005, 0.022, 0.257, 0.736, 2.0, 10.0] {
            let textbook = (b + 4.0 - libm::sqrt(b * b + 8.0 * b)) / 4.0;
            assert_relative_eq!(utilization_for(b), textbook, max_relative = 1e-12);
        }
    }

    #[test]
    fn equilibrium_rejects_bad_params() {
        assert!(equilibrium(&FluidParams::with_queue(1.0, -1.0, 10.0, 1.0)).is_err());
        assert!(equilibrium(&FluidParams::without_queue(1.0, 1.5, 10.0, 1.0)).is_err());
    }

    #[test]
    fn b_for_utilization_examples() {
        assert!((b_for_utilization(0.55).unwrap() - 0.736).abs() < 5e-4);
        assert!((b_for_utilization(0.70).unwrap() - 0.257).abs() < 5e-4);
        for bad in [0.0, 1.0, -0.2, 1.2] {
            assert!(b_for_utilization(bad).is_err());
        }
    }

    #[test]
    fn b_for_point_nine_matches_bisection() {
        // Oracle: bisect the textbook utilization formula for b on (0, 10].
        let target = 0.9;
        let (mut lo, mut hi) = (1e-12, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let rho = (mid + 4.0 - libm::sqrt(mid * mid + 8.0 * mid)) / 4.0;
            // rho decreases with b
            if rho > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b = b_for_utilization(target).unwrap();
        assert_relative_eq!(b, 0.5 * (lo + hi), max_relative = 1e-10);
        assert!((b - 0.022).abs() < 5e-4);
    }

    #[test]
    fn mean_queue_examples() {
        assert_eq!(mean_queue(5.0, 10.0, 1.0).unwrap(), 0.5);
        assert_eq!(mean_queue(0.0, 10.0, 1.0).unwrap(), 0.0);
        assert_eq!(mean_queue(9.0, 10.0, 1.0).unwrap(), 4.5);
        assert!(matches!(
            mean_queue(10.0, 10.0, 1.0),
            Err(Error::QueuePole { .. })
        ));
    }

    #[test]
    fn rhs_examples() {
        let p = FluidParams::without_queue(1.0, 1.0, 10.0, 1.0);
        assert_relative_eq!(rhs(&p, 10.0, 5.0).unwrap(), 5.0, max_relative = 1e-15);

        let p = FluidParams::with_queue(1.01, 0.736, 10.0, 100.0);
        let r = equilibrium(&p).unwrap().rate;
        assert!(rhs(&p, r, r).unwrap().abs() <= 1e-12 * 10.0 / 100.0);

        let p = FluidParams::without_queue(0.7, 0.95, 10.0, 3.0);
        assert_eq!(rhs(&p, 9.5, 9.5).unwrap(), 0.0);
    }

    #[test]
    fn rhs_queue_pole() {
        let p = FluidParams::with_queue(1.0, 0.5, 10.0, 1.0);
        assert!(matches!(rhs(&p, 5.0, 10.0), Err(Error::QueuePole { .. })));
        assert!(rhs(&p, 0.0, 5.0).is_err());
    }

    #[test]
    fn taylor_examples() {
        let p = FluidParams::with_queue(1.01, b_for_utilization(0.55).unwrap(), 10.0, 100.0);
        let t = taylor_coeffs(&p).unwrap();
        assert_relative_eq!(t.xi_y, -0.015655, max_relative = 1e-12);
        assert_relative_eq!(t.xi_yy, -1.01 / (10.0 * 100.0 * 0.45), max_relative = 1e-12);
        assert!((t.xi_yy - -2.2444e-3).abs() < 1e-7);
        assert_eq!((t.xi_xx, t.xi_xxx, t.xi_xxy), (0.0, 0.0, 0.0));

        let pi = core::f64::consts::PI;
        let p = FluidParams::without_queue(pi / 2.0, 1.0, 10.0, 1.0);
        let t = taylor_coeffs(&p).unwrap();
        assert_eq!(t.xi_y, -pi / 2.0);
        assert_relative_eq!(t.xi_xy, -pi / 20.0, max_relative = 1e-15);
        assert_eq!(
            TaylorCoeffs {
                xi_y: 0.0,
                xi_xy: 0.0,
                ..t
            },
            TaylorCoeffs::default()
        );
    }

    #[test]
    fn taylor_rejects_full_utilization() {
        assert!(taylor_coeffs(&FluidParams::with_queue(1.0, 0.0, 10.0, 1.0)).is_err());
    }

    #[test]
    fn with_queue_coefficients_negative() {
        for rho in [0.05, 0.3, 0.55, 0.9, 0.99] {
            let p = FluidParams::with_queue(0.8, b_for_utilization(rho).unwrap(), 3.0, 7.0);
            let t = taylor_coeffs(&p).unwrap();
            for xi in [t.xi_y, t.xi_xy, t.xi_yy, t.xi_xyy, t.xi_yyy] {
                assert!(xi < 0.0);
            }
        }
    }
}
