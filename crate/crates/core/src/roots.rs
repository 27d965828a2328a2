//! Scalar root bracketing shared by the solvers.

use crate::{Error, Result};

pub(crate) const MAX_ITER: usize = 200;
pub(crate) const REL_TOL: f64 = 1e-13;

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops when the bracket is below `REL_TOL` relative to its midpoint (or
/// absolute when the midpoint is below one) or after `MAX_ITER` halvings,
/// whichever comes first.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, what: &'static str) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoConvergence {
            what,
            iterations: 0,
        });
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= REL_TOL * libm::fabs(mid).max(1.0) || mid == lo || mid == hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
