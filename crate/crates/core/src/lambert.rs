//! Principal branch of the Lambert W function for complex arguments.
//!
//! Used to locate the rightmost root of `lambda + (a/tau) exp(-lambda tau) = 0`,
//! which is `lambda tau = W0(-a)`.

use num_complex::Complex64;

use crate::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const TOL: f64 = 1e-14;

/// `W0(z)`, solved by Halley iteration.
///
/// Near the branch point `-1/e` the square-root series is used directly since
/// Halley's convergence degrades where `W'` blows up.
pub fn lambert_w0(z: Complex64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Ok(z);
    }
    let e = core::f64::consts::E;
    let p = (2.0 * (e * z + 1.0)).sqrt();
    let series = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    if p.norm() < 1e-4 {
        return Ok(series);
    }
    let mut w = if p.norm() < 1.5 {
        series
    } else if z.re >= 0.0 && z.norm() < 3.0 {
        (1.0 + z).ln()
    } else {
        let l = z.ln();
        l - l.ln()
    };
    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.norm() <= TOL * (1.0 + w.norm()) {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence {
        what: "Lambert W Halley iteration",
        iterations: MAX_ITERATIONS,
    })
}
