//! Linear stability, robust stability and rate of convergence.
//!
//! Both variants linearize to `du/dt = -(kappa a_eff / tau) u(t - tau)` with
//! `a_eff = a` without queue feedback and `a_eff = a (1 + rho*)` with it, so
//! everything here is a function of the effective gain `kappa a_eff`.

use alloc::vec::Vec;
use core::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::invalid;
use crate::fluid_model::{b_for_utilization, equilibrium};
use crate::lambert::lambert_w0;
use crate::roots::bisect;
use crate::{FluidParams, Result, Variant};

/// Gain at which the convergence rate peaks at `1 / tau`.
pub const OPTIMAL_GAIN: f64 = 1.0 / E;

/// Local stability of the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    /// `effective_gain < pi/2`.
    pub stable: bool,
    /// `pi/2 - effective_gain`.
    pub margin: f64,
    /// Value of `kappa` at which the first Hopf bifurcation occurs.
    pub kappa_c: f64,
    /// `kappa * a_eff`.
    pub effective_gain: f64,
}

/// Which of the three candidate rates attains the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceBranch {
    /// `sigma tau = 1`.
    Sigma1,
    /// `sigma tau exp(-sigma tau) = a_eff`, for `a_eff <= 1/e`.
    Sigma2,
    /// `g(u) = a_eff`, `sigma tau = u / tan u`, for `a_eff > 1/e`.
    Sigma3,
    /// Past the Hopf point; no exponential convergence.
    Unstable,
}

impl ConvergenceBranch {
    /// Lower-case label used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            ConvergenceBranch::Sigma1 => "sigma1",
            ConvergenceBranch::Sigma2 => "sigma2",
            ConvergenceBranch::Sigma3 => "sigma3",
            ConvergenceBranch::Unstable => "unstable",
        }
    }
}

/// Exponential rate of convergence to equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    /// Decay rate, `min` of the finite candidates (0 when unstable).
    pub sigma: f64,
    /// Candidate attaining the minimum.
    pub branch: ConvergenceBranch,
    /// `[sigma1, sigma2, sigma3]`; `f64::INFINITY` where no solution exists.
    pub candidates: [f64; 3],
}

/// Boundary of the stable region in the `(a, b)` plane at `kappa = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    /// Rate-mismatch gain.
    pub a: f64,
    /// Queue gain on the boundary, `None` when `a` is outside `(pi/4, pi/2)`.
    pub b: Option<f64>,
}

/// `a_eff`, the linear gain without `kappa`.
pub fn linear_gain(params: &FluidParams) -> Result<f64> {
    let eq = equilibrium(params)?;
    Ok(match params.variant {
        Variant::WithQueue => params.a * (1.0 + eq.utilization),
        Variant::WithoutQueue => params.a,
    })
}

/// Necessary and sufficient local stability condition `kappa a_eff < pi/2`.
pub fn stability(params: &FluidParams) -> Result<StabilityVerdict> {
    let gain = linear_gain(params)?;
    let effective_gain = params.kappa * gain;
    Ok(StabilityVerdict {
        stable: effective_gain < FRAC_PI_2,
        margin: FRAC_PI_2 - effective_gain,
        kappa_c: FRAC_PI_2 / gain,
        effective_gain,
    })
}

/// `kappa_c = 2 pi / (a (b + 8 - sqrt(b^2 + 8 b)))`, the closed form for the
/// queue variant with unit variability.
pub fn kappa_c_closed_form(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(invalid("a", "must be > 0"));
    }
    if !(b >= 0.0) {
        return Err(invalid("b", "must be >= 0"));
    }
    Ok(2.0 * PI / (a * (b + 8.0 - libm::sqrt(b * b + 8.0 * b))))
}

/// Points `(a, b)` on the Hopf boundary `a (1 + rho*(b)) = pi/2`.
pub fn stability_boundary(a_grid: &[f64]) -> Vec<BoundaryPoint> {
    a_grid
        .iter()
        .map(|&a| {
            let b = if a > FRAC_PI_4 && a < FRAC_PI_2 {
                b_for_utilization(FRAC_PI_2 / a - 1.0).ok()
            } else {
                None
            };
            BoundaryPoint { a, b }
        })
        .collect()
}

/// Sufficient condition for robust stability, `kappa a_eff < 1`.
pub fn robust_stability(params: &FluidParams) -> Result<bool> {
    Ok(params.kappa * linear_gain(params)? < 1.0)
}

/// `g(u) = u / sin(u) * exp(-u / tan(u))` on `(0, pi)`.
pub fn hayes_g(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < PI) {
        return Err(invalid("u", "must lie in (0, pi)"));
    }
    Ok(hayes_g_unchecked(u))
}

fn hayes_g_unchecked(u: f64) -> f64 {
    u / libm::sin(u) * libm::exp(-u * libm::cos(u) / libm::sin(u))
}

/// Decay rate of the linearized system from the Hayes conditions,
/// `sigma = min(sigma1, sigma2, sigma3)`.
pub fn convergence_rate(effective_gain: f64, tau: f64) -> Result<ConvergenceReport> {
    if !(effective_gain > 0.0 && effective_gain.is_finite()) {
        return Err(invalid("effective_gain", "must be finite and > 0"));
    }
    if !(tau > 0.0) {
        return Err(invalid("tau", "must be > 0"));
    }
    let sigma1 = 1.0 / tau;
    let mut candidates = [sigma1, f64::INFINITY, f64::INFINITY];

    if effective_gain >= FRAC_PI_2 {
        return Ok(ConvergenceReport {
            sigma: 0.0,
            branch: ConvergenceBranch::Unstable,
            candidates,
        });
    }

    if effective_gain <= OPTIMAL_GAIN {
        // s exp(-s) is increasing on (0, 1) and peaks at 1/e for s = 1.
        let s = if effective_gain == OPTIMAL_GAIN {
            1.0
        } else {
            bisect(
                |s| s * libm::exp(-s) - effective_gain,
                0.0,
                1.0,
                "sigma2 bisection",
            )?
        };
        candidates[1] = s / tau;
    } else {
        // g rises from 1/e at 0 to infinity at pi.
        let u = bisect(
            |u| {
                if u <= 0.0 {
                    OPTIMAL_GAIN - effective_gain
                } else {
                    hayes_g_unchecked(u) - effective_gain
                }
            },
            0.0,
            PI - 1e-12,
            "g(u) bisection",
        )?;
        let s = u * libm::cos(u) / libm::sin(u);
        if s > 0.0 {
            candidates[2] = s / tau;
        } else {
            return Ok(ConvergenceReport {
                sigma: 0.0,
                branch: ConvergenceBranch::Unstable,
                candidates,
            });
        }
    }

    // Ties go to the later candidate so that a = 1/e reports sigma2.
    let (idx, sigma) =
        candidates
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, s)| {
                    if s <= best.1 {
                        (i, s)
                    } else {
                        best
                    }
                },
            );
    let branch = match idx {
        0 => ConvergenceBranch::Sigma1,
        1 => ConvergenceBranch::Sigma2,
        _ => ConvergenceBranch::Sigma3,
    };
    Ok(ConvergenceReport {
        sigma,
        branch,
        candidates,
    })
}

/// Rightmost root of `lambda + (a_eff / tau) exp(-lambda tau) = 0`, from
/// `lambda tau = W0(-a_eff)`. The root in the upper half plane is returned
/// when the rightmost pair is complex.
pub fn rightmost_root(effective_gain: f64, tau: f64) -> Result<Complex64> {
    if !(effective_gain > 0.0 && effective_gain.is_finite()) {
        return Err(invalid("effective_gain", "must be finite and > 0"));
    }
    if !(tau > 0.0) {
        return Err(invalid("tau", "must be > 0"));
    }
    Ok(lambert_w0(Complex64::new(-effective_gain, 0.0))? / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// sigma2 oracle for a_eff = 0.2, tau = 1: plain bisection on
    /// s exp(-s) = 0.2 over (0, 1), computed once and frozen.
    const SIGMA_AT_POINT_TWO: f64 = 0.259_171_101_819_073_77;

    #[test]
    fn frozen_sigma_oracle() {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * libm::exp(-mid) < 0.2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((0.5 * (lo + hi) - SIGMA_AT_POINT_TWO).abs() < 1e-15);
    }

    #[test]
    fn stability_examples() {
        let v = stability(&FluidParams::without_queue(1.5, 1.0, 10.0, 1.0)).unwrap();
        assert!(v.stable);
        assert_relative_eq!(v.margin, FRAC_PI_2 - 1.5);

        let v = stability(&FluidParams::with_queue(1.01, 0.736, 10.0, 100.0)).unwrap();
        assert!((v.kappa_c - 1.0).abs() < 0.005);
        let v = stability(&FluidParams::with_queue(0.924, 0.257, 10.0, 100.0)).unwrap();
        assert!((v.kappa_c - 1.0).abs() < 0.005);
    }

    #[test]
    fn kappa_c_forms_agree() {
        for (a, b) in [(1.01, 0.736), (0.924, 0.257), (0.827, 0.022), (0.3, 5.0)] {
            let v = stability(&FluidParams::with_queue(a, b, 10.0, 100.0)).unwrap();
            assert_relative_eq!(
                v.kappa_c,
                kappa_c_closed_form(a, b).unwrap(),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                v.kappa_c * v.effective_gain / 1.0,
                FRAC_PI_2,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn boundary_gain_is_strict() {
        let p = FluidParams::without_queue(FRAC_PI_2, 1.0, 10.0, 1.0);
        assert!(!stability(&p).unwrap().stable);
        assert_eq!(
            convergence_rate(FRAC_PI_2, 1.0).unwrap().branch,
            ConvergenceBranch::Unstable
        );
    }

    #[test]
    fn boundary_examples() {
        let pts = stability_boundary(&[3.0 * PI / 8.0, FRAC_PI_4, FRAC_PI_2, 0.5, 2.0]);
        let b = pts[0].b.unwrap();
        assert_relative_eq!(b, 8.0 / 3.0, max_relative = 1e-12);
        assert!(pts[1..].iter().all(|p| p.b.is_none()));

        // near the ends b blows up
        let near = stability_boundary(&[FRAC_PI_4 + 1e-6, FRAC_PI_2 - 1e-6]);
        assert!(near[0].b.unwrap() < 1e-10);
        assert!(near[1].b.unwrap() > 1e5);
    }

    #[test]
    fn boundary_points_satisfy_hopf_equality() {
        let grid: Vec<f64> = (1..100)
            .map(|i| FRAC_PI_4 + (FRAC_PI_4) * i as f64 / 100.0)
            .collect();
        for pt in stability_boundary(&grid) {
            let b = pt.b.unwrap();
            let lhs = pt.a * (b + 8.0 - libm::sqrt(b * b + 8.0 * b)) / 4.0;
            assert!((lhs - FRAC_PI_2).abs() < 1e-10, "{pt:?}");
        }
    }

    #[test]
    fn robust_examples() {
        assert!(robust_stability(&FluidParams::without_queue(0.99, 1.0, 10.0, 1.0)).unwrap());
        assert!(!robust_stability(&FluidParams::without_queue(1.0, 1.0, 10.0, 1.0)).unwrap());
        let b55 = b_for_utilization(0.55).unwrap();
        assert!(robust_stability(&FluidParams::with_queue(0.6, b55, 10.0, 1.0)).unwrap());
        let b70 = b_for_utilization(0.70).unwrap();
        assert!(!robust_stability(&FluidParams::with_queue(0.924, b70, 10.0, 1.0)).unwrap());
        // kappa multiplies the gain
        let p = FluidParams::without_queue(0.6, 1.0, 10.0, 1.0).with_kappa(2.0);
        assert!(!robust_stability(&p).unwrap());
    }

    #[test]
    fn hayes_g_values() {
        assert!((hayes_g(1e-7).unwrap() - 1.0 / E).abs() < 1e-12);
        assert_relative_eq!(hayes_g(FRAC_PI_2).unwrap(), FRAC_PI_2, max_relative = 1e-14);
        assert!(hayes_g(PI - 1e-3).unwrap() > 1e3);
        assert!(hayes_g(0.0).is_err());
        assert!(hayes_g(PI).is_err());
    }

    #[test]
    fn hayes_g_monotone() {
        let mut prev = 0.0;
        // g overflows within about 0.01 of pi
        for i in 1..9_900 {
            let g = hayes_g(PI * i as f64 / 10_000.0).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }

    #[test]
    fn convergence_examples() {
        let r = convergence_rate(OPTIMAL_GAIN, 1.0).unwrap();
        assert_eq!(r.sigma, 1.0);
        assert_eq!(r.branch, ConvergenceBranch::Sigma2);

        let r = convergence_rate(FRAC_PI_2 - 1e-9, 1.0).unwrap();
        assert_eq!(r.branch, ConvergenceBranch::Sigma3);
        assert!(r.sigma < 1e-8);

        let r = convergence_rate(0.2, 1.0).unwrap();
        assert_relative_eq!(r.sigma, SIGMA_AT_POINT_TWO, max_relative = 1e-12);
        assert_eq!(r.candidates[2], f64::INFINITY);

        assert!(convergence_rate(0.0, 1.0).is_err());
        assert!(convergence_rate(-1.0, 1.0).is_err());
        assert_eq!(convergence_rate(3.0, 1.0).unwrap().sigma, 0.0);
    }

    #[test]
    fn rightmost_root_examples() {
        let l = rightmost_root(OPTIMAL_GAIN, 1.0).unwrap();
        assert!((l - Complex64::new(-1.0, 0.0)).norm() < 1e-7);
        let l = rightmost_root(FRAC_PI_2, 1.0).unwrap();
        assert!((l - Complex64::new(0.0, FRAC_PI_2)).norm() < 1e-12);
        let l = rightmost_root(0.2, 1.0).unwrap();
        assert!((l.re + SIGMA_AT_POINT_TWO).abs() < 1e-12 && l.im == 0.0);
    }

    #[test]
    fn rightmost_root_residual() {
        for &(g, tau) in &[(0.05, 1.0), (0.3, 2.0), (0.9, 0.1), (1.5, 50.0), (2.5, 1.0)] {
            let l = rightmost_root(g, tau).unwrap();
            let res = (l + g / tau * (-l * tau).exp()).norm();
            assert!(res <= 1e-9 * g / tau, "gain {g} tau {tau}: {res}");
        }
    }

    #[test]
    fn lambert_agrees_with_hayes() {
        let mut g = 1e-3;
        while g < FRAC_PI_2 {
            let sigma = convergence_rate(g, 1.0).unwrap().sigma;
            let lambda = rightmost_root(g, 1.0).unwrap();
            assert!((-lambda.re - sigma).abs() < 1e-8, "gain {g}");
            g *= 1.02;
        }
    }

    #[test]
    fn scaling_with_tau() {
        for g in [0.1, OPTIMAL_GAIN, 0.9, 1.4] {
            let base = convergence_rate(g, 1.0).unwrap().sigma;
            for tau in [0.1, 10.0, 100.0] {
                let s = convergence_rate(g, tau).unwrap().sigma * tau;
                assert_relative_eq!(s, base, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn unimodal_in_gain() {
        let n = 400;
        let sig: Vec<(f64, f64)> = (1..n)
            .map(|i| {
                let g = FRAC_PI_2 * i as f64 / n as f64;
                (g, convergence_rate(g, 1.0).unwrap().sigma)
            })
            .collect();
        for w in sig.windows(2) {
            let ((g0, s0), (_, s1)) = (w[0], w[1]);
            if g0 < OPTIMAL_GAIN - 0.01 {
                assert!(s1 > s0);
            } else if g0 > OPTIMAL_GAIN {
                assert!(s1 < s0);
            }
            assert!(s0 <= 1.0);
        }
    }

    #[test]
    fn verdict_matches_convergence_report() {
        for i in 1..300 {
            let a = 0.01 * i as f64;
            let p = FluidParams::with_queue(a, 0.3, 10.0, 5.0);
            let v = stability(&p).unwrap();
            let c = convergence_rate(v.effective_gain, p.tau).unwrap();
            assert_eq!(!v.stable, c.branch == ConvergenceBranch::Unstable, "a {a}");
        }
    }
}
