//! Fixed-step integration of the fluid model and bifurcation sweeps.
//!
//! The step is `dt = tau / N` so every delayed lookup at a step boundary
//! lands on a stored sample; the RK4 half-step lookups use the cubic Hermite
//! interpolant built from the stored rates and slopes.

use alloc::vec::Vec;

use crate::error::invalid;
use crate::fluid_model::{equilibrium, rhs_unchecked};
use crate::linear_analysis::stability;
use crate::{Error, FluidParams, Result, Variant};

/// Fewest steps per delay the integrator accepts.
pub const MIN_STEPS_PER_DELAY: usize = 100;
/// Default resolution.
pub const DEFAULT_STEPS_PER_DELAY: usize = 1000;

const LOWER_BOUND: f64 = 1e-9;
const UPPER_BOUND: f64 = 1e3;

/// Values of `R` (and `dR/dt`) on `[-tau, 0]`, sampled on the step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    rates: Vec<f64>,
    slopes: Vec<f64>,
}

impl History {
    /// Constant history `rate` with `steps_per_delay` steps per delay.
    pub fn constant(rate: f64, steps_per_delay: usize) -> Self {
        History {
            rates: alloc::vec![rate; steps_per_delay + 1],
            slopes: alloc::vec![0.0; steps_per_delay + 1],
        }
    }

    /// History from `N + 1` samples of the rate and its derivative.
    pub fn from_samples(rates: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if rates.len() != slopes.len() {
            return Err(invalid("history", "rates and slopes differ in length"));
        }
        if rates.len() < MIN_STEPS_PER_DELAY + 1 {
            return Err(invalid("history", "needs at least 101 samples"));
        }
        if rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(invalid("history", "rates must be finite and > 0"));
        }
        Ok(History { rates, slopes })
    }

    /// Steps per delay implied by the sample count.
    pub fn steps_per_delay(&self) -> usize {
        self.rates.len() - 1
    }

    /// Rate samples, oldest first.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}

/// Solution of the fluid model on a uniform grid starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Model parameters the trajectory was computed with.
    pub params: FluidParams,
    /// Step size, `tau / steps_per_delay`.
    pub dt: f64,
    /// Steps per delay.
    pub steps_per_delay: usize,
    /// `R(i dt)`.
    pub rates: Vec<f64>,
    /// `dR/dt` at the same samples.
    pub slopes: Vec<f64>,
    /// Time at which the run left the admissible region, if it did.
    pub divergence: Option<f64>,
}

impl Trajectory {
    /// Whether the run was cut short.
    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Sample times.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.rates.len()).map(move |i| self.time(i))
    }

    /// Simulated time span.
    pub fn duration(&self) -> f64 {
        self.time(self.rates.len().saturating_sub(1))
    }

    /// Last delay period of the run, usable as a history to continue from.
    pub fn final_history(&self) -> Option<History> {
        let n = self.steps_per_delay;
        if self.diverged() || self.rates.len() < n + 1 {
            return None;
        }
        let start = self.rates.len() - n - 1;
        Some(History {
            rates: self.rates[start..].to_vec(),
            slopes: self.slopes[start..].to_vec(),
        })
    }
}

/// Steps per delay for a requested `dt`: `round(tau / dt)`, at least
/// [`MIN_STEPS_PER_DELAY`].
pub fn steps_for(tau: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", "must be finite and > 0"));
    }
    let n = libm::round(tau / dt);
    if !(n < 1e9) {
        return Err(invalid("dt", "step size underflow"));
    }
    Ok((n as usize).max(MIN_STEPS_PER_DELAY))
}

/// Integrates from the constant history `rate0` on `[-tau, 0]` up to `t_end`.
pub fn integrate(params: &FluidParams, rate0: f64, t_end: f64, dt: f64) -> Result<Trajectory> {
    params.validate()?;
    if !(rate0 > 0.0) || !rate0.is_finite() {
        return Err(invalid("rate0", "must be finite and > 0"));
    }
    if params.variant == Variant::WithQueue && rate0 >= params.capacity {
        return Err(invalid(
            "rate0",
            "must be below capacity with queue feedback",
        ));
    }
    let n = steps_for(params.tau, dt)?;
    integrate_from(params, &History::constant(rate0, n), t_end)
}

/// Integrates from an arbitrary history; the step is `tau / N` where the
/// history holds `N + 1` samples.
pub fn integrate_from(params: &FluidParams, history: &History, t_end: f64) -> Result<Trajectory> {
    params.validate()?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(invalid("t_end", "must be finite and > 0"));
    }
    let n = history.steps_per_delay();
    let dt = params.tau / n as f64;
    let steps = libm::ceil(t_end / dt - 1e-9) as usize;
    let c = params.capacity;
    let (lo, hi) = (LOWER_BOUND * c, UPPER_BOUND * c);
    let queue = params.variant == Variant::WithQueue;

    // Index j of `r` is time (j - n) dt.
    let mut r = Vec::with_capacity(n + 1 + steps + 1);
    let mut s = Vec::with_capacity(n + 1 + steps + 1);
    r.extend_from_slice(&history.rates);
    s.extend_from_slice(&history.slopes);

    let mut divergence = None;
    let half = 0.5 * dt;
    // R' may jump at t = 0: the history keeps its left slope at index n and
    // the right slope lives here, for interpolating on [0, dt].
    let mut right_slope_at_zero = s[n];
    for j in n..n + steps {
        let (d0, d1) = (r[j - n], r[j - n + 1]);
        let m0 = if j == 2 * n {
            right_slope_at_zero
        } else {
            s[j - n]
        };
        let dm = 0.5 * (d0 + d1) + dt * (m0 - s[j - n + 1]) / 8.0;
        if queue && (d0 >= c || d1 >= c || dm >= c) {
            divergence = Some((j - n) as f64 * dt);
            break;
        }
        let x = r[j];
        let k1 = rhs_unchecked(params, x, d0);
        let k2 = rhs_unchecked(params, x + half * k1, dm);
        let k3 = rhs_unchecked(params, x + half * k2, dm);
        let k4 = rhs_unchecked(params, x + dt * k3, d1);
        if j == n {
            right_slope_at_zero = k1;
        } else {
            s[j] = k1;
        }
        let next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(next > lo && next < hi) {
            divergence = Some((j + 1 - n) as f64 * dt);
            break;
        }
        r.push(next);
        s.push(0.0);
    }
    let last = r.len() - 1;
    if divergence.is_none() {
        let delayed = r[last - n];
        s[last] = if queue && delayed >= c {
            0.0
        } else {
            rhs_unchecked(params, r[last], delayed)
        };
    }

    r.drain(..n);
    s.drain(..n);
    if s.len() > 1 {
        s[0] = right_slope_at_zero;
    }
    Ok(Trajectory {
        params: *params,
        dt,
        steps_per_delay: n,
        rates: r,
        slopes: s,
        divergence,
    })
}

fn tail_window(traj: &Trajectory, tail_fraction: f64) -> Result<&[f64]> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(invalid("tail_fraction", "must lie in (0, 1]"));
    }
    if let Some(t) = traj.divergence {
        return Err(Error::Diverged(t));
    }
    let len = traj.rates.len();
    let count = (libm::ceil(tail_fraction * len as f64) as usize).min(len);
    if count < 2 || (count - 1) as f64 * traj.dt < 10.0 * traj.params.tau * (1.0 - 1e-9) {
        return Err(Error::WindowTooShort("tail must span at least 10 delays"));
    }
    Ok(&traj.rates[len - count..])
}

/// Half the peak-to-trough excursion over the last `tail_fraction` of the run.
pub fn tail_amplitude(traj: &Trajectory, tail_fraction: f64) -> Result<f64> {
    Ok(swing(tail_window(traj, tail_fraction)?))
}

/// Least-squares fit of `ln y = c0 + c1 t + c2 ln t`; returns `c1`.
///
/// The `ln t` term absorbs the polynomial prefactor of a double root.
fn envelope_slope(points: &[(f64, f64)]) -> Option<f64> {
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(t, y) in points {
        let row = [1.0, t, libm::log(t)];
        let ly = libm::log(y);
        for i in 0..3 {
            atb[i] += row[i] * ly;
            for k in 0..3 {
                ata[i][k] += row[i] * row[k];
            }
        }
    }
    solve3(ata, atb).map(|x| x[1])
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| {
            libm::fabs(m[a][col])
                .partial_cmp(&libm::fabs(m[b][col]))
                .unwrap_or(core::cmp::Ordering::Equal)
        })?;
        if libm::fabs(m[pivot][col]) < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * p;
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = v[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Exponential decay rate of `|R(t) - R*|` fitted on its envelope.
///
/// The window starts one delay in and ends once the deviation has dropped
/// eight decades below its initial size (or at the end of the run). Local
/// maxima of the deviation form the envelope when there are at least three;
/// otherwise every sample is used.
pub fn decay_rate_estimate(traj: &Trajectory) -> Result<f64> {
    let verdict = stability(&traj.params)?;
    if !verdict.stable {
        return Err(Error::Unstable(verdict.effective_gain));
    }
    if let Some(t) = traj.divergence {
        return Err(Error::Diverged(t));
    }
    let eq = equilibrium(&traj.params)?.rate;
    let n = traj.steps_per_delay;
    if traj.rates.len() < 3 * n {
        return Err(Error::WindowTooShort("need at least three delays"));
    }
    let dev: Vec<f64> = traj.rates.iter().map(|r| libm::fabs(r - eq)).collect();
    let initial = dev[..=n].iter().copied().fold(0.0, f64::max);
    if initial == 0.0 {
        return Err(invalid("trajectory", "starts at equilibrium"));
    }
    let floor = 1e-8 * initial;
    let end = dev.iter().rposition(|&d| d >= floor).unwrap_or(0);
    if end < 3 * n {
        return Err(Error::WindowTooShort(
            "deviation vanishes within three delays",
        ));
    }

    let window = n..=end;
    let peaks: Vec<(f64, f64)> = window
        .clone()
        .filter(|&i| i > 0 && i + 1 < dev.len() && dev[i] >= dev[i - 1] && dev[i] > dev[i + 1])
        .map(|i| (traj.time(i), dev[i]))
        .collect();
    let points = if peaks.len() >= 3 {
        peaks
    } else {
        let stride = ((end - n) / 4000).max(1);
        window
            .step_by(stride)
            .filter(|&i| dev[i] > 0.0)
            .map(|i| (traj.time(i), dev[i]))
            .collect()
    };
    let slope = envelope_slope(&points).ok_or(Error::NoConvergence {
        what: "envelope fit",
        iterations: 0,
    })?;
    if !(slope < 0.0) {
        return Err(Error::WindowTooShort("envelope is not decaying"));
    }
    Ok(-slope)
}

/// Direction of a bifurcation-parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    /// Increasing `kappa`.
    Forward,
    /// Decreasing `kappa`.
    Backward,
}

/// Settings for [`sweep_bifurcation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    /// Integration resolution.
    pub steps_per_delay: usize,
    /// Length of each run in delays.
    pub duration_delays: f64,
    /// Fraction of each run used for the amplitude.
    pub tail_fraction: f64,
    /// Relative offset `R0 = R* (1 + offset)` for cold starts.
    pub start_offset: f64,
    /// Amplitudes at or below `tolerance * R*` count as equilibrium.
    pub amplitude_tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            steps_per_delay: DEFAULT_STEPS_PER_DELAY,
            duration_delays: 2000.0,
            tail_fraction: 0.25,
            start_offset: 0.01,
            amplitude_tolerance: 1e-3,
        }
    }
}

/// One run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Bifurcation parameter.
    pub kappa: f64,
    /// Tail amplitude (0 when diverged).
    pub amplitude: f64,
    /// Amplitude within tolerance of zero.
    pub converged_to_equilibrium: bool,
    /// Run left the admissible region.
    pub diverged: bool,
}

/// Runs the model across `kappa_grid` with warm continuation: every run
/// starts from the last delay period of the previous run. The first run, and
/// any run following a divergence, starts cold from `R* (1 + offset)`.
///
/// A run that settled on the equilibrium would hand the next one a history
/// that is flat to rounding error, hiding any instability, so histories
/// closer to `R*` than `offset * R*` are shifted up by `offset * R*`.
pub fn sweep_bifurcation(
    params: &FluidParams,
    kappa_grid: &[f64],
    direction: SweepDirection,
    cfg: &SweepConfig,
) -> Result<Vec<SweepPoint>> {
    sweep_with_start(params, kappa_grid, direction, cfg, None).map(|(pts, _)| pts)
}

fn sweep_with_start(
    params: &FluidParams,
    kappa_grid: &[f64],
    direction: SweepDirection,
    cfg: &SweepConfig,
    start: Option<History>,
) -> Result<(Vec<SweepPoint>, Option<History>)> {
    check_grid(kappa_grid)?;
    if cfg.steps_per_delay < MIN_STEPS_PER_DELAY {
        return Err(invalid("steps_per_delay", "must be >= 100"));
    }
    let eq = equilibrium(params)?.rate;
    let mut order: Vec<f64> = kappa_grid.to_vec();
    if direction == SweepDirection::Backward {
        order.reverse();
    }
    let cold = History::constant(eq * (1.0 + cfg.start_offset), cfg.steps_per_delay);
    let mut history = start.unwrap_or_else(|| cold.clone());
    let t_end = cfg.duration_delays * params.tau;
    let mut out = Vec::with_capacity(order.len());
    let kick = cfg.start_offset * eq;
    for kappa in order {
        let p = params.with_kappa(kappa);
        if history.rates.iter().all(|r| libm::fabs(r - eq) < kick) {
            history.rates.iter_mut().for_each(|r| *r += kick);
        }
        let traj = integrate_from(&p, &history, t_end)?;
        let point = if traj.diverged() {
            history = cold.clone();
            SweepPoint {
                kappa,
                amplitude: 0.0,
                converged_to_equilibrium: false,
                diverged: true,
            }
        } else {
            let amplitude = tail_amplitude(&traj, cfg.tail_fraction)?;
            history = traj.final_history().unwrap_or_else(|| cold.clone());
            SweepPoint {
                kappa,
                amplitude,
                converged_to_equilibrium: amplitude <= cfg.amplitude_tolerance * eq,
                diverged: false,
            }
        };
        out.push(point);
    }
    if direction == SweepDirection::Backward {
        out.reverse();
    }
    Ok((out, Some(history)))
}

/// Grid points around the first sustained oscillation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Onset {
    /// Largest grid value below the first oscillating one, if any.
    pub last_quiet: Option<f64>,
    /// First grid value whose perturbation does not die out.
    pub first_oscillating: Option<f64>,
}

/// Scans `kappa_grid` with independent cold starts at `R* (1 + offset)` and
/// reports where perturbations stop decaying.
///
/// A run counts as oscillating when its tail amplitude is at least the
/// amplitude over delays 2 to 12, or when it diverges. Near the boundary the
/// growth rate is tiny, so this compares trends rather than absolute sizes.
pub fn onset_scan(params: &FluidParams, kappa_grid: &[f64], cfg: &SweepConfig) -> Result<Onset> {
    check_grid(kappa_grid)?;
    let eq = equilibrium(params)?.rate;
    let history = History::constant(eq * (1.0 + cfg.start_offset), cfg.steps_per_delay);
    let mut onset = Onset {
        last_quiet: None,
        first_oscillating: None,
    };
    for &kappa in kappa_grid {
        let traj = integrate_from(
            &params.with_kappa(kappa),
            &history,
            cfg.duration_delays * params.tau,
        )?;
        let oscillating = traj.diverged() || {
            let n = traj.steps_per_delay;
            if traj.rates.len() < 12 * n + 1 {
                return Err(Error::WindowTooShort("onset scan needs at least 12 delays"));
            }
            let early = swing(&traj.rates[2 * n..=12 * n]);
            tail_amplitude(&traj, cfg.tail_fraction)? >= early
        };
        if oscillating {
            onset.first_oscillating = Some(kappa);
            break;
        }
        onset.last_quiet = Some(kappa);
    }
    Ok(onset)
}

fn swing(xs: &[f64]) -> f64 {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    0.5 * (hi - lo)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("kappa_grid", "must not be empty"));
    }
    if grid.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(invalid("kappa_grid", "values must be finite and > 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("kappa_grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Forward and backward sweeps over the same grid, with criticality
/// signatures read off the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisReport {
    /// Sweep with increasing `kappa`, in grid order.
    pub forward: Vec<SweepPoint>,
    /// Sweep with decreasing `kappa`, in grid order.
    pub backward: Vec<SweepPoint>,
    /// Grid points where the two sweeps settle on different attractors.
    pub hysteresis_at: Vec<f64>,
    /// First grid point where the forward sweep diverges or its amplitude
    /// rises abruptly.
    pub jump_at: Option<f64>,
}

impl HysteresisReport {
    /// Whether any grid point shows coexisting attractors.
    pub fn hysteresis(&self) -> bool {
        !self.hysteresis_at.is_empty()
    }
}

/// Thresholds used to read criticality signatures off a pair of sweeps, as
/// fractions of `R*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignatureThresholds {
    /// A forward step that raises the amplitude by more than this is a
    /// jump. The right value depends on the grid spacing; the default suits
    /// steps of 0.01 in `kappa`.
    pub large_amplitude: f64,
    /// Two amplitudes disagree when they differ by more than this.
    pub gap: f64,
}

impl Default for SignatureThresholds {
    fn default() -> Self {
        SignatureThresholds {
            large_amplitude: 0.25,
            gap: 0.1,
        }
    }
}

/// Forward sweep followed by a backward sweep started from the forward
/// sweep's final state.
pub fn hysteresis_sweep(
    params: &FluidParams,
    kappa_grid: &[f64],
    cfg: &SweepConfig,
    thresholds: &SignatureThresholds,
) -> Result<HysteresisReport> {
    let (forward, last) = sweep_with_start(params, kappa_grid, SweepDirection::Forward, cfg, None)?;
    let (backward, _) = sweep_with_start(params, kappa_grid, SweepDirection::Backward, cfg, last)?;
    let eq = equilibrium(params)?.rate;
    let gap = thresholds.gap * eq;
    let large = thresholds.large_amplitude * eq;

    let hysteresis_at = forward
        .iter()
        .zip(&backward)
        .filter(|(f, b)| {
            if f.diverged || b.diverged {
                f.diverged != b.diverged
            } else {
                libm::fabs(f.amplitude - b.amplitude) > gap
            }
        })
        .map(|(f, _)| f.kappa)
        .collect();

    let jump_at = forward.windows(2).find_map(|w| {
        let (prev, next) = (&w[0], &w[1]);
        let abrupt = !prev.diverged && (next.diverged || next.amplitude - prev.amplitude > large);
        abrupt.then_some(next.kappa)
    });

    Ok(HysteresisReport {
        forward,
        backward,
        hysteresis_at,
        jump_at,
    })
}
