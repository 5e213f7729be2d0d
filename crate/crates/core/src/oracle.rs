//! Time-domain cross-check of the transfer coefficients.
//!
//! The linearized fluctuation equations are integrated with a fixed-step
//! fourth-order Runge–Kutta scheme under deterministic sinusoidal drives. For
//! a linear system the complex gains fully characterize the input–output map,
//! so matching them against [`crate::response`] validates the algebra behind
//! the Duan sum without any stochastic integration.
//!
//! The mechanical damping of realistic membranes is tiny (`γ⁻¹` of order
//! minutes), so waiting for transients to decay is not an option. Instead the
//! periodic steady state is found by shooting: the one-period monodromy matrix
//! `Φ` and the zero-state response `p` give the periodic initial state
//! `x₀ = (I − Φ)⁻¹ p`. The trajectory started there is then demodulated over
//! whole drive periods, and two consecutive windows must agree.
//!
//! State layout: optical sum/difference quadratures are dimensionless, the
//! membrane displacement and velocity are in SI units.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::response::coefficients;
use crate::system::{OperatingPoint, PhysicalParams, HBAR};

/// Divergence threshold on the (scaled) state norm relative to its reference.
pub const DIVERGENCE_GROWTH: f64 = 1e6;
/// Steps per unit of the fastest rate: `dt ≤ 1/(50 · max rate)`.
pub const STEPS_PER_RATE: f64 = 50.0;
/// Relative acceptance threshold used by the validation report.
pub const GAIN_TOLERANCE: f64 = 0.01;

const NORM_CHECK_INTERVAL: usize = 256;
const PHASOR_RESYNC: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearState {
    /// `X_a + X_c`.
    pub xs: f64,
    /// `Y_a + Y_c`.
    pub ys: f64,
    /// `X_a − X_c`.
    pub xd: f64,
    /// `Y_a − Y_c`.
    pub yd: f64,
    /// Membrane displacement [m].
    pub z: f64,
    /// Membrane velocity [m/s].
    pub pz: f64,
}

impl LinearState {
    fn to_vector(self) -> Vector6<f64> {
        Vector6::new(self.xs, self.ys, self.xd, self.yd, self.z, self.pz)
    }

    fn from_vector(v: &Vector6<f64>) -> Self {
        Self { xs: v[0], ys: v[1], xd: v[2], yd: v[3], z: v[4], pz: v[5] }
    }
}

impl Add for LinearState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            xs: self.xs + o.xs,
            ys: self.ys + o.ys,
            xd: self.xd + o.xd,
            yd: self.yd + o.yd,
            z: self.z + o.z,
            pz: self.pz + o.pz,
        }
    }
}

impl Mul<f64> for LinearState {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self {
            xs: self.xs * k,
            ys: self.ys * k,
            xd: self.xd * k,
            yd: self.yd * k,
            z: self.z * k,
            pz: self.pz * k,
        }
    }
}

/// Input quadrature combinations `X_b ± X_d`, `Y_b ± Y_d` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriveInputs {
    pub x_sum: f64,
    pub y_sum: f64,
    pub x_diff: f64,
    pub y_diff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputChannel {
    XSum,
    YSum,
    XDiff,
    YDiff,
}

impl InputChannel {
    pub const ALL: [InputChannel; 4] =
        [InputChannel::XSum, InputChannel::YSum, InputChannel::XDiff, InputChannel::YDiff];
}

/// `amplitude · cos(ωt + phase)` applied to one input channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub channel: InputChannel,
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl Tone {
    pub fn new(channel: InputChannel, amplitude: f64, omega: f64) -> Self {
        Self { channel, amplitude, omega, phase: 0.0 }
    }
}

/// Output combinations `X_B + X_D` and `Y_B − Y_D`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Outputs {
    pub x_sum: f64,
    pub y_diff: f64,
}

/// Precomputed coefficients of the linearized equations of motion.
#[derive(Debug, Clone, Copy)]
pub struct LinearDynamics {
    delta: f64,
    half_zeta: f64,
    sqrt_zeta: f64,
    /// `2 g x̄`: membrane displacement into the Y-difference quadrature.
    z_to_yd: f64,
    /// `ħ g x̄ / (2m)`: X-difference quadrature into membrane acceleration.
    xd_to_accel: f64,
    omega_m2: f64,
    gamma: f64,
    /// Fastest rate in the free system, for the step-size bound.
    max_rate: f64,
    /// Zero-point displacement scale used to balance the state norm.
    z_scale: f64,
    v_scale: f64,
}

impl LinearDynamics {
    pub fn new(p: &PhysicalParams, op: &OperatingPoint) -> Self {
        let z_scale = (HBAR / (p.m * p.omega_m)).sqrt();
        Self {
            delta: op.delta,
            half_zeta: 0.5 * p.zeta,
            sqrt_zeta: p.zeta.sqrt(),
            z_to_yd: 2.0 * p.g * op.x_bar,
            xd_to_accel: HBAR * p.g * op.x_bar / (2.0 * p.m),
            omega_m2: p.omega_m * p.omega_m,
            gamma: p.gamma,
            max_rate: p.zeta.max(op.delta.abs()).max(p.omega_m),
            z_scale,
            v_scale: z_scale * p.omega_m,
        }
    }

    pub fn derivatives(&self, s: &LinearState, u: &DriveInputs) -> LinearState {
        LinearState {
            xs: self.delta * s.ys - self.half_zeta * s.xs + self.sqrt_zeta * u.x_sum,
            ys: -self.delta * s.xs - self.half_zeta * s.ys + self.sqrt_zeta * u.y_sum,
            xd: self.delta * s.yd - self.half_zeta * s.xd + self.sqrt_zeta * u.x_diff,
            yd: -self.delta * s.xd - self.half_zeta * s.yd
                + self.sqrt_zeta * u.y_diff
                + self.z_to_yd * s.z,
            z: s.pz,
            pz: -self.omega_m2 * s.z - self.gamma * s.pz + self.xd_to_accel * s.xd,
        }
    }

    /// Input–output relations for the measured combinations.
    pub fn outputs(&self, s: &LinearState, u: &DriveInputs) -> Outputs {
        Outputs {
            x_sum: u.x_sum - self.sqrt_zeta * s.xs,
            y_diff: u.y_diff - self.sqrt_zeta * s.yd,
        }
    }

    /// Largest admissible step for drives up to `omega_drive`.
    pub fn max_step(&self, omega_drive: f64) -> f64 {
        1.0 / (STEPS_PER_RATE * self.max_rate.max(omega_drive.abs()))
    }

    fn scaled_norm(&self, s: &LinearState) -> f64 {
        let zs = s.z / self.z_scale;
        let vs = s.pz / self.v_scale;
        (s.xs * s.xs + s.ys * s.ys + s.xd * s.xd + s.yd * s.yd + zs * zs + vs * vs).sqrt()
    }

    fn scaling(&self) -> Matrix6<f64> {
        Matrix6::from_diagonal(&Vector6::new(1.0, 1.0, 1.0, 1.0, self.z_scale, self.v_scale))
    }
}

/// Time derivative of the linearized fluctuation state.
pub fn derivatives(
    p: &PhysicalParams,
    op: &OperatingPoint,
    state: &LinearState,
    inputs: &DriveInputs,
) -> LinearState {
    LinearDynamics::new(p, op).derivatives(state, inputs)
}

/// Drive evaluated by rotating phasors, resynchronized from the exact time
/// every few thousand steps.
struct DriveClock<'a> {
    tones: &'a [Tone],
    phasors: Vec<Complex64>,
    half_step: Vec<Complex64>,
}

impl<'a> DriveClock<'a> {
    fn new(tones: &'a [Tone], t0: f64, dt: f64) -> Self {
        let mut clock = Self {
            tones,
            phasors: vec![Complex64::new(1.0, 0.0); tones.len()],
            half_step: tones.iter().map(|t| Complex64::from_polar(1.0, 0.5 * t.omega * dt)).collect(),
        };
        clock.sync(t0);
        clock
    }

    fn sync(&mut self, t: f64) {
        for (ph, tone) in self.phasors.iter_mut().zip(self.tones) {
            *ph = Complex64::from_polar(1.0, tone.omega * t + tone.phase);
        }
    }

    fn inputs(&self, half_steps: u8) -> DriveInputs {
        let mut u = DriveInputs::default();
        for ((tone, ph), hs) in self.tones.iter().zip(&self.phasors).zip(&self.half_step) {
            let rotated = match half_steps {
                0 => *ph,
                1 => ph * hs,
                _ => ph * hs * hs,
            };
            let value = tone.amplitude * rotated.re;
            match tone.channel {
                InputChannel::XSum => u.x_sum += value,
                InputChannel::YSum => u.y_sum += value,
                InputChannel::XDiff => u.x_diff += value,
                InputChannel::YDiff => u.y_diff += value,
            }
        }
        u
    }

    fn advance(&mut self) {
        for (ph, hs) in self.phasors.iter_mut().zip(&self.half_step) {
            *ph = *ph * hs * hs;
        }
    }
}

/// Integrates `n_steps` RK4 steps from `(t0, x0)`. `visit` sees every step
/// point `k = 0..=n_steps` with its state and drive inputs.
#[allow(clippy::too_many_arguments)]
fn propagate<F>(
    sys: &LinearDynamics,
    tones: &[Tone],
    x0: LinearState,
    t0: f64,
    dt: f64,
    n_steps: usize,
    reference_norm: f64,
    mut visit: F,
) -> Result<LinearState>
where
    F: FnMut(usize, f64, &LinearState, &DriveInputs),
{
    let mut clock = DriveClock::new(tones, t0, dt);
    let mut x = x0;
    for k in 0..n_steps {
        let t = t0 + k as f64 * dt;
        if k % PHASOR_RESYNC == 0 {
            clock.sync(t);
        }
        let u0 = clock.inputs(0);
        let uh = clock.inputs(1);
        let u1 = clock.inputs(2);
        visit(k, t, &x, &u0);

        let k1 = sys.derivatives(&x, &u0);
        let k2 = sys.derivatives(&(x + k1 * (0.5 * dt)), &uh);
        let k3 = sys.derivatives(&(x + k2 * (0.5 * dt)), &uh);
        let k4 = sys.derivatives(&(x + k3 * dt), &u1);
        x = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        clock.advance();

        if (k + 1) % NORM_CHECK_INTERVAL == 0 || k + 1 == n_steps {
            let norm = sys.scaled_norm(&x);
            if !norm.is_finite() || norm > DIVERGENCE_GROWTH * reference_norm {
                return Err(Error::Diverged {
                    growth: norm / reference_norm,
                    time: t + dt,
                });
            }
        }
    }
    let t_end = t0 + n_steps as f64 * dt;
    clock.sync(t_end);
    visit(n_steps, t_end, &x, &clock.inputs(0));
    Ok(x)
}

/// Sampled trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<LinearState>,
    pub outputs: Vec<Outputs>,
    pub dt: f64,
}

/// Fixed-step RK4 integration from `initial` to `t_end` under `tones`.
///
/// `dt` must satisfy `dt ≤ 1/(50 · max(ζ, |Δ|, ω_m, ω_drive))`. Every
/// `sample_every`-th step point is recorded (the final point always is).
/// Fails with [`Error::Diverged`] once the scaled state norm exceeds
/// `10⁶` times its reference (initial norm, or the drive amplitude).
pub fn integrate(
    p: &PhysicalParams,
    op: &OperatingPoint,
    tones: &[Tone],
    initial: LinearState,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    let sys = LinearDynamics::new(p, op);
    let fastest = tones.iter().map(|t| t.omega.abs()).fold(0.0, f64::max);
    let limit = sys.max_step(fastest);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, limit });
    }
    let n_steps = (t_end / dt).round() as usize;
    let reference = reference_norm(&sys, &initial, tones);
    let stride = sample_every.max(1);
    let mut traj = Trajectory { dt, ..Default::default() };
    propagate(&sys, tones, initial, 0.0, dt, n_steps, reference, |k, t, x, u| {
        if k % stride == 0 || k == n_steps {
            traj.times.push(t);
            traj.states.push(*x);
            traj.outputs.push(sys.outputs(x, u));
        }
    })?;
    Ok(traj)
}

fn reference_norm(sys: &LinearDynamics, initial: &LinearState, tones: &[Tone]) -> f64 {
    let drive: f64 = tones.iter().map(|t| t.amplitude.abs()).sum();
    sys.scaled_norm(initial).max(drive).max(f64::MIN_POSITIVE)
}

/// Complex gain of `signal` at `omega` from samples over whole periods:
/// `H = (2/A)·⟨signal · e^{iωt}⟩` for a drive `A cos ωt`.
pub fn demodulate(times: &[f64], signal: &[f64], omega: f64, amplitude: f64) -> Complex64 {
    let sum: Complex64 = times
        .iter()
        .zip(signal)
        .map(|(&t, &s)| s * Complex64::from_polar(1.0, omega * t))
        .sum();
    2.0 * sum / (times.len() as f64 * amplitude)
}

/// The four measured quadrature gains.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelGains {
    /// `X_b + X_d → X_B + X_D` (analytically `e4`).
    pub x_sum_to_x_sum: Complex64,
    /// `Y_b + Y_d → X_B + X_D` (analytically `−e5`).
    pub y_sum_to_x_sum: Complex64,
    /// `X_b − X_d → Y_B − Y_D` (analytically `−e2`).
    pub x_diff_to_y_diff: Complex64,
    /// `Y_b − Y_d → Y_B − Y_D` (analytically `e1`).
    pub y_diff_to_y_diff: Complex64,
}

impl ChannelGains {
    pub fn get(&self, channel: InputChannel) -> Complex64 {
        match channel {
            InputChannel::XSum => self.x_sum_to_x_sum,
            InputChannel::YSum => self.y_sum_to_x_sum,
            InputChannel::XDiff => self.x_diff_to_y_diff,
            InputChannel::YDiff => self.y_diff_to_y_diff,
        }
    }

    fn set(&mut self, channel: InputChannel, value: Complex64) {
        match channel {
            InputChannel::XSum => self.x_sum_to_x_sum = value,
            InputChannel::YSum => self.y_sum_to_x_sum = value,
            InputChannel::XDiff => self.x_diff_to_y_diff = value,
            InputChannel::YDiff => self.y_diff_to_y_diff = value,
        }
    }
}

/// Relative error per channel; absolute where the analytic gain is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelErrors {
    pub x_sum_to_x_sum: f64,
    pub y_sum_to_x_sum: f64,
    pub x_diff_to_y_diff: f64,
    pub y_diff_to_y_diff: f64,
}

impl ChannelErrors {
    pub fn max(&self) -> f64 {
        self.x_sum_to_x_sum
            .max(self.y_sum_to_x_sum)
            .max(self.x_diff_to_y_diff)
            .max(self.y_diff_to_y_diff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyResponseSample {
    pub omega: f64,
    pub measured: ChannelGains,
    pub analytic: ChannelGains,
    pub rel_error: ChannelErrors,
}

impl FrequencyResponseSample {
    pub fn max_rel_error(&self) -> f64 {
        self.rel_error.max()
    }
}

/// Analytic counterparts of the measured gains.
pub fn analytic_gains(p: &PhysicalParams, op: &OperatingPoint, omega: f64) -> Result<ChannelGains> {
    let r = coefficients(p, op, omega)?;
    Ok(ChannelGains {
        x_sum_to_x_sum: r.e4,
        y_sum_to_x_sum: -r.e5,
        x_diff_to_y_diff: -r.e2,
        y_diff_to_y_diff: r.e1,
    })
}

fn relative_error(measured: Complex64, analytic: Complex64) -> f64 {
    let diff = (measured - analytic).norm();
    if analytic.norm() > 0.0 {
        diff / analytic.norm()
    } else {
        diff
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// `dt = 1/(steps_per_rate · max rate)`, rounded down to whole steps per period.
    pub steps_per_rate: f64,
    /// Periods integrated from the periodic initial state; the last two are
    /// the demodulation windows.
    pub periods: usize,
    /// Allowed relative mismatch between the two windows.
    pub window_tolerance: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { steps_per_rate: STEPS_PER_RATE, periods: 4, window_tolerance: 1e-6 }
    }
}

/// Measures the quadrature gains at every `omega` by time integration and
/// compares them with [`analytic_gains`].
pub fn frequency_response(
    p: &PhysicalParams,
    op: &OperatingPoint,
    omegas: &[f64],
) -> Result<Vec<FrequencyResponseSample>> {
    frequency_response_with(p, op, omegas, &OracleSettings::default())
}

pub fn frequency_response_with(
    p: &PhysicalParams,
    op: &OperatingPoint,
    omegas: &[f64],
    settings: &OracleSettings,
) -> Result<Vec<FrequencyResponseSample>> {
    let sys = LinearDynamics::new(p, op);
    omegas
        .par_iter()
        .map(|&omega| {
            let analytic = analytic_gains(p, op, omega)?;
            let measured = measure_gains(&sys, omega, settings)?;
            let err = |c| relative_error(measured.get(c), analytic.get(c));
            Ok(FrequencyResponseSample {
                omega,
                measured,
                analytic,
                rel_error: ChannelErrors {
                    x_sum_to_x_sum: err(InputChannel::XSum),
                    y_sum_to_x_sum: err(InputChannel::YSum),
                    x_diff_to_y_diff: err(InputChannel::XDiff),
                    y_diff_to_y_diff: err(InputChannel::YDiff),
                },
            })
        })
        .collect()
}

/// Drive-period discretization: whole number of steps per period.
fn period_steps(sys: &LinearDynamics, omega: f64, steps_per_rate: f64) -> (usize, f64) {
    let period = 2.0 * PI / omega;
    let dt_max = 1.0 / (steps_per_rate * sys.max_rate.max(omega));
    let n = (period / dt_max).ceil() as usize;
    (n, period / n as f64)
}

fn measure_gains(sys: &LinearDynamics, omega: f64, settings: &OracleSettings) -> Result<ChannelGains> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::NotConverged(format!("drive frequency must be positive, got {omega}")));
    }
    let (n, dt) = period_steps(sys, omega, settings.steps_per_rate);
    let scale = sys.scaling();
    let scale_inv = scale.try_inverse().expect("diagonal scaling is invertible");

    // One-period monodromy in balanced coordinates.
    let mut monodromy = Matrix6::<f64>::zeros();
    for j in 0..6 {
        let mut unit = Vector6::zeros();
        unit[j] = 1.0;
        let x0 = LinearState::from_vector(&(scale * unit));
        let x1 = propagate(sys, &[], x0, 0.0, dt, n, 1.0, |_, _, _, _| {})?;
        monodromy.set_column(j, &(scale_inv * x1.to_vector()));
    }
    let radius = monodromy
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max);
    if !(radius < 1.0) {
        return Err(Error::Diverged { growth: radius, time: 2.0 * PI / omega });
    }
    let lu = (Matrix6::identity() - monodromy).full_piv_lu();

    let mut gains = ChannelGains::default();
    for channel in InputChannel::ALL {
        let tone = [Tone::new(channel, 1.0, omega)];
        let forced = propagate(sys, &tone, LinearState::default(), 0.0, dt, n, 1.0, |_, _, _, _| {})?;
        let periodic = lu
            .solve(&(scale_inv * forced.to_vector()))
            .ok_or_else(|| Error::NotConverged("singular shooting system".into()))?;
        let x0 = LinearState::from_vector(&(scale * periodic));

        let periods = settings.periods.max(2);
        let mut windows = vec![Complex64::new(0.0, 0.0); periods];
        let reference = reference_norm(sys, &x0, &tone);
        propagate(sys, &tone, x0, 0.0, dt, n * periods, reference, |k, t, x, u| {
            if k < n * periods {
                let out = sys.outputs(x, u);
                let signal = match channel {
                    InputChannel::XSum | InputChannel::YSum => out.x_sum,
                    InputChannel::XDiff | InputChannel::YDiff => out.y_diff,
                };
                windows[k / n] += signal * Complex64::from_polar(1.0, omega * t);
            }
        })?;
        let last = windows[periods - 1] * (2.0 / n as f64);
        let previous = windows[periods - 2] * (2.0 / n as f64);
        let mismatch = (last - previous).norm();
        if mismatch > settings.window_tolerance * last.norm().max(1.0) {
            return Err(Error::NotConverged(format!(
                "demodulation windows differ by {mismatch:e} at omega = {omega:e} rad/s"
            )));
        }
        gains.set(channel, last);
    }
    Ok(gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::steady_state;
    use approx::assert_relative_eq;

    fn rossi() -> PhysicalParams {
        PhysicalParams::rossi2018()
    }

    /// Slow cavity and strongly damped membrane so that mechanics-only tests
    /// stay cheap.
    fn slow_device() -> PhysicalParams {
        PhysicalParams {
            m: 1e-12,
            zeta: 1e5,
            omega_m: 1e6,
            g: 1e17,
            omega_l: 1e15,
            gamma: 1e5,
        }
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let p = rossi();
        let op = OperatingPoint::optimal(&p, p.delta_for_ratio(10.0)).unwrap();
        let d = derivatives(&p, &op, &LinearState::default(), &DriveInputs::default());
        assert_eq!(d, LinearState::default());
    }

    #[test]
    fn uncoupled_mechanics_ignores_optics() {
        let p = rossi();
        let op = steady_state(&p, 1e8, 0.0).unwrap();
        let s = LinearState { xs: 1.0, ys: -2.0, xd: 3.0, yd: 4.0, z: 1e-15, pz: 2e-9 };
        let d = derivatives(&p, &op, &s, &DriveInputs { x_diff: 5.0, ..Default::default() });
        assert_eq!(d.z, s.pz);
        assert_eq!(d.pz, -p.omega_m * p.omega_m * s.z - p.gamma * s.pz);
    }

    #[test]
    fn constant_drive_steady_state() {
        let p = rossi();
        let op = steady_state(&p, 0.0, 0.0).unwrap();
        let s = 0.7;
        let xs = 2.0 * s / p.zeta.sqrt();
        let d = derivatives(
            &p,
            &op,
            &LinearState { xs, ..Default::default() },
            &DriveInputs { x_sum: s, ..Default::default() },
        );
        assert!(d.xs.abs() < 1e-9 * p.zeta.sqrt() * s);
        assert_eq!(d.ys, 0.0);
    }

    #[test]
    fn rejects_large_steps() {
        let p = rossi();
        let op = steady_state(&p, 1e8, 0.0).unwrap();
        let err = integrate(&p, &op, &[], LinearState::default(), 1e-6, 1e-9, 1);
        assert!(matches!(err, Err(Error::StepTooLarge { .. })));
    }

    fn damped_oscillator(p: &PhysicalParams, z0: f64, t: f64) -> f64 {
        let wd = (p.omega_m * p.omega_m - 0.25 * p.gamma * p.gamma).sqrt();
        z0 * (-0.5 * p.gamma * t).exp() * ((wd * t).cos() + 0.5 * p.gamma / wd * (wd * t).sin())
    }

    #[test]
    fn free_membrane_rings_down() {
        let p = slow_device();
        let op = steady_state(&p, 0.0, 0.0).unwrap();
        let z0 = 1e-12;
        let dt = LinearDynamics::new(&p, &op).max_step(0.0);
        let traj = integrate(&p, &op, &[], LinearState { z: z0, ..Default::default() }, 5e-5, dt, 10).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.z - damped_oscillator(&p, z0, *t)).abs() < 1e-6 * z0);
        }
    }

    #[test]
    fn rk4_error_is_fourth_order() {
        let p = slow_device();
        let op = steady_state(&p, 0.0, 0.0).unwrap();
        let z0 = 1e-12;
        let t_end = 2e-5;
        let err = |dt: f64| {
            let traj = integrate(&p, &op, &[], LinearState { z: z0, ..Default::default() }, t_end, dt, usize::MAX)
                .unwrap();
            let last = traj.states.last().unwrap();
            (last.z - damped_oscillator(&p, z0, *traj.times.last().unwrap())).abs()
        };
        let dt = 2e-8;
        let ratio = err(dt) / err(dt / 2.0);
        assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sum_channel_matches_transfer_algebra() {
        // Plain transient decay: the sum channel has no mechanical loop.
        let p = rossi();
        let delta = p.delta_for_ratio(10.0);
        let op = OperatingPoint::optimal(&p, delta).unwrap();
        let omega = p.zeta / 10.0;
        let sys = LinearDynamics::new(&p, &op);
        let dt = sys.max_step(omega);
        let period = 2.0 * PI / omega;
        let n_period = (period / dt).ceil();
        let dt = period / n_period;
        let t_end = 40.0 * period;
        for (channel, amplitude) in [(InputChannel::XSum, 0.3), (InputChannel::YSum, 1.7)] {
            let tones = [Tone::new(channel, amplitude, omega)];
            let traj = integrate(&p, &op, &tones, LinearState::default(), t_end, dt, 1).unwrap();
            let start = traj.times.len() - 1 - 10 * n_period as usize;
            let times = &traj.times[start..traj.times.len() - 1];
            let signal: Vec<f64> = traj.outputs[start..traj.outputs.len() - 1].iter().map(|o| o.x_sum).collect();
            let measured = demodulate(times, &signal, omega, amplitude);
            let analytic = analytic_gains(&p, &op, omega).unwrap().get(channel);
            assert!(relative_error(measured, analytic) < 0.01);
        }
    }

    #[test]
    fn decoupled_channels_mirror_each_other() {
        let p = rossi();
        let op = steady_state(&p, p.delta_for_ratio(3.0), 0.0).unwrap();
        let omegas = [p.zeta / 7.0, 2.0 * p.zeta];
        for s in frequency_response(&p, &op, &omegas).unwrap() {
            let m = s.measured;
            assert!((m.y_diff_to_y_diff - m.x_sum_to_x_sum).norm() < 1e-4 * m.x_sum_to_x_sum.norm());
            assert!((m.x_diff_to_y_diff + m.y_sum_to_x_sum).norm() < 1e-4 * m.y_sum_to_x_sum.norm());
            assert!(s.max_rel_error() < 1e-4, "{s:?}");
        }
    }

    #[test]
    fn gains_are_linear_and_superpose() {
        let p = slow_device();
        let op = OperatingPoint::from_alpha0(&p, 2e5, 1e5).unwrap();
        let dt = LinearDynamics::new(&p, &op).max_step(3e5);
        let run = |tones: &[Tone]| integrate(&p, &op, tones, LinearState::default(), 1e-4, dt, 50).unwrap();
        let a = Tone::new(InputChannel::XDiff, 1.0, 3e5);
        let b = Tone { phase: 0.4, ..Tone::new(InputChannel::YSum, 0.5, 1.3e5) };
        let ta = run(&[a]);
        let tb = run(&[b]);
        let t2a = run(&[Tone { amplitude: 2.0, ..a }]);
        let tab = run(&[a, b]);
        let scale = ta.states.iter().map(|s| s.yd.abs()).fold(0.0, f64::max);
        for i in 0..ta.states.len() {
            assert!((t2a.states[i].yd - 2.0 * ta.states[i].yd).abs() <= 1e-9 * scale);
            let sum = ta.states[i] + tb.states[i];
            assert!((tab.states[i].yd - sum.yd).abs() <= 1e-9 * scale);
            assert!((tab.states[i].xs - sum.xs).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn step_halving_converges() {
        let p = slow_device();
        let op = OperatingPoint::from_alpha0(&p, 2e5, 1.2e5).unwrap();
        let omegas = [3e4, 4e5];
        let coarse = frequency_response(&p, &op, &omegas).unwrap();
        let fine = frequency_response_with(
            &p,
            &op,
            &omegas,
            &OracleSettings { steps_per_rate: 2.0 * STEPS_PER_RATE, ..Default::default() },
        )
        .unwrap();
        for (c, f) in coarse.iter().zip(&fine) {
            for ch in InputChannel::ALL {
                let (a, b) = (c.measured.get(ch), f.measured.get(ch));
                assert!((a - b).norm() < 1e-6 * b.norm(), "{ch:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn low_frequency_limit_approaches_static_e1() {
        // v = 1: at v = 10 the optimum is so sharp that e1(ζ/1000) is still
        // twice e1(0), so the limit is checked where it is reachable.
        let p = rossi();
        let v = 1.0;
        let op = OperatingPoint::optimal(&p, p.delta_for_ratio(v)).unwrap();
        let s = &frequency_response(&p, &op, &[p.zeta / 1000.0]).unwrap()[0];
        let u = op.alpha0 / op.delta - 1.0;
        let w = u * v * v;
        let e1_static = -(1.0 + w) / (1.0 - w);
        assert_relative_eq!(s.measured.y_diff_to_y_diff.re, e1_static, max_relative = 0.02);
        assert!(s.measured.y_diff_to_y_diff.im.abs() < 0.02 * e1_static.abs());
    }

}
