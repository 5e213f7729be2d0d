//! Device parameters and the classical steady state.
//!
//! All frequencies are angular (rad/s). The membrane sits at `z̄ = 0` because
//! both sub-cavities are driven with equal real amplitudes, which balances the
//! mean radiation-pressure forces on either side.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Reduced Planck constant, CODATA 2018 [J·s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, exact SI value [J/K].
pub const KB: f64 = 1.380_649e-23;

/// Fixed device constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Effective membrane mass [kg].
    pub m: f64,
    /// Decay rate of each input mirror [rad/s].
    pub zeta: f64,
    /// Mechanical eigenfrequency [rad/s].
    pub omega_m: f64,
    /// Optomechanical coupling [rad·s⁻¹·m⁻¹].
    pub g: f64,
    /// Laser frequency [rad/s].
    pub omega_l: f64,
    /// Mechanical decay rate [rad/s].
    pub gamma: f64,
}

impl PhysicalParams {
    /// Membrane device of Rossi et al. (2018): the bundled default.
    pub fn rossi2018() -> Self {
        Self::from_hz(2.3e-12, 15.9e6, 1.14e6, 4.45e17, 3.77e14, 1.09e-3)
            .expect("bundled preset is valid")
    }

    /// Builds parameters from ordinary frequencies (value/2π, in Hz) as
    /// they are usually tabulated. `g` is taken as given.
    pub fn from_hz(
        m: f64,
        zeta_hz: f64,
        omega_m_hz: f64,
        g: f64,
        omega_l_hz: f64,
        gamma_hz: f64,
    ) -> Result<Self> {
        Self {
            m,
            zeta: 2.0 * PI * zeta_hz,
            omega_m: 2.0 * PI * omega_m_hz,
            g,
            omega_l: 2.0 * PI * omega_l_hz,
            gamma: 2.0 * PI * gamma_hz,
        }
        .validate()
    }

    pub fn validate(self) -> Result<Self> {
        let checks = [
            (self.m, "mass"),
            (self.zeta, "mirror decay rate"),
            (self.omega_m, "mechanical frequency"),
            (self.g, "coupling"),
            (self.omega_l, "laser frequency"),
            (self.gamma, "mechanical decay rate"),
        ];
        for (value, name) in checks {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("non-finite {name}")));
            }
            if value <= 0.0 {
                return Err(Error::InvalidParams(format!("non-positive {name}")));
            }
        }
        if self.gamma >= self.omega_m {
            return Err(Error::InvalidParams("overdamped mechanics".into()));
        }
        Ok(self)
    }

    /// Mechanical quality factor `ω_m/γ`.
    pub fn quality_factor(&self) -> f64 {
        self.omega_m / self.gamma
    }

    /// Mechanical frequency in Hz.
    pub fn mechanical_hz(&self) -> f64 {
        self.omega_m / (2.0 * PI)
    }

    /// Detuning for a given ratio `v = 2Δ/ζ`.
    pub fn delta_for_ratio(&self, v: f64) -> f64 {
        0.5 * v * self.zeta
    }

    /// Ratio `v = 2Δ/ζ` for a given detuning.
    pub fn ratio_for_delta(&self, delta: f64) -> f64 {
        2.0 * delta / self.zeta
    }

    /// Static instability threshold `Δ + ζ²/(4Δ)` for `α(0)`.
    pub fn instability_alpha(&self, delta: f64) -> f64 {
        delta + self.zeta * self.zeta / (4.0 * delta)
    }
}

pub fn validate_params(raw: PhysicalParams) -> Result<PhysicalParams> {
    raw.validate()
}

/// Drive-dependent steady state with real intracavity mean fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Detuning `Δ = ω_e − ω_l` [rad/s].
    pub delta: f64,
    /// Input power per arm [W].
    pub power: f64,
    /// Drive amplitude `|Ē|` [√(photons/s)].
    pub e_mag: f64,
    /// Drive phase [rad].
    pub phi: f64,
    /// Mean intracavity amplitude `ā`.
    pub a_bar: f64,
    /// Mean amplitude quadrature `x̄ = 2ā`.
    pub x_bar: f64,
    /// Static radiation-pressure strength `α(0)` [rad/s].
    pub alpha0: f64,
}

impl OperatingPoint {
    /// Operating point whose static radiation-pressure strength is `alpha0`.
    pub fn from_alpha0(p: &PhysicalParams, delta: f64, alpha0: f64) -> Result<Self> {
        steady_state(p, delta, power_for_alpha(p, delta, alpha0)?)
    }

    /// Operating point at the entangling optimum for detuning `delta`.
    pub fn optimal(p: &PhysicalParams, delta: f64) -> Result<Self> {
        steady_state(p, delta, optimal_power(p, delta)?)
    }
}

/// Phase of the input drives that makes the intracavity fields real.
pub fn drive_phase(delta: f64, zeta: f64) -> f64 {
    (-2.0 * delta).atan2(zeta)
}

pub fn steady_state(p: &PhysicalParams, delta: f64, power: f64) -> Result<OperatingPoint> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(Error::NegativePower(power));
    }
    let photon_flux = power / (HBAR * p.omega_l);
    let e_mag = photon_flux.sqrt();
    let a_bar = (p.zeta * photon_flux / (delta * delta + 0.25 * p.zeta * p.zeta)).sqrt();
    let x_bar = 2.0 * a_bar;
    let alpha0 = HBAR * p.g * p.g * x_bar * x_bar / (p.m * p.omega_m * p.omega_m);
    Ok(OperatingPoint {
        delta,
        power,
        e_mag,
        phi: drive_phase(delta, p.zeta),
        a_bar,
        x_bar,
        alpha0,
    })
}

/// Input power per arm that produces the static strength `alpha0`.
pub fn power_for_alpha(p: &PhysicalParams, delta: f64, alpha0: f64) -> Result<f64> {
    if !(alpha0 >= 0.0) || !alpha0.is_finite() {
        return Err(Error::NegativeAlpha(alpha0));
    }
    let v = p.ratio_for_delta(delta);
    Ok(alpha0 * p.m * p.omega_m * p.omega_m * p.omega_l * p.zeta * (1.0 + v * v)
        / (16.0 * p.g * p.g))
}

/// Input power per arm that minimizes the Duan sum (without thermal noise)
/// at detuning `delta`.
pub fn optimal_power(p: &PhysicalParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::NonPositiveDetuning(delta));
    }
    let v2 = p.ratio_for_delta(delta).powi(2);
    let shape = (1.0 + v2) / (2.0 + v2);
    let scale = p.m * p.omega_m * p.omega_m * delta * p.zeta / (16.0 * HBAR * p.g * p.g);
    Ok(shape * scale * (v2 + 1.0) * HBAR * p.omega_l)
}
