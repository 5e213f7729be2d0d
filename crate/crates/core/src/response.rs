//! Frequency-domain quadrature transfer coefficients.
//!
//! Fourier convention: `O(ω) = ∫ O(t) e^{iωt} dt / √2π`, so `d/dt → −iω`.
//! With that convention the output combinations obey
//!
//! ```text
//! Y_B − Y_D = e1 (Y_b − Y_d) − e2 (X_b − X_d) + e3 ϖ
//! X_B + X_D = e4 (X_b + X_d) − e5 (Y_b + Y_d)
//! ```
//!
//! where `ϖ` is the thermal force on the membrane.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::{OperatingPoint, PhysicalParams};

/// Relative guard (in units of `ζ²`) on the Y-difference denominator.
pub const SINGULARITY_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResponse {
    pub omega: f64,
    /// Radiation-pressure strength `α(ω)` [rad/s].
    pub alpha: Complex64,
    pub e1: Complex64,
    pub e2: Complex64,
    /// Gain from thermal force to `Y_B − Y_D` [1/(N·s^{1/2})-like units],
    /// including the mechanical susceptibility.
    pub e3: Complex64,
    pub e4: Complex64,
    pub e5: Complex64,
}

impl QuadratureResponse {
    /// `|e4 − i·e5|²`, identically one.
    pub fn x_channel_norm(&self) -> f64 {
        (self.e4 - Complex64::i() * self.e5).norm_sqr()
    }

    /// `|i·e1 − e2|²`.
    pub fn y_channel_norm(&self) -> f64 {
        (Complex64::i() * self.e1 - self.e2).norm_sqr()
    }
}

/// Inverse mechanical susceptibility normalized to `ω_m²`:
/// `1 − ω²/ω_m² − iγω/ω_m²`, exactly `1` at `ω = 0`.
fn normalized_inverse_susceptibility(p: &PhysicalParams, omega: f64) -> Complex64 {
    let wm2 = p.omega_m * p.omega_m;
    Complex64::new(1.0 - omega * omega / wm2, -p.gamma * omega / wm2)
}

/// `α(ω) = ħ g² x̄² / [m (ω_m² − ω² − iγω)]`.
pub fn alpha_of_omega(p: &PhysicalParams, op: &OperatingPoint, omega: f64) -> Complex64 {
    Complex64::new(op.alpha0, 0.0) / normalized_inverse_susceptibility(p, omega)
}

pub fn coefficients(
    p: &PhysicalParams,
    op: &OperatingPoint,
    omega: f64,
) -> Result<QuadratureResponse> {
    let zeta = p.zeta;
    let delta = op.delta;
    let alpha = alpha_of_omega(p, op, omega);
    let k = Complex64::new(-0.5 * zeta, omega);
    let k2 = k * k;

    let y_den = k2 - (alpha - delta) * delta;
    let guard = SINGULARITY_GUARD * zeta * zeta;
    if !(y_den.norm() >= guard) {
        return Err(Error::StaticInstability {
            magnitude: y_den.norm(),
            guard,
        });
    }
    let e1 = 1.0 + zeta * k / y_den;
    let e2 = (alpha - delta) * zeta / y_den;

    let susceptibility =
        1.0 / (p.m * p.omega_m * p.omega_m * normalized_inverse_susceptibility(p, omega));
    let e3 = 2.0 * p.g * op.x_bar * zeta.sqrt() * susceptibility
        / (k * (1.0 - delta * (alpha - delta) / k2));

    let x_den = k2 + delta * delta;
    let e4 = 1.0 + k * zeta / x_den;
    let e5 = Complex64::new(zeta * delta, 0.0) / x_den;

    Ok(QuadratureResponse {
        omega,
        alpha,
        e1,
        e2,
        e3,
        e4,
        e5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{steady_state, OperatingPoint};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rossi() -> PhysicalParams {
        PhysicalParams::rossi2018()
    }

    #[test]
    fn alpha_at_dc_and_resonance() {
        let p = rossi();
        let op = OperatingPoint::from_alpha0(&p, 5e8, 3e8).unwrap();
        assert_eq!(alpha_of_omega(&p, &op, 0.0), Complex64::new(op.alpha0, 0.0));

        let at_res = alpha_of_omega(&p, &op, p.omega_m);
        assert!(at_res.re.abs() < 1e-12 * at_res.im.abs());
        assert_relative_eq!(at_res.im, op.alpha0 * p.quality_factor(), max_relative = 1e-12);

        let dark = steady_state(&p, 5e8, 0.0).unwrap();
        for w in [0.0, 1e3, p.omega_m, 1e9] {
            assert_eq!(alpha_of_omega(&p, &dark, w), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn passive_cavity_at_dc() {
        let p = rossi();
        for delta in [-3e8, 1e7, 5e8] {
            let op = steady_state(&p, delta, 0.0).unwrap();
            let r = coefficients(&p, &op, 0.0).unwrap();
            let q = delta * delta + 0.25 * p.zeta * p.zeta;
            assert_relative_eq!(r.e1.re, (delta * delta - 0.25 * p.zeta * p.zeta) / q, epsilon = 1e-15);
            assert_relative_eq!(r.e2.re, -delta * p.zeta / q, epsilon = 1e-15);
            assert_relative_eq!(r.e1.norm_sqr() + r.e2.norm_sqr(), 1.0, epsilon = 1e-14);
            assert_eq!(r.e3, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn resonant_passive_cavity_flips_sign() {
        let p = rossi();
        let op = steady_state(&p, 0.0, 0.0).unwrap();
        let r = coefficients(&p, &op, 0.0).unwrap();
        assert_relative_eq!(r.e4.re, -1.0, epsilon = 1e-15);
        assert_eq!(r.e5.norm(), 0.0);
        assert_relative_eq!(r.e1.re, -1.0, epsilon = 1e-15);
        assert_eq!(r.e2.norm(), 0.0);
    }

    #[test]
    fn uv_closed_forms_at_dc() {
        let p = rossi();
        for (v, u) in [(10.0, -1.0 / 102.0), (2.0, 0.3), (0.5, -0.7), (6.0, -0.9)] {
            let delta = p.delta_for_ratio(v);
            let op = OperatingPoint::from_alpha0(&p, delta, (1.0 + u) * delta).unwrap();
            let r = coefficients(&p, &op, 0.0).unwrap();
            let w = u * v * v;
            assert_relative_eq!(r.e1.re, -(1.0 + w) / (1.0 - w), epsilon = 1e-12);
            assert_relative_eq!(r.e2.re, 2.0 * u * v / (1.0 - w), epsilon = 1e-12);
            for e in [r.e1, r.e2, r.e4, r.e5] {
                assert_eq!(e.im, 0.0);
            }
        }
    }

    #[test]
    fn pole_is_reported() {
        let p = rossi();
        let delta = p.delta_for_ratio(4.0);
        let op = OperatingPoint::from_alpha0(&p, delta, p.instability_alpha(delta)).unwrap();
        assert!(matches!(
            coefficients(&p, &op, 0.0),
            Err(Error::StaticInstability { .. })
        ));
    }

    #[test]
    fn x_channel_independent_of_mechanics() {
        let p = rossi();
        let op = OperatingPoint::from_alpha0(&p, 4e8, 2e8).unwrap();
        let q = PhysicalParams {
            m: 1e-9,
            omega_m: 1e5,
            gamma: 1.0,
            g: 1e15,
            ..p
        };
        let op_q = steady_state(&q, 4e8, 3.0).unwrap();
        for w in [0.0, 1e4, 3e7, 2e9] {
            let a = coefficients(&p, &op, w).unwrap();
            let b = coefficients(&q, &op_q, w).unwrap();
            assert_eq!(a.e4, b.e4);
            assert_eq!(a.e5, b.e5);
        }
    }

    #[test]
    fn coupling_vanishes_continuously() {
        let p = rossi();
        let delta = p.delta_for_ratio(3.0);
        let passive = coefficients(&p, &steady_state(&p, delta, 0.0).unwrap(), 2e6).unwrap();
        // Without coupling e2 keeps its passive value −e5, it does not vanish.
        assert!((passive.e2 + passive.e5).norm() < 1e-15);
        let mut last = (f64::INFINITY, f64::INFINITY);
        for power in [1e-2, 1e-4, 1e-6, 1e-8] {
            let r = coefficients(&p, &steady_state(&p, delta, power).unwrap(), 2e6).unwrap();
            let dist = ((r.e1 - passive.e1).norm() + (r.e2 - passive.e2).norm(), r.e3.norm());
            assert!(dist.0 < last.0 && dist.1 < last.1);
            last = dist;
        }
        assert!(last.0 < 1e-6, "{last:?}");
        // e3 ∝ x̄ ∝ √P
        let e3 = |power| coefficients(&p, &steady_state(&p, delta, power).unwrap(), 2e6).unwrap().e3.norm();
        assert_relative_eq!(e3(1e-10) / e3(1e-12), 10.0, max_relative = 1e-3);
    }

    proptest! {
        #[test]
        fn x_channel_is_unitary(lw in 0.0..6.0f64, ld in 0.0..6.0f64, lz in 4.0..10.0f64, sd in any::<bool>()) {
            let p = PhysicalParams { zeta: 10f64.powf(lz), ..rossi() };
            let delta = if sd { 1.0 } else { -1.0 } * 10f64.powf(ld + lz - 3.0);
            let omega = 10f64.powf(lw + lz - 3.0);
            let op = steady_state(&p, delta, 0.0).unwrap();
            let r = coefficients(&p, &op, omega).unwrap();
            prop_assert!((r.x_channel_norm() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn coefficients_are_hermitian(w in 1e3..1e9f64, v in -20.0..20.0f64, power in 0.0..0.2f64) {
            let p = rossi();
            let op = steady_state(&p, p.delta_for_ratio(v), power).unwrap();
            if let (Ok(a), Ok(b)) = (coefficients(&p, &op, w), coefficients(&p, &op, -w)) {
                for (x, y) in [(a.e1, b.e1), (a.e2, b.e2), (a.e4, b.e4), (a.e5, b.e5)] {
                    prop_assert!((x - y.conj()).norm() <= 1e-12 * (1.0 + x.norm()));
                }
            }
        }
    }
}
