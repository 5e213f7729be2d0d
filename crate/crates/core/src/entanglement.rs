//! Duan inseparability sum for the two output fields.
//!
//! Quadratures are normalized so that `[X, Y] = 2i` and the vacuum variance
//! of each quadrature is one. For the EPR-like pair `X_B + X_D`, `Y_B − Y_D`
//! the separable bound on the summed variances is therefore four.
//!
//! Everything here is evaluated at zero Fourier frequency, the long
//! measurement-time limit of filtered quadratures.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::response::coefficients;
use crate::search::GoldenSection;
use crate::system::{OperatingPoint, PhysicalParams, HBAR, KB};

/// Duan sum at or above this value is compatible with a separable state.
pub const SEPARABILITY_BOUND: f64 = 4.0;

/// Summed quadrature variances at `ω = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuanBreakdown {
    /// `⟨(X_B + X_D)²⟩`; always two.
    pub x_term: f64,
    /// `⟨(Y_B − Y_D)²⟩` without the thermal part.
    pub y_term: f64,
    /// Thermal force contribution `mγk_BT|e3|²`.
    pub thermal_term: f64,
    pub total: f64,
    /// `total < 4`.
    pub entangled: bool,
    pub temperature: f64,
    pub operating_point: OperatingPoint,
}

impl DuanBreakdown {
    pub fn total_no_thermal(&self) -> f64 {
        self.x_term + self.y_term
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(t))
    }
}

/// Duan sum built from the transfer coefficients at `ω = 0`.
pub fn duan(p: &PhysicalParams, op: &OperatingPoint, temperature: f64) -> Result<DuanBreakdown> {
    check_temperature(temperature)?;
    let r = coefficients(p, op, 0.0)?;
    let x_term = 2.0 * r.x_channel_norm();
    let y_term = 2.0 * r.y_channel_norm();
    let thermal_term = p.m * p.gamma * KB * temperature * r.e3.norm_sqr();
    let total = x_term + y_term + thermal_term;
    Ok(DuanBreakdown {
        x_term,
        y_term,
        thermal_term,
        total,
        entangled: total < SEPARABILITY_BOUND,
        temperature,
        operating_point: *op,
    })
}

/// Dimensionless operating coordinates: `α(0) − Δ = uΔ`, `Δ = vζ/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UVPoint {
    pub u: f64,
    pub v: f64,
}

impl UVPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// Coordinates of an operating point; `None` at zero detuning where `u`
    /// is undefined.
    pub fn of(p: &PhysicalParams, op: &OperatingPoint) -> Option<Self> {
        (op.delta != 0.0).then(|| Self {
            u: op.alpha0 / op.delta - 1.0,
            v: p.ratio_for_delta(op.delta),
        })
    }

    /// `1 − uv²`, zero at the static instability.
    pub fn stability_margin(&self) -> f64 {
        1.0 - self.u * self.v * self.v
    }
}

/// `⟨(Y_B − Y_D)²⟩ = 2[(1+uv²)² + 4u²v²]/(1−uv²)²`.
pub fn y_term_uv(pt: UVPoint) -> Result<f64> {
    let UVPoint { u, v } = pt;
    let w = u * v * v;
    let margin = 1.0 - w;
    if margin.abs() < crate::response::SINGULARITY_GUARD {
        return Err(Error::StaticInstability {
            magnitude: margin.abs(),
            guard: crate::response::SINGULARITY_GUARD,
        });
    }
    Ok(2.0 * ((1.0 + w).powi(2) + 4.0 * u * u * v * v) / (margin * margin))
}

/// Exact rational evaluation of [`y_term_uv`] at the binary values of `u`, `v`.
fn y_term_uv_exact(u: f64, v: f64) -> BigRational {
    let u = BigRational::from_float(u).expect("finite u");
    let v = BigRational::from_float(v).expect("finite v");
    let one = BigRational::one();
    let v2 = &v * &v;
    let w = &u * &v2;
    let margin = &one - &w;
    let numer = (&one + &w) * (&one + &w) + BigRational::from_integer(BigInt::from(4)) * &u * &u * &v2;
    let denom = &margin * &margin;
    if denom.is_zero() {
        // Pole: never a minimum.
        return BigRational::from_integer(BigInt::from(u64::MAX));
    }
    BigRational::from_integer(BigInt::from(2)) * numer / denom
}

/// Optimum over `u` of the Y-difference variance at fixed `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YMinimum {
    pub y_min: f64,
    pub u_star: f64,
    /// `α*(0)/Δ = 1 + u*`.
    pub alpha_star_over_delta: f64,
}

/// Closed-form minimum: `2/(1+v²)` at `u* = −1/(2+v²)`.
pub fn min_y_term(v: f64) -> Result<YMinimum> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::ZeroDetuningRatio);
    }
    let v2 = v * v;
    Ok(YMinimum {
        y_min: 2.0 / (1.0 + v2),
        u_star: -1.0 / (2.0 + v2),
        alpha_star_over_delta: (1.0 + v2) / (2.0 + v2),
    })
}

/// Bracket margin for the numeric search on `(−1, 0)`.
const U_MARGIN: f64 = 1e-12;

/// Golden-section minimization of [`y_term_uv`] over `u ∈ (−1, 0)`.
///
/// Candidates are compared in exact rational arithmetic, which resolves the
/// minimizer to the search tolerance instead of `√ε`.
pub fn min_y_term_numeric(v: f64) -> Result<YMinimum> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::ZeroDetuningRatio);
    }
    let found = GoldenSection::default().minimize(
        |u| y_term_uv_exact(u, v),
        -1.0 + U_MARGIN,
        -U_MARGIN,
    );
    let u_star = found.x;
    Ok(YMinimum {
        y_min: y_term_uv(UVPoint::new(u_star, v))?,
        u_star,
        alpha_star_over_delta: 1.0 + u_star,
    })
}

/// `mγk_BT|e3(0)|²` in its reduced form
/// `16 α(0) γ k_BT / [ħ ω_m² ζ (1 − uv²)²]`.
pub fn thermal_term_exact(p: &PhysicalParams, op: &OperatingPoint, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    let margin = if op.delta == 0.0 {
        1.0
    } else {
        UVPoint::of(p, op).expect("non-zero detuning").stability_margin()
    };
    if margin.abs() < crate::response::SINGULARITY_GUARD {
        return Err(Error::StaticInstability {
            magnitude: margin.abs(),
            guard: crate::response::SINGULARITY_GUARD,
        });
    }
    Ok(16.0 * op.alpha0 * p.gamma * KB * temperature
        / (HBAR * p.omega_m * p.omega_m * p.zeta * margin * margin))
}

/// Thermal term in the approximate form `(8/2π)(Δ/ζ)(k_BT/ħ)/(Qf)`.
///
/// At the optimal operating point this exceeds [`thermal_term_exact`] by the
/// factor `2(1+v²)/(2+v²)`, which tends to two for large `v`.
pub fn thermal_term_paper_approx(p: &PhysicalParams, delta: f64, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    Ok(8.0 / (2.0 * PI) * (delta / p.zeta) * (KB * temperature / HBAR)
        / (p.quality_factor() * p.mechanical_hz()))
}

/// Thermal decoherence figure `k_BT/(ħQf)`.
pub fn quality_figure(p: &PhysicalParams, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    Ok(KB * temperature / (HBAR * p.quality_factor() * p.mechanical_hz()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{optimal_power, steady_state};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rossi() -> PhysicalParams {
        PhysicalParams::rossi2018()
    }

    #[test]
    fn passive_cavity_sits_on_the_bound() {
        let p = rossi();
        for delta in [-2e8, 0.0, 3e7, 5e8] {
            let op = steady_state(&p, delta, 0.0).unwrap();
            for t in [0.0, 300.0, 1000.0] {
                let d = duan(&p, &op, t).unwrap();
                assert!((d.total - 4.0).abs() < 1e-12);
                assert!(!d.entangled || d.total < 4.0);
                assert_eq!(d.thermal_term, 0.0);
            }
        }
    }

    #[test]
    fn back_action_nullified_point() {
        let p = rossi();
        let delta = p.delta_for_ratio(3.0);
        let op = OperatingPoint::from_alpha0(&p, delta, delta).unwrap();
        let d = duan(&p, &op, 0.0).unwrap();
        assert_relative_eq!(d.y_term, 2.0, max_relative = 1e-12);
        assert_relative_eq!(d.total, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn room_temperature_optimum_at_v10() {
        let p = rossi();
        let op = OperatingPoint::optimal(&p, p.delta_for_ratio(10.0)).unwrap();
        let d = duan(&p, &op, 300.0).unwrap();
        // Frozen from an independent double-precision evaluation.
        assert_relative_eq!(d.y_term, 2.0 / 101.0, max_relative = 1e-10);
        assert_relative_eq!(d.thermal_term, 0.105_894_668_9, max_relative = 1e-8);
        assert_relative_eq!(d.total, 2.125_696_649_1, max_relative = 1e-9);
        assert_relative_eq!(d.x_term, 2.0, max_relative = 1e-12);
        assert!(d.entangled);

        let exact = thermal_term_exact(&p, &op, 300.0).unwrap();
        assert_relative_eq!(exact, d.thermal_term, max_relative = 1e-10);
    }

    #[test]
    fn y_term_uv_examples() {
        assert_eq!(y_term_uv(UVPoint::new(0.0, 7.0)).unwrap(), 2.0);
        assert_relative_eq!(
            y_term_uv(UVPoint::new(-1.0 / 102.0, 10.0)).unwrap(),
            2.0 / 101.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            y_term_uv(UVPoint::new(-0.5, 10.0)).unwrap(),
            2.0 * 2501.0 / 2601.0,
            max_relative = 1e-14
        );
        assert!(y_term_uv(UVPoint::new(0.25, 2.0)).is_err());
    }

    #[test]
    fn closed_form_minimum() {
        let m = min_y_term(10.0).unwrap();
        assert_relative_eq!(m.y_min, 2.0 / 101.0);
        assert_relative_eq!(m.u_star, -1.0 / 102.0);
        let m = min_y_term(1.0).unwrap();
        assert_relative_eq!(m.y_min, 1.0);
        assert_relative_eq!(m.u_star, -1.0 / 3.0);
        let m = min_y_term(1e8).unwrap();
        assert!(m.y_min < 1e-15);
        assert_relative_eq!(m.alpha_star_over_delta, 1.0);
        assert_eq!(min_y_term(0.0), Err(Error::ZeroDetuningRatio));
    }

    #[test]
    fn numeric_minimum_matches_closed_form() {
        for v in [0.3, 1.0, 2.0, 10.0, 30.0] {
            let num = min_y_term_numeric(v).unwrap();
            let cf = min_y_term(v).unwrap();
            assert_relative_eq!(num.y_min, cf.y_min, max_relative = 1e-9);
            assert_relative_eq!(num.u_star, cf.u_star, max_relative = 1e-9);
        }
    }

    #[test]
    fn thermal_terms() {
        let p = rossi();
        let delta = p.delta_for_ratio(10.0);
        let op = OperatingPoint::optimal(&p, delta).unwrap();
        assert_eq!(thermal_term_exact(&p, &op, 0.0).unwrap(), 0.0);
        let t300 = thermal_term_exact(&p, &op, 300.0).unwrap();
        let t600 = thermal_term_exact(&p, &op, 600.0).unwrap();
        assert_relative_eq!(t600, 2.0 * t300, max_relative = 1e-15);

        let approx = thermal_term_paper_approx(&p, delta, 300.0).unwrap();
        assert_relative_eq!(approx, 0.209_712_971_786, max_relative = 1e-8);
        assert_relative_eq!(t300 / approx, 102.0 / 202.0, max_relative = 1e-12);
        assert_eq!(thermal_term_paper_approx(&p, delta, 0.0).unwrap(), 0.0);
        assert!(thermal_term_exact(&p, &op, -1.0).is_err());
    }

    #[test]
    fn quality_figure_examples() {
        let p = rossi();
        assert_eq!(quality_figure(&p, 0.0).unwrap(), 0.0);
        assert_relative_eq!(quality_figure(&p, 300.0).unwrap(), 0.032_941_636_576, max_relative = 1e-8);
        let lossy = PhysicalParams { gamma: 2.0 * p.gamma, ..p };
        assert_relative_eq!(
            quality_figure(&lossy, 300.0).unwrap(),
            2.0 * quality_figure(&p, 300.0).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn optimum_is_local_minimum_in_power() {
        let p = rossi();
        for v in [2.0, 10.0] {
            let delta = p.delta_for_ratio(v);
            let star = optimal_power(&p, delta).unwrap();
            for t in [0.0, 300.0] {
                let at = |power: f64| duan(&p, &steady_state(&p, delta, power).unwrap(), t).unwrap().total;
                assert!(at(0.99 * star) > at(star));
                assert!(at(1.01 * star) > at(star));
            }
        }
    }

    proptest! {
        #[test]
        fn coefficient_and_closed_form_paths_agree(v in 0.05..40.0f64, u in -3.0..3.0f64, neg in any::<bool>()) {
            let p = rossi();
            let v = if neg { -v } else { v };
            let pt = UVPoint::new(u, v);
            prop_assume!(pt.stability_margin().abs() > 1e-3);
            let delta = p.delta_for_ratio(v);
            let op = OperatingPoint::from_alpha0(&p, delta, (1.0 + u) * delta);
            prop_assume!(op.is_ok());
            let op = op.unwrap();
            let via_e = duan(&p, &op, 0.0).unwrap().y_term;
            let via_uv = y_term_uv(UVPoint::of(&p, &op).unwrap()).unwrap();
            prop_assert!((via_e - via_uv).abs() <= 1e-10 * via_uv);
        }

        #[test]
        fn entanglement_region(v in 0.05..40.0f64, u in -2.0..2.0f64) {
            let pt = UVPoint::new(u, v);
            prop_assume!(pt.stability_margin().abs() > 1e-6);
            prop_assume!((u + 1.0).abs() > 1e-6 && u.abs() > 1e-6);
            let total = 2.0 + y_term_uv(pt).unwrap();
            prop_assert_eq!(total < 4.0, -1.0 < u && u < 0.0);
        }

        #[test]
        fn total_increases_with_temperature(v in 0.5..30.0f64, t in 0.0..1000.0f64, dt in 1.0..500.0f64) {
            let p = rossi();
            let op = OperatingPoint::optimal(&p, p.delta_for_ratio(v)).unwrap();
            let a = duan(&p, &op, t).unwrap();
            let b = duan(&p, &op, t + dt).unwrap();
            prop_assert!(b.total > a.total);
            prop_assert!(a.thermal_term >= 0.0);
            prop_assert!((a.total - (a.x_term + a.y_term + a.thermal_term)).abs() < 1e-15);
        }
    }
}
