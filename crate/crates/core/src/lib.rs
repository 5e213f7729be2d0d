//! Linearized membrane-in-the-middle optomechanics.
//!
//! A perfectly reflective mechanical membrane splits an optical cavity into
//! two sub-cavities that are driven by two independent lasers. Radiation
//! pressure on the membrane correlates the two output fields; this crate
//! evaluates those correlations through the frequency-domain quadrature
//! transfer coefficients and the Duan inseparability sum, finds optimal
//! operating points, tabulates parameter sweeps, and cross-checks the
//! transfer functions against a direct time-domain integration.
//!
//! Module map:
//!
//! * [`system`]: device parameters, classical steady state, power mappings.
//! * [`response`]: mechanical response `α(ω)` and the coefficients `e1..e5`.
//! * [`entanglement`]: Duan sum, its closed forms and the thermal terms.
//! * [`sweeps`]: figure tables and general scans.
//! * [`oracle`]: RK4 integration of the linearized equations and gain extraction.
//! * [`search`]: golden-section minimization.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entanglement;
pub mod error;
pub mod oracle;
pub mod response;
pub mod search;
pub mod sweeps;
pub mod system;

pub use entanglement::{
    duan, min_y_term, min_y_term_numeric, quality_figure, thermal_term_exact, thermal_term_paper_approx, y_term_uv,
    DuanBreakdown, UVPoint, YMinimum, SEPARABILITY_BOUND,
};
pub use error::{Error, Result};
pub use response::{alpha_of_omega, coefficients, QuadratureResponse};
pub use sweeps::{
    sweep_detuning, sweep_power, sweep_temperature, Grid, PowerPolicy, RowPoint, Spacing,
    SweepKind, SweepRow, SweepSpec, SweepTable,
};
pub use system::{
    drive_phase, optimal_power, power_for_alpha, steady_state, validate_params, OperatingPoint,
    PhysicalParams, HBAR, KB,
};

pub use num_complex::Complex64;
