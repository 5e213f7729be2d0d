use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical parameter violates its invariant; the payload names it,
    /// e.g. "non-positive mass" or "overdamped mechanics".
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("negative input power: {0} W")]
    NegativePower(f64),

    #[error("negative radiation-pressure strength: {0} rad/s")]
    NegativeAlpha(f64),

    #[error("non-positive detuning: {0} rad/s (optimum requires delta > 0)")]
    NonPositiveDetuning(f64),

    #[error("zero detuning ratio: no entangling optimum at v = 0")]
    ZeroDetuningRatio,

    #[error("invalid temperature: {0} K")]
    InvalidTemperature(f64),

    /// The Y-difference denominator vanishes; the linearized response diverges.
    #[error("static instability: |denominator| = {magnitude:.3e} below guard {guard:.3e}")]
    StaticInstability { magnitude: f64, guard: f64 },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("step size {dt:e} s exceeds limit {limit:e} s")]
    StepTooLarge { dt: f64, limit: f64 },

    /// Norm-growth detector fired during time integration.
    #[error("unstable operating point: state norm grew by {growth:.3e} at t = {time:e} s")]
    Diverged { growth: f64, time: f64 },

    #[error("non-convergence: {0}")]
    NotConverged(String),
}
