//! Shared fixtures for the benchmarks in `benches/`.

use omc_core::{OperatingPoint, PhysicalParams};

/// Reference device at `v = 10` and optimal power.
pub fn reference_point() -> (PhysicalParams, OperatingPoint) {
    let p = PhysicalParams::rossi2018();
    let op = OperatingPoint::optimal(&p, p.delta_for_ratio(10.0)).expect("valid preset");
    (p, op)
}
