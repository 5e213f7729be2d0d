//! Parameter scans of the Duan sum.
//!
//! Every row is an independent call to [`duan`]; rows are evaluated in
//! parallel and returned in abscissa order. Points on or beyond the
//! static-instability pole are kept and flagged, never dropped.

use rayon::prelude::*;

use crate::entanglement::{duan, DuanBreakdown, UVPoint};
use crate::error::{Error, Result};
use crate::system::{optimal_power, steady_state, OperatingPoint, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// Closed interval sampled at `n` points, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn linear(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n, spacing: Spacing::Linear }
    }

    pub fn log(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n, spacing: Spacing::Log }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidSweep("non-finite range".into()));
        }
        if !(self.lo < self.hi) {
            return Err(Error::InvalidSweep(format!("lo {} must be below hi {}", self.lo, self.hi)));
        }
        if self.n < 2 {
            return Err(Error::InvalidSweep(format!("need at least 2 points, got {}", self.n)));
        }
        if self.spacing == Spacing::Log && !(self.lo > 0.0) {
            return Err(Error::InvalidSweep("log spacing requires lo > 0".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i == 0 {
                    return self.lo;
                }
                if i + 1 == self.n {
                    return self.hi;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.lo + (self.hi - self.lo) * t,
                    Spacing::Log => (self.lo.ln() + (self.hi.ln() - self.lo.ln()) * t).exp(),
                }
            })
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerPolicy {
    /// Fixed per-arm power [W].
    Explicit(f64),
    /// Optimal power at each detuning.
    Optimal,
}

impl PowerPolicy {
    pub fn resolve(&self, p: &PhysicalParams, delta: f64) -> Result<f64> {
        match *self {
            PowerPolicy::Explicit(power) => Ok(power),
            PowerPolicy::Optimal => optimal_power(p, delta),
        }
    }
}

/// What is swept and what is held fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepKind {
    /// Abscissa: per-arm input power [W].
    Power { delta: f64, temperature: f64 },
    /// Abscissa: `v = 2Δ/ζ`.
    DetuningRatio { temperature: f64, power: PowerPolicy },
    /// Abscissa: temperature [K]; one series per `v`.
    Temperature { v_list: Vec<f64>, power: PowerPolicy },
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::Power { .. } => "power",
            SweepKind::DetuningRatio { .. } => "detuning_ratio",
            SweepKind::Temperature { .. } => "temperature",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Grid,
}

impl SweepSpec {
    /// Duan sum against input power, `v = 10`, 300 K, `P ∈ [0, 1] W`.
    pub fn fig2(p: &PhysicalParams) -> Self {
        Self {
            kind: SweepKind::Power {
                delta: p.delta_for_ratio(10.0),
                temperature: 300.0,
            },
            grid: Grid::linear(0.0, 1.0, 1001),
        }
    }

    /// Minimum Duan sum against `v ∈ [0.1, 60]` at 300 K.
    pub fn fig3() -> Self {
        Self {
            kind: SweepKind::DetuningRatio {
                temperature: 300.0,
                power: PowerPolicy::Optimal,
            },
            grid: Grid::log(0.1, 60.0, 301),
        }
    }

    /// Minimum Duan sum against `T ∈ [0, 1000] K` for `v ∈ {2, 6, 10}`.
    pub fn fig4() -> Self {
        Self {
            kind: SweepKind::Temperature {
                v_list: vec![2.0, 6.0, 10.0],
                power: PowerPolicy::Optimal,
            },
            grid: Grid::linear(0.0, 1000.0, 101),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let check_t = |t: f64| {
            if t >= 0.0 && t.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSweep(format!("invalid temperature {t}")))
            }
        };
        let check_power = |policy: &PowerPolicy| match *policy {
            PowerPolicy::Explicit(w) if !(w >= 0.0 && w.is_finite()) => {
                Err(Error::InvalidSweep(format!("invalid power {w}")))
            }
            _ => Ok(()),
        };
        match &self.kind {
            SweepKind::Power { delta, temperature } => {
                check_t(*temperature)?;
                if !delta.is_finite() {
                    return Err(Error::InvalidSweep("non-finite detuning".into()));
                }
                if self.grid.lo < 0.0 {
                    return Err(Error::InvalidSweep("negative power in range".into()));
                }
            }
            SweepKind::DetuningRatio { temperature, power } => {
                check_t(*temperature)?;
                check_power(power)?;
                if *power == PowerPolicy::Optimal && !(self.grid.lo > 0.0) {
                    return Err(Error::InvalidSweep(
                        "optimal power needs v > 0 over the whole range".into(),
                    ));
                }
            }
            SweepKind::Temperature { v_list, power } => {
                check_power(power)?;
                if self.grid.lo < 0.0 {
                    return Err(Error::InvalidSweep("negative temperature in range".into()));
                }
                if v_list.is_empty() {
                    return Err(Error::InvalidSweep("empty v list".into()));
                }
                for &v in v_list {
                    if !v.is_finite() || (*power == PowerPolicy::Optimal && !(v > 0.0)) {
                        return Err(Error::InvalidSweep(format!("invalid v {v} for power policy")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowPoint {
    Stable(DuanBreakdown),
    /// Past the pole (`uv² > 1`): the linear response is still finite but
    /// describes a steady state that does not survive.
    PastPole(DuanBreakdown),
    /// On the pole; nothing is computable.
    Pole { operating_point: OperatingPoint },
}

impl RowPoint {
    /// The Duan sum wherever it is finite, stable or not.
    pub fn breakdown(&self) -> Option<&DuanBreakdown> {
        match self {
            RowPoint::Stable(d) | RowPoint::PastPole(d) => Some(d),
            RowPoint::Pole { .. } => None,
        }
    }

    pub fn stable_breakdown(&self) -> Option<&DuanBreakdown> {
        match self {
            RowPoint::Stable(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, RowPoint::Stable(_))
    }

    pub fn operating_point(&self) -> &OperatingPoint {
        match self {
            RowPoint::Stable(d) | RowPoint::PastPole(d) => &d.operating_point,
            RowPoint::Pole { operating_point } => operating_point,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// `v` of the series this row belongs to (temperature sweeps); for the
    /// other kinds the `v` of the row itself.
    pub series_v: f64,
    pub abscissa: f64,
    pub point: RowPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub params: PhysicalParams,
    pub spec: SweepSpec,
    /// Series-major, abscissa ascending within each series.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows of one temperature series (or all rows for single-series sweeps).
    pub fn series(&self, v: f64) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.series_v == v)
    }

    /// Stable row with the smallest total.
    pub fn min_row(&self) -> Option<(&SweepRow, &DuanBreakdown)> {
        self.rows
            .iter()
            .filter_map(|r| r.point.stable_breakdown().map(|d| (r, d)))
            .min_by(|a, b| a.1.total.total_cmp(&b.1.total))
    }
}

fn evaluate(p: &PhysicalParams, op: OperatingPoint, temperature: f64) -> Result<RowPoint> {
    let past_pole = UVPoint::of(p, &op).is_some_and(|pt| pt.stability_margin() < 0.0);
    match duan(p, &op, temperature) {
        Ok(d) if past_pole => Ok(RowPoint::PastPole(d)),
        Ok(d) => Ok(RowPoint::Stable(d)),
        Err(Error::StaticInstability { .. }) => Ok(RowPoint::Pole { operating_point: op }),
        Err(e) => Err(e),
    }
}

pub fn run(p: &PhysicalParams, spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let xs = spec.grid.points();
    let rows: Result<Vec<SweepRow>> = match &spec.kind {
        SweepKind::Power { delta, temperature } => {
            let v = p.ratio_for_delta(*delta);
            xs.par_iter()
                .map(|&power| {
                    let op = steady_state(p, *delta, power)?;
                    Ok(SweepRow { series_v: v, abscissa: power, point: evaluate(p, op, *temperature)? })
                })
                .collect()
        }
        SweepKind::DetuningRatio { temperature, power } => xs
            .par_iter()
            .map(|&v| {
                let delta = p.delta_for_ratio(v);
                let op = steady_state(p, delta, power.resolve(p, delta)?)?;
                Ok(SweepRow { series_v: v, abscissa: v, point: evaluate(p, op, *temperature)? })
            })
            .collect(),
        SweepKind::Temperature { v_list, power } => {
            let pairs: Vec<(f64, f64)> =
                v_list.iter().flat_map(|&v| xs.iter().map(move |&t| (v, t))).collect();
            pairs
                .par_iter()
                .map(|&(v, t)| {
                    let delta = p.delta_for_ratio(v);
                    let op = steady_state(p, delta, power.resolve(p, delta)?)?;
                    Ok(SweepRow { series_v: v, abscissa: t, point: evaluate(p, op, t)? })
                })
                .collect()
        }
    };
    Ok(SweepTable { params: *p, spec: spec.clone(), rows: rows? })
}

/// Duan sum against per-arm input power at fixed detuning and temperature.
pub fn sweep_power(p: &PhysicalParams, delta: f64, temperature: f64, range: Grid) -> Result<SweepTable> {
    run(p, &SweepSpec { kind: SweepKind::Power { delta, temperature }, grid: range })
}

/// Duan sum against `v = 2Δ/ζ`.
pub fn sweep_detuning(
    p: &PhysicalParams,
    temperature: f64,
    v_range: Grid,
    power: PowerPolicy,
) -> Result<SweepTable> {
    run(p, &SweepSpec { kind: SweepKind::DetuningRatio { temperature, power }, grid: v_range })
}

/// Duan sum at optimal power against temperature, one series per `v`.
pub fn sweep_temperature(p: &PhysicalParams, v_list: &[f64], t_range: Grid) -> Result<SweepTable> {
    run(
        p,
        &SweepSpec {
            kind: SweepKind::Temperature { v_list: v_list.to_vec(), power: PowerPolicy::Optimal },
            grid: t_range,
        },
    )
}
