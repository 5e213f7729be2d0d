//! Subcommand implementations.

use std::io::Write;

use omc_core::oracle::{self, InputChannel, GAIN_TOLERANCE};
use omc_core::{
    coefficients, duan, min_y_term, optimal_power, quality_figure, steady_state, thermal_term_exact,
    thermal_term_paper_approx, DuanBreakdown, Error, Grid, OperatingPoint, PowerPolicy, RowPoint,
    Spacing, SweepKind, SweepSpec, SweepTable, UVPoint,
};

use crate::config::{RunConfig, SweepKindName};
use crate::csv::{fmt_f64, Cell, CsvTable};
use crate::CliError;

pub const DEFAULT_TEMPERATURE: f64 = 300.0;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Steady,
    Transfer,
    Duan,
    Optimum,
    Fig2,
    Fig3,
    Fig4,
    Sweep,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Transfer => "transfer",
            Command::Duan => "duan",
            Command::Optimum => "optimum",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
        }
    }
}

/// Runs one subcommand. Summaries go to `stdout`; tables go to the
/// configured output file, or to `stdout` when none is set.
pub fn run(cmd: Command, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Steady => steady(cfg, stdout),
        Command::Transfer => emit(cfg, stdout, &transfer(cfg)?),
        Command::Duan => duan_summary(cfg, stdout),
        Command::Optimum => optimum(cfg, stdout),
        Command::Fig2 | Command::Fig3 | Command::Fig4 | Command::Sweep => {
            let spec = sweep_spec(cmd, cfg)?;
            let table = omc_core::sweeps::run(&cfg.params, &spec)?;
            emit(cfg, stdout, &sweep_csv(cmd, cfg, &table))
        }
        Command::Validate => validate(cfg, stdout),
    }
}

fn emit(cfg: &RunConfig, stdout: &mut dyn Write, table: &CsvTable) -> Result<(), CliError> {
    let text = table.render();
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text)?;
            writeln!(stdout, "wrote {} rows to {}", table.len(), path.display())?;
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn temperature(cfg: &RunConfig) -> f64 {
    cfg.temperature.unwrap_or(DEFAULT_TEMPERATURE)
}

fn power_policy(cfg: &RunConfig) -> PowerPolicy {
    cfg.power.unwrap_or(PowerPolicy::Optimal)
}

fn policy_label(policy: PowerPolicy) -> String {
    match policy {
        PowerPolicy::Explicit(w) => fmt_f64(w),
        PowerPolicy::Optimal => "optimal".into(),
    }
}

fn operating_point(cfg: &RunConfig) -> Result<OperatingPoint, CliError> {
    let delta = cfg.require_delta()?;
    let power = power_policy(cfg).resolve(&cfg.params, delta)?;
    Ok(steady_state(&cfg.params, delta, power)?)
}

/// Provenance block shared by every table.
fn header(cmd: Command, cfg: &RunConfig) -> CsvTable {
    let p = &cfg.params;
    let mut t = CsvTable::default();
    t.meta("command", cmd.name())
        .meta("source", cfg.source_label())
        .meta_num("m_kg", p.m)
        .meta_num("zeta_rad_s", p.zeta)
        .meta_num("omega_m_rad_s", p.omega_m)
        .meta_num("g", p.g)
        .meta_num("omega_l_rad_s", p.omega_l)
        .meta_num("gamma_rad_s", p.gamma);
    t
}

fn with_columns(meta: CsvTable, columns: &[&str]) -> CsvTable {
    let mut t = CsvTable::new(columns);
    for (k, v) in meta.meta_entries() {
        t.meta(k, v.clone());
    }
    t
}

fn grid_label(g: &Grid) -> String {
    let spacing = match g.spacing {
        Spacing::Linear => "linear",
        Spacing::Log => "log",
    };
    format!("{spacing} {} {} {}", fmt_f64(g.lo), fmt_f64(g.hi), g.n)
}

fn print_op(out: &mut dyn Write, op: &OperatingPoint, cfg: &RunConfig) -> std::io::Result<()> {
    writeln!(out, "v = {}", cfg.params.ratio_for_delta(op.delta))?;
    writeln!(out, "delta_rad_s = {}", op.delta)?;
    writeln!(out, "power_w = {}", op.power)?;
    writeln!(out, "e_mag = {}", op.e_mag)?;
    writeln!(out, "phi_rad = {}", op.phi)?;
    writeln!(out, "a_bar = {}", op.a_bar)?;
    writeln!(out, "x_bar = {}", op.x_bar)?;
    writeln!(out, "alpha0_rad_s = {}", op.alpha0)
}

fn print_duan(out: &mut dyn Write, d: &DuanBreakdown) -> std::io::Result<()> {
    writeln!(out, "temperature_k = {}", d.temperature)?;
    writeln!(out, "x_term = {}", d.x_term)?;
    writeln!(out, "y_term = {}", d.y_term)?;
    writeln!(out, "thermal_term = {}", d.thermal_term)?;
    writeln!(out, "total_no_thermal = {}", d.total_no_thermal())?;
    writeln!(out, "total = {}", d.total)?;
    writeln!(out, "entangled = {}", d.entangled)
}

fn steady(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let op = operating_point(cfg)?;
    writeln!(out, "command = steady")?;
    writeln!(out, "source = {}", cfg.source_label())?;
    writeln!(out, "power_policy = {}", policy_label(power_policy(cfg)))?;
    print_op(out, &op, cfg)?;
    writeln!(out, "instability_alpha_rad_s = {}", cfg.params.instability_alpha(op.delta))?;
    Ok(())
}

fn duan_summary(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let op = operating_point(cfg)?;
    let d = duan(&cfg.params, &op, temperature(cfg))?;
    writeln!(out, "command = duan")?;
    writeln!(out, "source = {}", cfg.source_label())?;
    writeln!(out, "power_policy = {}", policy_label(power_policy(cfg)))?;
    print_op(out, &op, cfg)?;
    print_duan(out, &d)?;
    Ok(())
}

fn optimum(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let p = &cfg.params;
    let delta = cfg.require_delta()?;
    let power = optimal_power(p, delta)?;
    let op = steady_state(p, delta, power)?;
    let v = p.ratio_for_delta(delta);
    let m = min_y_term(v)?;
    let t = temperature(cfg);
    let d = duan(p, &op, t)?;
    writeln!(out, "command = optimum")?;
    writeln!(out, "source = {}", cfg.source_label())?;
    print_op(out, &op, cfg)?;
    writeln!(out, "u_star = {}", m.u_star)?;
    writeln!(out, "alpha_star_over_delta = {}", m.alpha_star_over_delta)?;
    writeln!(out, "y_min = {}", m.y_min)?;
    writeln!(out, "min_total_t0 = {}", 2.0 + m.y_min)?;
    print_duan(out, &d)?;
    writeln!(out, "thermal_term_exact = {}", thermal_term_exact(p, &op, t)?)?;
    writeln!(out, "thermal_term_approx = {}", thermal_term_paper_approx(p, delta, t)?)?;
    writeln!(out, "quality_figure = {}", quality_figure(p, t)?)?;
    Ok(())
}

fn frequency_grid(cfg: &RunConfig, lo: f64, hi: f64, n: usize) -> Result<Grid, CliError> {
    let g = Grid {
        lo: cfg.f_lo.unwrap_or(lo),
        hi: cfg.f_hi.unwrap_or(hi),
        n: cfg.n.unwrap_or(n),
        spacing: cfg.spacing.unwrap_or(Spacing::Log),
    };
    g.validate()?;
    Ok(g)
}

fn transfer(cfg: &RunConfig) -> Result<CsvTable, CliError> {
    let op = operating_point(cfg)?;
    let grid = frequency_grid(cfg, 1e3, 1e9, 121)?;
    let mut columns = vec!["f_hz", "omega_rad_s", "alpha_re", "alpha_im"];
    columns.extend([
        "e1_re", "e1_im", "e2_re", "e2_im", "e3_re", "e3_im", "e4_re", "e4_im", "e5_re", "e5_im",
        "unstable",
    ]);
    let mut t = with_columns(header(Command::Transfer, cfg), &columns);
    t.meta_num("delta_rad_s", op.delta)
        .meta("power_policy", policy_label(power_policy(cfg)))
        .meta_num("power_w", op.power)
        .meta("f_grid_hz", grid_label(&grid));
    let past_pole = UVPoint::of(&cfg.params, &op).is_some_and(|pt| pt.stability_margin() < 0.0);
    for f in grid.points() {
        let omega = TWO_PI * f;
        let mut cells = vec![Cell::Num(f), Cell::Num(omega)];
        match coefficients(&cfg.params, &op, omega) {
            Ok(r) => {
                for c in [r.alpha, r.e1, r.e2, r.e3, r.e4, r.e5] {
                    cells.push(Cell::Num(c.re));
                    cells.push(Cell::Num(c.im));
                }
                cells.push(Cell::Flag(past_pole));
            }
            Err(Error::StaticInstability { .. }) => {
                cells.extend((0..12).map(|_| Cell::Empty));
                cells.push(Cell::Flag(true));
            }
            Err(e) => return Err(e.into()),
        }
        t.push(cells);
    }
    Ok(t)
}

fn sweep_spec(cmd: Command, cfg: &RunConfig) -> Result<SweepSpec, CliError> {
    let p = &cfg.params;
    let spec = match cmd {
        Command::Fig2 => {
            let base = SweepSpec::fig2(p);
            let delta = cfg.delta().unwrap_or(p.delta_for_ratio(10.0));
            SweepSpec {
                kind: SweepKind::Power { delta, temperature: temperature(cfg) },
                grid: cfg.grid_or(base.grid),
            }
        }
        Command::Fig3 => {
            let base = SweepSpec::fig3();
            SweepSpec {
                kind: SweepKind::DetuningRatio {
                    temperature: temperature(cfg),
                    power: power_policy(cfg),
                },
                grid: cfg.grid_or(base.grid),
            }
        }
        Command::Fig4 => {
            let base = SweepSpec::fig4();
            let v_list = match &base.kind {
                SweepKind::Temperature { v_list, .. } => cfg.v_list.clone().unwrap_or(v_list.clone()),
                _ => unreachable!("fig4 preset is a temperature sweep"),
            };
            SweepSpec {
                kind: SweepKind::Temperature { v_list, power: power_policy(cfg) },
                grid: cfg.grid_or(base.grid),
            }
        }
        Command::Sweep => {
            let kind = cfg
                .kind
                .ok_or_else(|| CliError::Config("sweep needs kind".into()))?;
            let (lo, hi) = match (cfg.lo, cfg.hi) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => return Err(CliError::Config("sweep needs lo and hi".into())),
            };
            let grid = Grid {
                lo,
                hi,
                n: cfg.n.unwrap_or(101),
                spacing: cfg.spacing.unwrap_or(Spacing::Linear),
            };
            let kind = match kind {
                SweepKindName::Power => SweepKind::Power {
                    delta: cfg.require_delta()?,
                    temperature: temperature(cfg),
                },
                SweepKindName::DetuningRatio => SweepKind::DetuningRatio {
                    temperature: temperature(cfg),
                    power: power_policy(cfg),
                },
                SweepKindName::Temperature => {
                    let v_list = match (&cfg.v_list, cfg.detuning) {
                        (Some(list), _) => list.clone(),
                        (None, Some(_)) => vec![p.ratio_for_delta(cfg.require_delta()?)],
                        (None, None) => {
                            return Err(CliError::Config(
                                "temperature sweep needs v_list or a detuning".into(),
                            ))
                        }
                    };
                    SweepKind::Temperature { v_list, power: power_policy(cfg) }
                }
            };
            SweepSpec { kind, grid }
        }
        _ => unreachable!("not a sweep command"),
    };
    spec.validate()?;
    Ok(spec)
}

fn sweep_csv(cmd: Command, cfg: &RunConfig, table: &SweepTable) -> CsvTable {
    const DUAN_COLS: [&str; 5] = ["total", "total_no_thermal", "thermal", "x_term", "y_term"];
    let spec = &table.spec;
    let mut columns: Vec<&str> = match spec.kind {
        SweepKind::Power { .. } => vec!["power_w"],
        SweepKind::DetuningRatio { .. } => vec!["v"],
        SweepKind::Temperature { .. } => vec!["v", "temperature_k"],
    };
    columns.extend(DUAN_COLS);
    if !matches!(spec.kind, SweepKind::Power { .. }) {
        columns.push("power_w");
    }
    columns.extend(["alpha0_rad_s", "entangled", "unstable"]);

    let mut t = with_columns(header(cmd, cfg), &columns);
    t.meta("sweep_kind", spec.kind.name()).meta("grid", grid_label(&spec.grid));
    match &spec.kind {
        SweepKind::Power { delta, temperature } => {
            t.meta_num("delta_rad_s", *delta).meta_num("temperature_k", *temperature);
        }
        SweepKind::DetuningRatio { temperature, power } => {
            t.meta_num("temperature_k", *temperature).meta("power_policy", policy_label(*power));
        }
        SweepKind::Temperature { v_list, power } => {
            let list: Vec<String> = v_list.iter().map(|&v| fmt_f64(v)).collect();
            t.meta("v_list", list.join(" ")).meta("power_policy", policy_label(*power));
        }
    }

    for row in &table.rows {
        let op = row.point.operating_point();
        let mut cells = match spec.kind {
            SweepKind::Power { .. } => vec![Cell::Num(row.abscissa)],
            SweepKind::DetuningRatio { .. } => vec![Cell::Num(row.abscissa)],
            SweepKind::Temperature { .. } => vec![Cell::Num(row.series_v), Cell::Num(row.abscissa)],
        };
        match row.point.breakdown() {
            Some(d) => cells.extend(
                [d.total, d.total_no_thermal(), d.thermal_term, d.x_term, d.y_term].map(Cell::Num),
            ),
            None => cells.extend((0..DUAN_COLS.len()).map(|_| Cell::Empty)),
        }
        if !matches!(spec.kind, SweepKind::Power { .. }) {
            cells.push(Cell::Num(op.power));
        }
        cells.push(Cell::Num(op.alpha0));
        // Entanglement is only claimed for a steady state that exists.
        match &row.point {
            RowPoint::Stable(d) => cells.extend([Cell::Flag(d.entangled), Cell::Flag(false)]),
            RowPoint::PastPole(_) | RowPoint::Pole { .. } => cells.extend([Cell::Empty, Cell::Flag(true)]),
        }
        t.push(cells);
    }
    t
}

fn validate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let op = operating_point(cfg)?;
    let grid = frequency_grid(cfg, 1e4, 1e8, 5)?;
    let omegas: Vec<f64> = grid.points().iter().map(|f| TWO_PI * f).collect();
    let samples = oracle::frequency_response(&cfg.params, &op, &omegas)?;

    const NAMES: [&str; 4] = ["xsum_xsum", "ysum_xsum", "xdiff_ydiff", "ydiff_ydiff"];
    let mut columns: Vec<String> = vec!["f_hz".into(), "omega_rad_s".into()];
    for name in NAMES {
        for part in ["meas_re", "meas_im", "ana_re", "ana_im", "rel_err"] {
            columns.push(format!("{name}_{part}"));
        }
    }
    columns.extend(["max_rel_err".into(), "pass".into()]);
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = with_columns(header(Command::Validate, cfg), &cols);
    t.meta_num("delta_rad_s", op.delta)
        .meta("power_policy", policy_label(power_policy(cfg)))
        .meta_num("power_w", op.power)
        .meta("f_grid_hz", grid_label(&grid))
        .meta_num("tolerance", GAIN_TOLERANCE);

    let mut worst: f64 = 0.0;
    for s in &samples {
        let mut cells = vec![Cell::Num(s.omega / TWO_PI), Cell::Num(s.omega)];
        let errs = [
            s.rel_error.x_sum_to_x_sum,
            s.rel_error.y_sum_to_x_sum,
            s.rel_error.x_diff_to_y_diff,
            s.rel_error.y_diff_to_y_diff,
        ];
        for (ch, err) in InputChannel::ALL.into_iter().zip(errs) {
            let (m, a) = (s.measured.get(ch), s.analytic.get(ch));
            cells.extend([m.re, m.im, a.re, a.im, err].map(Cell::Num));
        }
        let max = s.max_rel_error();
        worst = worst.max(max);
        cells.extend([Cell::Num(max), Cell::Flag(max <= GAIN_TOLERANCE)]);
        t.push(cells);
    }
    emit(cfg, stdout, &t)?;
    if worst.is_nan() || worst > GAIN_TOLERANCE {
        return Err(CliError::ValidationFailed { max_error: worst, tolerance: GAIN_TOLERANCE });
    }
    Ok(())
}
