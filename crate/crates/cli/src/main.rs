use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use omc_cli::{config_from_map, parse_config, run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "omc", version, about = "Optomechanical entanglement calculator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the steady-state operating point.
    Steady(Opts),
    /// Transfer coefficients over a frequency grid (CSV).
    Transfer(Opts),
    /// Duan sum at one operating point.
    Duan(Opts),
    /// Optimal power and the minimum Duan sum.
    Optimum(Opts),
    /// Duan sum against input power (CSV).
    Fig2(Opts),
    /// Minimum Duan sum against detuning ratio (CSV).
    Fig3(Opts),
    /// Minimum Duan sum against temperature (CSV).
    Fig4(Opts),
    /// Custom sweep (CSV).
    Sweep(Opts),
    /// Time-domain check of the transfer coefficients (CSV).
    Validate(Opts),
}

/// Every flag mirrors a config-file key and overrides it.
#[derive(Args, Debug, Default)]
struct Opts {
    /// JSON config file; flags take precedence over its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mass_kg: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    zeta_hz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega_m_hz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega_l_hz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_hz: Option<f64>,
    /// Detuning ratio 2Δ/ζ.
    #[arg(long, allow_hyphen_values = true)]
    v: Option<f64>,
    /// Detuning Δ/2π [Hz].
    #[arg(long, allow_hyphen_values = true)]
    delta_hz: Option<f64>,
    /// Temperature [K].
    #[arg(long = "T", allow_hyphen_values = true)]
    temperature: Option<f64>,
    /// Per-arm input power [W] or "optimal".
    #[arg(long, allow_hyphen_values = true)]
    power: Option<String>,
    /// Sweep kind: power, detuning_ratio or temperature.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// linear or log.
    #[arg(long)]
    spacing: Option<String>,
    /// Comma-separated detuning ratios for temperature sweeps.
    #[arg(long)]
    v_list: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    f_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    f_hi: Option<f64>,
    /// Output file for tables; stdout when absent.
    #[arg(long)]
    out: Option<String>,
}

impl Opts {
    fn flag_map(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut num = |k: &str, v: Option<f64>| {
            if let Some(x) = v {
                m.insert(k.into(), Value::from(x));
            }
        };
        num("mass_kg", self.mass_kg);
        num("zeta_hz", self.zeta_hz);
        num("omega_m_hz", self.omega_m_hz);
        num("g", self.g);
        num("omega_l_hz", self.omega_l_hz);
        num("gamma_hz", self.gamma_hz);
        num("v", self.v);
        num("delta_hz", self.delta_hz);
        num("T", self.temperature);
        num("lo", self.lo);
        num("hi", self.hi);
        num("f_lo", self.f_lo);
        num("f_hi", self.f_hi);
        let strings = [
            ("preset", &self.preset),
            ("kind", &self.kind),
            ("spacing", &self.spacing),
            ("v_list", &self.v_list),
            ("out", &self.out),
            ("power", &self.power),
        ];
        for (k, v) in strings {
            if let Some(s) = v {
                m.insert(k.into(), Value::from(s.clone()));
            }
        }
        if let Some(n) = self.n {
            m.insert("n".into(), Value::from(n));
        }
        m
    }

    fn resolve(&self) -> Result<RunConfig, CliError> {
        let flags = self.flag_map();
        let Some(path) = &self.config else {
            return config_from_map(flags);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        // Parse the file alone first so errors carry line context.
        let file_cfg = parse_config(&text);
        if flags.is_empty() {
            return file_cfg;
        }
        if let Err(e @ CliError::Config(_)) = &file_cfg {
            if e.to_string().starts_with("parse error") {
                return file_cfg;
            }
        }
        let mut merged: Map<String, Value> = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("parse error: {e}")))?;
        // A flag-level parameter source replaces the file's.
        let explicit = ["mass_kg", "zeta_hz", "omega_m_hz", "g", "omega_l_hz", "gamma_hz"];
        if flags.contains_key("preset") {
            merged.retain(|k, _| !explicit.contains(&k.as_str()));
        } else if explicit.iter().any(|k| flags.contains_key(*k)) {
            merged.remove("preset");
        }
        if flags.contains_key("v") {
            merged.remove("delta_hz");
        } else if flags.contains_key("delta_hz") {
            merged.remove("v");
        }
        merged.extend(flags);
        config_from_map(merged)
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("OMC_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("OMC_THREADS must be a positive integer, got '{raw}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, opts) = match cli.command {
        Cmd::Steady(o) => (Command::Steady, o),
        Cmd::Transfer(o) => (Command::Transfer, o),
        Cmd::Duan(o) => (Command::Duan, o),
        Cmd::Optimum(o) => (Command::Optimum, o),
        Cmd::Fig2(o) => (Command::Fig2, o),
        Cmd::Fig3(o) => (Command::Fig3, o),
        Cmd::Fig4(o) => (Command::Fig4, o),
        Cmd::Sweep(o) => (Command::Sweep, o),
        Cmd::Validate(o) => (Command::Validate, o),
    };
    let result = configure_threads()
        .and_then(|_| opts.resolve())
        .and_then(|cfg| {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            run(cmd, &cfg, &mut lock)?;
            lock.flush()?;
            Ok(())
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
