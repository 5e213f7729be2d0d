//! Run configuration: a flat JSON object of scalars.
//!
//! Device parameters come either from a named preset or from explicit
//! values (frequencies as value/2π in Hz), never both.

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::{Map, Value};

use omc_core::{Grid, PhysicalParams, PowerPolicy, Spacing};

use crate::CliError;

pub const PRESET_ROSSI2018: &str = "rossi2018";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    mass_kg: Option<f64>,
    zeta_hz: Option<f64>,
    omega_m_hz: Option<f64>,
    g: Option<f64>,
    omega_l_hz: Option<f64>,
    gamma_hz: Option<f64>,
    v: Option<f64>,
    delta_hz: Option<f64>,
    #[serde(rename = "T")]
    temperature: Option<f64>,
    power: Option<PowerValue>,
    kind: Option<String>,
    lo: Option<f64>,
    hi: Option<f64>,
    n: Option<usize>,
    spacing: Option<String>,
    v_list: Option<String>,
    f_lo: Option<f64>,
    f_hi: Option<f64>,
    out: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PowerValue {
    Watts(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Preset(String),
    Explicit,
}

/// Detuning as given by the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detuning {
    /// `v = 2Δ/ζ`.
    Ratio(f64),
    /// `Δ/2π` in Hz.
    Hz(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKindName {
    Power,
    DetuningRatio,
    Temperature,
}

/// Resolved, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ParamSource,
    pub params: PhysicalParams,
    pub detuning: Option<Detuning>,
    pub temperature: Option<f64>,
    pub power: Option<PowerPolicy>,
    pub kind: Option<SweepKindName>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub n: Option<usize>,
    pub spacing: Option<Spacing>,
    pub v_list: Option<Vec<f64>>,
    pub f_lo: Option<f64>,
    pub f_hi: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Detuning in rad/s.
    pub fn delta(&self) -> Option<f64> {
        self.detuning.map(|d| match d {
            Detuning::Ratio(v) => self.params.delta_for_ratio(v),
            Detuning::Hz(f) => 2.0 * std::f64::consts::PI * f,
        })
    }

    pub fn require_delta(&self) -> Result<f64, CliError> {
        self.delta()
            .ok_or_else(|| CliError::Config("missing detuning: give v or delta_hz".into()))
    }

    /// Grid from `lo`/`hi`/`n`/`spacing`, falling back to `default`.
    pub fn grid_or(&self, default: Grid) -> Grid {
        Grid {
            lo: self.lo.unwrap_or(default.lo),
            hi: self.hi.unwrap_or(default.hi),
            n: self.n.unwrap_or(default.n),
            spacing: self.spacing.unwrap_or(default.spacing),
        }
    }

    pub fn source_label(&self) -> String {
        match &self.source {
            ParamSource::Preset(name) => format!("preset:{name}"),
            ParamSource::Explicit => "explicit".into(),
        }
    }
}

/// Parses a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
    resolve(raw)
}

/// Builds a configuration from an already assembled key-value map.
pub fn config_from_map(map: Map<String, Value>) -> Result<RunConfig, CliError> {
    let raw: RawConfig = serde_json::from_value(Value::Object(map))
        .map_err(|e| CliError::Config(format!("parse error: {e}")))?;
    resolve(raw)
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad number '{}' in v_list", s.trim())))
        })
        .collect()
}

fn resolve(raw: RawConfig) -> Result<RunConfig, CliError> {
    let explicit = [
        ("mass_kg", raw.mass_kg),
        ("zeta_hz", raw.zeta_hz),
        ("omega_m_hz", raw.omega_m_hz),
        ("g", raw.g),
        ("omega_l_hz", raw.omega_l_hz),
        ("gamma_hz", raw.gamma_hz),
    ];
    let any_explicit = explicit.iter().any(|(_, v)| v.is_some());
    let (source, params) = match (&raw.preset, any_explicit) {
        (Some(_), true) => {
            return Err(CliError::Config(
                "preset and explicit params are mutually exclusive".into(),
            ))
        }
        (None, false) => return Err(CliError::Config("missing parameter source".into())),
        (Some(name), false) => match name.as_str() {
            PRESET_ROSSI2018 => (ParamSource::Preset(name.clone()), PhysicalParams::rossi2018()),
            other => return Err(CliError::Config(format!("unknown preset '{other}'"))),
        },
        (None, true) => {
            if let Some((key, _)) = explicit.iter().find(|(_, v)| v.is_none()) {
                return Err(CliError::Config(format!("missing explicit parameter '{key}'")));
            }
            let p = PhysicalParams::from_hz(
                raw.mass_kg.unwrap(),
                raw.zeta_hz.unwrap(),
                raw.omega_m_hz.unwrap(),
                raw.g.unwrap(),
                raw.omega_l_hz.unwrap(),
                raw.gamma_hz.unwrap(),
            )?;
            (ParamSource::Explicit, p)
        }
    };

    let detuning = match (raw.v, raw.delta_hz) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("v and delta_hz are mutually exclusive".into()))
        }
        (Some(v), None) => Some(Detuning::Ratio(v)),
        (None, Some(f)) => Some(Detuning::Hz(f)),
        (None, None) => None,
    };

    let power = match raw.power {
        None => None,
        Some(PowerValue::Watts(w)) => Some(PowerPolicy::Explicit(w)),
        Some(PowerValue::Named(s)) if s == "optimal" => Some(PowerPolicy::Optimal),
        Some(PowerValue::Named(s)) => match s.parse::<f64>() {
            Ok(w) => Some(PowerPolicy::Explicit(w)),
            Err(_) => return Err(CliError::Config(format!("power must be a number or 'optimal', got '{s}'"))),
        },
    };

    let kind = match raw.kind.as_deref() {
        None => None,
        Some("power") => Some(SweepKindName::Power),
        Some("detuning_ratio") => Some(SweepKindName::DetuningRatio),
        Some("temperature") => Some(SweepKindName::Temperature),
        Some(other) => return Err(CliError::Config(format!("unknown sweep kind '{other}'"))),
    };

    let spacing = match raw.spacing.as_deref() {
        None => None,
        Some("linear") => Some(Spacing::Linear),
        Some("log") => Some(Spacing::Log),
        Some(other) => return Err(CliError::Config(format!("unknown spacing '{other}'"))),
    };

    Ok(RunConfig {
        source,
        params,
        detuning,
        temperature: raw.temperature,
        power,
        kind,
        lo: raw.lo,
        hi: raw.hi,
        n: raw.n,
        spacing,
        v_list: raw.v_list.as_deref().map(parse_f64_list).transpose()?,
        f_lo: raw.f_lo,
        f_hi: raw.f_hi,
        out: raw.out.map(PathBuf::from),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_config_is_valid() {
        let cfg = parse_config(r#"{"preset": "rossi2018", "v": 10, "T": 300}"#).unwrap();
        assert_eq!(cfg.params, PhysicalParams::rossi2018());
        assert_eq!(cfg.detuning, Some(Detuning::Ratio(10.0)));
        assert_eq!(cfg.temperature, Some(300.0));
        assert_eq!(cfg.delta(), Some(5.0 * cfg.params.zeta));
    }

    #[test]
    fn preset_and_explicit_conflict() {
        let err = parse_config(r#"{"preset": "rossi2018", "mass_kg": 1e-12}"#).unwrap_err();
        assert_eq!(err.to_string(), "preset and explicit params are mutually exclusive");
    }

    #[test]
    fn missing_source() {
        let err = parse_config(r#"{"v": 10}"#).unwrap_err();
        assert_eq!(err.to_string(), "missing parameter source");
    }

    #[test]
    fn unknown_keys_are_rejected_with_context() {
        let err = parse_config("{\n  \"preset\": \"rossi2018\",\n  \"bogus\": 1\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn explicit_params_round_trip_preset() {
        let cfg = parse_config(
            r#"{"mass_kg": 2.3e-12, "zeta_hz": 15.9e6, "omega_m_hz": 1.14e6, "g": 4.45e17,
                "omega_l_hz": 3.77e14, "gamma_hz": 1.09e-3, "delta_hz": 1e6, "power": "optimal"}"#,
        )
        .unwrap();
        assert_eq!(cfg.params, PhysicalParams::rossi2018());
        assert_eq!(cfg.source, ParamSource::Explicit);
        assert_eq!(cfg.power, Some(PowerPolicy::Optimal));
        assert!((cfg.delta().unwrap() - 2.0 * std::f64::consts::PI * 1e6).abs() < 1e-6);
    }

    #[test]
    fn invalid_explicit_params_are_delegated() {
        let err = parse_config(
            r#"{"mass_kg": 0, "zeta_hz": 15.9e6, "omega_m_hz": 1.14e6, "g": 4.45e17,
                "omega_l_hz": 3.77e14, "gamma_hz": 1.09e-3}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("non-positive mass"));
        let err = parse_config(r#"{"mass_kg": 1e-12}"#).unwrap_err();
        assert!(err.to_string().contains("zeta_hz"));
    }

    #[test]
    fn sweep_options() {
        let cfg = parse_config(
            r#"{"preset": "rossi2018", "kind": "temperature", "v_list": "2, 6,10",
                "lo": 0, "hi": 500, "n": 6, "spacing": "linear", "power": 0.25}"#,
        )
        .unwrap();
        assert_eq!(cfg.kind, Some(SweepKindName::Temperature));
        assert_eq!(cfg.v_list, Some(vec![2.0, 6.0, 10.0]));
        assert_eq!(cfg.power, Some(PowerPolicy::Explicit(0.25)));
        assert!(parse_config(r#"{"preset": "rossi2018", "spacing": "cubic"}"#).is_err());
        assert!(parse_config(r#"{"preset": "rossi2018", "v": 1, "delta_hz": 1}"#).is_err());
    }
}
