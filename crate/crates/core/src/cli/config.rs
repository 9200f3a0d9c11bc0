//! Run configuration: JSON file format, presets, layering and value parsers.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classmap::KickRule;

/// Every tunable parameter of a run. Absent fields fall through to the next
/// layer: flags over config file over preset over built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Stochasticity parameter K = K_eff(0).
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub stochasticity: Option<f64>,
    /// Kick strength k of the unit-height pulse.
    #[serde(rename = "k", skip_serializing_if = "Option::is_none")]
    pub kick_strength: Option<f64>,
    /// Pulse duty η = t_p/T.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Momentum boundary override.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar_eff: Option<f64>,
    /// `square`, `delta` or `csv:<path>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulse: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<KickRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kicks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_l_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,

    /// Poincaré grid as `[n_phi, n_rho]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
    /// Adds trajectories started exactly on ±ρ_b.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_line: Option<bool>,

    /// `[lo, hi, step]` for the K_eff table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_range: Option<[f64; 3]>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_beta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulse_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kick_period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_depth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_offset: Option<f64>,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr, $($f:ident),* $(,)?) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// Fields set in `top` win over those in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay_fields!(
            self,
            top,
            stochasticity,
            kick_strength,
            eta,
            rho_b,
            hbar_eff,
            pulse,
            rule,
            kicks,
            seed,
            atoms,
            sigma_rho,
            rho_l,
            rho_l_values,
            record_every,
            bin_width,
            grid,
            rho_min,
            rho_max,
            boundary_line,
            rho_range,
            grid_size,
            n_beta,
            beta,
            substeps,
            mass,
            wavelength,
            pulse_width,
            kick_period,
            potential_depth,
            frequency_offset,
        )
    }

    /// Built-in defaults: the caesium experiment with K = 5.3, η = 0.15,
    /// σ_ρ = 4, 120 kicks.
    pub fn defaults() -> RunConfig {
        RunConfig {
            stochasticity: Some(5.3),
            eta: Some(0.15),
            hbar_eff: Some(1.0),
            pulse: Some("square".into()),
            kicks: Some(120),
            seed: Some(0),
            atoms: Some(100_000),
            sigma_rho: Some(4.0),
            rho_l: Some(0.0),
            record_every: Some(20),
            bin_width: Some(1.0),
            grid: Some([20, 20]),
            boundary_line: Some(false),
            grid_size: Some(1024),
            n_beta: Some(16),
            ..RunConfig::default()
        }
    }
}

/// Named parameter sets for the standard figures.
pub fn preset(name: &str) -> Option<RunConfig> {
    let rho_b = 13.5 * PI;
    match name {
        "fig1-left" => Some(RunConfig {
            stochasticity: Some(5.3),
            rho_b: Some(rho_b),
            pulse: Some("square".into()),
            rule: Some(KickRule::Explicit),
            kicks: Some(120),
            grid: Some([20, 20]),
            rho_min: Some(-rho_b),
            rho_max: Some(rho_b),
            boundary_line: Some(false),
            ..RunConfig::default()
        }),
        "fig1-right" => Some(RunConfig {
            stochasticity: Some(5.3),
            rho_b: Some(rho_b),
            pulse: Some("square".into()),
            rule: Some(KickRule::Explicit),
            kicks: Some(120),
            grid: Some([20, 20]),
            rho_min: Some(-rho_b - 8.0),
            rho_max: Some(-rho_b + 8.0),
            boundary_line: Some(true),
            ..RunConfig::default()
        }),
        "fig3-sweep" => Some(RunConfig {
            stochasticity: Some(5.3),
            eta: Some(0.15),
            pulse: Some("square".into()),
            rule: Some(KickRule::Canonical),
            kicks: Some(120),
            atoms: Some(100_000),
            sigma_rho: Some(4.0),
            rho_l_values: Some((0..=18).map(|i| 4.0 * i as f64).collect()),
            seed: Some(2003),
            ..RunConfig::default()
        }),
        _ => None,
    }
}

pub const PRESETS: [&str; 3] = ["fig1-left", "fig1-right", "fig3-sweep"];

/// Reads a run configuration, or the `resolved` block of a run manifest.
pub fn load_config(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
    if let Some(resolved) = value.get("resolved") {
        return serde_json::from_value(resolved.clone())
            .map_err(|e| format!("manifest {} field 'resolved': {e}", path.display()));
    }
    serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
}

/// Parses a number with optional `pi` multiple: `13.5pi`, `-pi`, `2*pi`, `42.5`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    let stripped = lower.strip_suffix("pi").or_else(|| lower.strip_suffix('π'));
    match stripped {
        Some(coeff) => {
            let c = coeff.trim().trim_end_matches('*').trim();
            let v = match c {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => c.parse::<f64>().map_err(|_| format!("invalid number '{s}'"))?,
            };
            Ok(v * PI)
        }
        None => t.parse::<f64>().map_err(|_| format!("invalid number '{s}'")),
    }
}

/// `lo:hi:step` (inclusive of `hi` when it lands on the grid) or a
/// comma-separated list.
pub fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range '{s}' must be lo:hi:step"));
        }
        let lo = parse_angle(parts[0])?;
        let hi = parse_angle(parts[1])?;
        let step = parse_angle(parts[2])?;
        if !(step > 0.0) || !(hi >= lo) {
            return Err(format!("range '{s}' needs step > 0 and hi >= lo"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| lo + step * i as f64).collect())
    } else {
        s.split(',').map(parse_angle).collect()
    }
}

/// `lo:hi:step` as a triple.
pub fn parse_range(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range '{s}' must be lo:hi:step"));
    }
    Ok([parse_angle(parts[0])?, parse_angle(parts[1])?, parse_angle(parts[2])?])
}

/// `20x20`.
pub fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid '{s}' must look like 20x20"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("invalid grid '{s}'"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("invalid grid '{s}'"))?;
    if a == 0 || b == 0 {
        return Err(format!("grid '{s}' must be non-empty"));
    }
    Ok([a, b])
}
