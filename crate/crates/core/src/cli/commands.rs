//! Subcommand pipelines. Each one reads a fully resolved [`RunConfig`],
//! writes its artifacts under the output directory and reports a summary.

use std::f64::consts::TAU;
use std::path::Path;

use serde_json::json;

use super::config::RunConfig;
use super::output::{num, render_csv, write_atomic, OutputDigest};
use super::{CliError, Outcome};
use crate::classmap::{initial_grid, poincare_section_with, KickRule, PhaseState};
use crate::ensemble::{
    asymmetry_sweep, default_range, diffusion_coefficient, displacement_series, evolve_with_stats_from, histogram,
    moments, sample_initial, EnsembleConfig, KickStats,
};
use crate::error::Error;
use crate::pulses::{KickProfile, PulseShape};
use crate::quantum::{break_time_estimate, default_substeps, localization_length, run_quantum, QuantumConfig};
use crate::units::{scale_params, PhysicalParams, ScaledParams, CAESIUM_D2_WAVELENGTH, CAESIUM_MASS};

type CliResult<T> = Result<T, CliError>;

fn missing(name: &str) -> CliError {
    CliError::from(Error::Config(format!("missing parameter '{name}'")))
}

pub(crate) fn dispatch(command: &str, cfg: &RunConfig, out_dir: &Path) -> CliResult<Outcome> {
    match command {
        "units" => units(cfg, out_dir),
        "keff" => keff(cfg, out_dir),
        "poincare" => poincare(cfg, out_dir),
        "ensemble" => ensemble(cfg, out_dir),
        "sweep" => sweep(cfg, out_dir),
        "quantum" => quantum(cfg, out_dir),
        other => Err(CliError::usage(format!("unknown command '{other}'"))),
    }
}

/// Reads a two-column `tau,f` pulse file. Lines starting with `#` and a
/// non-numeric header row are skipped.
pub fn read_pulse_csv(path: &Path) -> crate::Result<PulseShape> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot read pulse file {}: {e}", path.display())))?;
    let (mut times, mut amplitudes) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Config(format!("pulse file {}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(Error::Config(format!(
                "pulse file {} row {}: expected 2 columns, got {}",
                path.display(),
                line + 1,
                record.len()
            )));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(t), Ok(f)) => {
                times.push(t);
                amplitudes.push(f);
            }
            _ if times.is_empty() && line == 0 => continue,
            _ => {
                return Err(Error::Config(format!(
                    "pulse file {} row {}: non-numeric value",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    PulseShape::sampled(times, amplitudes)
}

/// Pulse envelope named by the configuration. A pinned `rho_b` fixes the
/// square-pulse duty to `2π/ρ_b`.
fn resolve_pulse(cfg: &RunConfig) -> CliResult<PulseShape> {
    let name = cfg.pulse.as_deref().unwrap_or("square");
    match name {
        "square" => {
            let duty = match cfg.rho_b {
                Some(rb) if rb > TAU => TAU / rb,
                Some(rb) => {
                    return Err(Error::Domain(format!("rho_b must exceed 2π (duty < 1), got {rb}")).into());
                }
                None => cfg.eta.ok_or_else(|| missing("eta"))?,
            };
            if !(duty > 0.0 && duty < 1.0) {
                return Err(Error::Domain(format!("eta must lie in (0, 1), got {duty}")).into());
            }
            Ok(PulseShape::square(duty)?)
        }
        "delta" => Ok(PulseShape::Delta),
        other => match other.strip_prefix("csv:") {
            Some(path) => Ok(read_pulse_csv(Path::new(path))?),
            None => Err(CliError::usage(format!(
                "unknown pulse '{other}' (expected square, delta or csv:<path>)"
            ))),
        },
    }
}

/// Kick strength `k`, from `k` itself or from `K = k·∫f`.
fn resolve_k(cfg: &RunConfig, pulse: &PulseShape) -> CliResult<f64> {
    if let Some(k) = cfg.kick_strength {
        return Ok(k);
    }
    let big_k = cfg.stochasticity.ok_or_else(|| missing("K"))?;
    let area = pulse.area();
    if !(area > 0.0) {
        return Err(Error::Domain("pulse area must be > 0 to convert K to k".into()).into());
    }
    Ok(big_k / area)
}

struct Setup {
    pulse: PulseShape,
    profile: KickProfile,
    scaled: Option<ScaledParams>,
}

fn setup(cfg: &RunConfig, rho_l: f64) -> CliResult<Setup> {
    let pulse = resolve_pulse(cfg)?;
    let k = resolve_k(cfg, &pulse)?;
    let profile = match (&pulse, cfg.rho_b) {
        (PulseShape::Square { duty }, Some(rb)) => KickProfile::sinc(k * duty, rb)?,
        _ => KickProfile::new(pulse.clone(), k)?,
    };
    let hbar = cfg.hbar_eff.unwrap_or(1.0);
    let scaled = match pulse.equivalent_duty() {
        Some(duty) if duty > 0.0 && duty < 1.0 => {
            let s = ScaledParams::dimensionless(profile.peak(), duty, hbar, rho_l)?;
            Some(match profile.first_zero() {
                Some(rb) => s.with_boundary(rb)?,
                None => s,
            })
        }
        _ => None,
    };
    Ok(Setup { pulse, profile, scaled })
}

fn rule_or(cfg: &RunConfig, default: KickRule) -> KickRule {
    cfg.rule.unwrap_or(default)
}

fn write(out_dir: &Path, name: &str, bytes: &[u8]) -> CliResult<OutputDigest> {
    Ok(write_atomic(&out_dir.join(name), bytes)?)
}

fn units(cfg: &RunConfig, out_dir: &Path) -> CliResult<Outcome> {
    let mut p = PhysicalParams {
        atom_mass: cfg.mass.unwrap_or(CAESIUM_MASS),
        wavelength: cfg.wavelength.unwrap_or(CAESIUM_D2_WAVELENGTH),
        potential_depth: 0.0,
        pulse_width: cfg.pulse_width.ok_or_else(|| missing("pulse_width (--tp)"))?,
        kick_period: cfg.kick_period.ok_or_else(|| missing("kick_period (--T)"))?,
        frequency_offset: cfg.frequency_offset.unwrap_or(0.0),
    };
    p.potential_depth = match (cfg.potential_depth, cfg.stochasticity) {
        (Some(v0), _) => v0,
        (None, Some(k)) => p.depth_for_stochasticity(k)?,
        (None, None) => return Err(missing("potential_depth (--v0) or K")),
    };
    let s = scale_params(&p)?;
    let body = json!({ "physical": p, "scaled": s });
    let bytes = serde_json::to_vec_pretty(&body).map_err(|e| CliError::from(Error::Io(e.into())))?;
    let digest = write(out_dir, "units.json", &bytes)?;
    let report = vec![
        format!("omega_R  = {:.6e} rad/s", s.recoil_frequency),
        format!("hbar_eff = {:.6}", s.hbar_eff),
        format!("k        = {:.6}", s.kick_amplitude),
        format!("K        = {:.6}", s.stochasticity),
        format!("eta      = {:.6}", s.duty),
        format!("rho_b    = {:.6}", s.boundary_momentum),
        format!("rho_L    = {:.6}", s.lattice_momentum),
        format!("V0       = {:.6e} J", p.potential_depth),
    ];
    Ok(Outcome {
        outputs: vec![digest],
        results: json!({ "physical": p }),
        scaled: Some(s),
        report,
    })
}

fn keff(cfg: &RunConfig, out_dir: &Path) -> CliResult<Outcome> {
    let st = setup(cfg, 0.0)?;
    let [lo, hi, step] = match cfg.rho_range {
        Some(r) => r,
        None => {
            let scale = st.profile.first_zero().unwrap_or(50.0);
            [-3.0 * scale, 3.0 * scale, scale / 100.0]
        }
    };
    if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(CliError::usage("rho range needs step > 0 and hi >= lo"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let rows = (0..=n).map(|i| {
        let rho = lo + step * i as f64;
        vec![num(rho), num(st.profile.amplitude(rho)), num(st.profile.phase(rho))]
    });
    let bytes = render_csv(&["rho", "amplitude", "phase"], rows)?;
    let digest = write(out_dir, "keff.csv", &bytes)?;
    let results = json!({
        "peak": st.profile.peak(),
        "first_zero": st.profile.first_zero(),
        "symmetric": st.profile.is_symmetric(),
        "rows": n + 1,
    });
    let report = vec![
        format!("K_eff(0)   = {}", st.profile.peak()),
        match st.profile.first_zero() {
            Some(z) => format!("first zero = {z}"),
            None => "first zero = none".to_string(),
        },
        format!("keff.csv: {} rows", n + 1),
    ];
    Ok(Outcome {
        outputs: vec![digest],
        results,
        scaled: st.scaled,
        report,
    })
}

fn poincare(cfg: &RunConfig, out_dir: &Path) -> CliResult<Outcome> {
    let st = setup(cfg, 0.0)?;
    let rule = rule_or(cfg, KickRule::Explicit);
    let n = cfg.kicks.ok_or_else(|| missing("kicks"))?;
    let [n_phi, n_rho] = cfg.grid.ok_or_else(|| missing("grid"))?;
    let rb = st.profile.first_zero();
    let half = rb.unwrap_or(TAU);
    let lo = cfg.rho_min.unwrap_or(-half);
    let hi = cfg.rho_max.unwrap_or(half);
    if !(lo < hi) {
        return Err(CliError::usage(format!("rho_min ({lo}) must be below rho_max ({hi})")));
    }
    let mut initials = initial_grid(n_phi, n_rho, lo, hi);
    if cfg.boundary_line.unwrap_or(false) {
        let rb = rb.ok_or_else(|| CliError::usage("boundary_line needs a pulse with a momentum boundary"))?;
        for edge in [-rb, rb] {
            initials.extend((0..n_phi).map(|i| PhaseState::new(TAU * (i as f64 + 0.5) / n_phi as f64, edge)));
        }
    }
    let points = poincare_section_with(&initials, &st.profile, rule, n);
    let rows = points
        .iter()
        .map(|p| vec![p.trajectory.to_string(), p.kick.to_string(), num(p.phi), num(p.rho)]);
    let bytes = render_csv(&["trajectory_id", "kick", "phi", "rho"], rows)?;
    let digest = write(out_dir, "poincare.csv", &bytes)?;
    let max_abs = points.iter().map(|p| p.rho.abs()).fold(0.0, f64::max);
    let results = json!({
        "trajectories": initials.len(),
        "points": points.len(),
        "rule": rule,
        "rho_b": rb,
        "max_abs_rho": max_abs,
    });
    let report = vec![
        format!("{} trajectories x {} kicks ({rule} rule)", initials.len(), n),
        format!("max |rho| = {max_abs}"),
    ];
    Ok(Outcome {
        outputs: vec![digest],
        results,
        scaled: st.scaled,
        report,
    })
}

fn ensemble_config(cfg: &RunConfig, rho_l: f64, rule: KickRule) -> CliResult<EnsembleConfig> {
    let e = EnsembleConfig {
        n_atoms: cfg.atoms.ok_or_else(|| missing("atoms"))?,
        sigma_rho: cfg.sigma_rho.ok_or_else(|| missing("sigma_rho"))?,
        rho_l,
        n_kicks: cfg.kicks.ok_or_else(|| missing("kicks"))?,
        seed: cfg.seed.unwrap_or(0),
        rule,
    };
    e.validate()?;
    Ok(e)
}

fn ensemble(cfg: &RunConfig, out_dir: &Path) -> CliResult<Outcome> {
    let rho_l = cfg.rho_l.unwrap_or(0.0);
    let st = setup(cfg, rho_l)?;
    let rule = rule_or(cfg, KickRule::Canonical);
    let ecfg = ensemble_config(cfg, rho_l, rule)?;
    let record_every = cfg.record_every.unwrap_or(ecfg.n_kicks.max(1));
    if record_every == 0 {
        return Err(CliError::usage("record_every must be >= 1"));
    }
    let bin_width = cfg.bin_width.unwrap_or(1.0);
    let (lo, hi) = default_range(&st.profile);
    let range = (lo + rho_l.min(0.0), hi + rho_l.max(0.0));

    let mut states = sample_initial(&ecfg)?;
    let mut stats: Vec<KickStats> = Vec::with_capacity(ecfg.n_kicks + 1);
    let mut dist_rows: Vec<Vec<String>> = Vec::new();
    let mut push_hist = |kick: usize, states: &[PhaseState]| -> CliResult<()> {
        let h = histogram(states, bin_width, range)?;
        dist_rows.push(vec![
            kick.to_string(),
            num(f64::NEG_INFINITY),
            num(h.bin_edges[0]),
            num(h.underflow),
        ]);
        for (e, c) in h.bin_edges.windows(2).zip(&h.counts) {
            dist_rows.push(vec![kick.to_string(), num(e[0]), num(e[1]), num(*c)]);
        }
        let last = *h.bin_edges.last().unwrap_or(&range.1);
        dist_rows.push(vec![kick.to_string(), num(last), num(f64::INFINITY), num(h.overflow)]);
        Ok(())
    };
    push_hist(0, &states)?;
    let origin: Vec<f64> = states.iter().map(|s| s.rho).collect();
    let mut moment_rows = vec![moment_row(0, &moments(&states, rho_l)?, 0.0)];
    let mut done = 0;
    while done < ecfg.n_kicks {
        let todo = record_every.min(ecfg.n_kicks - done);
        let seg = evolve_with_stats_from(&mut states, &origin, done, &st.profile, rule, todo)?;
        if stats.is_empty() {
            stats.push(seg[0]);
        }
        stats.extend_from_slice(&seg[1..]);
        done += todo;
        push_hist(done, &states)?;
        let spread = seg.last().map_or(0.0, |s| s.spread);
        moment_rows.push(moment_row(done, &moments(&states, rho_l)?, spread));
    }

    let d = diffusion_coefficient(&displacement_series(&stats), None).ok();
    let final_m = moments(&states, rho_l)?;
    let dist = render_csv(&["kick", "bin_lo", "bin_hi", "count"], dist_rows)?;
    let mom = render_csv(
        &["kick", "mean", "variance", "energy", "asymmetry", "spread"],
        moment_rows,
    )?;
    let outputs = vec![
        write(out_dir, "distributions.csv", &dist)?,
        write(out_dir, "moments.csv", &mom)?,
    ];
    let results = json!({
        "diffusion_coefficient": d,
        "final": final_m,
        "rule": rule,
        "n_atoms": ecfg.n_atoms,
        "seed": ecfg.seed,
    });
    let mut report = vec![
        format!(
            "{} atoms, {} kicks ({rule} rule), seed {}",
            ecfg.n_atoms, ecfg.n_kicks, ecfg.seed
        ),
        format!(
            "final <rho> = {:.6}, asymmetry = {:.6}, energy = {:.6}",
            final_m.mean, final_m.asymmetry, final_m.energy
        ),
    ];
    if let Some(d) = d {
        report.push(format!("D = {d:.6}"));
    }
    Ok(Outcome {
        outputs,
        results,
        scaled: st.scaled,
        report,
    })
}

fn moment_row(kick: usize, m: &crate::ensemble::Moments, spread: f64) -> Vec<String> {
    vec![
        kick.to_string(),
        num(m.mean),
        num(m.variance),
        num(m.energy),
        num(m.asymmetry),
        num(spread),
    ]
}

fn sweep(cfg: &RunConfig, out_dir: &Path) -> CliResult<Outcome> {
    let values = cfg
        .rho_l_values
        .clone()
        .ok_or_else(|| missing("rho_l_values (--rho-l lo:hi:step)"))?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::usage("rho_l values must be finite and non-empty"));
    }
    let st = setup(cfg, 0.0)?;
    let rule = rule_or(cfg, KickRule::Canonical);
    let template = ensemble_config(cfg, 0.0, rule)?;
    let points = asymmetry_sweep(&values, &template, &st.profile)?;
    let rows = points.iter().map(|p| {
        vec![
            num(p.rho_l),
            num(p.mean),
            num(p.asymmetry),
            num(p.energy),
            p.n_atoms.to_string(),
            p.seed.to_string(),
            num(p.standard_error),
        ]
    });
    let bytes = render_csv(
        &[
            "rho_l",
            "mean",
            "asymmetry",
            "energy",
            "n_atoms",
            "seed",
            "standard_error",
        ],
        rows,
    )?;
    let digest = write(out_dir, "sweep.csv", &bytes)?;
    let mut report = vec![format!(
        "{} points, {} atoms each, {} kicks ({rule} rule)",
        points.len(),
        template.n_atoms,
        template.n_kicks
    )];
    report.extend(points.iter().map(|p| {
        format!(
            "rho_L = {:8.3}  asymmetry = {:+.4} ± {:.4}",
            p.rho_l, p.asymmetry, p.standard_error
        )
    }));
    let results = json!({ "rule": rule, "points": points });
    Ok(Outcome {
        outputs: vec![digest],
        results,
        scaled: st.scaled,
        report,
    })
}

fn quantum(cfg: &RunConfig, out_dir: &Path) -> CliResult<Outcome> {
    let rho_l = cfg.rho_l.unwrap_or(0.0);
    let st = setup(cfg, rho_l)?;
    let qcfg = QuantumConfig {
        grid_size: cfg.grid_size.ok_or_else(|| missing("grid_size"))?,
        k: st.profile.k(),
        pulse: st.pulse.clone(),
        hbar_eff: cfg.hbar_eff.ok_or_else(|| missing("hbar_eff"))?,
        n_kicks: cfg.kicks.ok_or_else(|| missing("kicks"))?,
        n_beta: cfg.n_beta.ok_or_else(|| missing("n_beta"))?,
        beta: cfg.beta,
        sigma_rho: cfg.sigma_rho.unwrap_or(0.0),
        rho_l,
        seed: cfg.seed.unwrap_or(0),
        substeps: cfg.substeps,
    };
    let stats = run_quantum(&qcfg)?;
    let substeps = qcfg
        .substeps
        .unwrap_or_else(|| default_substeps(&qcfg.pulse, qcfg.grid_size, qcfg.hbar_eff));
    let rows = stats.iter().map(|s| {
        vec![
            s.kick.to_string(),
            num(s.mean_rho),
            num(s.energy),
            qcfg.n_beta.to_string(),
        ]
    });
    let bytes = render_csv(&["kick", "mean_rho", "energy", "n_beta"], rows)?;
    let digest = write(out_dir, "quantum.csv", &bytes)?;
    let k_stoch = qcfg.stochasticity();
    let t_break = break_time_estimate(k_stoch, qcfg.hbar_eff).ok();
    let ell = localization_length(k_stoch, qcfg.hbar_eff);
    let norm_drift = stats.iter().map(|s| s.norm_drift).fold(0.0, f64::max);
    let last = stats.last().copied();
    let results = json!({
        "break_time": t_break,
        "localization_length": ell,
        "substeps": substeps,
        "norm_drift": norm_drift,
        "final": last,
    });
    let mut report = vec![
        format!(
            "{} samples, grid {}, {} kicks, {} substeps",
            qcfg.n_beta, qcfg.grid_size, qcfg.n_kicks, substeps
        ),
        format!("localization length = {ell:.4}"),
        format!("max norm drift = {norm_drift:.3e}"),
    ];
    if let Some(t) = t_break {
        report.push(format!("break time = {t:.4} kicks"));
    }
    if let Some(s) = last {
        report.push(format!("final <rho> = {:.6}, energy = {:.6}", s.mean_rho, s.energy));
    }
    Ok(Outcome {
        outputs: vec![digest],
        results,
        scaled: st.scaled,
        report,
    })
}
