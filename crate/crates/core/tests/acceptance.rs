//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p pulsed-rotor --test acceptance`; pass criterion
//! numbers as arguments to run a subset.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pulsed_rotor::classmap::{initial_grid, iterate_with, KickRule, PhaseState};
use pulsed_rotor::ensemble::{
    asymmetry_sweep, diffusion_coefficient, displacement_series, evolve_with_stats, sample_initial, EnsembleConfig,
};
use pulsed_rotor::pulses::{keff_general, keff_square, KickProfile, PulseShape};
use pulsed_rotor::quantum::{break_time_estimate, run_quantum, QuantumConfig};
use pulsed_rotor::units::{boundary_momentum, scale_params, PhysicalParams};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria = [
        Criterion {
            id: 1,
            name: "unit scaling",
            budget: Some(Duration::from_secs(1)),
            run: unit_scaling,
        },
        Criterion {
            id: 2,
            name: "boundary identity",
            budget: Some(Duration::from_secs(1)),
            run: boundary_identity,
        },
        Criterion {
            id: 3,
            name: "K_eff oracles",
            budget: Some(Duration::from_secs(1)),
            run: keff_oracles,
        },
        Criterion {
            id: 4,
            name: "phase-portrait confinement",
            budget: Some(Duration::from_secs(5)),
            run: confinement,
        },
        Criterion {
            id: 5,
            name: "asymmetry sign structure",
            budget: Some(Duration::from_secs(120)),
            run: sign_structure,
        },
        Criterion {
            id: 6,
            name: "classical diffusion",
            budget: Some(Duration::from_secs(30)),
            run: classical_diffusion,
        },
        Criterion {
            id: 7,
            name: "quantum unitarity and localization",
            budget: Some(Duration::from_secs(120)),
            run: localization,
        },
        Criterion {
            id: 8,
            name: "quantum resonance",
            budget: Some(Duration::from_secs(10)),
            run: resonance,
        },
        Criterion {
            id: 9,
            name: "CLI determinism",
            budget: None,
            run: determinism,
        },
    ];
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| selected.is_empty() || selected.contains(&c.id))
    {
        let t0 = Instant::now();
        let v = (c.run)();
        let elapsed = t0.elapsed();
        let in_budget = c.budget.is_none_or(|b| elapsed <= b);
        let pass = v.pass && in_budget;
        if !pass {
            failed += 1;
        }
        let budget = match c.budget {
            Some(b) if !in_budget => format!(", over budget {:.0?}", b),
            _ => String::new(),
        };
        println!(
            "criterion {} {:<36} {}  [{}] ({:.2?}{budget})",
            c.id,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn unit_scaling() -> Verdict {
    let mut p = PhysicalParams::caesium(1.42e-6, 9.47e-6);
    p.frequency_offset = 1.0e6;
    p.potential_depth = p.depth_for_stochasticity(5.3).unwrap();
    let s = scale_params(&p).unwrap();
    let pass = (s.duty - 0.150).abs() <= 0.001
        && (s.hbar_eff - 0.98).abs() <= 0.01
        && (s.lattice_momentum - 119.0).abs() <= 0.5;
    verdict(
        pass,
        format!(
            "eta={:.5} hbar_eff={:.4} rho_L={:.3}",
            s.duty, s.hbar_eff, s.lattice_momentum
        ),
    )
}

fn boundary_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let period = 10f64.powf(rng.gen_range(-6.0..-3.0));
        let p = PhysicalParams {
            atom_mass: 10f64.powf(rng.gen_range(-27.0..-24.0)),
            wavelength: 10f64.powf(rng.gen_range(-7.0..-5.5)),
            potential_depth: 0.0,
            pulse_width: period * rng.gen_range(1e-3..0.999),
            kick_period: period,
            frequency_offset: 0.0,
        };
        let s = scale_params(&p).unwrap();
        let rb = boundary_momentum(&p, s.hbar_eff).unwrap();
        let expected = 2.0 * PI / (p.pulse_width / p.kick_period);
        worst = worst.max(((rb - expected) / expected).abs());
    }
    verdict(
        worst < 1e-10,
        format!("max relative deviation {worst:.2e} over 1000 sets"),
    )
}

fn keff_oracles() -> Verdict {
    let (k_stoch, eta) = (5.3, 0.15);
    let rho_b = 2.0 * PI / eta;
    let n = 2001;
    let times: Vec<f64> = (0..n).map(|i| -eta / 2.0 + eta * i as f64 / (n - 1) as f64).collect();
    let sampled = PulseShape::sampled(times, vec![1.0; n]).unwrap();
    let profile = keff_general(&sampled, k_stoch / eta).unwrap();
    let mut square_err = 0.0f64;
    for i in 0..=6000 {
        let rho = -3.0 * rho_b + 6.0 * rho_b * i as f64 / 6000.0;
        let exact = keff_square(rho, k_stoch, rho_b).unwrap();
        square_err = square_err.max((profile.amplitude(rho) - exact).abs());
    }

    let sigma = 0.02;
    let times: Vec<f64> = (0..n)
        .map(|i| -5.0 * sigma + 10.0 * sigma * i as f64 / (n - 1) as f64)
        .collect();
    let amps: Vec<f64> = times.iter().map(|t| (-t * t / (2.0 * sigma * sigma)).exp()).collect();
    let k = 2.0;
    let gauss = keff_general(&PulseShape::sampled(times, amps).unwrap(), k).unwrap();
    let mut gauss_err = 0.0f64;
    for i in 0..=600 {
        let rho = i as f64 * (3.0 / sigma) / 600.0;
        let exact = k * sigma * (2.0 * PI).sqrt() * (-rho * rho * sigma * sigma / 2.0).exp();
        gauss_err = gauss_err.max(((gauss.amplitude(rho) - exact) / exact).abs());
    }
    verdict(
        square_err < 1e-6 && gauss_err < 1e-4,
        format!("square max abs {square_err:.2e}, gaussian max rel {gauss_err:.2e} (rho*sigma <= 3)"),
    )
}

fn confinement() -> Verdict {
    let rho_b = 13.5 * PI;
    let profile = KickProfile::sinc(5.3, rho_b).unwrap();
    let initials = initial_grid(20, 20, -rho_b, rho_b);
    let mut max_abs = 0.0f64;
    for s0 in &initials {
        for s in iterate_with(*s0, &profile, KickRule::Explicit, 120).states {
            max_abs = max_abs.max(s.rho.abs());
        }
    }
    let mut boundary_drift = 0.0f64;
    for edge in [-rho_b, rho_b] {
        for i in 0..64 {
            let s0 = PhaseState::new(2.0 * PI * i as f64 / 64.0, edge);
            for s in iterate_with(s0, &profile, KickRule::Explicit, 120).states {
                boundary_drift = boundary_drift.max((s.rho - edge).abs());
            }
        }
    }
    let pass = max_abs <= rho_b + 2.0 && boundary_drift <= 4.0 * f64::EPSILON * rho_b;
    verdict(
        pass,
        format!(
            "{} trajectories, max |rho| {max_abs:.4} (limit {:.4}), boundary drift {boundary_drift:.1e}",
            initials.len(),
            rho_b + 2.0
        ),
    )
}

fn sign_structure() -> Verdict {
    let eta = 0.15;
    let profile = KickProfile::new(PulseShape::square(eta).unwrap(), 5.3 / eta).unwrap();
    let template = EnsembleConfig {
        n_atoms: 100_000,
        sigma_rho: 4.0,
        rho_l: 0.0,
        n_kicks: 120,
        seed: 2003,
        rule: KickRule::Canonical,
    };
    let rho_ls = [0.0, 10.0, 20.0, 29.0, 38.0, 45.0, 55.0];
    let points = asymmetry_sweep(&rho_ls, &template, &profile).unwrap();
    let a = |rho: f64| points.iter().find(|p| p.rho_l == rho).unwrap();
    let zero_ok = a(0.0).asymmetry.abs() <= 3.0 * a(0.0).standard_error;
    let (a10, a20, a29, a45) = (
        a(10.0).asymmetry,
        a(20.0).asymmetry,
        a(29.0).asymmetry,
        a(45.0).asymmetry,
    );
    let negative_ok = a10 < 0.0 && a20 < 0.0 && a29 < 0.0 && a10.abs() < a20.abs() && a20.abs() < a29.abs();
    let positive_ok = a45 > 0.0 && a45.abs() < a29.abs();
    let table: Vec<String> = points
        .iter()
        .map(|p| format!("{}:{:+.2}±{:.2}", p.rho_l, p.asymmetry, p.standard_error))
        .collect();
    verdict(
        zero_ok && negative_ok && positive_ok,
        format!(
            "zero={zero_ok} negative-monotone={negative_ok} positive-45={positive_ok}; {}",
            table.join(" ")
        ),
    )
}

fn classical_diffusion() -> Verdict {
    let k_stoch = 10.0;
    let profile = KickProfile::constant(k_stoch).unwrap();
    let cfg = EnsembleConfig {
        n_atoms: 100_000,
        sigma_rho: 4.0,
        rho_l: 0.0,
        n_kicks: 200,
        seed: 6,
        rule: KickRule::Explicit,
    };
    let mut states = sample_initial(&cfg).unwrap();
    let stats = evolve_with_stats(&mut states, &profile, cfg.rule, cfg.n_kicks).unwrap();
    let d = diffusion_coefficient(&displacement_series(&stats), Some((5.0, 200.0))).unwrap();
    let target = k_stoch * k_stoch / 2.0;
    let rel = (d - target) / target;
    verdict(
        rel.abs() <= 0.25,
        format!("D = {d:.3} vs K^2/2 = {target}, deviation {:+.1}%", 100.0 * rel),
    )
}

fn localization() -> Verdict {
    let (k_stoch, hbar) = (5.0, 2.0);
    let cfg = QuantumConfig {
        grid_size: 2048,
        k: k_stoch,
        pulse: PulseShape::Delta,
        hbar_eff: hbar,
        n_kicks: 1000,
        n_beta: 16,
        beta: None,
        sigma_rho: 4.0,
        rho_l: 0.0,
        seed: 7,
        substeps: None,
    };
    let q = run_quantum(&cfg).unwrap();
    let drift = q.iter().map(|s| s.norm_drift).fold(0.0, f64::max);
    let quantum_energy = q[400..=500].iter().map(|s| s.energy).sum::<f64>() / 101.0;

    let profile = KickProfile::constant(k_stoch).unwrap();
    let ccfg = EnsembleConfig {
        n_atoms: 100_000,
        sigma_rho: 4.0,
        rho_l: 0.0,
        n_kicks: 500,
        seed: 7,
        rule: KickRule::Explicit,
    };
    let mut states = sample_initial(&ccfg).unwrap();
    let stats = evolve_with_stats(&mut states, &profile, ccfg.rule, ccfg.n_kicks).unwrap();
    let classical_energy = stats[500].energy();
    let classical_d = diffusion_coefficient(&displacement_series(&stats), None).unwrap();

    // ⟨ρ²⟩ = 2E, so its slope is directly comparable with D
    let late_start = (4.0 * break_time_estimate(k_stoch, hbar).unwrap()).ceil();
    let series: Vec<(f64, f64)> = q.iter().map(|s| (s.kick as f64, 2.0 * s.energy)).collect();
    let quantum_rate = diffusion_coefficient(&series, Some((late_start, 1000.0))).unwrap();

    let pass = drift < 1e-10 && quantum_energy < 0.5 * classical_energy && quantum_rate.abs() < 0.1 * classical_d;
    verdict(
        pass,
        format!(
            "norm drift {drift:.1e}; E_q(400-500) {quantum_energy:.2} vs E_cl(500) {classical_energy:.1}; \
             late rate {quantum_rate:.4} vs D_cl {classical_d:.2}"
        ),
    )
}

fn resonance() -> Verdict {
    let k = 1.0;
    let cfg = QuantumConfig {
        grid_size: 1024,
        k,
        pulse: PulseShape::Delta,
        hbar_eff: 4.0 * PI,
        n_kicks: 50,
        n_beta: 1,
        beta: Some(0.0),
        sigma_rho: 0.0,
        rho_l: 0.0,
        seed: 0,
        substeps: None,
    };
    let q = run_quantum(&cfg).unwrap();
    let x: Vec<f64> = q.iter().map(|s| (s.kick * s.kick) as f64).collect();
    let y: Vec<f64> = q.iter().map(|s| s.energy).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    let a = sxy / sxx;
    verdict(
        r2 > 0.99,
        format!(
            "E = a n^2 with a = {a:.5} (exact k^2/4 = {:.5}), R^2 = {r2:.6}",
            k * k / 4.0
        ),
    )
}

fn run_cli(args: &[&str], out: &Path) -> bool {
    let mut full = vec!["pulsed-rotor"];
    full.extend_from_slice(args);
    let out = out.to_str().unwrap();
    full.extend_from_slice(&["--out-dir", out]);
    pulsed_rotor::cli::run_report(full).is_ok()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let runs: [(&str, &str); 3] = [
        ("poincare", "fig1-left"),
        ("poincare", "fig1-right"),
        ("sweep", "fig3-sweep"),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (command, preset) in runs {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ca = run_cli(&[command, "--preset", preset, "--threads", "1"], a.path());
        let cb = run_cli(&[command, "--preset", preset, "--threads", "4"], b.path());
        let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
        let same = ca && cb && !fa.is_empty() && fa == fb;
        pass &= same;
        notes.push(format!("{preset}:{}", if same { "identical" } else { "DIFFERENT" }));
    }
    verdict(pass, notes.join(" "))
}
