use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use pulsed_rotor_ffi::*;

fn last_error() -> String {
    let n = unsafe { pr_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as std::ffi::c_char; n + 1];
    unsafe { pr_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn keff_and_errors() {
    let mut v = f64::NAN;
    assert_eq!(unsafe { pr_keff_square(0.0, 5.3, 13.5 * PI, &mut v) }, PrStatus::Ok);
    assert_eq!(v, 5.3);
    assert_eq!(unsafe { pr_keff_square(1.0, 5.3, -1.0, &mut v) }, PrStatus::Domain);
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { pr_keff_square(1.0, 5.3, 1.0, ptr::null_mut()) },
        PrStatus::NullPointer
    );
    assert!(last_error().contains("out"));
}

#[test]
fn truncated_error_message_is_terminated() {
    let mut v = 0.0;
    unsafe { pr_keff_square(1.0, 5.3, -1.0, &mut v) };
    let mut buf = [1 as std::ffi::c_char; 4];
    let n = unsafe { pr_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 3);
    assert_eq!(buf[3], 0);
}

#[test]
fn profile_lifecycle() {
    unsafe {
        let mut pulse = ptr::null_mut();
        assert_eq!(pr_pulse_square(0.15, &mut pulse), PrStatus::Ok);
        let mut area = 0.0;
        assert_eq!(pr_pulse_area(pulse, &mut area), PrStatus::Ok);
        assert!((area - 0.15).abs() < 1e-15);
        let mut profile = ptr::null_mut();
        assert_eq!(pr_profile_new(pulse, 5.3 / 0.15, &mut profile), PrStatus::Ok);
        let mut amp = 0.0;
        assert_eq!(pr_profile_amplitude(profile, 0.0, &mut amp), PrStatus::Ok);
        assert!((amp - 5.3).abs() < 1e-12);
        let (mut z, mut found) = (0.0, 0);
        assert_eq!(pr_profile_first_zero(profile, &mut z, &mut found), PrStatus::Ok);
        assert_eq!(found, 1);
        assert!((z - 2.0 * PI / 0.15).abs() < 1e-6);
        pr_profile_free(profile);
        pr_pulse_free(pulse);
        pr_profile_free(ptr::null_mut());
        pr_pulse_free(ptr::null_mut());
    }
}

#[test]
fn sampled_pulse_rejects_bad_samples() {
    let times = [0.0, -0.1, 0.1];
    let amps = [1.0, 1.0, 1.0];
    let mut pulse = ptr::null_mut();
    let status = unsafe { pr_pulse_sampled(times.as_ptr(), amps.as_ptr(), 3, &mut pulse) };
    assert_ne!(status, PrStatus::Ok);
    assert!(pulse.is_null());
}

#[test]
fn map_pins_boundary_and_rejects_unknown_rule() {
    unsafe {
        let mut profile = ptr::null_mut();
        assert_eq!(pr_profile_sinc(5.3, 13.5 * PI, &mut profile), PrStatus::Ok);
        let mut s = PrPhaseState {
            phi: 0.7,
            rho: 13.5 * PI,
        };
        for _ in 0..50 {
            assert_eq!(pr_map_step(profile, PR_RULE_EXPLICIT, &mut s), PrStatus::Ok);
        }
        assert!((s.rho - 13.5 * PI).abs() < 1e-9);
        assert_eq!(pr_map_step(profile, 9, &mut s), PrStatus::Validation);
        pr_profile_free(profile);
    }
}

#[test]
fn ensemble_matches_core() {
    unsafe {
        let cfg = PrEnsembleConfig {
            n_atoms: 3000,
            sigma_rho: 4.0,
            rho_l: 10.0,
            seed: 5,
        };
        let mut ens = ptr::null_mut();
        assert_eq!(pr_ensemble_new(&cfg, &mut ens), PrStatus::Ok);
        let mut profile = ptr::null_mut();
        assert_eq!(pr_profile_sinc(5.3, 2.0 * PI / 0.15, &mut profile), PrStatus::Ok);
        assert_eq!(pr_ensemble_advance(ens, profile, PR_RULE_CANONICAL, 30), PrStatus::Ok);
        let mut m = PrMoments::default();
        assert_eq!(pr_ensemble_moments(ens, 10.0, &mut m), PrStatus::Ok);

        let core_cfg = pulsed_rotor::ensemble::EnsembleConfig {
            n_atoms: 3000,
            sigma_rho: 4.0,
            rho_l: 10.0,
            n_kicks: 30,
            seed: 5,
            rule: pulsed_rotor::classmap::KickRule::Canonical,
        };
        let core_profile = pulsed_rotor::pulses::KickProfile::sinc(5.3, 2.0 * PI / 0.15).unwrap();
        let mut states = pulsed_rotor::ensemble::sample_initial(&core_cfg).unwrap();
        pulsed_rotor::ensemble::advance(&mut states, &core_profile, core_cfg.rule, 30);
        let cm = pulsed_rotor::ensemble::moments(&states, 10.0).unwrap();
        assert_eq!(m.mean, cm.mean);
        assert_eq!(m.energy, cm.energy);

        let mut written = 0;
        let mut small = vec![PrPhaseState::default(); 10];
        assert_eq!(
            pr_ensemble_states(ens, small.as_mut_ptr(), small.len(), &mut written),
            PrStatus::BufferTooSmall
        );
        assert_eq!(written, 3000);
        let mut all = vec![PrPhaseState::default(); written];
        assert_eq!(
            pr_ensemble_states(ens, all.as_mut_ptr(), all.len(), &mut written),
            PrStatus::Ok
        );
        assert_eq!(all[17].rho, states[17].rho);

        pr_ensemble_free(ens);
        pr_profile_free(profile);
    }
}

#[test]
fn diffusion_slope() {
    let kicks: Vec<f64> = (0..40).map(f64::from).collect();
    let values: Vec<f64> = kicks.iter().map(|k| 3.0 * k + 1.0).collect();
    let mut d = 0.0;
    assert_eq!(
        unsafe { pr_diffusion_coefficient(kicks.as_ptr(), values.as_ptr(), 40, &mut d) },
        PrStatus::Ok
    );
    assert!((d - 3.0).abs() < 1e-12);
}

#[test]
fn quantum_run_conserves_norm() {
    unsafe {
        let mut pulse = ptr::null_mut();
        assert_eq!(pr_pulse_square(0.1, &mut pulse), PrStatus::Ok);
        let cfg = PrQuantumConfig {
            grid_size: 512,
            k: 10.0,
            hbar_eff: 1.0,
            n_kicks: 5,
            n_beta: 2,
            fix_beta: 0,
            beta: 0.0,
            sigma_rho: 1.0,
            rho_l: 0.0,
            seed: 3,
            substeps: 0,
        };
        let mut rows = vec![PrQuantumKickStats::default(); 6];
        assert_eq!(
            pr_quantum_run(&cfg, pulse, rows.as_mut_ptr(), 5),
            PrStatus::BufferTooSmall
        );
        assert_eq!(pr_quantum_run(&cfg, pulse, rows.as_mut_ptr(), rows.len()), PrStatus::Ok);
        assert_eq!(rows[5].kick, 5);
        assert!(rows.iter().all(|r| r.norm_drift < 1e-10));
        pr_pulse_free(pulse);
    }
}

#[test]
fn scale_params_rejects_long_pulse() {
    let p = PrPhysicalParams {
        atom_mass: pulsed_rotor::units::CAESIUM_MASS,
        wavelength: 852e-9,
        potential_depth: 1e-28,
        pulse_width: 3e-5,
        kick_period: 2e-5,
        frequency_offset: 0.0,
    };
    let mut out = PrScaledParams::default();
    assert_eq!(unsafe { pr_scale_params(&p, &mut out) }, PrStatus::Domain);
    let ok = PrPhysicalParams { pulse_width: 3e-6, ..p };
    assert_eq!(unsafe { pr_scale_params(&ok, &mut out) }, PrStatus::Ok);
    assert!((out.duty - 0.15).abs() < 1e-12);
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(crate_dir().join("include/pulsed_rotor.h")).unwrap();
    for symbol in [
        "PR_STATUS_OK",
        "PR_STATUS_BUFFER_TOO_SMALL",
        "typedef struct PrProfile PrProfile",
        "pr_last_error_message",
        "pr_profile_new",
        "pr_map_iterate",
        "pr_ensemble_advance",
        "pr_quantum_run",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}

/// Directory holding the library artifacts of this build.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    // cargo test links the rlib only; the archive has to be rebuilt explicitly
    let profile_dir = artifact_dir();
    let release = profile_dir.file_name().is_some_and(|n| n == "release");
    let mut build = Command::new(env!("CARGO"));
    build.args(["build", "--quiet", "-p", "pulsed-rotor-ffi", "--lib"]);
    if release {
        build.arg("--release");
    }
    build.env("CARGO_TARGET_DIR", profile_dir.parent().unwrap());
    assert!(build.status().unwrap().success(), "building the static library failed");
    let lib = profile_dir.join("libpulsed_rotor_ffi.a");
    let Ok(cc) = which_cc() else {
        eprintln!("skipping: no C compiler");
        return;
    };
    let out_dir = tempfile_dir();
    let exe = out_dir.join("smoke");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-D_DEFAULT_SOURCE"])
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let output = Command::new(&exe).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("ok "));
}

fn which_cc() -> Result<String, ()> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    match Command::new(&cc).arg("--version").output() {
        Ok(o) if o.status.success() => Ok(cc),
        _ => Err(()),
    }
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pulsed-rotor-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
