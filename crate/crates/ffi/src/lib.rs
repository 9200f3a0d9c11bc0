//! C ABI for the pulsed-rotor simulator.
//!
//! Objects cross the boundary as opaque handles created by `pr_*_new` and
//! released by the matching `pr_*_free`. Every fallible call returns a
//! [`PrStatus`]; on failure the message is kept per thread and can be read
//! with [`pr_last_error_message`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pulsed_rotor::classmap::{self, KickRule, PhaseState};
use pulsed_rotor::ensemble::{self, EnsembleConfig};
use pulsed_rotor::pulses::{self, KickProfile, PulseShape};
use pulsed_rotor::quantum::{self, QuantumConfig};
use pulsed_rotor::units::{self, PhysicalParams};
use pulsed_rotor::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Parameters outside the physical domain (for example η ≥ 1).
    Domain = 2,
    /// Malformed input data.
    Validation = 3,
    /// Inconsistent configuration.
    Config = 4,
    Io = 5,
    /// Output buffer too small; the required length was still reported.
    BufferTooSmall = 6,
    /// Internal failure; the library state is unchanged.
    Panic = 7,
}

/// Kick rule selector for the classical map.
pub const PR_RULE_EXPLICIT: u32 = 0;
pub const PR_RULE_CANONICAL: u32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend_from_slice(msg.as_bytes());
    });
}

fn fail(status: PrStatus, msg: &str) -> PrStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> PrStatus {
    let status = match e {
        Error::Domain(_) => PrStatus::Domain,
        Error::Validation(_) => PrStatus::Validation,
        Error::Config(_) => PrStatus::Config,
        Error::Io(_) => PrStatus::Io,
    };
    fail(status, &e.to_string())
}

fn guard<F: FnOnce() -> PrStatus>(f: F) -> PrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal error".to_string());
            fail(PrStatus::Panic, &msg)
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(PrStatus::NullPointer, concat!("argument '", stringify!($p), "' is null"));
        })+
    };
}

fn rule_from(rule: u32) -> Result<KickRule, PrStatus> {
    match rule {
        PR_RULE_EXPLICIT => Ok(KickRule::Explicit),
        PR_RULE_CANONICAL => Ok(KickRule::Canonical),
        other => Err(fail(PrStatus::Validation, &format!("unknown kick rule {other}"))),
    }
}

unsafe fn slice<'a, T>(data: *const T, len: usize) -> &'a [T] {
    if len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(data, len)
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`) and returns the full message length without the NUL.
/// Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pr_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            ptr::copy_nonoverlapping(e.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pr_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Laboratory parameters, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PrPhysicalParams {
    pub atom_mass: f64,
    pub wavelength: f64,
    pub potential_depth: f64,
    pub pulse_width: f64,
    pub kick_period: f64,
    pub frequency_offset: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PrScaledParams {
    pub recoil_frequency: f64,
    pub hbar_eff: f64,
    pub kick_amplitude: f64,
    pub stochasticity: f64,
    pub duty: f64,
    pub boundary_momentum: f64,
    pub lattice_momentum: f64,
}

/// Converts laboratory parameters to scaled rotor parameters.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_scale_params(params: *const PrPhysicalParams, out: *mut PrScaledParams) -> PrStatus {
    non_null!(params, out);
    guard(|| {
        let p = &*params;
        let phys = PhysicalParams {
            atom_mass: p.atom_mass,
            wavelength: p.wavelength,
            potential_depth: p.potential_depth,
            pulse_width: p.pulse_width,
            kick_period: p.kick_period,
            frequency_offset: p.frequency_offset,
        };
        match units::scale_params(&phys) {
            Ok(s) => {
                *out = PrScaledParams {
                    recoil_frequency: s.recoil_frequency,
                    hbar_eff: s.hbar_eff,
                    kick_amplitude: s.kick_amplitude,
                    stochasticity: s.stochasticity,
                    duty: s.duty,
                    boundary_momentum: s.boundary_momentum,
                    lattice_momentum: s.lattice_momentum,
                };
                PrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// `K_eff(ρ) = K sinc(πρ/ρ_b)` for a square pulse.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_keff_square(rho: f64, stochasticity: f64, rho_b: f64, out: *mut f64) -> PrStatus {
    non_null!(out);
    guard(|| match pulses::keff_square(rho, stochasticity, rho_b) {
        Ok(v) => {
            *out = v;
            PrStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// Opaque pulse envelope.
pub struct PrPulse(PulseShape);

/// Opaque momentum-dependent kick profile.
pub struct PrProfile(KickProfile);

/// Opaque atom cloud.
pub struct PrEnsemble {
    states: Vec<PhaseState>,
}

fn boxed<T>(value: T, out: *mut *mut T) -> PrStatus {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    PrStatus::Ok
}

/// Unit-height square pulse of duration `duty` (in kick periods).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_pulse_square(duty: f64, out: *mut *mut PrPulse) -> PrStatus {
    non_null!(out);
    guard(|| match PulseShape::square(duty) {
        Ok(p) => boxed(PrPulse(p), out),
        Err(e) => from_error(e),
    })
}

/// Ideal delta pulse.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_pulse_delta(out: *mut *mut PrPulse) -> PrStatus {
    non_null!(out);
    guard(|| boxed(PrPulse(PulseShape::Delta), out))
}

/// Piecewise-linear envelope through `len` samples `(times[i], amplitudes[i])`.
///
/// # Safety
/// `times` and `amplitudes` must each point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn pr_pulse_sampled(
    times: *const f64,
    amplitudes: *const f64,
    len: usize,
    out: *mut *mut PrPulse,
) -> PrStatus {
    non_null!(times, amplitudes, out);
    guard(|| {
        let t = slice(times, len).to_vec();
        let a = slice(amplitudes, len).to_vec();
        match PulseShape::sampled(t, a) {
            Ok(p) => boxed(PrPulse(p), out),
            Err(e) => from_error(e),
        }
    })
}

/// `∫ f(τ) dτ`.
///
/// # Safety
/// `pulse` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_pulse_area(pulse: *const PrPulse, out: *mut f64) -> PrStatus {
    non_null!(pulse, out);
    guard(|| {
        *out = (*pulse).0.area();
        PrStatus::Ok
    })
}

/// # Safety
/// `pulse` must be null or a handle from a `pr_pulse_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn pr_pulse_free(pulse: *mut PrPulse) {
    if !pulse.is_null() {
        drop(Box::from_raw(pulse));
    }
}

/// Kick profile of `pulse` with strength `k`. The pulse handle stays owned by
/// the caller.
///
/// # Safety
/// `pulse` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_profile_new(pulse: *const PrPulse, k: f64, out: *mut *mut PrProfile) -> PrStatus {
    non_null!(pulse, out);
    guard(|| match KickProfile::new((*pulse).0.clone(), k) {
        Ok(p) => boxed(PrProfile(p), out),
        Err(e) => from_error(e),
    })
}

/// Square-pulse profile with peak `stochasticity` and first zero at `rho_b`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_profile_sinc(stochasticity: f64, rho_b: f64, out: *mut *mut PrProfile) -> PrStatus {
    non_null!(out);
    guard(|| match KickProfile::sinc(stochasticity, rho_b) {
        Ok(p) => boxed(PrProfile(p), out),
        Err(e) => from_error(e),
    })
}

/// # Safety
/// `profile` must be null or a handle from a `pr_profile_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn pr_profile_free(profile: *mut PrProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Signed kick amplitude at momentum `rho`.
///
/// # Safety
/// `profile` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_profile_amplitude(profile: *const PrProfile, rho: f64, out: *mut f64) -> PrStatus {
    non_null!(profile, out);
    guard(|| {
        *out = (*profile).0.amplitude(rho);
        PrStatus::Ok
    })
}

/// Phase `arg G(ρ)` of the pulse transform at momentum `rho`.
///
/// # Safety
/// `profile` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_profile_phase(profile: *const PrProfile, rho: f64, out: *mut f64) -> PrStatus {
    non_null!(profile, out);
    guard(|| {
        *out = (*profile).0.phase(rho);
        PrStatus::Ok
    })
}

/// First positive zero of the profile. `*found` is 0 when there is none.
///
/// # Safety
/// `profile`, `out` and `found` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_profile_first_zero(profile: *const PrProfile, out: *mut f64, found: *mut i32) -> PrStatus {
    non_null!(profile, out, found);
    guard(|| {
        match (*profile).0.first_zero() {
            Some(z) => {
                *out = z;
                *found = 1;
            }
            None => {
                *out = f64::NAN;
                *found = 0;
            }
        }
        PrStatus::Ok
    })
}

/// Point of phase space: lattice phase `phi` in `[0, 2π)` and momentum `rho`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PrPhaseState {
    pub phi: f64,
    pub rho: f64,
}

/// Advances `state` in place by one kick period.
///
/// # Safety
/// `profile` and `state` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_map_step(profile: *const PrProfile, rule: u32, state: *mut PrPhaseState) -> PrStatus {
    non_null!(profile, state);
    guard(|| {
        let rule = match rule_from(rule) {
            Ok(r) => r,
            Err(s) => return s,
        };
        let s = &mut *state;
        let next = classmap::step_with(PhaseState::new(s.phi, s.rho), &(*profile).0, rule);
        *s = PrPhaseState {
            phi: next.phi,
            rho: next.rho,
        };
        PrStatus::Ok
    })
}

/// Writes the `n_kicks + 1` states of the trajectory from `start` to `out`.
/// Returns `BufferTooSmall` without writing when `cap < n_kicks + 1`.
///
/// # Safety
/// `profile` must be valid and `out` must point to `cap` writable states.
#[no_mangle]
pub unsafe extern "C" fn pr_map_iterate(
    profile: *const PrProfile,
    rule: u32,
    start: PrPhaseState,
    n_kicks: usize,
    out: *mut PrPhaseState,
    cap: usize,
) -> PrStatus {
    non_null!(profile, out);
    guard(|| {
        let rule = match rule_from(rule) {
            Ok(r) => r,
            Err(s) => return s,
        };
        let Some(needed) = n_kicks.checked_add(1) else {
            return fail(PrStatus::Validation, "n_kicks too large");
        };
        if cap < needed {
            return fail(
                PrStatus::BufferTooSmall,
                &format!("need {needed} states, buffer holds {cap}"),
            );
        }
        let traj = classmap::iterate_with(PhaseState::new(start.phi, start.rho), &(*profile).0, rule, n_kicks);
        let dst = std::slice::from_raw_parts_mut(out, needed);
        for (d, s) in dst.iter_mut().zip(&traj.states) {
            *d = PrPhaseState { phi: s.phi, rho: s.rho };
        }
        PrStatus::Ok
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PrEnsembleConfig {
    pub n_atoms: usize,
    pub sigma_rho: f64,
    pub rho_l: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PrMoments {
    pub mean: f64,
    pub variance: f64,
    pub energy: f64,
    pub asymmetry: f64,
    pub standard_error: f64,
}

/// Samples a Gaussian cloud. The same seed always yields the same atoms.
///
/// # Safety
/// `config` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_ensemble_new(config: *const PrEnsembleConfig, out: *mut *mut PrEnsemble) -> PrStatus {
    non_null!(config, out);
    guard(|| {
        let c = &*config;
        let cfg = EnsembleConfig {
            n_atoms: c.n_atoms,
            sigma_rho: c.sigma_rho,
            rho_l: c.rho_l,
            n_kicks: 0,
            seed: c.seed,
            rule: KickRule::Canonical,
        };
        match ensemble::sample_initial(&cfg) {
            Ok(states) => boxed(PrEnsemble { states }, out),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `ens` must be null or a handle from [`pr_ensemble_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn pr_ensemble_free(ens: *mut PrEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Number of atoms.
///
/// # Safety
/// `ens` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_ensemble_len(ens: *const PrEnsemble, out: *mut usize) -> PrStatus {
    non_null!(ens, out);
    guard(|| {
        *out = (*ens).states.len();
        PrStatus::Ok
    })
}

/// Applies `n_kicks` kick periods to every atom.
///
/// # Safety
/// `ens` and `profile` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_ensemble_advance(
    ens: *mut PrEnsemble,
    profile: *const PrProfile,
    rule: u32,
    n_kicks: usize,
) -> PrStatus {
    non_null!(ens, profile);
    guard(|| {
        let rule = match rule_from(rule) {
            Ok(r) => r,
            Err(s) => return s,
        };
        ensemble::advance(&mut (*ens).states, &(*profile).0, rule, n_kicks);
        PrStatus::Ok
    })
}

/// Moments of the current momenta; asymmetry is measured from `rho_l`.
///
/// # Safety
/// `ens` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pr_ensemble_moments(ens: *const PrEnsemble, rho_l: f64, out: *mut PrMoments) -> PrStatus {
    non_null!(ens, out);
    guard(|| match ensemble::moments(&(*ens).states, rho_l) {
        Ok(m) => {
            *out = PrMoments {
                mean: m.mean,
                variance: m.variance,
                energy: m.energy,
                asymmetry: m.asymmetry,
                standard_error: m.standard_error,
            };
            PrStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// Copies the atom states into `out`. `*written` receives the atom count,
/// also when the buffer is too small.
///
/// # Safety
/// `ens` and `written` must be valid; `out` must point to `cap` writable states.
#[no_mangle]
pub unsafe extern "C" fn pr_ensemble_states(
    ens: *const PrEnsemble,
    out: *mut PrPhaseState,
    cap: usize,
    written: *mut usize,
) -> PrStatus {
    non_null!(ens, written);
    guard(|| {
        let states = &(*ens).states;
        *written = states.len();
        if cap < states.len() || out.is_null() {
            return fail(
                PrStatus::BufferTooSmall,
                &format!("need {} states, buffer holds {cap}", states.len()),
            );
        }
        let dst = std::slice::from_raw_parts_mut(out, states.len());
        for (d, s) in dst.iter_mut().zip(states) {
            *d = PrPhaseState { phi: s.phi, rho: s.rho };
        }
        PrStatus::Ok
    })
}

/// Least-squares slope of `values` against `kicks` for kicks ≥ 5.
///
/// # Safety
/// `kicks` and `values` must each point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn pr_diffusion_coefficient(
    kicks: *const f64,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> PrStatus {
    non_null!(kicks, values, out);
    guard(|| {
        let series: Vec<(f64, f64)> = slice(kicks, len)
            .iter()
            .copied()
            .zip(slice(values, len).iter().copied())
            .collect();
        match ensemble::diffusion_coefficient(&series, None) {
            Ok(d) => {
                *out = d;
                PrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PrQuantumConfig {
    /// Momentum grid points, a power of two.
    pub grid_size: usize,
    pub k: f64,
    pub hbar_eff: f64,
    pub n_kicks: usize,
    pub n_beta: usize,
    /// Non-zero fixes the quasimomentum of every sample to `beta`.
    pub fix_beta: i32,
    pub beta: f64,
    pub sigma_rho: f64,
    pub rho_l: f64,
    pub seed: u64,
    /// Strang slices per pulse; 0 picks a default from the grid.
    pub substeps: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PrQuantumKickStats {
    pub kick: usize,
    pub mean_rho: f64,
    pub energy: f64,
    pub norm_drift: f64,
}

/// Runs the quantum rotor and writes `n_kicks + 1` rows of averaged
/// observables to `out`.
///
/// # Safety
/// `config` and `pulse` must be valid; `out` must point to `cap` writable rows.
#[no_mangle]
pub unsafe extern "C" fn pr_quantum_run(
    config: *const PrQuantumConfig,
    pulse: *const PrPulse,
    out: *mut PrQuantumKickStats,
    cap: usize,
) -> PrStatus {
    non_null!(config, pulse, out);
    guard(|| {
        let c = &*config;
        let Some(needed) = c.n_kicks.checked_add(1) else {
            return fail(PrStatus::Validation, "n_kicks too large");
        };
        if cap < needed {
            return fail(
                PrStatus::BufferTooSmall,
                &format!("need {needed} rows, buffer holds {cap}"),
            );
        }
        let cfg = QuantumConfig {
            grid_size: c.grid_size,
            k: c.k,
            pulse: (*pulse).0.clone(),
            hbar_eff: c.hbar_eff,
            n_kicks: c.n_kicks,
            n_beta: c.n_beta,
            beta: (c.fix_beta != 0).then_some(c.beta),
            sigma_rho: c.sigma_rho,
            rho_l: c.rho_l,
            seed: c.seed,
            substeps: (c.substeps != 0).then_some(c.substeps),
        };
        match quantum::run_quantum(&cfg) {
            Ok(rows) => {
                let dst = std::slice::from_raw_parts_mut(out, needed);
                for (d, r) in dst.iter_mut().zip(&rows) {
                    *d = PrQuantumKickStats {
                        kick: r.kick,
                        mean_rho: r.mean_rho,
                        energy: r.energy,
                        norm_drift: r.norm_drift,
                    };
                }
                PrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
