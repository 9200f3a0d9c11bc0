//! Standard map with a momentum-dependent kick strength.
//!
//! One period is free rotation followed by a kick:
//!
//! ```text
//! φ' = φ + ρ              (mod 2π)
//! ρ' = ρ + K_eff(ρ) sin φ'
//! ```
//!
//! with `K_eff` evaluated at the pre-kick momentum. This explicit form does
//! not preserve phase-space area once `K_eff` depends on `ρ` (the Jacobian is
//! `1 + K_eff'(ρ) sin φ'`). [`KickRule::Canonical`] keeps the same momentum
//! update and adds the conjugate position shift `φ' ← φ' + K_eff'(ρ) cos φ'`
//! (solved implicitly), which makes the map symplectic and reproduces the
//! transport of a pulse integrated in continuous time.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pulses::KickProfile;

/// Reduces an angle to `[0, 2π)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU || r == 0.0 {
        0.0
    } else {
        r
    }
}

/// One classical atom: lattice phase and scaled momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub phi: f64,
    pub rho: f64,
}

impl PhaseState {
    pub fn new(phi: f64, rho: f64) -> Self {
        Self {
            phi: wrap_angle(phi),
            rho,
        }
    }
}

/// How the kick couples to the momentum dependence of `K_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickRule {
    /// The momentum-dependent standard map as written, `K_eff(ρ_n)`.
    #[default]
    Explicit,
    /// Area-preserving variant with the conjugate position shift.
    Canonical,
}

impl std::str::FromStr for KickRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "explicit" => Ok(KickRule::Explicit),
            "canonical" => Ok(KickRule::Canonical),
            other => Err(format!("unknown kick rule '{other}' (expected explicit|canonical)")),
        }
    }
}

impl std::fmt::Display for KickRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KickRule::Explicit => "explicit",
            KickRule::Canonical => "canonical",
        })
    }
}

/// One kick period under the explicit rule.
#[inline]
pub fn step(s: PhaseState, profile: &KickProfile) -> PhaseState {
    step_with(s, profile, KickRule::Explicit)
}

#[inline]
pub fn step_with(s: PhaseState, profile: &KickProfile, rule: KickRule) -> PhaseState {
    let mut phi = wrap_angle(s.phi + s.rho);
    if rule == KickRule::Canonical {
        let (a, b) = profile.kick_derivative(s.rho);
        if a != 0.0 || b != 0.0 {
            phi = wrap_angle(solve_shift(phi, a, b));
        }
    }
    let (re, im) = profile.kick_components(s.rho);
    let (sin, cos) = phi.sin_cos();
    let kick = if im == 0.0 { re * sin } else { re * sin + im * cos };
    PhaseState { phi, rho: s.rho + kick }
}

/// Solves `x = x0 + a cos x − b sin x` by Newton iteration from `x0`.
///
/// The root is unique when `|a + ib| < 1`.
fn solve_shift(x0: f64, a: f64, b: f64) -> f64 {
    let mut x = x0;
    for _ in 0..64 {
        let (sin, cos) = x.sin_cos();
        let g = x - x0 - a * cos + b * sin;
        let dg = 1.0 + a * sin + b * cos;
        let dx = g / dg;
        x -= dx;
        if dx.abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Kick-by-kick history; `states[0]` is the initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<PhaseState>,
}

impl Trajectory {
    pub fn kicks(&self) -> usize {
        self.states.len() - 1
    }

    pub fn last(&self) -> PhaseState {
        self.states[self.states.len() - 1]
    }
}

pub fn iterate(s0: PhaseState, profile: &KickProfile, n: usize) -> Trajectory {
    iterate_with(s0, profile, KickRule::Explicit, n)
}

pub fn iterate_with(s0: PhaseState, profile: &KickProfile, rule: KickRule, n: usize) -> Trajectory {
    let mut states = Vec::with_capacity(n + 1);
    let mut s = PhaseState::new(s0.phi, s0.rho);
    states.push(s);
    for _ in 0..n {
        s = step_with(s, profile, rule);
        states.push(s);
    }
    Trajectory { states }
}

/// Final state after `n` kicks in O(1) memory.
pub fn iterate_final(s0: PhaseState, profile: &KickProfile, rule: KickRule, n: usize) -> PhaseState {
    let mut s = PhaseState::new(s0.phi, s0.rho);
    for _ in 0..n {
        s = step_with(s, profile, rule);
    }
    s
}

/// One point of a Poincaré section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub trajectory: usize,
    pub kick: usize,
    pub phi: f64,
    pub rho: f64,
}

/// Stroboscopic points of every trajectory, trajectory-major then kick order.
pub fn poincare_section(initials: &[PhaseState], profile: &KickProfile, n: usize) -> Vec<SectionPoint> {
    poincare_section_with(initials, profile, KickRule::Explicit, n)
}

pub fn poincare_section_with(
    initials: &[PhaseState],
    profile: &KickProfile,
    rule: KickRule,
    n: usize,
) -> Vec<SectionPoint> {
    let per_trajectory: Vec<Vec<SectionPoint>> = initials
        .par_iter()
        .enumerate()
        .map(|(id, s0)| {
            iterate_with(*s0, profile, rule, n)
                .states
                .into_iter()
                .enumerate()
                .map(|(kick, s)| SectionPoint {
                    trajectory: id,
                    kick,
                    phi: s.phi,
                    rho: s.rho,
                })
                .collect()
        })
        .collect();
    per_trajectory.into_iter().flatten().collect()
}

/// `n_phi × n_rho` initial conditions at the cell centres of
/// `[0, 2π) × (rho_lo, rho_hi)`, momentum-major.
pub fn initial_grid(n_phi: usize, n_rho: usize, rho_lo: f64, rho_hi: f64) -> Vec<PhaseState> {
    let mut out = Vec::with_capacity(n_phi * n_rho);
    for j in 0..n_rho {
        let rho = rho_lo + (rho_hi - rho_lo) * (j as f64 + 0.5) / n_rho as f64;
        for i in 0..n_phi {
            let phi = TAU * (i as f64 + 0.5) / n_phi as f64;
            out.push(PhaseState::new(phi, rho));
        }
    }
    out
}
