//! Quantum kicked rotor on a momentum grid, evolved by split-operator steps.
//!
//! A state with quasimomentum `β` is stored as amplitudes on
//! `ρ_m = (m + β)ħ_eff`, `m = −M/2 … M/2−1`. Free evolution is diagonal in
//! momentum; the lattice potential is applied in position space after an FFT.
//! Finite pulses are integrated by Strang splitting across the pulse support,
//! written relative to the pulse centre so that a vanishing pulse reduces to
//! the delta kick.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::pulses::PulseShape;
use crate::rng;

/// Smallest supported momentum grid.
pub const MIN_GRID: usize = 64;

const NORM_TOLERANCE: f64 = 1e-10;

/// Momentum-grid wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    amplitudes: Vec<Complex64>,
    beta: f64,
    hbar_eff: f64,
}

fn check_grid(n: usize) -> Result<()> {
    if n < MIN_GRID || !n.is_power_of_two() {
        return Err(domain(format!(
            "grid size must be a power of two >= {MIN_GRID}, got {n}"
        )));
    }
    Ok(())
}

fn check_physics(beta: f64, hbar_eff: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(domain(format!("quasimomentum must lie in [0, 1), got {beta}")));
    }
    if !(hbar_eff > 0.0 && hbar_eff.is_finite()) {
        return Err(domain("hbar_eff must be > 0"));
    }
    Ok(())
}

impl WaveState {
    pub fn new(amplitudes: Vec<Complex64>, beta: f64, hbar_eff: f64) -> Result<Self> {
        check_grid(amplitudes.len())?;
        check_physics(beta, hbar_eff)?;
        let s = Self {
            amplitudes,
            beta,
            hbar_eff,
        };
        if (s.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(domain(format!("state is not normalised (norm {})", s.norm())));
        }
        Ok(s)
    }

    /// Momentum eigenstate `ρ = (m + β)ħ_eff`.
    pub fn plane_wave(grid: usize, m: i64, beta: f64, hbar_eff: f64) -> Result<Self> {
        check_grid(grid)?;
        check_physics(beta, hbar_eff)?;
        let half = (grid / 2) as i64;
        if m < -half || m >= half {
            return Err(domain(format!("momentum index {m} is off the grid")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid];
        amplitudes[(m + half) as usize] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            beta,
            hbar_eff,
        })
    }

    /// Gaussian packet: momentum centre and rms width, centred at lattice phase `phi0`.
    pub fn gaussian(grid: usize, beta: f64, hbar_eff: f64, rho0: f64, width: f64, phi0: f64) -> Result<Self> {
        check_grid(grid)?;
        check_physics(beta, hbar_eff)?;
        if !(width > 0.0) {
            return Err(domain("packet width must be > 0"));
        }
        let half = (grid / 2) as i64;
        let mut amplitudes: Vec<Complex64> = (0..grid)
            .map(|i| {
                let m = i as i64 - half;
                let rho = (m as f64 + beta) * hbar_eff;
                let envelope = (-(rho - rho0).powi(2) / (4.0 * width * width)).exp();
                Complex64::from_polar(envelope, -(m as f64) * phi0)
            })
            .collect();
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(domain("packet lies outside the momentum grid"));
        }
        amplitudes.iter_mut().for_each(|c| *c /= norm);
        Ok(Self {
            amplitudes,
            beta,
            hbar_eff,
        })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hbar_eff(&self) -> f64 {
        self.hbar_eff
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Momentum of grid index `i`.
    pub fn momentum(&self, i: usize) -> f64 {
        (i as f64 - (self.len() / 2) as f64 + self.beta) * self.hbar_eff
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.momentum(i)).collect()
    }

    /// Largest |ρ| represented on the grid.
    pub fn extent(&self) -> f64 {
        grid_extent(self.len(), self.hbar_eff)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_momentum(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm_sqr() * self.momentum(i))
            .sum()
    }

    /// ⟨ρ²⟩/2
    pub fn energy(&self) -> f64 {
        0.5 * self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm_sqr() * self.momentum(i).powi(2))
            .sum::<f64>()
    }

    /// `sqrt(Σ|a_i − b_i|²)`.
    pub fn distance(&self, other: &WaveState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn grid_extent(grid: usize, hbar_eff: f64) -> f64 {
    (grid / 2) as f64 * hbar_eff
}

/// Cached FFT plans and position grid for one grid size.
pub struct SplitStepper {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    cos_phi: Vec<f64>,
}

impl SplitStepper {
    pub fn new(n: usize) -> Result<Self> {
        check_grid(n)?;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Ok(Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            cos_phi: (0..n).map(|j| (TAU * j as f64 / n as f64).cos()).collect(),
        })
    }

    fn check(&self, s: &WaveState) {
        assert_eq!(s.len(), self.n, "state grid does not match stepper grid");
    }

    /// Multiplies by `exp(−i·strength·cos φ/ħ_eff)` in position space.
    fn potential(&mut self, s: &mut WaveState, strength: f64) {
        if strength == 0.0 {
            return;
        }
        self.check(s);
        let a = strength / s.hbar_eff;
        self.inverse.process_with_scratch(&mut s.amplitudes, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for (c, cos) in s.amplitudes.iter_mut().zip(&self.cos_phi) {
            *c *= Complex64::from_polar(scale, -a * cos);
        }
        self.forward.process_with_scratch(&mut s.amplitudes, &mut self.scratch);
    }

    /// Delta kick of strength `k`.
    pub fn kick_delta(&mut self, s: &mut WaveState, k: f64) {
        self.potential(s, k);
    }

    /// Free evolution for `duration` kick periods (negative durations run backwards).
    pub fn free_evolve(&self, s: &mut WaveState, duration: f64) {
        free_evolve_in_place(s, duration);
    }

    /// Kick by a finite pulse, referenced to the pulse centre.
    ///
    /// The propagator is `U₀(−t₁)·U_pulse(t₀→t₁)·U₀(t₀)` with `U_pulse`
    /// Strang-split into `substeps` equal slices; the slice weights are
    /// normalised so their sum equals `∫f dτ` exactly.
    pub fn kick_finite(&mut self, s: &mut WaveState, pulse: &PulseShape, k: f64, substeps: usize) -> Result<()> {
        pulse.validate()?;
        if substeps == 0 {
            return Err(domain("substeps must be >= 1"));
        }
        if let PulseShape::Delta = pulse {
            self.kick_delta(s, k);
            return Ok(());
        }
        let (t0, t1) = pulse.support();
        let h = (t1 - t0) / substeps as f64;
        let raw: Vec<f64> = (0..substeps)
            .map(|j| pulse.value_at(t0 + (j as f64 + 0.5) * h) * h)
            .collect();
        let raw_area: f64 = raw.iter().sum();
        let area = pulse.area();
        let scale = if raw_area != 0.0 { area / raw_area } else { 0.0 };

        let mut pending = t0 + 0.5 * h;
        for (j, w) in raw.iter().enumerate() {
            if pending != 0.0 {
                free_evolve_in_place(s, pending);
            }
            self.potential(s, k * w * scale);
            pending = if j + 1 < substeps { h } else { 0.5 * h - t1 };
        }
        if pending != 0.0 {
            free_evolve_in_place(s, pending);
        }
        Ok(())
    }
}

fn free_evolve_in_place(s: &mut WaveState, duration: f64) {
    if duration == 0.0 {
        return;
    }
    let half = (s.len() / 2) as f64;
    let (beta, hbar) = (s.beta, s.hbar_eff);
    for (i, c) in s.amplitudes.iter_mut().enumerate() {
        let rho = (i as f64 - half + beta) * hbar;
        *c *= Complex64::from_polar(1.0, -rho * rho * duration / (2.0 * hbar));
    }
}

/// Delta kick `exp(−ik cos φ/ħ_eff)`.
pub fn kick_delta(s: &WaveState, k: f64) -> Result<WaveState> {
    let mut out = s.clone();
    SplitStepper::new(s.len())?.kick_delta(&mut out, k);
    Ok(out)
}

/// Free evolution `exp(−iρ²t/2ħ_eff)`.
pub fn free_evolve(s: &WaveState, duration: f64) -> WaveState {
    let mut out = s.clone();
    free_evolve_in_place(&mut out, duration);
    out
}

pub fn kick_finite(s: &WaveState, pulse: &PulseShape, k: f64, substeps: usize) -> Result<WaveState> {
    let mut out = s.clone();
    SplitStepper::new(s.len())?.kick_finite(&mut out, pulse, k, substeps)?;
    Ok(out)
}

/// Default Strang slices: enough that the free phase advance per slice stays
/// well below π at the grid edge.
pub fn default_substeps(pulse: &PulseShape, grid: usize, hbar_eff: f64) -> usize {
    match pulse.equivalent_duty() {
        None => 1,
        Some(width) => {
            let n = (4.0 * width * grid_extent(grid, hbar_eff) / std::f64::consts::PI).ceil() as usize;
            n.max(16)
        }
    }
}

/// Break time `t* = (K/ħ_eff)²/2`.
///
/// Only the `K²/ħ_eff²` scaling is physical; the prefactor 1/2 is a convention.
pub fn break_time_estimate(k_stoch: f64, hbar_eff: f64) -> Result<f64> {
    if !(k_stoch > 0.0) || !(hbar_eff > 0.0) {
        return Err(domain("break time needs K > 0 and hbar_eff > 0"));
    }
    Ok(0.5 * (k_stoch / hbar_eff).powi(2))
}

/// Expected localization length in momentum, `K²/(2ħ_eff)`.
pub fn localization_length(k_stoch: f64, hbar_eff: f64) -> f64 {
    k_stoch * k_stoch / (2.0 * hbar_eff)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumConfig {
    pub grid_size: usize,
    /// Kick strength `k` of the unit-height pulse.
    pub k: f64,
    pub pulse: PulseShape,
    pub hbar_eff: f64,
    pub n_kicks: usize,
    /// Number of incoherently averaged initial states.
    pub n_beta: usize,
    /// Fixes the quasimomentum of every sample (resonance studies).
    #[serde(default)]
    pub beta: Option<f64>,
    pub sigma_rho: f64,
    pub rho_l: f64,
    pub seed: u64,
    /// Strang slices per pulse; `None` selects [`default_substeps`].
    #[serde(default)]
    pub substeps: Option<usize>,
}

impl QuantumConfig {
    /// `K = k·∫f dτ`.
    pub fn stochasticity(&self) -> f64 {
        self.k * self.pulse.area()
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(self.grid_size)?;
        self.pulse.validate()?;
        if !(self.hbar_eff > 0.0 && self.hbar_eff.is_finite()) {
            return Err(Error::Config("hbar_eff must be > 0".into()));
        }
        if self.n_beta == 0 {
            return Err(Error::Config("n_beta must be >= 1".into()));
        }
        if let Some(b) = self.beta {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("beta must lie in [0, 1), got {b}")));
            }
        }
        if !(self.sigma_rho >= 0.0) || !self.rho_l.is_finite() || !self.k.is_finite() {
            return Err(Error::Config("sigma_rho must be >= 0; k and rho_L finite".into()));
        }
        if self.substeps == Some(0) {
            return Err(Error::Config("substeps must be >= 1".into()));
        }
        let k_stoch = self.stochasticity().abs();
        let rho_b = match self.pulse.equivalent_duty() {
            Some(d) => TAU / d,
            None => 0.0,
        };
        let needed = 4.0 * (self.rho_l.abs() + localization_length(k_stoch, self.hbar_eff)).max(rho_b);
        let extent = grid_extent(self.grid_size, self.hbar_eff);
        if extent < needed {
            return Err(Error::Config(format!(
                "momentum grid extent {extent:.3} is below the required {needed:.3} \
                 (4 × max(|rho_L| + localization length, rho_b)); increase grid_size"
            )));
        }
        Ok(())
    }

    /// Initial state of sample `index`.
    ///
    /// Each sample is a Gaussian packet of rms width `min(σ_ρ, ħ_eff)/2` at a
    /// random lattice phase, with its centre drawn so the mixture has rms
    /// width `σ_ρ` about `ρ_L`. With `σ_ρ = 0` the sample is the plane wave
    /// at `ρ_L`.
    pub fn initial_state(&self, index: usize) -> Result<WaveState> {
        let mut r = rng::stream(self.seed, index as u64);
        let hbar = self.hbar_eff;
        if self.sigma_rho == 0.0 {
            let x = self.rho_l / hbar;
            let (m, beta) = match self.beta {
                Some(b) => ((x - b).round() as i64, b),
                None => {
                    let m = x.floor();
                    (m as i64, (x - m).clamp(0.0, 1.0 - f64::EPSILON))
                }
            };
            return WaveState::plane_wave(self.grid_size, m, beta, hbar);
        }
        let beta = match self.beta {
            Some(b) => b,
            None => r.gen::<f64>(),
        };
        let width = 0.5 * self.sigma_rho.min(hbar);
        let centre_sd = (self.sigma_rho * self.sigma_rho - width * width).sqrt();
        let centre = self.rho_l + centre_sd * rng::standard_normal(&mut r);
        let phi0 = TAU * r.gen::<f64>();
        WaveState::gaussian(self.grid_size, beta, hbar, centre, width, phi0)
    }
}

/// Incoherently averaged observables after each kick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumKickStats {
    pub kick: usize,
    pub mean_rho: f64,
    pub energy: f64,
    /// Largest deviation of any sample's norm from 1.
    pub norm_drift: f64,
}

/// Evolves `n_beta` samples through `n_kicks` periods (kick, then free
/// evolution for one period) and averages in sample order.
pub fn run_quantum(cfg: &QuantumConfig) -> Result<Vec<QuantumKickStats>> {
    cfg.validate()?;
    let substeps = cfg
        .substeps
        .unwrap_or_else(|| default_substeps(&cfg.pulse, cfg.grid_size, cfg.hbar_eff));
    let rows = cfg.n_kicks + 1;
    let per_sample: Vec<Vec<(f64, f64, f64)>> = (0..cfg.n_beta)
        .into_par_iter()
        .map(|i| -> Result<Vec<(f64, f64, f64)>> {
            let mut s = cfg.initial_state(i)?;
            let mut stepper = SplitStepper::new(cfg.grid_size)?;
            let mut out = Vec::with_capacity(rows);
            out.push((s.mean_momentum(), s.energy(), (s.norm() - 1.0).abs()));
            for _ in 0..cfg.n_kicks {
                stepper.kick_finite(&mut s, &cfg.pulse, cfg.k, substeps)?;
                free_evolve_in_place(&mut s, 1.0);
                out.push((s.mean_momentum(), s.energy(), (s.norm() - 1.0).abs()));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let n = cfg.n_beta as f64;
    Ok((0..rows)
        .map(|kick| {
            let mut acc = QuantumKickStats {
                kick,
                mean_rho: 0.0,
                energy: 0.0,
                norm_drift: 0.0,
            };
            for sample in &per_sample {
                let (m, e, d) = sample[kick];
                acc.mean_rho += m;
                acc.energy += e;
                acc.norm_drift = acc.norm_drift.max(d);
            }
            acc.mean_rho /= n;
            acc.energy /= n;
            acc
        })
        .collect())
}
