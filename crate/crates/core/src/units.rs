//! Conversion between laboratory (SI) parameters and the dimensionless
//! kicked-rotor parameters.
//!
//! Scaled coordinates: position `φ = 2k_L x`, momentum `ρ = 4πTp/(Mλ)`,
//! time `τ = t/T`. The recoil frequency follows the `ω_R = ħk_L²/2M`
//! convention, which gives `ħ_eff = 8ω_R T ≈ 0.98` for caesium at
//! 852 nm and `T = 9.47 μs`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Atomic mass constant, kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a ¹³³Cs atom, kg (132.905451961 u).
pub const CAESIUM_MASS: f64 = 2.206_946_951e-25;

/// Caesium D2 line, m.
pub const CAESIUM_D2_WAVELENGTH: f64 = 852.0e-9;

/// Laboratory parameters of a pulsed standing-wave experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// kg
    pub atom_mass: f64,
    /// m
    pub wavelength: f64,
    /// V₀, J
    pub potential_depth: f64,
    /// t_p, s
    pub pulse_width: f64,
    /// T, s
    pub kick_period: f64,
    /// Δf per beam, Hz; the beams differ by 2Δf.
    pub frequency_offset: f64,
}

impl PhysicalParams {
    /// Caesium at 852 nm with the given timing; no potential, stationary lattice.
    pub fn caesium(pulse_width: f64, kick_period: f64) -> Self {
        Self {
            atom_mass: CAESIUM_MASS,
            wavelength: CAESIUM_D2_WAVELENGTH,
            potential_depth: 0.0,
            pulse_width,
            kick_period,
            frequency_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.atom_mass,
            self.wavelength,
            self.potential_depth,
            self.pulse_width,
            self.kick_period,
            self.frequency_offset,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(domain("physical parameters must be finite"));
        }
        if self.atom_mass <= 0.0 {
            return Err(domain("atom_mass must be > 0"));
        }
        if self.wavelength <= 0.0 {
            return Err(domain("wavelength must be > 0"));
        }
        if self.kick_period <= 0.0 {
            return Err(domain("kick_period must be > 0"));
        }
        if !(self.pulse_width > 0.0 && self.pulse_width < self.kick_period) {
            return Err(domain(
                "pulse_width must satisfy 0 < t_p < T (duty η = t_p/T in (0, 1))",
            ));
        }
        if self.potential_depth < 0.0 {
            return Err(domain("potential_depth must be >= 0"));
        }
        Ok(())
    }

    /// Potential depth that produces the stochasticity parameter `k_stoch`.
    pub fn depth_for_stochasticity(&self, k_stoch: f64) -> Result<f64> {
        self.validate()?;
        if !(k_stoch >= 0.0 && k_stoch.is_finite()) {
            return Err(domain("stochasticity must be finite and >= 0"));
        }
        let omega_r = recoil_frequency(self.atom_mass, self.wavelength)?;
        let duty = self.pulse_width / self.kick_period;
        Ok(k_stoch * HBAR / (8.0 * omega_r * self.kick_period * self.kick_period * duty))
    }
}

/// Dimensionless rotor parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    /// ω_R, rad/s. NaN when the parameters were built without SI input.
    pub recoil_frequency: f64,
    pub hbar_eff: f64,
    /// k, the scaled kick strength of a unit-amplitude pulse.
    pub kick_amplitude: f64,
    /// K = ηk.
    pub stochasticity: f64,
    /// η = t_p/T.
    pub duty: f64,
    /// ρ_b, first zero of the kick profile.
    pub boundary_momentum: f64,
    /// ρ_L, mean atomic momentum in the moving-lattice frame.
    pub lattice_momentum: f64,
}

impl ScaledParams {
    /// Purely dimensionless construction; `ρ_b = 2π/η`.
    pub fn dimensionless(stochasticity: f64, duty: f64, hbar_eff: f64, lattice_momentum: f64) -> Result<Self> {
        if !(duty > 0.0 && duty < 1.0) {
            return Err(domain("duty η must lie in (0, 1)"));
        }
        if !(hbar_eff > 0.0 && hbar_eff.is_finite()) {
            return Err(domain("hbar_eff must be > 0"));
        }
        if !stochasticity.is_finite() || !lattice_momentum.is_finite() {
            return Err(domain("stochasticity and lattice momentum must be finite"));
        }
        Ok(Self {
            recoil_frequency: f64::NAN,
            hbar_eff,
            kick_amplitude: stochasticity / duty,
            stochasticity,
            duty,
            boundary_momentum: 2.0 * PI / duty,
            lattice_momentum,
        })
    }

    /// Pins the momentum boundary to a value other than `2π/η`.
    pub fn with_boundary(mut self, rho_b: f64) -> Result<Self> {
        if !(rho_b > 0.0 && rho_b.is_finite()) {
            return Err(domain("boundary momentum must be > 0"));
        }
        self.boundary_momentum = rho_b;
        Ok(self)
    }
}

/// ω_R = ħk_L²/(2M) = 2π²ħ/(Mλ²).
pub fn recoil_frequency(mass: f64, wavelength: f64) -> Result<f64> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(domain("mass must be > 0"));
    }
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(domain("wavelength must be > 0"));
    }
    Ok(2.0 * PI * PI * HBAR / (mass * wavelength * wavelength))
}

pub fn scale_params(p: &PhysicalParams) -> Result<ScaledParams> {
    p.validate()?;
    let omega_r = recoil_frequency(p.atom_mass, p.wavelength)?;
    let hbar_eff = 8.0 * omega_r * p.kick_period;
    let kick_amplitude = 8.0 * p.potential_depth / HBAR * omega_r * p.kick_period * p.kick_period;
    let duty = p.pulse_width / p.kick_period;
    Ok(ScaledParams {
        recoil_frequency: omega_r,
        hbar_eff,
        kick_amplitude,
        stochasticity: duty * kick_amplitude,
        duty,
        boundary_momentum: boundary_momentum(p, hbar_eff)?,
        lattice_momentum: lattice_momentum(p, hbar_eff),
    })
}

/// ρ_b = Mλ²ħ_eff/(8πħt_p): the momentum at which an atom crosses one lattice
/// period during the pulse.
pub fn boundary_momentum(p: &PhysicalParams, hbar_eff: f64) -> Result<f64> {
    if !(p.pulse_width > 0.0) {
        return Err(domain(
            "pulse_width must be > 0; a delta pulse has no momentum boundary",
        ));
    }
    Ok(p.atom_mass * p.wavelength * p.wavelength * hbar_eff / (8.0 * PI * HBAR * p.pulse_width))
}

/// ρ_L = Mλ²Δf ħ_eff/(4πħ).
pub fn lattice_momentum(p: &PhysicalParams, hbar_eff: f64) -> f64 {
    p.atom_mass * p.wavelength * p.wavelength * p.frequency_offset * hbar_eff / (4.0 * PI * HBAR)
}
