//! Simulation library for the atom-optics kicked rotor driven by pulses of
//! finite duration.
//!
//! The finite pulse width turns the kick strength into a function of the
//! atom's momentum, `K_eff(ρ)`, which vanishes at the momentum boundary
//! `ρ_b`. The crate provides
//!
//! * [`units`]: SI experiment parameters to dimensionless rotor parameters,
//! * [`pulses`]: pulse envelopes and the kick profile they induce,
//! * [`classmap`]: the momentum-dependent standard map and Poincaré sections,
//! * [`ensemble`]: Monte-Carlo clouds, histograms, moments and diffusion,
//! * [`quantum`]: split-operator evolution of the quantum rotor,
//! * [`cli`]: the `pulsed-rotor` command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classmap;
pub mod cli;
pub mod ensemble;
mod error;
pub mod pulses;
pub mod quantum;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
