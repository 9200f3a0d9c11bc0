//! Monte-Carlo atom clouds evolved under the kick map.
//!
//! The simulation runs in the frame of the moving lattice: the cloud starts
//! centred at `ρ_L` with rms width `σ_ρ` and uniform lattice phase. The
//! asymmetry of a distribution is its kick-induced drift `⟨ρ⟩ − ρ_L`.
//!
//! Atoms are independent. Each draws from its own random stream and all
//! reductions run in fixed atom order, so results are bit-identical for any
//! thread count.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classmap::{iterate_final, step_with, KickRule, PhaseState};
use crate::error::{domain, Result};
use crate::pulses::KickProfile;
use crate::rng;

/// Atoms per work unit. Reductions sum per chunk, then over chunks in order.
const CHUNK: usize = 2048;

/// Fallback histogram half-range when the profile has no momentum boundary.
const UNBOUNDED_HALF_RANGE: f64 = 512.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_atoms: usize,
    /// Initial rms momentum width σ_ρ.
    pub sigma_rho: f64,
    /// Initial mean momentum in the lattice frame.
    pub rho_l: f64,
    pub n_kicks: usize,
    pub seed: u64,
    #[serde(default = "default_rule")]
    pub rule: KickRule,
}

fn default_rule() -> KickRule {
    KickRule::Canonical
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_atoms: 100_000,
            sigma_rho: 4.0,
            rho_l: 0.0,
            n_kicks: 120,
            seed: 0,
            rule: KickRule::Canonical,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(domain("n_atoms must be >= 1"));
        }
        if !(self.sigma_rho >= 0.0 && self.sigma_rho.is_finite()) {
            return Err(domain("sigma_rho must be finite and >= 0"));
        }
        if !self.rho_l.is_finite() {
            return Err(domain("rho_L must be finite"));
        }
        Ok(())
    }
}

/// Initial cloud: `ρ ~ N(ρ_L, σ_ρ²)`, `φ ~ U[0, 2π)`, atom `i` from stream `(seed, i)`.
pub fn sample_initial(cfg: &EnsembleConfig) -> Result<Vec<PhaseState>> {
    cfg.validate()?;
    Ok((0..cfg.n_atoms)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(cfg.seed, i as u64);
            let z = rng::standard_normal(&mut r);
            let phi = TAU * r.gen::<f64>();
            PhaseState::new(phi, cfg.rho_l + cfg.sigma_rho * z)
        })
        .collect())
}

/// Cloud state after `kick` kicks.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub kick: usize,
    pub states: Vec<PhaseState>,
}

/// Evolves every atom independently, keeping snapshots at kick 0,
/// `record_every`, `2·record_every`, … and always at `n_kicks`.
pub fn evolve_ensemble(
    states: &[PhaseState],
    profile: &KickProfile,
    rule: KickRule,
    n_kicks: usize,
    record_every: usize,
) -> Result<Vec<Snapshot>> {
    if record_every == 0 {
        return Err(domain("record_every must be >= 1"));
    }
    let mut current = states.to_vec();
    let mut out = vec![Snapshot {
        kick: 0,
        states: current.clone(),
    }];
    let mut done = 0;
    while done < n_kicks {
        let todo = record_every.min(n_kicks - done);
        advance(&mut current, profile, rule, todo);
        done += todo;
        out.push(Snapshot {
            kick: done,
            states: current.clone(),
        });
    }
    Ok(out)
}

/// Advances every atom by `n` kicks in place.
pub fn advance(states: &mut [PhaseState], profile: &KickProfile, rule: KickRule, n: usize) {
    states
        .par_chunks_mut(CHUNK)
        .for_each(|chunk| chunk.iter_mut().for_each(|s| *s = iterate_final(*s, profile, rule, n)));
}

/// Per-kick ensemble statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickStats {
    pub kick: usize,
    /// ⟨ρ⟩
    pub mean: f64,
    /// ⟨ρ²⟩
    pub mean_square: f64,
    /// ⟨(ρ − ρ₀)²⟩, the mean squared displacement from each atom's start.
    pub spread: f64,
}

impl KickStats {
    pub fn energy(&self) -> f64 {
        0.5 * self.mean_square
    }
}

/// Evolves in place and returns statistics at every kick `0..=n_kicks`.
pub fn evolve_with_stats(
    states: &mut [PhaseState],
    profile: &KickProfile,
    rule: KickRule,
    n_kicks: usize,
) -> Result<Vec<KickStats>> {
    let origin: Vec<f64> = states.iter().map(|s| s.rho).collect();
    evolve_with_stats_from(states, &origin, 0, profile, rule, n_kicks)
}

/// Like [`evolve_with_stats`], for a run recorded in segments: displacement
/// is measured from `origin` (each atom's momentum at kick 0) and rows are
/// numbered from `first_kick`.
pub fn evolve_with_stats_from(
    states: &mut [PhaseState],
    origin: &[f64],
    first_kick: usize,
    profile: &KickProfile,
    rule: KickRule,
    n_kicks: usize,
) -> Result<Vec<KickStats>> {
    if states.is_empty() {
        return Err(domain("ensemble is empty"));
    }
    if origin.len() != states.len() {
        return Err(domain("origin must hold one momentum per atom"));
    }
    let rows = n_kicks + 1;
    let partials: Vec<Vec<[f64; 3]>> = states
        .par_chunks_mut(CHUNK)
        .zip(origin.par_chunks(CHUNK))
        .map(|(chunk, origin)| {
            let mut acc = vec![[0.0f64; 3]; rows];
            for (s, &rho0) in chunk.iter_mut().zip(origin) {
                let mut cur = *s;
                let d = cur.rho - rho0;
                acc[0][0] += cur.rho;
                acc[0][1] += cur.rho * cur.rho;
                acc[0][2] += d * d;
                for row in acc.iter_mut().skip(1) {
                    cur = step_with(cur, profile, rule);
                    let d = cur.rho - rho0;
                    row[0] += cur.rho;
                    row[1] += cur.rho * cur.rho;
                    row[2] += d * d;
                }
                *s = cur;
            }
            acc
        })
        .collect();
    let n = states.len() as f64;
    Ok((0..rows)
        .map(|row| {
            let mut sum = [0.0f64; 3];
            for p in &partials {
                for (t, v) in sum.iter_mut().zip(p[row].iter()) {
                    *t += v;
                }
            }
            KickStats {
                kick: first_kick + row,
                mean: sum[0] / n,
                mean_square: sum[1] / n,
                spread: sum[2] / n,
            }
        })
        .collect())
}

/// Binned momentum distribution `N(ρ)` with half-open bins `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<f64>,
    /// Weight below the first edge.
    pub underflow: f64,
    /// Weight at or above the last edge.
    pub overflow: f64,
}

impl MomentumHistogram {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum::<f64>() + self.underflow + self.overflow
    }

    /// Moments from bin centres; overflow weight is ignored, so this is an
    /// approximation of [`moments`].
    pub fn moments(&self, rho_l: f64) -> Result<Moments> {
        let w: f64 = self.counts.iter().sum();
        if !(w > 0.0) {
            return Err(domain("histogram holds no in-range weight"));
        }
        let centres = self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1]));
        let mean = centres.clone().zip(&self.counts).map(|(c, n)| c * n).sum::<f64>() / w;
        let variance = centres
            .zip(&self.counts)
            .map(|(c, n)| n * (c - mean).powi(2))
            .sum::<f64>()
            / w;
        Ok(Moments::from_parts(mean, variance, rho_l, w))
    }
}

/// Default binning for a profile: width 1 over `[−4ρ_b, 4ρ_b]`.
pub fn default_range(profile: &KickProfile) -> (f64, f64) {
    match profile.first_zero() {
        Some(rb) => (-4.0 * rb, 4.0 * rb),
        None => (-UNBOUNDED_HALF_RANGE, UNBOUNDED_HALF_RANGE),
    }
}

pub fn histogram(states: &[PhaseState], bin_width: f64, range: (f64, f64)) -> Result<MomentumHistogram> {
    let (lo, hi) = range;
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(domain("bin_width must be > 0"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(domain("histogram range needs lo < hi"));
    }
    let n_bins = ((hi - lo) / bin_width).ceil() as usize;
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| lo + bin_width * i as f64).collect();
    let mut counts = vec![0.0; n_bins];
    let (mut underflow, mut overflow) = (0.0, 0.0);
    for s in states {
        if s.rho < lo {
            underflow += 1.0;
            continue;
        }
        if s.rho >= bin_edges[n_bins] {
            overflow += 1.0;
            continue;
        }
        // floor can land one bin off next to an edge
        let mut idx = (((s.rho - lo) / bin_width).floor() as usize).min(n_bins - 1);
        if s.rho < bin_edges[idx] {
            idx -= 1;
        } else if s.rho >= bin_edges[idx + 1] {
            idx += 1;
        }
        counts[idx] += 1.0;
    }
    Ok(MomentumHistogram {
        bin_edges,
        counts,
        underflow,
        overflow,
    })
}

/// Summary statistics of a momentum distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// ⟨ρ²⟩/2
    pub energy: f64,
    /// ⟨ρ⟩ − ρ_L
    pub asymmetry: f64,
    /// Standard error of the mean, `sqrt(variance/N)`.
    pub standard_error: f64,
}

impl Moments {
    fn from_parts(mean: f64, variance: f64, rho_l: f64, weight: f64) -> Self {
        Self {
            mean,
            variance,
            energy: 0.5 * (variance + mean * mean),
            asymmetry: mean - rho_l,
            standard_error: (variance / weight).sqrt(),
        }
    }
}

/// Exact moments of the atom momenta.
pub fn moments(states: &[PhaseState], rho_l: f64) -> Result<Moments> {
    if states.is_empty() {
        return Err(domain("cannot take moments of an empty ensemble"));
    }
    let n = states.len() as f64;
    let mean = states.iter().map(|s| s.rho).sum::<f64>() / n;
    let variance = states.iter().map(|s| (s.rho - mean).powi(2)).sum::<f64>() / n;
    Ok(Moments::from_parts(mean, variance, rho_l, n))
}

/// One point of an asymmetry-versus-`ρ_L` curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rho_l: f64,
    pub mean: f64,
    pub asymmetry: f64,
    pub energy: f64,
    pub standard_error: f64,
    pub n_atoms: usize,
    pub seed: u64,
}

/// Seed used for the ensemble started at `rho_l`.
pub fn sweep_seed(seed: u64, rho_l: f64) -> u64 {
    rng::mix_seed(seed, rho_l.to_bits())
}

/// Runs one full ensemble per `ρ_L`. Each point's seed depends only on the
/// template seed and its own `ρ_L`.
pub fn asymmetry_sweep(rho_ls: &[f64], template: &EnsembleConfig, profile: &KickProfile) -> Result<Vec<SweepPoint>> {
    template.validate()?;
    rho_ls
        .par_iter()
        .map(|&rho_l| {
            let cfg = EnsembleConfig {
                rho_l,
                seed: sweep_seed(template.seed, rho_l),
                ..*template
            };
            let mut states = sample_initial(&cfg)?;
            advance(&mut states, profile, cfg.rule, cfg.n_kicks);
            let m = moments(&states, rho_l)?;
            Ok(SweepPoint {
                rho_l,
                mean: m.mean,
                asymmetry: m.asymmetry,
                energy: m.energy,
                standard_error: m.standard_error,
                n_atoms: cfg.n_atoms,
                seed: cfg.seed,
            })
        })
        .collect()
}

/// Default first kick of the diffusion fit; earlier kicks are transient.
pub const DIFFUSION_WINDOW_START: f64 = 5.0;

/// Least-squares slope of `(kick, value)` pairs inside `window`
/// (default: kick 5 onwards).
///
/// Fed the mean squared displacement `⟨(ρ−ρ₀)²⟩`, the slope is the diffusion
/// constant `D` whose quasilinear value is `K²/2`.
pub fn diffusion_coefficient(series: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<f64> {
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(domain("kick numbers must be strictly increasing"));
    }
    let (lo, hi) = window.unwrap_or((DIFFUSION_WINDOW_START, f64::INFINITY));
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|(x, _)| *x >= lo && *x <= hi).collect();
    if pts.len() < 3 {
        return Err(domain(format!(
            "diffusion fit needs >= 3 points in window, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(domain("degenerate diffusion series"));
    }
    Ok(sxy / sxx)
}

/// `(kick, ⟨(ρ−ρ₀)²⟩)` pairs for [`diffusion_coefficient`].
pub fn displacement_series(stats: &[KickStats]) -> Vec<(f64, f64)> {
    stats.iter().map(|s| (s.kick as f64, s.spread)).collect()
}
