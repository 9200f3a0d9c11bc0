//! Pulse envelopes and the momentum-dependent kick profile they produce.
//!
//! An atom moving with scaled momentum `ρ` during a pulse `f(τ)` sees the
//! force averaged along its path, so the impulse it receives is
//! `k·Im[e^{iφ} F(ρ)]` with `F(ρ) = ∫ f(τ) e^{iρτ} dτ` and `φ` the position at
//! the centre of the pulse (`τ = 0`). For a symmetric pulse `F` is real and
//! the impulse reduces to `K_eff(ρ)·sin φ`; for the square pulse
//! `K_eff(ρ) = K·sin(πρ/ρ_b)/(πρ/ρ_b)` with `K = kη`, `ρ_b = 2π/η`.
//!
//! Asymmetric pulses carry an extra kick phase `ψ(ρ)`. That treatment is an
//! extension derived from the same impulse integral; square pulses are the
//! reference case.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};

/// Number of nodes in the interpolation table used for sampled pulses.
pub const TABLE_POINTS: usize = 4096;

/// Half-width of the interpolation table in units of the equivalent boundary.
const TABLE_RANGE_BOUNDARIES: f64 = 4.0;

/// Default search limit for [`first_zero`] in units of the equivalent boundary.
const ZERO_SEARCH_BOUNDARIES: f64 = 10.0;

/// Search limit for [`first_zero`] when the pulse has no natural scale.
const ZERO_SEARCH_FALLBACK: f64 = 1.0e4;

/// Temporal envelope `f(τ)` of one kick, in units of the kick period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseShape {
    /// Unit-area delta function: the ideal kicked rotor.
    Delta,
    /// Unit-height square pulse of duration `duty` centred on `τ = 0`.
    Square { duty: f64 },
    /// Piecewise-linear envelope through the given samples, zero outside.
    Sampled { times: Vec<f64>, amplitudes: Vec<f64> },
}

impl PulseShape {
    pub fn square(duty: f64) -> Result<Self> {
        let p = PulseShape::Square { duty };
        p.validate()?;
        Ok(p)
    }

    pub fn sampled(times: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self> {
        let p = PulseShape::Sampled { times, amplitudes };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PulseShape::Delta => Ok(()),
            PulseShape::Square { duty } => {
                if *duty > 0.0 && *duty < 1.0 {
                    Ok(())
                } else {
                    Err(domain(format!("square pulse duty η must lie in (0, 1), got {duty}")))
                }
            }
            PulseShape::Sampled { times, amplitudes } => {
                if times.len() != amplitudes.len() {
                    return Err(validation(format!(
                        "sampled pulse has {} times but {} amplitudes",
                        times.len(),
                        amplitudes.len()
                    )));
                }
                if times.len() < 2 {
                    return Err(validation("sampled pulse needs at least 2 points"));
                }
                if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
                    return Err(validation(format!(
                        "sampled pulse times must be strictly increasing (index {})",
                        i + 1
                    )));
                }
                if let Some(t) = times.iter().find(|t| !(t.abs() < 0.5)) {
                    return Err(validation(format!("sampled pulse time {t} lies outside (-0.5, 0.5)")));
                }
                if amplitudes.iter().any(|a| !a.is_finite()) {
                    return Err(validation("sampled pulse amplitudes must be finite"));
                }
                Ok(())
            }
        }
    }

    /// `∫ f(τ) dτ`.
    pub fn area(&self) -> f64 {
        match self {
            PulseShape::Delta => 1.0,
            PulseShape::Square { duty } => *duty,
            PulseShape::Sampled { times, amplitudes } => times
                .windows(2)
                .zip(amplitudes.windows(2))
                .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
                .sum(),
        }
    }

    /// Time interval over which the envelope is non-zero.
    pub fn support(&self) -> (f64, f64) {
        match self {
            PulseShape::Delta => (0.0, 0.0),
            PulseShape::Square { duty } => (-0.5 * duty, 0.5 * duty),
            PulseShape::Sampled { times, .. } => (times[0], times[times.len() - 1]),
        }
    }

    /// Duration of the square pulse with the same support; `None` for a delta.
    pub fn equivalent_duty(&self) -> Option<f64> {
        match self {
            PulseShape::Delta => None,
            _ => {
                let (a, b) = self.support();
                Some(b - a)
            }
        }
    }

    /// Mirror symmetry `f(τ) = f(−τ)`, which makes the transform real.
    pub fn is_symmetric(&self) -> bool {
        match self {
            PulseShape::Delta | PulseShape::Square { .. } => true,
            PulseShape::Sampled { times, amplitudes } => {
                let n = times.len();
                let t_scale = times[n - 1].abs().max(times[0].abs());
                let f_scale = amplitudes
                    .iter()
                    .fold(0.0f64, |m, a| m.max(a.abs()))
                    .max(f64::MIN_POSITIVE);
                (0..n).all(|i| {
                    let j = n - 1 - i;
                    (times[i] + times[j]).abs() <= 1e-12 * t_scale
                        && (amplitudes[i] - amplitudes[j]).abs() <= 1e-12 * f_scale
                })
            }
        }
    }

    /// Envelope value at `tau`; the delta pulse reports zero everywhere.
    pub fn value_at(&self, tau: f64) -> f64 {
        match self {
            PulseShape::Delta => 0.0,
            PulseShape::Square { duty } => {
                if tau.abs() <= 0.5 * duty {
                    1.0
                } else {
                    0.0
                }
            }
            PulseShape::Sampled { times, amplitudes } => {
                if tau < times[0] || tau > times[times.len() - 1] {
                    return 0.0;
                }
                let i = match times.partition_point(|t| *t <= tau) {
                    0 => 0,
                    i if i >= times.len() => times.len() - 2,
                    i => i - 1,
                };
                let s = (tau - times[i]) / (times[i + 1] - times[i]);
                amplitudes[i] + s * (amplitudes[i + 1] - amplitudes[i])
            }
        }
    }

    /// `F(ρ) = ∫ f(τ) e^{iρτ} dτ`.
    ///
    /// Sampled envelopes are integrated exactly as piecewise-linear functions
    /// on the caller's grid, which reduces to the trapezoid rule as `ρΔτ → 0`
    /// and stays exact for piecewise-constant or piecewise-linear pulses.
    pub fn transform(&self, rho: f64) -> Complex64 {
        match self {
            PulseShape::Delta => Complex64::new(1.0, 0.0),
            PulseShape::Square { duty } => Complex64::new(duty * sinc_pi(rho * duty / (2.0 * PI)), 0.0),
            PulseShape::Sampled { times, amplitudes } => linear_transform(times, amplitudes, rho),
        }
    }
}

/// `sin(πx)/(πx)` with exact zeros at non-zero integers.
fn sinc_pi(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    // n·ρ_b/ρ_b can miss n by an ulp; the true value there is O(ε) anyway
    if (x - x.round()).abs() <= 4.0 * f64::EPSILON * x.abs() {
        return 0.0;
    }
    let y = PI * x;
    y.sin() / y
}

/// d/dy [sin y / y] at `y`.
fn sinc_derivative(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        -y / 3.0 + y * y * y / 30.0
    } else {
        (y.cos() - y.sin() / y) / y
    }
}

/// `(∫₀¹ e^{iθx} dx, ∫₀¹ x e^{iθx} dx)`.
fn segment_moments(theta: f64) -> (Complex64, Complex64) {
    if theta.abs() < 0.5 {
        let step = Complex64::new(0.0, theta);
        let mut term = Complex64::new(1.0, 0.0);
        let mut m0 = Complex64::new(0.0, 0.0);
        let mut m1 = Complex64::new(0.0, 0.0);
        for n in 0..24 {
            m0 += term / (n as f64 + 1.0);
            m1 += term / (n as f64 + 2.0);
            term = term * step / (n as f64 + 1.0);
            if term.norm_sqr() < 1e-36 {
                break;
            }
        }
        (m0, m1)
    } else {
        let e = Complex64::new(theta.cos(), theta.sin());
        let i_theta = Complex64::new(0.0, theta);
        let m0 = (e - 1.0) / i_theta;
        let m1 = e / i_theta + (e - 1.0) / (theta * theta);
        (m0, m1)
    }
}

/// Segments between exact recomputations of `e^{iρt}` on uniform stretches.
const PHASE_REANCHOR: usize = 64;

fn linear_transform(times: &[f64], amplitudes: &[f64], rho: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut cached_h = f64::NAN;
    let (mut m0, mut m1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let mut advance = Complex64::new(1.0, 0.0);
    let mut phase = Complex64::new(0.0, 0.0);
    let mut since_anchor = PHASE_REANCHOR;
    for (t, f) in times.windows(2).zip(amplitudes.windows(2)) {
        let h = t[1] - t[0];
        // spacings of a computed uniform grid differ in the last bits
        let uniform = (h - cached_h).abs() <= 1e-12 * h.abs();
        if !uniform {
            (m0, m1) = segment_moments(rho * h);
            advance = Complex64::new((rho * h).cos(), (rho * h).sin());
            cached_h = h;
        }
        if !uniform || since_anchor >= PHASE_REANCHOR {
            phase = Complex64::new((rho * t[0]).cos(), (rho * t[0]).sin());
            since_anchor = 0;
        }
        acc += phase * h * (f[0] * (m0 - m1) + f[1] * m1);
        phase *= advance;
        since_anchor += 1;
    }
    acc
}

/// Square-pulse kick profile `K·sin(πρ/ρ_b)/(πρ/ρ_b)`.
///
/// The value is exactly zero at every non-zero integer multiple of `rho_b`.
pub fn keff_square(rho: f64, k_stoch: f64, rho_b: f64) -> Result<f64> {
    if !(rho_b > 0.0) {
        return Err(domain(format!("rho_b must be > 0, got {rho_b}")));
    }
    Ok(k_stoch * sinc_pi(rho / rho_b))
}

/// Kick profile of `pulse` scaled by the kick strength `k`.
pub fn keff_general(pulse: &PulseShape, k: f64) -> Result<KickProfile> {
    KickProfile::new(pulse.clone(), k)
}

/// First positive zero crossing of the profile; `None` when unbounded.
pub fn first_zero(profile: &KickProfile) -> Option<f64> {
    profile.first_zero()
}

#[derive(Debug, Clone)]
enum Evaluator {
    Constant(f64),
    Sinc { peak: f64, rho_b: f64 },
    Table(KickTable),
}

/// Linear-interpolation table of `k·F(ρ)` over a symmetric momentum window.
#[derive(Debug, Clone)]
struct KickTable {
    lo: f64,
    step: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl KickTable {
    fn build(pulse: &PulseShape, k: f64, half_range: f64, symmetric: bool) -> Self {
        let lo = -half_range;
        let step = 2.0 * half_range / (TABLE_POINTS - 1) as f64;
        let (re, im) = (0..TABLE_POINTS)
            .map(|i| {
                let g = pulse.transform(lo + step * i as f64) * k;
                (g.re, if symmetric { 0.0 } else { g.im })
            })
            .unzip();
        Self { lo, step, re, im }
    }

    fn locate(&self, rho: f64) -> Option<(usize, f64)> {
        let x = (rho - self.lo) / self.step;
        if !(x >= 0.0) || x > (TABLE_POINTS - 1) as f64 {
            return None;
        }
        let i = (x as usize).min(TABLE_POINTS - 2);
        Some((i, x - i as f64))
    }
}

/// Momentum-dependent kick `k·F(ρ)` induced by a pulse envelope.
///
/// The profile is immutable; interpolation tables are built eagerly so the
/// profile can be shared across threads in hot loops.
#[derive(Debug, Clone)]
pub struct KickProfile {
    pulse: PulseShape,
    k: f64,
    symmetric: bool,
    peak: f64,
    first_zero: Option<f64>,
    eval: Evaluator,
}

impl KickProfile {
    pub fn new(pulse: PulseShape, k: f64) -> Result<Self> {
        pulse.validate()?;
        if !k.is_finite() {
            return Err(domain("kick strength k must be finite"));
        }
        let symmetric = pulse.is_symmetric();
        let eval = match &pulse {
            PulseShape::Delta => Evaluator::Constant(k),
            PulseShape::Square { duty } => Evaluator::Sinc {
                peak: k * duty,
                rho_b: 2.0 * PI / duty,
            },
            PulseShape::Sampled { .. } => {
                let half = TABLE_RANGE_BOUNDARIES * equivalent_boundary(&pulse);
                Evaluator::Table(KickTable::build(&pulse, k, half, symmetric))
            }
        };
        let mut profile = Self {
            peak: k * pulse.transform(0.0).re,
            pulse,
            k,
            symmetric,
            first_zero: None,
            eval,
        };
        profile.first_zero = profile.find_first_zero(None);
        Ok(profile)
    }

    /// Square-pulse profile with peak `k_stoch` and its first zero pinned at `rho_b`.
    ///
    /// Used to reproduce phase portraits quoted with a boundary that is not
    /// exactly `2π/η`.
    pub fn sinc(k_stoch: f64, rho_b: f64) -> Result<Self> {
        if !(rho_b > 2.0 * PI) || !rho_b.is_finite() {
            return Err(domain(format!(
                "boundary momentum must exceed 2π (duty < 1), got {rho_b}"
            )));
        }
        if !k_stoch.is_finite() {
            return Err(domain("stochasticity must be finite"));
        }
        let duty = 2.0 * PI / rho_b;
        Ok(Self {
            pulse: PulseShape::Square { duty },
            k: k_stoch / duty,
            symmetric: true,
            peak: k_stoch,
            first_zero: Some(rho_b),
            eval: Evaluator::Sinc { peak: k_stoch, rho_b },
        })
    }

    /// Ideal delta kicks of strength `k_stoch` at every momentum.
    pub fn constant(k_stoch: f64) -> Result<Self> {
        Self::new(PulseShape::Delta, k_stoch)
    }

    pub fn pulse(&self) -> &PulseShape {
        &self.pulse
    }

    /// Kick strength `k` of the unit-height pulse.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// `K_eff(0)`, the stochasticity parameter.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn first_zero(&self) -> Option<f64> {
        self.first_zero
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `k·F(ρ)` from direct evaluation, without interpolation.
    pub fn transform(&self, rho: f64) -> Complex64 {
        match &self.eval {
            Evaluator::Constant(k) => Complex64::new(*k, 0.0),
            Evaluator::Sinc { peak, rho_b } => Complex64::new(peak * sinc_pi(rho / rho_b), 0.0),
            Evaluator::Table(_) => {
                let g = self.pulse.transform(rho) * self.k;
                if self.symmetric {
                    Complex64::new(g.re, 0.0)
                } else {
                    g
                }
            }
        }
    }

    /// Signed effective kick strength.
    ///
    /// `amplitude(ρ)·sin(φ + kick_phase(ρ))` is the impulse. For symmetric
    /// pulses the kick phase is zero and this is the signed `K_eff(ρ)`.
    pub fn amplitude(&self, rho: f64) -> f64 {
        let g = self.transform(rho);
        if g.re < 0.0 || (g.re == 0.0 && g.im < 0.0) {
            -g.norm()
        } else {
            g.norm()
        }
    }

    /// `arg F(ρ)`; in `{0, π}` for symmetric pulses.
    pub fn phase(&self, rho: f64) -> f64 {
        let g = self.transform(rho);
        if g.im == 0.0 {
            if g.re < 0.0 {
                PI
            } else {
                0.0
            }
        } else {
            g.arg()
        }
    }

    /// Kick phase paired with the signed [`amplitude`](Self::amplitude), in `(−π/2, π/2]`.
    pub fn kick_phase(&self, rho: f64) -> f64 {
        let g = self.transform(rho);
        if g.im == 0.0 {
            0.0
        } else if g.re == 0.0 {
            PI / 2.0
        } else {
            (g.im / g.re).atan()
        }
    }

    /// `(Re, Im)` of `k·F(ρ)` for the hot loop: the impulse at position `φ`
    /// is `re·sin φ + im·cos φ`.
    #[inline]
    pub fn kick_components(&self, rho: f64) -> (f64, f64) {
        match &self.eval {
            Evaluator::Constant(k) => (*k, 0.0),
            Evaluator::Sinc { peak, rho_b } => (peak * sinc_pi(rho / rho_b), 0.0),
            Evaluator::Table(t) => match t.locate(rho) {
                Some((i, s)) => (
                    t.re[i] + s * (t.re[i + 1] - t.re[i]),
                    t.im[i] + s * (t.im[i + 1] - t.im[i]),
                ),
                None => {
                    let g = self.transform(rho);
                    (g.re, g.im)
                }
            },
        }
    }

    /// ρ-derivative of [`kick_components`](Self::kick_components).
    ///
    /// For tabulated profiles this is the slope of the interpolant, so the
    /// pair stays mutually consistent.
    #[inline]
    pub fn kick_derivative(&self, rho: f64) -> (f64, f64) {
        match &self.eval {
            Evaluator::Constant(_) => (0.0, 0.0),
            Evaluator::Sinc { peak, rho_b } => {
                let c = PI / rho_b;
                (peak * c * sinc_derivative(c * rho), 0.0)
            }
            Evaluator::Table(t) => match t.locate(rho) {
                Some((i, _)) => ((t.re[i + 1] - t.re[i]) / t.step, (t.im[i + 1] - t.im[i]) / t.step),
                None => {
                    let h = 1e-5 * (1.0 + rho.abs());
                    let g = (self.transform(rho + h) - self.transform(rho - h)) / (2.0 * h);
                    (g.re, g.im)
                }
            },
        }
    }

    /// Smallest `ρ > 0` where the signed amplitude crosses zero, searched up to
    /// `rho_max` (default: ten equivalent boundaries).
    ///
    /// Sign changes are bracketed on a scan grid and refined by bisection to
    /// 1e-9. Jumps of the signed amplitude that are not zeros of `|k·F|` are
    /// skipped.
    pub fn find_first_zero(&self, rho_max: Option<f64>) -> Option<f64> {
        if let Evaluator::Constant(_) = self.eval {
            return None;
        }
        let scale = equivalent_boundary(&self.pulse);
        let limit = rho_max.unwrap_or(if scale.is_finite() {
            ZERO_SEARCH_BOUNDARIES * scale
        } else {
            ZERO_SEARCH_FALLBACK
        });
        let step = if scale.is_finite() {
            scale / 256.0
        } else {
            limit / 2560.0
        };
        let tolerance = 1e-6 * self.peak.abs().max(f64::MIN_POSITIVE);
        let mut lo = 0.0;
        let mut f_lo = self.amplitude(lo);
        let mut i = 1usize;
        loop {
            let hi = (step * i as f64).min(limit);
            let f_hi = self.amplitude(hi);
            if f_hi == 0.0 && self.peak != 0.0 {
                return Some(hi);
            }
            if f_lo.signum() != f_hi.signum() && f_lo != 0.0 {
                let root = self.bisect(lo, hi, f_lo);
                if self.transform(root).norm() <= tolerance {
                    return Some(root);
                }
            }
            if hi >= limit {
                return None;
            }
            lo = hi;
            f_lo = f_hi;
            i += 1;
        }
    }

    fn bisect(&self, mut a: f64, mut b: f64, f_a: f64) -> f64 {
        let s_a = f_a.signum();
        while b - a > 1e-9 {
            let m = 0.5 * (a + b);
            let f_m = self.amplitude(m);
            if f_m == 0.0 {
                return m;
            }
            if f_m.signum() == s_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

/// `2π/(support width)`, or infinity for a delta pulse.
fn equivalent_boundary(pulse: &PulseShape) -> f64 {
    match pulse.equivalent_duty() {
        Some(d) if d > 0.0 => 2.0 * PI / d,
        _ => f64::INFINITY,
    }
}
