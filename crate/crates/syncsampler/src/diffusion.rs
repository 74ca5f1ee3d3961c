//! Closed-form diffusion machinery: the noise schedule, integer timestep
//! grids, forward corruption, Tweedie conversions, DDIM transition means,
//! and the stochasticity (σ) policies.
//!
//! Conventions used throughout the crate:
//! - `alpha_bar[0] = 1` exactly; timestep `t = 0` means "clean".
//! - σ policies return **σ²** (not σ). The Max policy returns
//!   `1 − ᾱ_lo` exactly, so the direction-term radicand
//!   `1 − ᾱ_lo − σ²` is *exactly* zero in floating point and the carried-ε
//!   term drops out bit-for-bit (the ε-cancellation of the max-σ mean).
//! - Timestep grids are produced by rounding a linear ramp on integers,
//!   endpoints inclusive, duplicates collapsed; ties round half away from
//!   zero.

use serde::{Deserialize, Serialize};

/// Cumulative noise schedule ᾱ_t for a linear-β process.
#[derive(Debug, Clone)]
pub struct Schedule {
    t_max: u32,
    alpha_bar: Vec<f64>,
}

impl Schedule {
    /// Standard linear schedule: β ramps from `1e-4` to `2e-2` over `t_max`
    /// steps.
    pub fn linear(t_max: u32) -> Schedule {
        Schedule::with_beta_range(t_max, 1e-4, 2e-2)
    }

    /// Linear β schedule with explicit endpoints.
    pub fn with_beta_range(t_max: u32, beta_lo: f64, beta_hi: f64) -> Schedule {
        assert!(t_max >= 1, "schedule needs at least one step");
        let mut alpha_bar = vec![1.0; t_max as usize + 1];
        for t in 1..=t_max as usize {
            let beta = if t_max == 1 {
                beta_lo
            } else {
                beta_lo + (beta_hi - beta_lo) * (t as f64 - 1.0) / (t_max as f64 - 1.0)
            };
            alpha_bar[t] = alpha_bar[t - 1] * (1.0 - beta);
        }
        Schedule { t_max, alpha_bar }
    }

    pub fn t_max(&self) -> u32 {
        self.t_max
    }

    /// ᾱ_t. Panics if `t` exceeds the schedule length.
    pub fn alpha_bar(&self, t: u32) -> f64 {
        self.alpha_bar[t as usize]
    }
}

/// Integer timestep grid: `n` points linearly spaced from `t_start` down to
/// `t_stop` (inclusive), rounded to integers, consecutive duplicates
/// collapsed so the result is strictly decreasing.
pub fn outer_grid(t_start: u32, t_stop: u32, n: u32) -> Vec<u32> {
    assert!(n >= 1, "grid needs at least one point");
    assert!(t_start >= t_stop, "grid runs high to low");
    if n == 1 {
        return vec![t_start];
    }
    let (a, b) = (t_start as f64, t_stop as f64);
    let mut out: Vec<u32> = Vec::with_capacity(n as usize);
    for i in 0..n {
        let v = a + (b - a) * (i as f64) / (n as f64 - 1.0);
        let r = v.round() as u32;
        if out.last().map_or(true, |&last| r < last) {
            out.push(r);
        }
    }
    out
}

/// Stochasticity policy for the DDIM transition kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaPolicy {
    /// σ = 0: deterministic DDIM.
    Zero,
    /// DDPM-matching σ (η = 1 in DDIM terms).
    Ddpm,
    /// Maximum admissible σ: σ² = 1 − ᾱ_lo. The direction term vanishes and
    /// the transition becomes a forward-process corruption of x₀.
    Max,
}

impl SigmaPolicy {
    /// σ² for the transition `t_hi → t_lo`.
    pub fn sigma_sq(self, sched: &Schedule, t_hi: u32, t_lo: u32) -> f64 {
        debug_assert!(t_hi > t_lo, "transitions go strictly downward");
        let ab_hi = sched.alpha_bar(t_hi);
        let ab_lo = sched.alpha_bar(t_lo);
        match self {
            SigmaPolicy::Zero => 0.0,
            SigmaPolicy::Max => 1.0 - ab_lo,
            SigmaPolicy::Ddpm => {
                // η=1: σ² = (1−ᾱ_lo)/(1−ᾱ_hi) · (1 − ᾱ_hi/ᾱ_lo); evaluates
                // to 0 naturally when t_lo = 0 (ᾱ_lo = 1).
                ((1.0 - ab_lo) / (1.0 - ab_hi)) * (1.0 - ab_hi / ab_lo)
            }
        }
    }
}

/// Forward corruption: `x_t = √ᾱ_t·x₀ + √(1−ᾱ_t)·ε`.
pub fn forward(alpha_bar_t: f64, x0: &[f64], eps: &[f64]) -> Vec<f64> {
    let a = alpha_bar_t.sqrt();
    let b = (1.0 - alpha_bar_t).sqrt();
    x0.iter().zip(eps).map(|(&x, &e)| a * x + b * e).collect()
}

/// Tweedie clean estimate from `(x_t, ε̂)`: `x₀|ₜ = (x_t − √(1−ᾱ)·ε̂)/√ᾱ`.
pub fn tweedie_x0(alpha_bar_t: f64, x_t: &[f64], eps: &[f64]) -> Vec<f64> {
    let a = alpha_bar_t.sqrt();
    let b = (1.0 - alpha_bar_t).sqrt();
    x_t.iter().zip(eps).map(|(&x, &e)| (x - b * e) / a).collect()
}

/// Noise estimate from `(x_t, x₀|ₜ)`: inverse of [`tweedie_x0`].
pub fn tweedie_eps(alpha_bar_t: f64, x_t: &[f64], x0: &[f64]) -> Vec<f64> {
    let a = alpha_bar_t.sqrt();
    let b = (1.0 - alpha_bar_t).sqrt();
    x_t.iter().zip(x0).map(|(&x, &x0i)| (x - a * x0i) / b).collect()
}

/// One DDIM transition landing on level `ᾱ_lo`:
///
/// `x_lo = √ᾱ_lo·x₀ + √max(0, 1−ᾱ_lo−σ²)·ε + σ·g`.
///
/// The direction term is skipped when its radicand is zero (which the Max
/// policy produces exactly) or when no ε is supplied; the noise term is
/// skipped when σ² = 0 or no `g` is supplied. Skipping keeps algebraically
/// degenerate variants on the *same* arithmetic path, which is what makes
/// the sampler degeneracy chains exactly equal rather than merely close.
pub fn ddim_step(
    alpha_bar_lo: f64,
    x0: &[f64],
    eps: Option<&[f64]>,
    sigma_sq: f64,
    noise: Option<&[f64]>,
) -> Vec<f64> {
    let radicand = (1.0 - alpha_bar_lo - sigma_sq).max(0.0);
    let a = alpha_bar_lo.sqrt();
    let mut out: Vec<f64> = x0.iter().map(|&v| a * v).collect();
    if let Some(e) = eps {
        if radicand > 0.0 {
            let dir = radicand.sqrt();
            for (o, &ei) in out.iter_mut().zip(e) {
                *o += dir * ei;
            }
        }
    }
    if let Some(g) = noise {
        if sigma_sq > 0.0 {
            let s = sigma_sq.sqrt();
            for (o, &gi) in out.iter_mut().zip(g) {
                *o += s * gi;
            }
        }
    }
    out
}

/// The DDIM posterior mean written in its `(x_t, x₀)` form:
///
/// `μ = √ᾱ_lo·x₀ + √(1−ᾱ_lo−σ²)·(x_t − √ᾱ_hi·x₀)/√(1−ᾱ_hi)`.
///
/// Algebraically identical to the `(x₀, ε)` form used by [`ddim_step`];
/// exposed so tests can assert the equivalence.
pub fn posterior_mean_from_pair(
    ab_hi: f64,
    ab_lo: f64,
    x_t: &[f64],
    x0: &[f64],
    sigma_sq: f64,
) -> Vec<f64> {
    let radicand = (1.0 - ab_lo - sigma_sq).max(0.0);
    let dir = radicand.sqrt();
    let a_lo = ab_lo.sqrt();
    let a_hi = ab_hi.sqrt();
    let b_hi = (1.0 - ab_hi).sqrt();
    x_t.iter()
        .zip(x0)
        .map(|(&x, &x0i)| a_lo * x0i + dir * (x - a_hi * x0i) / b_hi)
        .collect()
}
