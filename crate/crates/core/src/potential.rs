//! Potential of a point charge on R^3 x S^1.
//!
//! Three equivalent representations are provided: the sum over periodic
//! images of the 4-d `1/|x|²` potential, its closed hyperbolic form, and the
//! Fourier series in the circle angle whose coefficients are Yukawa terms.

use std::f64::consts::PI;

use crate::{Error, Result, E2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    radius: f64,
}

impl ModelConfig {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "compactification radius must be positive, got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    /// Compactification radius `R` in Bohr radii.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Four-dimensional charge squared, `e_4² = 2 R e²`.
    pub fn e4_squared(&self) -> f64 {
        2.0 * self.radius * E2
    }
}

/// Maps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("r must be finite and >= 0, got {r}")));
    }
    Ok(())
}

/// Partial image sum over `n ∈ [-n_max, n_max]`.
pub fn potential_image_sum(r: f64, theta: f64, cfg: &ModelConfig, n_max: u64) -> Result<f64> {
    check_radius(r)?;
    let theta = normalize_angle(theta);
    if r == 0.0 && theta == 0.0 {
        return Err(Error::SourcePoint);
    }
    let big_r = cfg.radius;
    let term = |n: i64| {
        let d = big_r * (theta - 2.0 * PI * n as f64);
        1.0 / (r * r + d * d)
    };
    // Far images first.
    let mut acc = 0.0;
    for n in (1..=n_max as i64).rev() {
        acc += term(n) + term(-n);
    }
    acc += term(0);
    Ok(-cfg.e4_squared() * acc)
}

/// Contribution of the images with `|n| > n_max`, estimated by the midpoint
/// integral `∫_{n_max+1/2}^∞ dn`. The omitted remainder is `O(n_max^{-3})`.
pub fn image_sum_tail(r: f64, theta: f64, cfg: &ModelConfig, n_max: u64) -> f64 {
    let theta = normalize_angle(theta);
    let big_r = cfg.radius;
    let cut = n_max as f64 + 0.5;
    // ∫_c^∞ dn / (r² + R²(2πn ∓ θ)²) for both signs of n.
    let one_side = |shift: f64| {
        let x = big_r * (2.0 * PI * cut - shift);
        if r > 0.0 {
            (0.5 * PI - (x / r).atan()) / (2.0 * PI * big_r * r)
        } else {
            1.0 / (2.0 * PI * big_r * x)
        }
    };
    -cfg.e4_squared() * (one_side(theta) + one_side(-theta))
}

/// Image sum with the analytic tail estimate added.
pub fn potential_image_sum_corrected(
    r: f64,
    theta: f64,
    cfg: &ModelConfig,
    n_max: u64,
) -> Result<f64> {
    Ok(potential_image_sum(r, theta, cfg, n_max)? + image_sum_tail(r, theta, cfg, n_max))
}

/// Closed form `-(e²/r) sinh(r/R) / (cosh(r/R) - cos θ)`.
///
/// Evaluated as `-(e²/r)(1 - e^{-2x}) / ((1 - e^{-x})² + 4 sin²(θ/2) e^{-x})`
/// with `x = r/R`, which has no cancellation for small `x` or overflow for
/// large `x`. At `r = 0` the limit `-e²/(2R sin²(θ/2))` is returned.
pub fn potential_closed(r: f64, theta: f64, cfg: &ModelConfig) -> Result<f64> {
    check_radius(r)?;
    let theta = normalize_angle(theta);
    if r == 0.0 && theta == 0.0 {
        return Err(Error::SourcePoint);
    }
    let s = (0.5 * theta).sin();
    let s2 = s * s;
    if r == 0.0 {
        return Ok(-E2 / (2.0 * cfg.radius * s2));
    }
    let x = r / cfg.radius;
    let em1 = (-x).exp_m1();
    let num = -(-2.0 * x).exp_m1();
    let den = em1 * em1 + 4.0 * s2 * (-x).exp();
    Ok(-(E2 / r) * num / den)
}

/// Fourier coefficient `v_k(r) = -(e²/r) e^{-|k| r / R}`.
pub fn fourier_coeff(k: i64, r: f64, cfg: &ModelConfig) -> Result<f64> {
    check_radius(r)?;
    if r == 0.0 {
        return Err(Error::SourcePoint);
    }
    Ok(-(E2 / r) * (-(k.unsigned_abs() as f64) * r / cfg.radius).exp())
}

/// Cosine series `-(e²/r) - (2e²/r) Σ_{k=1}^{k_max} e^{-kr/R} cos kθ`.
pub fn potential_fourier_sum(r: f64, theta: f64, cfg: &ModelConfig, k_max: u64) -> Result<f64> {
    check_radius(r)?;
    if r == 0.0 {
        return Err(Error::SourcePoint);
    }
    let theta = normalize_angle(theta);
    let q = (-r / cfg.radius).exp();
    let mut acc = 0.0;
    for k in (1..=k_max).rev() {
        let kf = k as f64;
        acc += q.powf(kf) * (kf * theta).cos();
    }
    Ok(-(E2 / r) * (1.0 + 2.0 * acc))
}

/// Smallest `k_max` with `e^{-k_max r / R} < eps`.
pub fn fourier_cutoff(r: f64, cfg: &ModelConfig, eps: f64) -> u64 {
    (-(eps.ln()) * cfg.radius / r).floor() as u64 + 1
}
