//! Wronskian shooting solver for the s-wave Coulomb + Yukawa radial equation
//!
//! `u'' = (k² - 2/r - 2g e^{-μr}/r) u`, `E = -k²`.
//!
//! An outward solution starts at `r1` with `u = r1, u' = 1` (regular at the
//! origin); an inward solution starts at `r3` with `u = e^{-k r3}`,
//! `u' = -k u` (decaying at infinity). Both are integrated to the matching
//! point `r2`, where their Wronskian vanishes exactly at a bound state.

use crate::ode::{self, OdeOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    /// Inner start of the outward solution.
    pub r1: f64,
    /// Matching point.
    pub r2: f64,
    /// The outer start is `r3 = r3_decay / k + r3_shift`, so that `e^{-k r3}`
    /// stays representable for every `k`.
    pub r3_decay: f64,
    pub r3_shift: f64,
    pub ode_tol: f64,
    pub k_bracket: (f64, f64),
    /// Grid step used to locate the first sign change below `k_hi`.
    pub k_scan_step: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub k_tol: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            r1: 1e-4,
            r2: 1.5,
            r3_decay: 30.0,
            r3_shift: 0.0,
            ode_tol: 1e-10,
            k_bracket: (0.05, 3.0),
            k_scan_step: 0.02,
            k_tol: 1e-10,
        }
    }
}

impl ShootingConfig {
    pub fn r3(&self, k: f64) -> f64 {
        self.r3_decay / k + self.r3_shift
    }

    fn validate(&self, k: f64) -> Result<()> {
        let r3 = self.r3(k);
        if !(0.0 < self.r1 && self.r1 < self.r2 && self.r2 < r3) {
            return Err(Error::InvalidArgument(format!(
                "shooting needs 0 < r1 < r2 < r3 (r1 = {}, r2 = {}, r3 = {r3})",
                self.r1, self.r2
            )));
        }
        if !(self.k_bracket.0 > 0.0 && self.k_bracket.0 < self.k_bracket.1) {
            return Err(Error::InvalidArgument(format!(
                "k bracket must satisfy 0 < k_lo < k_hi, got {:?}",
                self.k_bracket
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From `r1` out to the matching point.
    Outward,
    /// From `r3` in to the matching point.
    Inward,
}

fn check_physics(k: f64, g: f64, mu: f64) -> Result<()> {
    if !(k > 0.0) || !(g >= 0.0) || !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "shooting needs k > 0, g >= 0, mu >= 0 (k = {k}, g = {g}, mu = {mu})"
        )));
    }
    Ok(())
}

/// `(u, u')` of the selected solution at `r_match`.
pub fn integrate_radial_to(
    k: f64,
    g: f64,
    mu: f64,
    direction: Direction,
    cfg: &ShootingConfig,
    r_match: f64,
) -> Result<(f64, f64)> {
    check_physics(k, g, mu)?;
    cfg.validate(k)?;
    let r3 = cfg.r3(k);
    if !(cfg.r1 < r_match && r_match < r3) {
        return Err(Error::InvalidArgument(format!(
            "matching point {r_match} outside ({}, {r3})",
            cfg.r1
        )));
    }
    let k2 = k * k;
    let rhs = |r: f64, y: &[f64; 2]| {
        let w = k2 - 2.0 / r - 2.0 * g * (-mu * r).exp() / r;
        [y[1], w * y[0]]
    };
    let (start, y0, h0) = match direction {
        Direction::Outward => (cfg.r1, [cfg.r1, 1.0], 0.1 * cfg.r1),
        Direction::Inward => {
            let u = (-k * r3).exp();
            (r3, [u, -k * u], 0.01)
        }
    };
    let opts = OdeOptions {
        tol: cfg.ode_tol,
        h0: Some(h0),
        ..OdeOptions::default()
    };
    let (y, _) = ode::integrate(rhs, start, y0, r_match, &opts)?;
    Ok((y[0], y[1]))
}

/// `(u, u')` at the configured matching point `r2`.
pub fn integrate_radial(
    k: f64,
    g: f64,
    mu: f64,
    direction: Direction,
    cfg: &ShootingConfig,
) -> Result<(f64, f64)> {
    integrate_radial_to(k, g, mu, direction, cfg, cfg.r2)
}

/// Wronskian `u_out u_in' - u_out' u_in` at `r_match`, divided by
/// `|u_out u_in'| + |u_out' u_in|` so that it lies in `[-1, 1]`.
pub fn wronskian_at(k: f64, g: f64, mu: f64, cfg: &ShootingConfig, r_match: f64) -> Result<f64> {
    let (uo, duo) = integrate_radial_to(k, g, mu, Direction::Outward, cfg, r_match)?;
    let (ui, dui) = integrate_radial_to(k, g, mu, Direction::Inward, cfg, r_match)?;
    let a = uo * dui;
    let b = duo * ui;
    let scale = a.abs() + b.abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((a - b) / scale)
}

/// Normalized Wronskian mismatch at `r2`.
pub fn wronskian_mismatch(k: f64, g: f64, mu: f64, cfg: &ShootingConfig) -> Result<f64> {
    wronskian_at(k, g, mu, cfg, cfg.r2)
}

/// Ground-state energy `E = -k*²`, where `k*` is the largest root of the
/// Wronskian in the bracket. The root is found by scanning down from `k_hi`
/// for the first sign change and then bisecting.
pub fn ground_energy_shooting(g: f64, mu: f64, cfg: &ShootingConfig) -> Result<f64> {
    let (k_lo, k_hi) = cfg.k_bracket;
    check_physics(k_hi, g, mu)?;
    let w = |k: f64| wronskian_mismatch(k, g, mu, cfg);

    let mut hi = k_hi;
    let mut w_hi = w(hi)?;
    let mut bracket = None;
    while hi > k_lo {
        let lo = (hi - cfg.k_scan_step).max(k_lo);
        let w_lo = w(lo)?;
        if w_lo == 0.0 {
            return Ok(-lo * lo);
        }
        if w_lo.signum() != w_hi.signum() {
            bracket = Some((lo, hi, w_lo));
            break;
        }
        hi = lo;
        w_hi = w_lo;
    }
    let (mut lo, mut hi, mut w_lo) = bracket.ok_or(Error::NoBoundState { k_lo, k_hi })?;
    while hi - lo > cfg.k_tol {
        let mid = 0.5 * (lo + hi);
        let w_mid = w(mid)?;
        if w_mid == 0.0 {
            return Ok(-mid * mid);
        }
        if w_mid.signum() == w_lo.signum() {
            lo = mid;
            w_lo = w_mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    Ok(-k * k)
}
