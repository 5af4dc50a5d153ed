//! Laguerre polynomials, factorial helpers and hydrogen radial functions.

use crate::{Error, Result};

/// Principal and orbital quantum numbers of a hydrogen radial function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RadialIndex {
    n: u32,
    l: u32,
}

impl RadialIndex {
    pub fn new(n: u32, l: u32) -> Result<Self> {
        if n < l + 1 {
            return Err(Error::InvalidArgument(format!(
                "radial index requires n >= l + 1 (n = {n}, l = {l})"
            )));
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn l(&self) -> u32 {
        self.l
    }
}

/// `ln(n!)`.
pub fn log_factorial(n: u32) -> f64 {
    if n <= 20 {
        let mut f: u64 = 1;
        for k in 2..=n as u64 {
            f *= k;
        }
        return (f as f64).ln();
    }
    // 20! is exact in u64; the tail is a short sum of logs.
    let mut acc = log_factorial(20);
    for k in 21..=n {
        acc += (k as f64).ln();
    }
    acc
}

/// Binomial coefficient `C(n, k)` as a float. Exact integer arithmetic is used
/// while it fits in `u128`, which covers every `n <= 60`.
pub fn binomial_real(n: u32, k: u32) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "binomial coefficient requires k <= n (n = {n}, k = {k})"
        )));
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by (i + 1) after the multiplication.
        match c.checked_mul((n - i) as u128) {
            Some(p) => c = p / (i as u128 + 1),
            None => {
                return Ok(
                    (log_factorial(n) - log_factorial(k) - log_factorial(n - k)).exp()
                )
            }
        }
    }
    Ok(c as f64)
}

/// Generalized Laguerre polynomial `L_n^{(alpha)}(x)` by the ascending
/// three-term recurrence in `n`.
pub fn laguerre(n: u32, alpha: u32, x: f64) -> f64 {
    let a = alpha as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Hydrogen radial function `R_{nl}(r)` in units `a^{-3/2}`, normalized so that
/// `∫ r² R_{nl} R_{n'l} dr = δ_{nn'}`.
pub fn hydrogen_radial(idx: RadialIndex, r: f64) -> f64 {
    let n = idx.n as f64;
    let l = idx.l;
    let rho = 2.0 * r / n;
    let log_norm = 0.5 * (log_factorial(idx.n - l - 1) - log_factorial(idx.n + l));
    let poly = laguerre(idx.n - l - 1, 2 * l + 1, rho);
    let prefactor = 2.0 / (n * n) * log_norm.exp();
    prefactor * rho.powi(l as i32) * (-r / n).exp() * poly
}
