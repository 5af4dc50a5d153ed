//! Hamiltonian and overlap matrices in truncated bases.
//!
//! Two radial families are supported: hydrogen bound states `R_{nl}` (an
//! orthonormal set) and normalized exponentials `2α^{3/2} e^{-αr}` (a
//! non-orthogonal set, `l = 0` only). On the compactified space each radial
//! function is multiplied by a plane wave `e^{iqθ}/√(2π)`, `|q| <= Q`.
//!
//! Every nonzero Fourier mode `k` of the potential is a Yukawa term
//! `-(e²/r) e^{-|k| r/R}`, so all potential matrix elements reduce to
//! Yukawa integrals with range parameter `μ = |q - q'| / R`.

use std::io::Write;

use nalgebra::DMatrix;

use crate::potential::ModelConfig;
use crate::quad::{self, QuadResult};
use crate::specialfn::{binomial_real, hydrogen_radial, log_factorial, RadialIndex};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum BasisFamily {
    /// Hydrogen bound states `n ∈ {l+1, …, n_max}` in a fixed `l` channel.
    HydrogenBound { n_max: u32, l: u32 },
    /// Exponentials with strictly positive, pairwise distinct exponents.
    Exponential { alphas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    family: BasisFamily,
    q_max: Option<u32>,
}

impl BasisSpec {
    pub fn hydrogen(n_max: u32, l: u32, q_max: Option<u32>) -> Result<Self> {
        if n_max < l + 1 {
            return Err(Error::InvalidArgument(format!(
                "hydrogen basis needs N >= l + 1 (N = {n_max}, l = {l})"
            )));
        }
        Ok(Self {
            family: BasisFamily::HydrogenBound { n_max, l },
            q_max,
        })
    }

    pub fn exponential(alphas: Vec<f64>, q_max: Option<u32>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidArgument("exponential basis needs at least one alpha".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {a}")));
        }
        for (i, a) in alphas.iter().enumerate() {
            if alphas[..i].contains(a) {
                return Err(Error::InvalidArgument(format!("alpha {a} appears twice")));
            }
        }
        Ok(Self {
            family: BasisFamily::Exponential { alphas },
            q_max,
        })
    }

    pub fn family(&self) -> &BasisFamily {
        &self.family
    }

    pub fn q_max(&self) -> Option<u32> {
        self.q_max
    }

    pub fn with_q_max(&self, q_max: Option<u32>) -> Self {
        Self {
            family: self.family.clone(),
            q_max,
        }
    }

    pub fn l(&self) -> u32 {
        match self.family {
            BasisFamily::HydrogenBound { l, .. } => l,
            BasisFamily::Exponential { .. } => 0,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            BasisFamily::HydrogenBound { .. } => "hydrogen",
            BasisFamily::Exponential { .. } => "exponential",
        }
    }

    /// Number of radial functions (`N - l` or the number of exponents).
    pub fn radial_len(&self) -> usize {
        match &self.family {
            BasisFamily::HydrogenBound { n_max, l } => (n_max - l) as usize,
            BasisFamily::Exponential { alphas } => alphas.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.radial_len() * (2 * self.q_max.unwrap_or(0) as usize + 1)
    }

    pub fn index_map(&self) -> IndexMap {
        IndexMap {
            radial_len: self.radial_len(),
            radial_offset: match self.family {
                BasisFamily::HydrogenBound { l, .. } => l + 1,
                BasisFamily::Exponential { .. } => 1,
            },
            q_max: self.q_max.unwrap_or(0),
        }
    }

    /// Radial basis function `k` (0-based) evaluated at `r`, in `a^{-3/2}`.
    pub fn radial_value(&self, k: usize, r: f64) -> f64 {
        match &self.family {
            BasisFamily::HydrogenBound { l, .. } => {
                let idx = RadialIndex::new(*l + 1 + k as u32, *l).expect("valid by construction");
                hydrogen_radial(idx, r)
            }
            BasisFamily::Exponential { alphas } => {
                let a = alphas[k];
                2.0 * a.powf(1.5) * (-a * r).exp()
            }
        }
    }

    /// Radial overlap `∫ r² f_j f_k dr` of two basis functions.
    pub fn radial_overlap(&self, j: usize, k: usize) -> f64 {
        match &self.family {
            BasisFamily::HydrogenBound { .. } => {
                if j == k {
                    1.0
                } else {
                    0.0
                }
            }
            BasisFamily::Exponential { alphas } => exp_overlap(alphas[j], alphas[k]),
        }
    }
}

/// Flat index layout: `q` major (from `-Q` to `Q`), radial label minor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMap {
    radial_len: usize,
    /// Label of radial position 0: `l + 1` for hydrogen, `1` for exponentials.
    radial_offset: u32,
    q_max: u32,
}

impl IndexMap {
    pub fn dim(&self) -> usize {
        self.radial_len * (2 * self.q_max as usize + 1)
    }

    pub fn radial_len(&self) -> usize {
        self.radial_len
    }

    pub fn q_max(&self) -> u32 {
        self.q_max
    }

    /// Flat index of radial position `k` (0-based) and mode `q`.
    pub fn flat(&self, k: usize, q: i32) -> usize {
        debug_assert!(k < self.radial_len && q.unsigned_abs() <= self.q_max);
        (q + self.q_max as i32) as usize * self.radial_len + k
    }

    /// Inverse of [`IndexMap::flat`]: `(radial position, q)`.
    pub fn split(&self, flat: usize) -> (usize, i32) {
        let k = flat % self.radial_len;
        let q = (flat / self.radial_len) as i32 - self.q_max as i32;
        (k, q)
    }

    /// Physical radial label (`n` for hydrogen, `i` for exponentials).
    pub fn radial_label(&self, k: usize) -> u32 {
        self.radial_offset + k as u32
    }

    /// Flat index of the parity image `(k, -q)`.
    pub fn parity_partner(&self, flat: usize) -> usize {
        let (k, q) = self.split(flat);
        self.flat(k, -q)
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianPair {
    pub h: DMatrix<f64>,
    pub s: Option<DMatrix<f64>>,
    pub index_map: IndexMap,
}

impl HamiltonianPair {
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

fn check_pair(n: u32, n2: u32, l: u32) -> Result<()> {
    if n < l + 1 || n2 < l + 1 {
        return Err(Error::InvalidArgument(format!(
            "matrix element needs n, n' >= l + 1 (n = {n}, n' = {n2}, l = {l})"
        )));
    }
    Ok(())
}

fn check_coupling(g: f64, mu: f64) -> Result<()> {
    if !(g >= 0.0) || !(mu >= 0.0) || !g.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "coupling and range need g >= 0, mu >= 0 (g = {g}, mu = {mu})"
        )));
    }
    Ok(())
}

/// Yukawa matrix element `M_{n,n';l}(g, μ) = 2g ∫ r² R_{nl} R_{n'l} e^{-μr}/r dr`
/// by adaptive quadrature on `[0, 40 max(n, n')]`.
///
/// The range is cut at `2^k/σ`, `σ = 1/n + 1/n' + μ` being the decay rate of
/// the integrand, so that a sharply peaked integrand at large `μ` is seen by
/// the first panels instead of slipping between the nodes of one wide panel.
pub fn yukawa_element_quad(n: u32, n2: u32, l: u32, g: f64, mu: f64, tol: f64) -> Result<QuadResult> {
    check_pair(n, n2, l)?;
    check_coupling(g, mu)?;
    let a = RadialIndex::new(n, l)?;
    let b = RadialIndex::new(n2, l)?;
    let r_max = 40.0 * n.max(n2) as f64;
    let scale = 1.0 / (1.0 / n as f64 + 1.0 / n2 as f64 + mu);
    let mut cuts = vec![0.0];
    let mut edge = scale;
    while edge < r_max {
        cuts.push(edge);
        edge *= 2.0;
    }
    cuts.push(r_max);
    let inner_tol = if g > 0.0 { tol / (2.0 * g) } else { tol };
    let panel_tol = inner_tol / (cuts.len() - 1) as f64;
    let mut total = QuadResult {
        value: 0.0,
        error: 0.0,
        intervals: 0,
    };
    for w in cuts.windows(2) {
        let res = quad::integrate(
            |r| r * hydrogen_radial(a, r) * hydrogen_radial(b, r) * (-mu * r).exp(),
            w[0],
            w[1],
            panel_tol,
        )?;
        total.value += res.value;
        total.error += res.error;
        total.intervals += res.intervals;
    }
    Ok(QuadResult {
        value: 2.0 * g * total.value,
        error: 2.0 * g * total.error,
        intervals: total.intervals,
    })
}

/// Closed finite-sum form of `M_{n,n';l}(g, μ)`.
///
/// With `σ = 1/n + 1/n' + μ`,
/// `M = (g/2)(4/(nn'))^{l+2} √((n-l-1)!(n'-l-1)!/((n+l)!(n'+l)!)) (2l+1)!/σ^{2l+2}
///      Σ_k C(n+l, n-l-1-k) C(n'+l, n'-l-1-k) C(k+2l+1, k)
///          (2/(nσ))^k (2/(n'σ))^k (1-2/(nσ))^{n-l-1-k} (1-2/(n'σ))^{n'-l-1-k}`.
pub fn yukawa_element_closed(n: u32, n2: u32, l: u32, g: f64, mu: f64) -> Result<f64> {
    check_pair(n, n2, l)?;
    check_coupling(g, mu)?;
    if g == 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let n2f = n2 as f64;
    let sigma = 1.0 / nf + 1.0 / n2f + mu;
    let m1 = n - l - 1;
    let m2 = n2 - l - 1;

    // Positive prefactor in log space.
    let log_pref = (l as f64 + 2.0) * (4.0 / (nf * n2f)).ln()
        + 0.5 * (log_factorial(m1) + log_factorial(m2) - log_factorial(n + l) - log_factorial(n2 + l))
        + log_factorial(2 * l + 1)
        - (2.0 * l as f64 + 2.0) * sigma.ln();

    let x1 = 2.0 / (nf * sigma);
    let x2 = 2.0 / (n2f * sigma);
    let y1 = 1.0 - x1;
    let y2 = 1.0 - x2;
    let mut sum = 0.0;
    for k in 0..=m1.min(m2) {
        let binoms = binomial_real(n + l, m1 - k)?
            * binomial_real(n2 + l, m2 - k)?
            * binomial_real(k + 2 * l + 1, k)?;
        // powi keeps the sign of negative bases and gives 0^0 = 1.
        sum += binoms * (x1 * x2).powi(k as i32) * y1.powi((m1 - k) as i32) * y2.powi((m2 - k) as i32);
    }
    Ok(0.5 * g * log_pref.exp() * sum)
}

/// Table of `M_{n,n';l}(g, μ)` for all radial positions of a hydrogen basis.
fn yukawa_table(n_max: u32, l: u32, g: f64, mu: f64) -> Result<DMatrix<f64>> {
    let len = (n_max - l) as usize;
    let mut m = DMatrix::zeros(len, len);
    for a in 0..len {
        for b in 0..=a {
            let v = yukawa_element_closed(l + 1 + a as u32, l + 1 + b as u32, l, g, mu)?;
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(m)
}

/// Toy model (Coulomb + Yukawa) in the hydrogen basis:
/// `H_{nn'} = -δ_{nn'}/n² - M_{n,n';l}(g, μ)`.
pub fn build_toy_hydrogen(n_max: u32, l: u32, g: f64, mu: f64) -> Result<HamiltonianPair> {
    let spec = BasisSpec::hydrogen(n_max, l, None)?;
    let mut h = -yukawa_table(n_max, l, g, mu)?;
    for a in 0..spec.radial_len() {
        let n = (l + 1 + a as u32) as f64;
        h[(a, a)] -= 1.0 / (n * n);
    }
    Ok(HamiltonianPair {
        h,
        s: None,
        index_map: spec.index_map(),
    })
}

/// `⟨m|n⟩ = (2√(α_m α_n)/(α_m + α_n))³`.
pub fn exp_overlap(a: f64, b: f64) -> f64 {
    let t = 2.0 * (a * b).sqrt() / (a + b);
    t * t * t
}

/// `2 ∫ r² f_a f_b e^{-μr}/r dr = (2√(ab))³ / (a + b + μ)²` for normalized exponentials.
fn exp_yukawa(a: f64, b: f64, mu: f64) -> f64 {
    let t = 2.0 * (a * b).sqrt();
    let d = a + b + mu;
    t * t * t / (d * d)
}

/// Toy model in the exponential basis (`l = 0`):
/// `H_{mn} = -(α_m + α_n - α_m α_n)⟨m|n⟩ - g (2√(α_m α_n))³/(α_m + α_n + μ)²`.
pub fn build_toy_exponential(alphas: &[f64], g: f64, mu: f64) -> Result<HamiltonianPair> {
    check_coupling(g, mu)?;
    let spec = BasisSpec::exponential(alphas.to_vec(), None)?;
    let n = alphas.len();
    let mut h = DMatrix::zeros(n, n);
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let (a, b) = (alphas[i], alphas[j]);
            let ov = if i == j { 1.0 } else { exp_overlap(a, b) };
            let v = -(a + b - a * b) * ov - g * exp_yukawa(a, b, mu);
            h[(i, j)] = v;
            h[(j, i)] = v;
            s[(i, j)] = ov;
            s[(j, i)] = ov;
        }
    }
    Ok(HamiltonianPair {
        h,
        s: Some(s),
        index_map: spec.index_map(),
    })
}

/// Geometric exponent set `α_n = A B^{n-1}`, `n = 1..N`.
pub fn alpha_geometric(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a > 0.0) || !(b > 1.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "geometric exponents need A > 0, B > 1, N >= 1 (A = {a}, B = {b}, N = {n})"
        )));
    }
    Ok((0..n).map(|k| a * b.powi(k as i32)).collect())
}

fn require_q(spec: &BasisSpec) -> Result<u32> {
    spec.q_max.ok_or_else(|| {
        Error::InvalidArgument("compactified basis needs a Fourier cutoff Q".into())
    })
}

/// Compactified problem in the hydrogen × plane-wave basis:
/// `δ_{nn'}δ_{qq'}(-1/n² + q²/R²) - (1 - δ_{qq'}) M_{n,n';l}(1, |q - q'|/R)`.
pub fn build_compact_hydrogen(n_max: u32, l: u32, q_max: u32, cfg: &ModelConfig) -> Result<HamiltonianPair> {
    let spec = BasisSpec::hydrogen(n_max, l, Some(q_max))?;
    let map = spec.index_map();
    let len = map.radial_len();
    let big_r = cfg.radius();
    let tables = (1..=2 * q_max)
        .map(|dq| yukawa_table(n_max, l, 1.0, dq as f64 / big_r))
        .collect::<Result<Vec<_>>>()?;

    let dim = map.dim();
    let mut h = DMatrix::zeros(dim, dim);
    let q_lo = -(q_max as i32);
    for q in q_lo..=q_max as i32 {
        for a in 0..len {
            let n = (l + 1 + a as u32) as f64;
            let i = map.flat(a, q);
            h[(i, i)] = -1.0 / (n * n) + (q * q) as f64 / (big_r * big_r);
        }
        for q2 in q_lo..q {
            let table = &tables[(q - q2) as usize - 1];
            for a in 0..len {
                for b in 0..len {
                    let i = map.flat(a, q);
                    let j = map.flat(b, q2);
                    let v = -table[(a, b)];
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
        }
    }
    Ok(HamiltonianPair {
        h,
        s: None,
        index_map: map,
    })
}

/// Compactified problem in the exponential × plane-wave basis:
/// `H = ⟨jp|iq⟩(α_iα_j + q²/R²) - (2√(α_iα_j))³/(α_i + α_j + |q - p|/R)²`,
/// `S = (2√(α_iα_j)/(α_i + α_j))³ δ_{pq}`.
pub fn build_compact_exponential(alphas: &[f64], q_max: u32, cfg: &ModelConfig) -> Result<HamiltonianPair> {
    let spec = BasisSpec::exponential(alphas.to_vec(), Some(q_max))?;
    let map = spec.index_map();
    let len = alphas.len();
    let big_r = cfg.radius();
    let dim = map.dim();
    let mut h = DMatrix::zeros(dim, dim);
    let mut s = DMatrix::zeros(dim, dim);
    let q_lo = -(q_max as i32);
    for q in q_lo..=q_max as i32 {
        for q2 in q_lo..=q {
            let mu = (q - q2) as f64 / big_r;
            let kinetic_q = (q * q) as f64 / (big_r * big_r);
            for a in 0..len {
                for b in 0..len {
                    let i = map.flat(a, q);
                    let j = map.flat(b, q2);
                    if j > i {
                        continue;
                    }
                    let (x, y) = (alphas[a], alphas[b]);
                    let mut v = -exp_yukawa(x, y, mu);
                    if q == q2 {
                        let ov = if a == b { 1.0 } else { exp_overlap(x, y) };
                        v += ov * (x * y + kinetic_q);
                        s[(i, j)] = ov;
                        s[(j, i)] = ov;
                    }
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
        }
    }
    Ok(HamiltonianPair {
        h,
        s: Some(s),
        index_map: map,
    })
}

/// Compactified Hamiltonian for any basis that carries a Fourier cutoff.
pub fn build_compact(spec: &BasisSpec, cfg: &ModelConfig) -> Result<HamiltonianPair> {
    let q_max = require_q(spec)?;
    match spec.family() {
        BasisFamily::HydrogenBound { n_max, l } => build_compact_hydrogen(*n_max, *l, q_max, cfg),
        BasisFamily::Exponential { alphas } => build_compact_exponential(alphas, q_max, cfg),
    }
}

/// Plain-text matrix dump: a header line `dim=<d> basis=<family> R=<R> N=<N> Q=<Q>`
/// followed by one row per line.
pub fn write_matrix_dump<W: Write>(
    mut out: W,
    m: &DMatrix<f64>,
    spec: &BasisSpec,
    cfg: &ModelConfig,
) -> Result<()> {
    writeln!(
        out,
        "dim={} basis={} R={} N={} Q={}",
        m.nrows(),
        spec.family_name(),
        cfg.radius(),
        match spec.family() {
            BasisFamily::HydrogenBound { n_max, .. } => *n_max as usize,
            BasisFamily::Exponential { alphas } => alphas.len(),
        },
        spec.q_max().unwrap_or(0)
    )?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(r: f64) -> ModelConfig {
        ModelConfig::new(r).unwrap()
    }

    #[test]
    fn basis_spec_validation() {
        assert!(BasisSpec::hydrogen(2, 2, Some(1)).is_err());
        assert!(BasisSpec::exponential(vec![], None).is_err());
        assert!(BasisSpec::exponential(vec![1.0, -1.0], None).is_err());
        assert!(BasisSpec::exponential(vec![1.0, 2.0, 1.0], None).is_err());
        let s = BasisSpec::hydrogen(10, 1, Some(3)).unwrap();
        assert_eq!(s.dim(), 9 * 7);
    }

    #[test]
    fn index_map_round_trip() {
        let map = BasisSpec::hydrogen(5, 1, Some(2)).unwrap().index_map();
        for flat in 0..map.dim() {
            let (k, q) = map.split(flat);
            assert_eq!(map.flat(k, q), flat);
            assert_eq!(map.parity_partner(map.parity_partner(flat)), flat);
        }
        assert_eq!(map.flat(0, -2), 0);
        assert_eq!(map.radial_label(0), 2);
    }

    #[test]
    fn quadrature_element_examples() {
        let v = yukawa_element_quad(1, 1, 0, 1.0, 0.0, 1e-12).unwrap().value;
        assert_relative_eq!(v, 2.0, max_relative = 1e-10);
        let v = yukawa_element_quad(1, 2, 0, 1.0, 0.0, 1e-12).unwrap().value;
        assert_relative_eq!(v, 8.0 * 2f64.sqrt() / 27.0, max_relative = 1e-10);
        assert_eq!(yukawa_element_quad(3, 2, 1, 0.0, 1.0, 1e-12).unwrap().value, 0.0);
    }

    #[test]
    fn quadrature_resolves_short_range() {
        // 8g/(2 + μ)² for the ground state; at μ = 40 the integrand lives in r < 0.3
        // of a range reaching r = 400 for n' = 10.
        for mu in [40.0, 400.0] {
            let v = yukawa_element_quad(1, 1, 0, 1.0, mu, 1e-13).unwrap().value;
            assert_relative_eq!(v, 8.0 / ((2.0 + mu) * (2.0 + mu)), max_relative = 1e-10);
        }
        let q = yukawa_element_quad(1, 10, 0, 1.0, 40.0, 1e-13).unwrap().value;
        let c = yukawa_element_closed(1, 10, 0, 1.0, 40.0).unwrap();
        assert_relative_eq!(q, c, max_relative = 1e-10);
    }

    #[test]
    fn closed_element_examples() {
        assert_relative_eq!(yukawa_element_closed(1, 1, 0, 1.0, 1.0).unwrap(), 8.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(
            yukawa_element_closed(1, 2, 0, 1.0, 0.0).unwrap(),
            8.0 * 2f64.sqrt() / 27.0,
            max_relative = 1e-14
        );
        for mu in [0.0, 0.3, 5.0] {
            for n in 1..=10 {
                for n2 in 1..=10 {
                    let a = yukawa_element_closed(n, n2, 0, 1.0, mu).unwrap();
                    let b = yukawa_element_closed(n2, n, 0, 1.0, mu).unwrap();
                    assert_relative_eq!(a, b, max_relative = 1e-13);
                }
            }
        }
        assert!(yukawa_element_closed(1, 1, 1, 1.0, 0.0).is_err());
        assert!(yukawa_element_closed(1, 1, 0, 1.0, -1.0).is_err());
    }

    #[test]
    fn coulomb_diagonal_elements() {
        // With μ = 0, 2⟨1/r⟩ = 2/n² for every l.
        for l in 0..3 {
            for n in (l + 1)..12 {
                let v = yukawa_element_closed(n, n, l, 1.0, 0.0).unwrap();
                assert_relative_eq!(v, 2.0 / (n * n) as f64, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn closed_matches_quadrature_l1_l2() {
        for l in 1..=2 {
            for (n, n2) in [(l + 1, l + 1), (l + 2, 7), (9, 10)] {
                let c = yukawa_element_closed(n, n2, l, 1.0, 0.7).unwrap();
                let q = yukawa_element_quad(n, n2, l, 1.0, 0.7, 1e-12).unwrap().value;
                assert!((c - q).abs() < 1e-10, "{n} {n2} {l}: {c} vs {q}");
            }
        }
    }

    #[test]
    fn toy_hydrogen_examples() {
        let p = build_toy_hydrogen(6, 0, 0.0, 1.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let n = (i + 1) as f64;
                let expect = if i == j { -1.0 / (n * n) } else { 0.0 };
                assert_eq!(p.h[(i, j)], expect);
            }
        }
        let p = build_toy_hydrogen(1, 0, 1.0, 2.0).unwrap();
        assert_relative_eq!(p.h[(0, 0)], -1.5, max_relative = 1e-14);
        assert!(p.s.is_none());
    }

    #[test]
    fn toy_exponential_examples() {
        let p = build_toy_exponential(&[1.0], 0.0, 3.0).unwrap();
        assert_relative_eq!(p.h[(0, 0)], -1.0);
        assert_eq!(p.s.as_ref().unwrap()[(0, 0)], 1.0);
        assert_relative_eq!(exp_overlap(1.0, 2.0), 0.838052, epsilon = 1e-6);
        let alphas = alpha_geometric(0.1, 1.5, 10).unwrap();
        let p = build_toy_exponential(&alphas, 1.0, 1.0).unwrap();
        let s = p.s.unwrap();
        for i in 0..10 {
            assert_eq!(s[(i, i)], 1.0);
        }
        assert_eq!(p.h, p.h.transpose());
    }

    #[test]
    fn geometric_alphas() {
        assert_eq!(alpha_geometric(0.1, 1.5, 1).unwrap(), vec![0.1]);
        let a = alpha_geometric(0.1, 1.5, 3).unwrap();
        assert_relative_eq!(a[1], 0.15, max_relative = 1e-15);
        assert_relative_eq!(a[2], 0.225, max_relative = 1e-15);
        assert_eq!(alpha_geometric(1.0, 2.0, 4).unwrap(), vec![1.0, 2.0, 4.0, 8.0]);
        assert!(alpha_geometric(0.1, 1.0, 3).is_err());
        assert!(alpha_geometric(0.1, 1.5, 0).is_err());
    }

    #[test]
    fn compact_hydrogen_entries() {
        let p = build_compact_hydrogen(3, 0, 2, &cfg(0.5)).unwrap();
        let m = p.index_map;
        assert_eq!(p.dim(), 15);
        assert_eq!(p.h[(m.flat(0, 0), m.flat(0, 0))], -1.0);
        assert_relative_eq!(p.h[(m.flat(0, 1), m.flat(0, 1))], 3.0, max_relative = 1e-15);

        let p = build_compact_hydrogen(3, 0, 2, &cfg(0.25)).unwrap();
        let m = p.index_map;
        assert_relative_eq!(p.h[(m.flat(0, 0), m.flat(0, 1))], -2.0 / 9.0, max_relative = 1e-14);
        // Couplings depend on |q - q'| only.
        for k in 1..=4 {
            let expect = -yukawa_element_closed(1, 2, 0, 1.0, k as f64 / 0.25).unwrap();
            let q = -2 + k as i32;
            assert_relative_eq!(p.h[(m.flat(0, -2), m.flat(1, q))], expect, max_relative = 1e-14);
        }
        assert_eq!(p.h, p.h.transpose());
    }

    #[test]
    fn compact_hydrogen_without_modes_is_bare_coulomb() {
        let compact = build_compact_hydrogen(8, 1, 0, &cfg(0.2)).unwrap();
        let bare = build_toy_hydrogen(8, 1, 0.0, 0.0).unwrap();
        assert_eq!(compact.h, bare.h);
    }

    #[test]
    fn compact_exponential_entries() {
        let p = build_compact_exponential(&[1.0], 3, &cfg(0.25)).unwrap();
        let m = p.index_map;
        assert_relative_eq!(p.h[(m.flat(0, 0), m.flat(0, 0))], -1.0, max_relative = 1e-15);

        let alphas = [0.3, 1.1, 2.5];
        let p = build_compact_exponential(&alphas, 2, &cfg(0.2)).unwrap();
        let m = p.index_map;
        let s = p.s.as_ref().unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let (x, y) = (alphas[a], alphas[b]);
                // Pure Coulomb part of the q = p block.
                let coulomb = -(x + y) * s[(m.flat(a, 1), m.flat(b, 1))];
                let direct = p.h[(m.flat(a, 0), m.flat(b, 0))] - s[(m.flat(a, 0), m.flat(b, 0))] * x * y;
                assert_relative_eq!(direct, coulomb, max_relative = 1e-13);
                for q in -2..=2 {
                    for q2 in -2..=2 {
                        let v = s[(m.flat(a, q), m.flat(b, q2))];
                        if q == q2 {
                            assert_eq!(v, s[(m.flat(a, 0), m.flat(b, 0))]);
                        } else {
                            assert_eq!(v, 0.0);
                        }
                    }
                }
            }
        }
        assert_eq!(p.h, p.h.transpose());
    }

    #[test]
    fn compact_exponential_without_modes_matches_toy() {
        let alphas = alpha_geometric(0.1, 1.5, 6).unwrap();
        let compact = build_compact_exponential(&alphas, 0, &cfg(0.1)).unwrap();
        let toy = build_toy_exponential(&alphas, 0.0, 0.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_relative_eq!(compact.h[(i, j)], toy.h[(i, j)], max_relative = 1e-14);
            }
        }
        assert_eq!(compact.s, toy.s);
    }

    #[test]
    fn build_compact_requires_cutoff() {
        let spec = BasisSpec::hydrogen(3, 0, None).unwrap();
        assert!(build_compact(&spec, &cfg(0.1)).is_err());
    }

    #[test]
    fn matrix_dump_format() {
        let spec = BasisSpec::hydrogen(2, 0, Some(1)).unwrap();
        let c = cfg(0.25);
        let p = build_compact(&spec, &c).unwrap();
        let mut buf = Vec::new();
        write_matrix_dump(&mut buf, &p.h, &spec, &c).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "dim=6 basis=hydrogen R=0.25 N=2 Q=1");
        assert_eq!(lines.clone().count(), 6);
        assert_eq!(lines.next().unwrap().split_whitespace().count(), 6);
    }
}
