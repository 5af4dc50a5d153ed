//! Eigenstate wavefunctions and probability densities on the `(r, θ)` plane.
//!
//! `ψ(r, θ) = Σ_{k,q} a_{k,q} f_k(r) e^{iqθ}/√(2π)` where `f_k` is the
//! radial basis function. The constant angular factor `Y_lm` is left out of
//! every density, so `∫∫ |ψ|² r² dr dθ = aᵀSa = 1`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::eig::{eig_symmetric, Spectrum};
use crate::matrixbuild::BasisSpec;
use crate::{Error, Result};

/// Relative eigenvalue gap below which two levels are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMeta {
    pub basis: String,
    pub radial_size: usize,
    pub q_max: u32,
    pub radius: Option<f64>,
    pub state: usize,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct DensityGrid {
    pub r_nodes: Vec<f64>,
    pub theta_nodes: Vec<f64>,
    /// `values[(i, j)] = |ψ(r_i, θ_j)|²`.
    pub values: DMatrix<f64>,
    pub meta: DensityMeta,
}

fn check_len(spec: &BasisSpec, coeffs: &[f64]) -> Result<()> {
    if coeffs.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: coeffs.len(),
        });
    }
    Ok(())
}

/// Fourier components `c_q(r) = Σ_k a_{k,q} f_k(r)` for `q = -Q..=Q`.
fn fourier_components(spec: &BasisSpec, coeffs: &[f64], radial: &[f64]) -> Vec<f64> {
    let map = spec.index_map();
    let q_max = map.q_max() as i32;
    (-q_max..=q_max)
        .map(|q| {
            (0..map.radial_len())
                .map(|k| coeffs[map.flat(k, q)] * radial[k])
                .sum()
        })
        .collect()
}

fn synthesize(components: &[f64], q_max: i32, theta: f64) -> Complex64 {
    let mut psi = Complex64::new(0.0, 0.0);
    for (idx, c) in components.iter().enumerate() {
        let q = idx as i32 - q_max;
        psi += Complex64::from_polar(*c, q as f64 * theta);
    }
    psi / (2.0 * PI).sqrt()
}

/// Amplitude of the state with coefficients `coeffs` at `(r, θ)`.
pub fn wavefunction_at(spec: &BasisSpec, coeffs: &[f64], r: f64, theta: f64) -> Result<Complex64> {
    check_len(spec, coeffs)?;
    let radial: Vec<f64> = (0..spec.radial_len()).map(|k| spec.radial_value(k, r)).collect();
    let comps = fourier_components(spec, coeffs, &radial);
    Ok(synthesize(&comps, spec.q_max().unwrap_or(0) as i32, theta))
}

/// Full overlap matrix of a basis: radial overlaps, diagonal in `q`.
pub fn overlap_matrix(spec: &BasisSpec) -> DMatrix<f64> {
    let map = spec.index_map();
    let dim = map.dim();
    DMatrix::from_fn(dim, dim, |i, j| {
        let (a, q) = map.split(i);
        let (b, q2) = map.split(j);
        if q == q2 {
            spec.radial_overlap(a, b)
        } else {
            0.0
        }
    })
}

fn apply_parity(spec: &BasisSpec, v: &[f64]) -> Vec<f64> {
    let map = spec.index_map();
    (0..v.len()).map(|i| v[map.parity_partner(i)]).collect()
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenvectors made deterministic: within every degenerate cluster the
/// vectors are rotated into eigenvectors of `θ → -θ` (even first, then odd),
/// and each vector gets its largest component positive.
pub fn parity_adapted_vectors(spec: &BasisSpec, spectrum: &Spectrum) -> Result<DMatrix<f64>> {
    let dim = spectrum.dim();
    if dim != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: dim,
        });
    }
    let s = overlap_matrix(spec);
    let mut out = spectrum.eigenvectors.clone();
    let vals = &spectrum.eigenvalues;
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim
            && (vals[end] - vals[start]).abs() <= DEGENERACY_TOL * vals[start].abs().max(1.0)
        {
            end += 1;
        }
        if end - start > 1 {
            let m = end - start;
            let v = spectrum.eigenvectors.columns(start, m).into_owned();
            let pv = DMatrix::from_fn(dim, m, |i, j| v[(spec.index_map().parity_partner(i), j)]);
            let small = v.transpose() * &s * pv;
            let small = (&small + small.transpose()) * 0.5;
            let rot = eig_symmetric(&small)?;
            // Descending parity: even combinations first.
            for j in 0..m {
                let w = rot.eigenvectors.column(m - 1 - j);
                let mut col: Vec<f64> = (&v * w).iter().copied().collect();
                let norm = {
                    let cv = nalgebra::DVector::from_column_slice(&col);
                    (cv.transpose() * &s * &cv)[(0, 0)].sqrt()
                };
                col.iter_mut().for_each(|x| *x /= norm);
                fix_sign(&mut col);
                out.set_column(start + j, &nalgebra::DVector::from_vec(col));
            }
        } else {
            let mut col: Vec<f64> = spectrum.eigenvectors.column(start).iter().copied().collect();
            fix_sign(&mut col);
            out.set_column(start, &nalgebra::DVector::from_vec(col));
        }
        start = end;
    }
    Ok(out)
}

/// Parity eigenvalue (`+1` even, `-1` odd) of a parity-adapted vector, as
/// `vᵀ S P v`.
pub fn parity_of(spec: &BasisSpec, v: &[f64]) -> f64 {
    let s = overlap_matrix(spec);
    let pv = nalgebra::DVector::from_vec(apply_parity(spec, v));
    let vv = nalgebra::DVector::from_column_slice(v);
    (vv.transpose() * s * pv)[(0, 0)]
}

/// Uniform angle nodes `θ_j = -π + 2π(j+1)/n`, covering `(-π, π]`.
pub fn theta_nodes(n_theta: usize) -> Vec<f64> {
    (0..n_theta)
        .map(|j| -PI + 2.0 * PI * (j + 1) as f64 / n_theta as f64)
        .collect()
}

/// `|ψ|²` of state `state_index` on a uniform grid `[0, r_max] × (-π, π]`.
pub fn density_grid(
    spec: &BasisSpec,
    spectrum: &Spectrum,
    state_index: usize,
    r_max: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<DensityGrid> {
    if state_index >= spectrum.dim() {
        return Err(Error::StateIndex {
            index: state_index,
            dim: spectrum.dim(),
        });
    }
    if n_r < 2 || n_theta < 1 || !(r_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "density grid needs n_r >= 2, n_theta >= 1, r_max > 0 (n_r = {n_r}, n_theta = {n_theta}, r_max = {r_max})"
        )));
    }
    let vectors = parity_adapted_vectors(spec, spectrum)?;
    let coeffs: Vec<f64> = vectors.column(state_index).iter().copied().collect();
    let q_max = spec.q_max().unwrap_or(0) as i32;

    let r_nodes: Vec<f64> = (0..n_r).map(|i| r_max * i as f64 / (n_r - 1) as f64).collect();
    let thetas = theta_nodes(n_theta);
    let mut values = DMatrix::zeros(n_r, n_theta);
    for (i, &r) in r_nodes.iter().enumerate() {
        let radial: Vec<f64> = (0..spec.radial_len()).map(|k| spec.radial_value(k, r)).collect();
        let comps = fourier_components(spec, &coeffs, &radial);
        for (j, &t) in thetas.iter().enumerate() {
            values[(i, j)] = synthesize(&comps, q_max, t).norm_sqr();
        }
    }
    Ok(DensityGrid {
        r_nodes,
        theta_nodes: thetas,
        values,
        meta: DensityMeta {
            basis: spec.family_name().to_string(),
            radial_size: spec.radial_len(),
            q_max: spec.q_max().unwrap_or(0),
            radius: None,
            state: state_index,
            eigenvalue: spectrum.eigenvalues[state_index],
        },
    })
}

/// Composite Simpson weights on a uniform grid; an even number of intervals
/// is required, otherwise the last interval uses the trapezoid rule.
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    let intervals = n - 1;
    let simpson_end = if intervals % 2 == 0 { n - 1 } else { n - 2 };
    for i in 0..=simpson_end {
        w[i] = if i == 0 || i == simpson_end {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
    }
    if simpson_end < n - 1 {
        w[n - 2] += 0.5 * h;
        w[n - 1] += 0.5 * h;
    }
    w
}

fn radial_weights(grid: &DensityGrid) -> Vec<f64> {
    let n = grid.r_nodes.len();
    let h = grid.r_nodes[1] - grid.r_nodes[0];
    simpson_weights(n, h)
        .into_iter()
        .zip(&grid.r_nodes)
        .map(|(w, r)| w * r * r)
        .collect()
}

/// `∫∫ |ψ|² r² dr dθ` over the grid (Simpson in `r`, periodic rectangle rule
/// in `θ`).
pub fn grid_integral(grid: &DensityGrid) -> f64 {
    let wr = radial_weights(grid);
    let dtheta = 2.0 * PI / grid.theta_nodes.len() as f64;
    let mut total = 0.0;
    for (i, w) in wr.iter().enumerate() {
        total += w * grid.values.row(i).sum() * dtheta;
    }
    total
}

/// Fraction of the grid probability with `|θ| < π/2`. Nodes exactly on
/// `|θ| = π/2` count half.
pub fn localization_from_grid(grid: &DensityGrid) -> f64 {
    let wr = radial_weights(grid);
    let theta_w: Vec<f64> = grid
        .theta_nodes
        .iter()
        .map(|t| {
            let d = t.abs() - 0.5 * PI;
            if d.abs() < 1e-12 {
                0.5
            } else if d < 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut inside = 0.0;
    let mut total = 0.0;
    for (i, w) in wr.iter().enumerate() {
        for (j, tw) in theta_w.iter().enumerate() {
            let v = w * grid.values[(i, j)];
            total += v;
            inside += v * tw;
        }
    }
    if total == 0.0 {
        return 0.5;
    }
    inside / total
}

/// Fraction of the probability with `|θ| < π/2`, exact from the coefficients:
/// with `G_{qq'} = Σ_{k,k'} a_{kq} a_{k'q'} ⟨f_k|f_{k'}⟩`, the fraction is
/// `(1/2π) Σ_{q,q'} G_{qq'} ∫_{-π/2}^{π/2} e^{i(q'-q)θ} dθ`, normalized by
/// `Σ_q G_{qq}`.
pub fn localization_from_coeffs(spec: &BasisSpec, coeffs: &[f64]) -> Result<f64> {
    check_len(spec, coeffs)?;
    let map = spec.index_map();
    let q_max = map.q_max() as i32;
    let len = map.radial_len();
    let nq = (2 * q_max + 1) as usize;
    let radial_s = DMatrix::from_fn(len, len, |a, b| spec.radial_overlap(a, b));
    let block = |q: i32| {
        nalgebra::DVector::from_iterator(len, (0..len).map(|k| coeffs[map.flat(k, q)]))
    };
    let blocks: Vec<_> = (-q_max..=q_max).map(block).collect();
    let mut inside = 0.0;
    let mut total = 0.0;
    for i in 0..nq {
        let si = &radial_s * &blocks[i];
        for j in 0..nq {
            let g = blocks[j].dot(&si);
            let d = (j as i32 - i as i32).abs();
            let arc = if d == 0 {
                total += g;
                PI
            } else {
                2.0 * (d as f64 * PI / 2.0).sin() / d as f64
            };
            inside += g * arc;
        }
    }
    if total == 0.0 {
        return Ok(0.5);
    }
    Ok(inside / (2.0 * PI * total))
}

/// Writes `r,theta,density` rows (row-major in `r`) behind `#` metadata lines.
pub fn write_density_csv<W: Write>(mut out: W, grid: &DensityGrid, extra_meta: &[(String, String)]) -> Result<()> {
    let m = &grid.meta;
    writeln!(out, "# kk-hydrogen {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# units: lengths in a, energies in e^2/2a, density in a^-3")?;
    writeln!(out, "# basis = {}", m.basis)?;
    writeln!(out, "# radial_size = {}", m.radial_size)?;
    writeln!(out, "# Q = {}", m.q_max)?;
    if let Some(r) = m.radius {
        writeln!(out, "# R = {r}")?;
    }
    writeln!(out, "# state = {}", m.state)?;
    writeln!(out, "# eigenvalue = {:.8e}", m.eigenvalue)?;
    for (k, v) in extra_meta {
        writeln!(out, "# {k} = {v}")?;
    }
    writeln!(out, "r,theta,density")?;
    for (i, r) in grid.r_nodes.iter().enumerate() {
        for (j, t) in grid.theta_nodes.iter().enumerate() {
            writeln!(out, "{:.8e},{:.8e},{:.8e}", r, t, grid.values[(i, j)])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::{eig_generalized, eig_symmetric, Metric};
    use crate::matrixbuild::{alpha_geometric, build_compact};
    use crate::potential::ModelConfig;
    use crate::quad::integrate;
    use approx::assert_relative_eq;

    fn unit(spec: &BasisSpec, k: usize, q: i32) -> Vec<f64> {
        let mut v = vec![0.0; spec.dim()];
        v[spec.index_map().flat(k, q)] = 1.0;
        v
    }

    fn solve(spec: &BasisSpec, radius: f64) -> Spectrum {
        let p = build_compact(spec, &ModelConfig::new(radius).unwrap()).unwrap();
        match &p.s {
            Some(s) => eig_generalized(&p.h, s).unwrap(),
            None => eig_symmetric(&p.h).unwrap(),
        }
    }

    #[test]
    fn single_basis_state_amplitude() {
        let spec = BasisSpec::hydrogen(3, 0, Some(2)).unwrap();
        let v = unit(&spec, 0, 0);
        for (r, t) in [(0.0, 0.0), (0.7, 1.0), (2.0, -2.5)] {
            let psi = wavefunction_at(&spec, &v, r, t).unwrap();
            assert_relative_eq!(psi.re, 2.0 * (-r as f64).exp() / (2.0 * PI).sqrt(), max_relative = 1e-14);
            assert!(psi.im.abs() < 1e-15);
        }
        assert!(wavefunction_at(&spec, &[1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn even_state_density_is_symmetric() {
        let spec = BasisSpec::hydrogen(4, 0, Some(3)).unwrap();
        let s = solve(&spec, 0.2);
        let v = parity_adapted_vectors(&spec, &s).unwrap();
        let c: Vec<f64> = v.column(0).iter().copied().collect();
        for t in [0.3, 1.1, 2.9] {
            let a = wavefunction_at(&spec, &c, 0.4, t).unwrap().norm();
            let b = wavefunction_at(&spec, &c, 0.4, -t).unwrap().norm();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn unit_norm_state_integrates_to_one() {
        // Independent 2-D quadrature: adaptive in r, trapezoid in θ (exact for
        // the trigonometric polynomial |ψ|²).
        let spec = BasisSpec::hydrogen(3, 0, Some(1)).unwrap();
        let mut c = vec![0.0; spec.dim()];
        let weights = [0.5, -0.3, 0.2, 0.6, 0.1, -0.2, 0.4, 0.15, -0.25];
        let norm: f64 = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        for (i, w) in weights.iter().enumerate() {
            c[i] = w / norm;
        }
        let n_theta = 16;
        let total = integrate(
            |r| {
                let mut acc = 0.0;
                for j in 0..n_theta {
                    let t = -PI + 2.0 * PI * j as f64 / n_theta as f64;
                    acc += wavefunction_at(&spec, &c, r, t).unwrap().norm_sqr();
                }
                r * r * acc * 2.0 * PI / n_theta as f64
            },
            0.0,
            80.0,
            1e-10,
        )
        .unwrap()
        .value;
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn grid_values_and_normalization() {
        let spec = BasisSpec::hydrogen(6, 0, Some(4)).unwrap();
        let s = solve(&spec, 0.2);
        let g = density_grid(&spec, &s, 0, 40.0, 801, 40).unwrap();
        assert!(g.values.iter().all(|v| *v >= 0.0));
        assert!((grid_integral(&g) - 1.0).abs() < 1e-4);
        assert!(density_grid(&spec, &s, spec.dim(), 10.0, 10, 10).is_err());
    }

    #[test]
    fn exponential_grid_normalization() {
        let alphas = alpha_geometric(0.1, 1.5, 10).unwrap();
        let spec = BasisSpec::exponential(alphas, Some(3)).unwrap();
        let s = solve(&spec, 0.2);
        assert_eq!(s.metric, Metric::Overlap);
        let g = density_grid(&spec, &s, 0, 40.0, 2001, 16).unwrap();
        let total = grid_integral(&g);
        assert!(total <= 1.0 + 1e-9 && total > 1.0 - 1e-4, "{total}");
    }

    #[test]
    fn localization_of_pure_modes() {
        let spec = BasisSpec::hydrogen(2, 0, Some(2)).unwrap();
        assert_relative_eq!(localization_from_coeffs(&spec, &unit(&spec, 0, 0)).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(localization_from_coeffs(&spec, &unit(&spec, 1, -2)).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn localization_of_cosine_mode() {
        // (e^{iθ} + e^{-iθ})/√2 ∝ cos θ. Hand integral: ∫_{|θ|<π/2} cos²θ dθ / π = 1/2.
        // (e^{0} + e^{iθ})/√2: |1 + e^{iθ}|²/2 = 1 + cos θ, fraction (π + 2)/(2π).
        let spec = BasisSpec::hydrogen(1, 0, Some(1)).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let c = vec![h, 0.0, h];
        assert_relative_eq!(localization_from_coeffs(&spec, &c).unwrap(), 0.5, epsilon = 1e-15);
        let c = vec![0.0, h, h];
        assert_relative_eq!(
            localization_from_coeffs(&spec, &c).unwrap(),
            (PI + 2.0) / (2.0 * PI),
            epsilon = 1e-14
        );
        let c = vec![0.0, h, -h];
        assert_relative_eq!(
            localization_from_coeffs(&spec, &c).unwrap(),
            (PI - 2.0) / (2.0 * PI),
            epsilon = 1e-14
        );
    }

    #[test]
    fn grid_and_coefficient_localization_agree() {
        let spec = BasisSpec::hydrogen(5, 0, Some(4)).unwrap();
        let s = solve(&spec, 0.24);
        let g = density_grid(&spec, &s, 0, 40.0, 1601, 512).unwrap();
        let v = parity_adapted_vectors(&spec, &s).unwrap();
        let c: Vec<f64> = v.column(0).iter().copied().collect();
        let exact = localization_from_coeffs(&spec, &c).unwrap();
        assert!(exact > 0.5);
        assert_relative_eq!(localization_from_grid(&g), exact, epsilon = 1e-6);
    }

    #[test]
    fn computed_states_have_definite_parity() {
        let spec = BasisSpec::hydrogen(3, 0, Some(2)).unwrap();
        let s = solve(&spec, 0.2);
        let v = parity_adapted_vectors(&spec, &s).unwrap();
        for k in 0..s.dim() {
            let col: Vec<f64> = v.column(k).iter().copied().collect();
            let p = parity_of(&spec, &col);
            assert!((p.abs() - 1.0).abs() < 1e-9, "state {k}: parity {p}");
        }
        let gram = v.transpose() * &v;
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - t).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_pair_is_rotated_into_parity_states() {
        // Exactly degenerate q = -1 and q = +1 plane waves.
        let spec = BasisSpec::hydrogen(1, 0, Some(1)).unwrap();
        let e = |q: i32| unit(&spec, 0, q);
        let cols: Vec<_> = [e(0), e(-1), e(1)].into_iter().map(nalgebra::DVector::from_vec).collect();
        let spectrum = Spectrum {
            eigenvalues: vec![0.0, 1.0, 1.0],
            eigenvectors: DMatrix::from_columns(&cols),
            metric: Metric::Identity,
            condition: None,
            warning: None,
        };
        let v = parity_adapted_vectors(&spec, &spectrum).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let even: Vec<f64> = v.column(1).iter().copied().collect();
        let odd: Vec<f64> = v.column(2).iter().copied().collect();
        for (got, want) in even.iter().zip([h, 0.0, h]) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
        assert_relative_eq!(odd[0].abs(), h, epsilon = 1e-14);
        assert_relative_eq!(odd[0] + odd[2], 0.0, epsilon = 1e-14);
        assert_relative_eq!(parity_of(&spec, &odd), -1.0, epsilon = 1e-14);
    }

    #[test]
    fn csv_layout() {
        let spec = BasisSpec::hydrogen(2, 0, Some(1)).unwrap();
        let s = solve(&spec, 0.1);
        let mut g = density_grid(&spec, &s, 0, 5.0, 3, 4).unwrap();
        g.meta.radius = Some(0.1);
        let mut buf = Vec::new();
        write_density_csv(&mut buf, &g, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "r,theta,density");
        assert_eq!(data.len(), 1 + 3 * 4);
        assert!(text.contains("# R = 0.1"));
    }
}
