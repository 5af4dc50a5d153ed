//! Dense real-symmetric eigensolvers.
//!
//! The standard problem is reduced to tridiagonal form by Householder
//! reflections and then diagonalized by the implicit QL algorithm with
//! Wilkinson-type shifts. The generalized problem `Hv = λSv` is reduced to a
//! standard one through the Cholesky factor of `S`.

use log::warn;
use nalgebra::DMatrix;

use crate::{Error, Result};

/// Condition number of `S` above which a generalized solve carries a warning.
pub const ILL_CONDITIONED: f64 = 1e12;

const MAX_QL_ITERATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Identity,
    Overlap,
}

/// Eigenpairs in ascending order of eigenvalue. Column `k` of `eigenvectors`
/// belongs to `eigenvalues[k]` and is normalized in the stated metric.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub metric: Metric,
    /// 2-norm condition number of the overlap matrix, for generalized solves.
    pub condition: Option<f64>,
    pub warning: Option<String>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Householder reduction to tridiagonal form. On return `v` holds the
/// orthogonal transformation (row-major), `d` the diagonal and `e[1..]` the
/// subdiagonal.
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal matrix `(d, e)`. `z[i]` is column `i` of the
/// accumulated eigenvector matrix.
fn tridiagonal_ql(z: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::EigenNonConvergence {
                        index: l,
                        iterations: MAX_QL_ITERATIONS,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = z.split_at_mut(i + 1);
                    let zi = &mut lo[i];
                    let zi1 = &mut hi[0];
                    for k in 0..n {
                        let t = zi1[k];
                        zi1[k] = s * zi[k] + c * t;
                        zi[k] = c * zi[k] - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Ascending order with ties broken by original position.
fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// Full eigendecomposition of a real symmetric matrix.
pub fn eig_symmetric(h: &DMatrix<f64>) -> Result<Spectrum> {
    let n = check_square(h)?;
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
            metric: Metric::Identity,
            condition: None,
            warning: None,
        });
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| h[(i, j)]).collect()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);

    // Column-major copy so that the QL rotations touch contiguous memory.
    let mut z: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    drop(v);
    tridiagonal_ql(&mut z, &mut d, &mut e)?;

    let order = sorted_order(&d);
    let eigenvalues = order.iter().map(|&k| d[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| z[order[j]][i]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        metric: Metric::Identity,
        condition: None,
        warning: None,
    })
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(s)?;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut diag = s[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut acc = s[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` in place for lower-triangular `L`.
fn forward_solve(l: &DMatrix<f64>, b: &mut DMatrix<f64>) {
    let n = l.nrows();
    for col in 0..b.ncols() {
        for i in 0..n {
            let mut acc = b[(i, col)];
            for k in 0..i {
                acc -= l[(i, k)] * b[(k, col)];
            }
            b[(i, col)] = acc / l[(i, i)];
        }
    }
}

/// Solves `Lᵀ X = B` in place for lower-triangular `L`.
fn backward_solve_transposed(l: &DMatrix<f64>, b: &mut DMatrix<f64>) {
    let n = l.nrows();
    for col in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut acc = b[(i, col)];
            for k in (i + 1)..n {
                acc -= l[(k, i)] * b[(k, col)];
            }
            b[(i, col)] = acc / l[(i, i)];
        }
    }
}

/// Ratio of the extreme eigenvalues of a symmetric matrix; infinite when the
/// smallest one is not positive.
pub fn overlap_condition(s: &DMatrix<f64>) -> Result<f64> {
    let spec = eig_symmetric(s)?;
    let (lo, hi) = match (spec.eigenvalues.first(), spec.eigenvalues.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Ok(1.0),
    };
    if lo <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(hi / lo)
}

/// Solves `H v = λ S v` with `S` symmetric positive definite. Eigenvectors are
/// `S`-orthonormal.
pub fn eig_generalized(h: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<Spectrum> {
    let n = check_square(h)?;
    if check_square(s)? != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.nrows(),
        });
    }
    let l = cholesky(s)?;

    // C = L⁻¹ H L⁻ᵀ = L⁻¹ (L⁻¹ H)ᵀ because H is symmetric.
    let mut x = h.clone();
    forward_solve(&l, &mut x);
    let mut c = x.transpose();
    forward_solve(&l, &mut c);
    let c = (&c + c.transpose()) * 0.5;

    let reduced = eig_symmetric(&c)?;
    let mut vectors = reduced.eigenvectors;
    backward_solve_transposed(&l, &mut vectors);

    let condition = overlap_condition(s)?;
    let warning = if condition > ILL_CONDITIONED {
        let msg = format!("overlap matrix is nearly singular (condition {condition:.3e})");
        warn!("{msg}");
        Some(msg)
    } else {
        None
    };
    Ok(Spectrum {
        eigenvalues: reduced.eigenvalues,
        eigenvectors: vectors,
        metric: Metric::Overlap,
        condition: Some(condition),
        warning,
    })
}

/// Generalized eigenvalues through the symmetric transform
/// `S^{-1/2} H S^{-1/2}`, with `S^{-1/2}` built from the spectral
/// decomposition of `S`. Independent of the Cholesky route.
pub fn eig_via_spectral_sqrt(h: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<Spectrum> {
    let n = check_square(h)?;
    let s_spec = eig_symmetric(s)?;
    if let Some((k, &lo)) = s_spec.eigenvalues.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::NotPositiveDefinite { pivot: k, value: lo });
    }
    let u = &s_spec.eigenvectors;
    let inv_sqrt = DMatrix::from_fn(n, n, |i, j| u[(i, j)] / s_spec.eigenvalues[j].sqrt());
    let s_inv_half = &inv_sqrt * u.transpose();
    let t = &s_inv_half * h * &s_inv_half;
    let t = (&t + t.transpose()) * 0.5;
    let reduced = eig_symmetric(&t)?;
    Ok(Spectrum {
        eigenvalues: reduced.eigenvalues,
        eigenvectors: &s_inv_half * reduced.eigenvectors,
        metric: Metric::Overlap,
        condition: Some(s_spec.eigenvalues[n - 1] / s_spec.eigenvalues[0]),
        warning: None,
    })
}

/// `max |VᵀSV - I|`, with `S = I` when `s` is `None`.
pub fn orthonormality_error(spec: &Spectrum, s: Option<&DMatrix<f64>>) -> f64 {
    let v = &spec.eigenvectors;
    let gram = match s {
        Some(s) => v.transpose() * s * v,
        None => v.transpose() * v,
    };
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// `max |VᵀHV - diag(λ)|`.
pub fn reconstruction_error(spec: &Spectrum, h: &DMatrix<f64>) -> f64 {
    let v = &spec.eigenvectors;
    let proj = v.transpose() * h * v;
    let n = proj.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { spec.eigenvalues[i] } else { 0.0 };
            worst = worst.max((proj[(i, j)] - target).abs());
        }
    }
    worst
}

/// Largest residual `‖Hv - λSv‖₂` over all eigenpairs.
pub fn max_residual(spec: &Spectrum, h: &DMatrix<f64>, s: Option<&DMatrix<f64>>) -> f64 {
    let v = &spec.eigenvectors;
    let hv = h * v;
    let sv = match s {
        Some(s) => s * v,
        None => v.clone(),
    };
    (0..spec.dim())
        .map(|k| (hv.column(k) - sv.column(k) * spec.eigenvalues[k]).norm())
        .fold(0.0, f64::max)
}

/// Largest absolute row sum, a cheap bound on the 2-norm.
pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
