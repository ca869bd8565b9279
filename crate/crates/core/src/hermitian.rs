//! Hermitian linear-algebra kernel.
//!
//! Eigendecompositions use cyclic complex Jacobi rotations and singular values
//! use one-sided (Hestenes) Jacobi, which never forms `A*A` and so keeps small
//! singular values accurate. Both are meant for the small dense matrices that
//! show up in state discrimination (n up to a few dozen).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ZERO};

/// Default relative threshold for [`numeric_rank`] and [`inv_sqrt_psd`].
pub const RANK_TOL: f64 = 1e-10;
/// Relative clamp applied to negative eigenvalues in [`sqrt_psd`].
pub const PSD_CLAMP_TOL: f64 = 1e-8;
const HERMITIAN_REJECT_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, matching `values`.
    pub vectors: ComplexMatrix,
}

impl EigResult {
    /// `V f(Λ) V*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let weights: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for (k, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        acc += v[(i, k)] * v[(j, k)].conj() * w;
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
            out[(i, i)].im = 0.0;
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// Eigenvectors whose eigenvalue exceeds `threshold`, as columns.
    pub fn range_basis(&self, threshold: f64) -> Option<ComplexMatrix> {
        let keep: Vec<usize> = (0..self.values.len())
            .filter(|&k| self.values[k] > threshold)
            .collect();
        if keep.is_empty() {
            return None;
        }
        let n = self.vectors.rows();
        let mut out = ComplexMatrix::zeros(n, keep.len());
        for (c, &k) in keep.iter().enumerate() {
            out.set_col(c, &self.vectors.col(k));
        }
        Some(out)
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    m.ensure_square()?;
    let asym = m.hermitian_asymmetry();
    if asym > HERMITIAN_REJECT_TOL * m.max_abs() {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized first.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigResult> {
    check_hermitian(m)?;
    Ok(jacobi_eigen(m.symmetrized()))
}

fn jacobi_eigen(mut a: ComplexMatrix) -> EigResult {
    let n = a.rows();
    let mut v = ComplexMatrix::identity(n);
    let total = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            * 2.0;
        if off.sqrt() <= f64::EPSILON * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let g_abs = g.norm();
                if g_abs == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if g_abs <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                // Phase `e` makes the pivot real; then a real rotation zeros it.
                let e = g / g_abs;
                let theta = (aqq - app) / (2.0 * g_abs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = [[c, s], [-s conj(e), c conj(e)]] acting on (p, q).
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -e.conj() * s;
                let jqq = e.conj() * c;
                rotate_cols(&mut a, p, q, jpp, jpq, jqp, jqq);
                rotate_rows(&mut a, p, q, jpp, jpq, jqp, jqq);
                rotate_cols(&mut v, p, q, jpp, jpq, jqp, jqq);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        vectors.set_col(c, &v.col(k));
    }
    EigResult { values, vectors }
}

// M <- M J on columns p, q.
fn rotate_cols(
    m: &mut ComplexMatrix,
    p: usize,
    q: usize,
    jpp: Complex64,
    jpq: Complex64,
    jqp: Complex64,
    jqq: Complex64,
) {
    for i in 0..m.rows() {
        let mp = m[(i, p)];
        let mq = m[(i, q)];
        m[(i, p)] = mp * jpp + mq * jqp;
        m[(i, q)] = mp * jpq + mq * jqq;
    }
}

// M <- J* M on rows p, q.
fn rotate_rows(
    m: &mut ComplexMatrix,
    p: usize,
    q: usize,
    jpp: Complex64,
    jpq: Complex64,
    jqp: Complex64,
    jqq: Complex64,
) {
    for j in 0..m.cols() {
        let mp = m[(p, j)];
        let mq = m[(q, j)];
        m[(p, j)] = jpp.conj() * mp + jqp.conj() * mq;
        m[(q, j)] = jpq.conj() * mp + jqq.conj() * mq;
    }
}

/// Positive-semidefiniteness test: `min eig >= -tol * (1 + maxabs)`.
/// Returns the flag and the smallest eigenvalue.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<(bool, f64)> {
    let eig = eig_hermitian(m)?;
    let min = eig.min();
    Ok((min >= -tol * (1.0 + m.max_abs()), min))
}

/// The unique Hermitian PSD square root.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    let min = eig.min();
    if min < -PSD_CLAMP_TOL * (1.0 + m.max_abs()) {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(eig.map_spectrum(|x| x.max(0.0).sqrt()))
}

pub fn inv_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    inv_sqrt_psd_with(m, RANK_TOL)
}

/// Inverse Hermitian square root; fails unless `min eig >= rank_tol * max eig`.
pub fn inv_sqrt_psd_with(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    let (min, max) = (eig.min(), eig.max());
    let threshold = rank_tol * max;
    if max <= 0.0 || min < threshold {
        return Err(Error::Singular {
            min_eigenvalue: min,
            threshold,
        });
    }
    Ok(eig.map_spectrum(|x| 1.0 / x.sqrt()))
}

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    // Orthogonalize along the shorter dimension.
    let mut a = if m.rows() < m.cols() {
        m.adjoint()
    } else {
        m.clone()
    };
    let cols = a.cols();
    let norms = |a: &ComplexMatrix, j: usize| -> f64 {
        (0..a.rows()).map(|i| a[(i, j)].norm_sqr()).sum::<f64>()
    };

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = norms(&a, p);
                let beta = norms(&a, q);
                let gamma: Complex64 = (0..a.rows()).map(|i| a[(i, p)].conj() * a[(i, q)]).sum();
                let g_abs = gamma.norm();
                if g_abs == 0.0 || g_abs <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = gamma / g_abs;
                let zeta = (beta - alpha) / (2.0 * g_abs);
                let t = zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_cols(
                    &mut a,
                    p,
                    q,
                    Complex64::new(c, 0.0),
                    Complex64::new(s, 0.0),
                    -e.conj() * s,
                    e.conj() * c,
                );
            }
        }
        if !rotated {
            break;
        }
    }

    let mut values: Vec<f64> = (0..cols).map(|j| norms(&a, j).sqrt()).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numeric_rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let largest = sv.first().copied().unwrap_or(0.0);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.values.iter().map(|v| v.abs()).sum())
}
