//! Von Neumann structure checks: resolution of the identity, idempotency,
//! mutual orthogonality, rank identities and the direct-sum decomposition of
//! the space into the ranges of the measurement operators.
//!
//! Residuals are operator (spectral) norms, which bound the entrywise
//! maximum from above.

use serde::Serialize;

use crate::ensemble::{factorize, Ensemble};
use crate::error::{Error, Result};
use crate::hermitian::{eig_hermitian, numeric_rank, singular_values, RANK_TOL};
use crate::matrix::ComplexMatrix;
use crate::povm::Povm;

/// Eigenvalue cut for range bases of near-projectors.
pub const RANGE_THRESHOLD: f64 = 1e-8;
/// Projectivity tolerance for solver output.
pub const PROJECTIVE_TOL: f64 = 1e-6;

fn spectral_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PovmCheck {
    /// Smallest eigenvalue of each `Π_i`.
    pub psd_margins: Vec<f64>,
    /// `‖Σ Π_i - I‖_max`.
    pub completeness_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn check_povm(p: &Povm, tol: f64) -> Result<PovmCheck> {
    let psd_margins = p
        .operators()
        .iter()
        .map(|op| eig_hermitian(op).map(|e| e.min()))
        .collect::<Result<Vec<_>>>()?;
    let completeness_residual = p.completeness_residual();
    let pass = completeness_residual <= tol && psd_margins.iter().all(|&m| m >= -tol);
    Ok(PovmCheck {
        psd_margins,
        completeness_residual,
        tol,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankPair {
    /// `rank(ρ_i)`.
    pub r: usize,
    /// `rank(Π_i)`.
    pub t: usize,
    pub equal: bool,
    pub bounded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairResidual {
    pub i: usize,
    pub j: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VnmReport {
    /// `‖Π_i² - Π_i‖`.
    pub idempotency: Vec<f64>,
    /// `‖Π_i Π_j‖` for `i < j`.
    pub orthogonality: Vec<PairResidual>,
    pub completeness_residual: f64,
    /// Rank of the concatenated range bases of all `Π_i`.
    pub direct_sum_rank: usize,
    pub dim: usize,
    /// Filled in by [`verify`]; empty from [`is_projective`].
    pub rank_pairs: Vec<RankPair>,
    pub tol: f64,
    pub is_von_neumann: bool,
}

impl VnmReport {
    pub fn max_idempotency(&self) -> f64 {
        self.idempotency.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_orthogonality(&self) -> f64 {
        self.orthogonality.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn ranks_equal(&self) -> bool {
        self.rank_pairs.iter().all(|r| r.equal)
    }

    pub fn is_direct_sum(&self) -> bool {
        self.direct_sum_rank == self.dim
    }
}

pub fn is_projective(p: &Povm, tol: f64) -> Result<VnmReport> {
    let ops = p.operators();
    let idempotency = ops
        .iter()
        .map(|op| spectral_norm(&(&(op * op) - op)))
        .collect();
    let mut orthogonality = Vec::new();
    for i in 0..ops.len() {
        for j in (i + 1)..ops.len() {
            orthogonality.push(PairResidual {
                i,
                j,
                residual: spectral_norm(&(&ops[i] * &ops[j])),
            });
        }
    }
    let completeness_residual = p.completeness_residual();
    let direct_sum_rank = direct_sum_rank(p)?;

    let mut report = VnmReport {
        idempotency,
        orthogonality,
        completeness_residual,
        direct_sum_rank,
        dim: p.dim(),
        rank_pairs: Vec::new(),
        tol,
        is_von_neumann: false,
    };
    report.is_von_neumann = report.max_idempotency() <= tol
        && report.max_orthogonality() <= tol
        && completeness_residual <= tol;
    Ok(report)
}

/// Rank of `[B_1 … B_m]` where `B_i` spans the range of `Π_i`.
pub fn direct_sum_rank(p: &Povm) -> Result<usize> {
    let mut bases = Vec::new();
    for op in p.operators() {
        if let Some(b) = eig_hermitian(op)?.range_basis(RANGE_THRESHOLD) {
            bases.push(b);
        }
    }
    if bases.is_empty() {
        return Ok(0);
    }
    let refs: Vec<&ComplexMatrix> = bases.iter().collect();
    Ok(numeric_rank(&ComplexMatrix::hcat(&refs)?, RANK_TOL))
}

pub fn rank_profile(e: &Ensemble, p: &Povm) -> Result<Vec<RankPair>> {
    if e.len() != p.len() {
        return Err(Error::CountMismatch {
            states: e.len(),
            operators: p.len(),
        });
    }
    if e.dim() != p.dim() {
        return Err(Error::DimMismatch {
            expected: e.dim(),
            found: p.dim(),
        });
    }
    let f = factorize(e)?;
    Ok(f.ranks
        .iter()
        .zip(p.ranks())
        .map(|(&r, &t)| RankPair {
            r,
            t,
            equal: r == t,
            bounded: t <= r,
        })
        .collect())
}

/// [`is_projective`] plus the rank profile against the ensemble.
pub fn verify(e: &Ensemble, p: &Povm, tol: f64) -> Result<VnmReport> {
    let mut report = is_projective(p, tol)?;
    report.rank_pairs = rank_profile(e, p)?;
    Ok(report)
}
