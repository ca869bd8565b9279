//! Least-squares (square-root) measurement.
//!
//! `μ_i = (ΨΨ*)^{-1/2} ψ_i` and `Σ_i = μ_i μ_i*`, where `ψ_i = √p_i φ_i` are
//! the block columns of `Ψ`.

use crate::ensemble::{build_psi, ensure_valid, factorize, is_linearly_independent, BlockMatrix, Ensemble};
use crate::error::{Error, Result};
use crate::hermitian::inv_sqrt_psd;
use crate::matrix::ComplexMatrix;
use crate::povm::Povm;

/// Intermediate quantities of the construction, kept for inspection.
#[derive(Debug, Clone)]
pub struct LsmParts {
    pub blocks: BlockMatrix,
    /// `(ΨΨ*)^{-1/2}`.
    pub gram_inv_sqrt: ComplexMatrix,
    /// `μ_i`, one `n x r_i` matrix per state.
    pub mu: Vec<ComplexMatrix>,
}

pub fn lsm_parts(e: &Ensemble) -> Result<LsmParts> {
    ensure_valid(e)?;
    let f = factorize(e)?;
    let blocks = build_psi(e, &f);
    let gram = (&blocks.psi * &blocks.psi.adjoint()).symmetrized();
    let gram_inv_sqrt = inv_sqrt_psd(&gram).map_err(|err| match err {
        Error::Singular { .. } => Error::SpanDeficient {
            span_rank: e.span_rank(),
            dim: e.dim(),
        },
        other => other,
    })?;
    let mu = (0..e.len())
        .map(|i| &gram_inv_sqrt * &blocks.block(i))
        .collect();
    Ok(LsmParts {
        blocks,
        gram_inv_sqrt,
        mu,
    })
}

pub fn compute_lsm(e: &Ensemble) -> Result<Povm> {
    let parts = lsm_parts(e)?;
    let ops = parts
        .mu
        .iter()
        .map(|mu| (mu * &mu.adjoint()).symmetrized())
        .collect();
    Povm::new(ops)
}

/// Whether the LSM is expected to be a Von Neumann measurement, i.e. whether
/// the ensemble is linearly independent.
pub fn lsm_is_projective_expected(e: &Ensemble) -> bool {
    factorize(e)
        .map(|f| is_linearly_independent(&f).independent)
        .unwrap_or(false)
}

/// `ψ_i* (ΨΨ*)^{-1} ψ_j` for every pair, from the LSM parts.
pub fn block_gram(parts: &LsmParts) -> Vec<Vec<ComplexMatrix>> {
    let inv = &parts.gram_inv_sqrt * &parts.gram_inv_sqrt;
    let m = parts.mu.len();
    (0..m)
        .map(|i| {
            let left = &parts.blocks.block(i).adjoint() * &inv;
            (0..m).map(|j| &left * &parts.blocks.block(j)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::library::*;
    use crate::ensemble::State;
    use crate::matrix::ComplexMatrix;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn orthogonal_pair_gives_basis_projectors() {
        let p = compute_lsm(&orthogonal_pair()).unwrap();
        assert!(p.operators()[0].max_abs_diff(&ComplexMatrix::diag_real(&[1.0, 0.0])) < 1e-14);
        assert!(p.operators()[1].max_abs_diff(&ComplexMatrix::diag_real(&[0.0, 1.0])) < 1e-14);
    }

    // Symmetric orthogonalization of |0⟩, |+⟩ in closed form: with Gram
    // matrix G = [[1, c], [c, 1]], c = 1/√2, the vectors are V G^{-1/2}.
    // G^{-1/2} = [[a, b], [b, a]] with a ± b = (1 ± c)^{-1/2}.
    fn zero_plus_closed_form() -> [ComplexMatrix; 2] {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let (sp, sm) = (1.0 / (1.0 + c).sqrt(), 1.0 / (1.0 - c).sqrt());
        let (a, b) = ((sp + sm) / 2.0, (sp - sm) / 2.0);
        let v0 = [1.0, 0.0];
        let v1 = [c, c];
        let m0: Vec<Complex64> = (0..2).map(|k| re(a * v0[k] + b * v1[k])).collect();
        let m1: Vec<Complex64> = (0..2).map(|k| re(b * v0[k] + a * v1[k])).collect();
        [ComplexMatrix::outer(&m0), ComplexMatrix::outer(&m1)]
    }

    #[test]
    fn zero_plus_matches_symmetric_orthogonalization() {
        let p = compute_lsm(&zero_plus()).unwrap();
        let expected = zero_plus_closed_form();
        for (got, want) in p.operators().iter().zip(&expected) {
            assert!(got.max_abs_diff(want) < 1e-12, "{got:?} vs {want:?}");
        }
        let cross = &p.operators()[0] * &p.operators()[1];
        assert!(cross.max_abs() < 1e-10);
        let sq = &p.operators()[0] * &p.operators()[0];
        assert!(sq.max_abs_diff(&p.operators()[0]) < 1e-10);
    }

    #[test]
    fn trine_lsm_is_scaled_projectors() {
        // Σ_k |φ_k⟩⟨φ_k| = (3/2) I so ΨΨ* = I/2 and Σ_k = (2/3)|φ_k⟩⟨φ_k|.
        let t = trine();
        let p = compute_lsm(&t).unwrap();
        for (op, s) in p.operators().iter().zip(t.states()) {
            assert!(op.max_abs_diff(&s.rho.scale(2.0 / 3.0)) < 1e-12);
        }
        assert!(!lsm_is_projective_expected(&t));
        let sq = &p.operators()[0] * &p.operators()[0];
        assert!(sq.max_abs_diff(&p.operators()[0]) > 1e-3);
    }

    #[test]
    fn projective_expectation() {
        assert!(lsm_is_projective_expected(&orthogonal_pair()));
        assert!(lsm_is_projective_expected(&zero_plus()));
        let e = crate::ensemble::random_ensemble(4, &[2, 2], &crate::ensemble::Priors::Random, 9, true)
            .unwrap();
        assert!(lsm_is_projective_expected(&e));
    }

    #[test]
    fn span_deficient_is_rejected() {
        let e = crate::ensemble::Ensemble::new(
            3,
            vec![
                State::pure(0.5, &[re(1.0), re(0.0), re(0.0)]),
                State::pure(0.5, &[re(0.0), re(1.0), re(0.0)]),
            ],
        )
        .unwrap();
        assert!(matches!(
            compute_lsm(&e),
            Err(Error::SpanDeficient { span_rank: 2, dim: 3 })
        ));
    }

    #[test]
    fn block_gram_is_identity_pattern_when_square() {
        let e = crate::ensemble::random_ensemble(5, &[1, 3, 1], &crate::ensemble::Priors::Random, 2, true)
            .unwrap();
        let parts = lsm_parts(&e).unwrap();
        let g = block_gram(&parts);
        for (i, row) in g.iter().enumerate() {
            for (j, blk) in row.iter().enumerate() {
                if i == j {
                    assert!(blk.max_abs_diff(&ComplexMatrix::identity(blk.rows())) < 1e-8);
                } else {
                    assert_abs_diff_eq!(blk.max_abs(), 0.0, epsilon = 1e-8);
                }
            }
        }
    }
}
