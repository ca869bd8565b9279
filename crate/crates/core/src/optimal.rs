//! Minimum-error measurement.
//!
//! The primal problem maximizes `P_d = Σ p_i Tr(ρ_i Π_i)` over measurements;
//! the dual minimizes `Tr X` subject to `X ⪰ p_i ρ_i`. A measurement is
//! optimal iff some Hermitian `X̂` is dual feasible and satisfies
//! `(X̂ - p_i ρ_i) Π_i = 0` for every `i`. [`certify`] evaluates both
//! conditions, and [`solve_optimal`] iterates until they hold.

use serde::Serialize;

use crate::ensemble::{ensure_valid, Ensemble};
use crate::error::{Error, Result};
use crate::hermitian::{eig_hermitian, trace_norm};
use crate::lsm::lsm_parts;
use crate::matrix::ComplexMatrix;
use crate::povm::Povm;

/// `Σ p_i Tr(ρ_i Π_i)`.
pub fn prob_correct(e: &Ensemble, p: &Povm) -> Result<f64> {
    check_shapes(e, p)?;
    Ok(e.states()
        .iter()
        .zip(p.operators())
        .map(|(s, op)| s.prior * s.rho.trace_product(op).re)
        .sum())
}

fn check_shapes(e: &Ensemble, p: &Povm) -> Result<()> {
    if e.dim() != p.dim() {
        return Err(Error::DimMismatch {
            expected: e.dim(),
            found: p.dim(),
        });
    }
    if e.len() != p.len() {
        return Err(Error::CountMismatch {
            states: e.len(),
            operators: p.len(),
        });
    }
    Ok(())
}

/// Closed-form optimum for two states: `(1 + ‖p_1ρ_1 - p_2ρ_2‖_1) / 2`.
pub fn helstrom_binary(e: &Ensemble) -> Result<f64> {
    if e.len() != 2 {
        return Err(Error::NotBinary(e.len()));
    }
    let s = e.states();
    let diff = &s[0].weighted() - &s[1].weighted();
    Ok(0.5 * (1.0 + trace_norm(&diff)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub x_hat: ComplexMatrix,
    /// `Tr X̂`.
    pub dual_value: f64,
    /// `P_d` of the certified measurement.
    pub primal_value: f64,
    /// Duality gap after restoring feasibility: `Tr X̂ + n·max(0, -min margin) - P_d`.
    pub gap: f64,
    /// Smallest eigenvalue of `X̂ - p_i ρ_i`, per state.
    pub feas_margins: Vec<f64>,
    /// `‖(X̂ - p_i ρ_i) Π_i‖_max`, per state.
    pub slack_residuals: Vec<f64>,
    pub tol: f64,
    pub feasible: bool,
    pub slack: bool,
}

impl Certificate {
    pub fn is_optimal(&self) -> bool {
        self.feasible && self.slack
    }

    pub fn min_margin(&self) -> f64 {
        self.feas_margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_slack(&self) -> f64 {
        self.slack_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluates the optimality conditions for `p` with dual candidate `x_hat`.
pub fn certify(e: &Ensemble, p: &Povm, x_hat: &ComplexMatrix, tol: f64) -> Result<Certificate> {
    check_shapes(e, p)?;
    x_hat.ensure_square()?;
    if x_hat.rows() != e.dim() {
        return Err(Error::DimMismatch {
            expected: e.dim(),
            found: x_hat.rows(),
        });
    }
    let x = x_hat.symmetrized();
    let mut feas_margins = Vec::with_capacity(e.len());
    let mut slack_residuals = Vec::with_capacity(e.len());
    for (s, op) in e.states().iter().zip(p.operators()) {
        let d = &x - &s.weighted();
        feas_margins.push(eig_hermitian(&d)?.min());
        slack_residuals.push((&d * op).max_abs());
    }
    let dual_value = x.trace().re;
    let primal_value = prob_correct(e, p)?;
    let min_margin = feas_margins.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = dual_value + e.dim() as f64 * (-min_margin).max(0.0) - primal_value;
    Ok(Certificate {
        x_hat: x,
        dual_value,
        primal_value,
        gap,
        feasible: min_margin >= -tol,
        slack: slack_residuals.iter().all(|&r| r <= tol),
        feas_margins,
        slack_residuals,
        tol,
    })
}

fn povm_from_factors(factors: &[ComplexMatrix]) -> Result<Povm> {
    Povm::new(
        factors
            .iter()
            .map(|mu| (mu * &mu.adjoint()).symmetrized())
            .collect(),
    )
}

/// `X̂ = (Σ_j p_j ρ_j Π_j + h.c.) / 2`.
pub fn dual_candidate(e: &Ensemble, p: &Povm) -> ComplexMatrix {
    let n = e.dim();
    let sum = e
        .states()
        .iter()
        .zip(p.operators())
        .fold(ComplexMatrix::zeros(n, n), |acc, (s, op)| &acc + &(&s.weighted() * op));
    sum.symmetrized()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Record an [`IterRecord`] every this many iterations (0 disables).
    pub log_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
            log_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub primal_value: f64,
    /// `Tr X̂` of the raw dual candidate.
    pub candidate_trace: f64,
    /// Trace of the dual candidate shifted by `-min(0, min margin)·I`, which
    /// is dual feasible and therefore an upper bound on the optimum.
    pub feasible_dual: f64,
    pub min_margin: f64,
    pub max_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub povm: Povm,
    pub certificate: Certificate,
    pub diagnostics: SolveDiagnostics,
    pub log: Vec<IterRecord>,
}

const LAMBDA_REG: f64 = 1e-12;

/// Completeness-preserving fixed-point ascent, started from the LSM.
///
/// With `G_i = p_i ρ_i` each step sets `Λ = Σ_j G_j Π_j G_j` and
/// `Π_i ← Λ^{-1/2} G_i Π_i G_i Λ^{-1/2}`, which keeps `Σ Π_i = I` and
/// `Π_i ⪰ 0`. The update is carried out on the factors `μ_i ← Λ^{-1/2} G_i μ_i`
/// of `Π_i = μ_i μ_i*`, starting from the LSM factors. The run stops once [`certify`] accepts the iterate with
/// `X̂ = dual_candidate` and the gap is within `tol`. When `max_iter` is
/// exhausted the best iterate is returned inside [`Error::NotConverged`].
pub fn solve_optimal(e: &Ensemble, opts: &SolveOptions) -> Result<Solution> {
    ensure_valid(e)?;
    let n = e.dim();
    let weighted: Vec<ComplexMatrix> = e.states().iter().map(|s| s.weighted()).collect();
    // Π_i = μ_i μ_i* with μ_i of width r_i, so rank(Π_i) <= r_i holds exactly
    // no matter how ill-conditioned Λ becomes.
    let mut factors = lsm_parts(e)?.mu;
    let mut povm = povm_from_factors(&factors)?;
    let mut log = Vec::new();
    let mut best: Option<(Povm, Certificate, usize)> = None;

    let mut iteration = 0;
    loop {
        let cert = certify(e, &povm, &dual_candidate(e, &povm), opts.tol)?;
        if opts.log_every > 0 && iteration % opts.log_every == 0 {
            log.push(IterRecord {
                iteration,
                primal_value: cert.primal_value,
                candidate_trace: cert.dual_value,
                feasible_dual: cert.primal_value + cert.gap,
                min_margin: cert.min_margin(),
                max_slack: cert.max_slack(),
            });
        }
        let done = cert.is_optimal() && cert.gap <= opts.tol;
        if best.as_ref().is_none_or(|(_, b, _)| cert.gap < b.gap) || done {
            best = Some((povm.clone(), cert, iteration));
        }
        if done || iteration >= opts.max_iter {
            break;
        }

        // G_i μ_i, so that G_i Π_i G_i = (G_i μ_i)(G_i μ_i)*.
        let pushed: Vec<ComplexMatrix> = weighted.iter().zip(&factors).map(|(g, mu)| g * mu).collect();
        let lambda = pushed
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, b| &acc + &(b * &b.adjoint()))
            .symmetrized();
        let eig = eig_hermitian(&lambda)?;
        let reg = if eig.min() < LAMBDA_REG * lambda.max_abs() {
            LAMBDA_REG
        } else {
            0.0
        };
        let root = eig.map_spectrum(|x| 1.0 / (x.max(0.0) + reg).sqrt());
        factors = pushed.iter().map(|b| &root * b).collect();
        povm = povm_from_factors(&factors)?;
        iteration += 1;
    }

    let (povm, certificate, at) = best.expect("at least one iterate");
    let converged = certificate.is_optimal() && certificate.gap <= opts.tol;
    let diagnostics = SolveDiagnostics {
        iterations: if converged { at } else { iteration },
        primal_value: certificate.primal_value,
        dual_value: certificate.primal_value + certificate.gap,
        gap: certificate.gap,
        converged,
    };
    let solution = Solution {
        povm,
        certificate,
        diagnostics,
        log,
    };
    if converged {
        Ok(solution)
    } else {
        Err(Error::NotConverged(Box::new(solution)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::library::*;
    use crate::ensemble::{random_ensemble, Priors, State};
    use crate::matrix::ComplexMatrix;
    use approx::assert_abs_diff_eq;

    fn basis_povm() -> Povm {
        Povm::new(vec![
            ComplexMatrix::diag_real(&[1.0, 0.0]),
            ComplexMatrix::diag_real(&[0.0, 1.0]),
        ])
        .unwrap()
    }

    const HELSTROM_ZERO_PLUS: f64 = 0.853_553_390_593_273_7;

    #[test]
    fn prob_correct_examples() {
        assert_eq!(prob_correct(&orthogonal_pair(), &basis_povm()).unwrap(), 1.0);
        let e = random_ensemble(3, &[1, 2, 2], &Priors::Random, 5, false).unwrap();
        let n = e.dim();
        let guess_first = Povm::new(vec![
            ComplexMatrix::identity(n),
            ComplexMatrix::zeros(n, n),
            ComplexMatrix::zeros(n, n),
        ])
        .unwrap();
        assert_abs_diff_eq!(
            prob_correct(&e, &guess_first).unwrap(),
            e.priors()[0],
            epsilon = 1e-14
        );
        assert!(matches!(
            prob_correct(&e, &basis_povm()),
            Err(Error::DimMismatch { .. })
        ));
        let three = Povm::new(vec![ComplexMatrix::identity(2); 3]).unwrap();
        assert!(matches!(
            prob_correct(&orthogonal_pair(), &three),
            Err(Error::CountMismatch { .. })
        ));
    }

    #[test]
    fn helstrom_examples() {
        assert_abs_diff_eq!(helstrom_binary(&orthogonal_pair()).unwrap(), 1.0, epsilon = 1e-15);
        let rho = ComplexMatrix::diag_real(&[0.6, 0.4]);
        let same = Ensemble::new(2, vec![State::new(0.7, rho.clone()), State::new(0.3, rho)]).unwrap();
        assert_abs_diff_eq!(helstrom_binary(&same).unwrap(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(
            helstrom_binary(&zero_plus()).unwrap(),
            HELSTROM_ZERO_PLUS,
            epsilon = 1e-15
        );
        assert!(matches!(helstrom_binary(&trine()), Err(Error::NotBinary(3))));
    }

    #[test]
    fn certify_examples() {
        let e = orthogonal_pair();
        let x = ComplexMatrix::identity(2).scale(0.5);
        let c = certify(&e, &basis_povm(), &x, 1e-12).unwrap();
        assert!(c.is_optimal());
        assert_eq!(c.slack_residuals, vec![0.0, 0.0]);
        assert_abs_diff_eq!(c.dual_value, 1.0, epsilon = 1e-15);

        let c = certify(&e, &basis_povm(), &ComplexMatrix::zeros(2, 2), 1e-9).unwrap();
        assert!(!c.feasible);
        assert_abs_diff_eq!(c.min_margin(), -0.5, epsilon = 1e-15);
        // Shifting X̂ = 0 up by the deficit gives I/2, which is optimal.
        assert_abs_diff_eq!(c.gap, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn trine_hand_certificate() {
        // X̂ = I/3: X̂ - ρ_k/3 = (I - |φ_k⟩⟨φ_k|)/3 ⪰ 0 with zero margin and
        // (X̂ - ρ_k/3)(2/3)|φ_k⟩⟨φ_k| = 0.
        let t = trine();
        let povm = Povm::new(t.states().iter().map(|s| s.rho.scale(2.0 / 3.0)).collect()).unwrap();
        let c = certify(&t, &povm, &ComplexMatrix::identity(2).scale(1.0 / 3.0), 1e-12).unwrap();
        assert!(c.is_optimal());
        for m in &c.feas_margins {
            assert_abs_diff_eq!(*m, 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(c.primal_value, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.dual_value, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn solve_orthogonal_pair() {
        let s = solve_optimal(&orthogonal_pair(), &SolveOptions::default()).unwrap();
        assert!(s.diagnostics.converged);
        assert_abs_diff_eq!(s.diagnostics.primal_value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.certificate.dual_value, 1.0, epsilon = 1e-12);
        assert!(s.povm.operators()[0].max_abs_diff(&ComplexMatrix::diag_real(&[1.0, 0.0])) < 1e-10);
    }

    #[test]
    fn solve_zero_plus_matches_helstrom() {
        let s = solve_optimal(&zero_plus(), &SolveOptions::default()).unwrap();
        assert_abs_diff_eq!(s.diagnostics.primal_value, HELSTROM_ZERO_PLUS, epsilon = 1e-8);
    }

    #[test]
    fn solve_trine() {
        let s = solve_optimal(&trine(), &SolveOptions::default()).unwrap();
        assert_abs_diff_eq!(s.diagnostics.primal_value, 2.0 / 3.0, epsilon = 1e-8);
        for (op, st) in s.povm.operators().iter().zip(trine().states()) {
            assert!(op.max_abs_diff(&st.rho.scale(2.0 / 3.0)) < 1e-8);
        }
    }

    #[test]
    fn log_records_weak_duality() {
        let e = random_ensemble(3, &[2, 2], &Priors::Random, 77, false).unwrap();
        let opts = SolveOptions {
            log_every: 1,
            ..SolveOptions::default()
        };
        let s = solve_optimal(&e, &opts).unwrap();
        assert!(!s.log.is_empty());
        for rec in &s.log {
            assert!(rec.feasible_dual >= rec.primal_value - 1e-12);
            assert_abs_diff_eq!(rec.candidate_trace, rec.primal_value, epsilon = 1e-12);
        }
    }

    #[test]
    fn not_converged_carries_best_iterate() {
        let e = random_ensemble(4, &[2, 2], &Priors::Random, 8, true).unwrap();
        let opts = SolveOptions {
            tol: 1e-15,
            max_iter: 3,
            log_every: 0,
        };
        match solve_optimal(&e, &opts) {
            Err(Error::NotConverged(s)) => {
                assert!(!s.diagnostics.converged);
                assert_eq!(s.diagnostics.iterations, 3);
                assert!(s.povm.completeness_residual() < 1e-8);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn invalid_ensemble_rejected() {
        let e = Ensemble::new(2, vec![State::new(1.0, ComplexMatrix::identity(2))]).unwrap();
        assert!(matches!(
            solve_optimal(&e, &SolveOptions::default()),
            Err(Error::InvalidEnsemble(_))
        ));
    }
}
