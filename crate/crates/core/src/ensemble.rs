//! Quantum state ensembles: validation, factorization `ρ = φφ*`, linear
//! independence, the block matrix `Ψ` and random generation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{eig_hermitian, numeric_rank, singular_values, RANK_TOL};
use crate::matrix::{ComplexMatrix, ONE};

pub const TRACE_TOL: f64 = 1e-9;
pub const PRIOR_SUM_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub prior: f64,
    pub rho: ComplexMatrix,
}

impl State {
    pub fn new(prior: f64, rho: ComplexMatrix) -> Self {
        Self { prior, rho }
    }

    /// `|v⟩⟨v|` with `v` normalized.
    pub fn pure(prior: f64, v: &[Complex64]) -> Self {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let unit: Vec<Complex64> = v.iter().map(|z| z / norm).collect();
        Self::new(prior, ComplexMatrix::outer(&unit))
    }

    /// Weighted density operator `p ρ`.
    pub fn weighted(&self) -> ComplexMatrix {
        self.rho.scale(self.prior)
    }
}

/// A set of density operators with priors on an `n`-dimensional space.
///
/// Construction only checks shapes; [`validate`] reports everything else.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    dim: usize,
    states: Vec<State>,
}

#[derive(Deserialize)]
struct EnsembleWire {
    dim: usize,
    states: Vec<State>,
}

impl<'de> Deserialize<'de> for Ensemble {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = EnsembleWire::deserialize(d)?;
        Ensemble::new(wire.dim, wire.states).map_err(serde::de::Error::custom)
    }
}

impl Ensemble {
    pub fn new(dim: usize, states: Vec<State>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidEnsemble("dimension must be positive".into()));
        }
        if states.is_empty() {
            return Err(Error::InvalidEnsemble("no states".into()));
        }
        for s in &states {
            s.rho.ensure_square()?;
            if s.rho.rows() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: s.rho.rows(),
                });
            }
        }
        Ok(Self { dim, states })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn priors(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.prior).collect()
    }

    /// Rank of the space spanned by all state eigenvectors.
    pub fn span_rank(&self) -> usize {
        let mut total = ComplexMatrix::zeros(self.dim, self.dim);
        for s in &self.states {
            total = &total + &s.rho.symmetrized();
        }
        numeric_rank(&total, RANK_TOL)
    }

    /// Errors with [`Error::SpanDeficient`] unless the eigenvectors span the space.
    pub fn require_span(&self) -> Result<()> {
        let span_rank = self.span_rank();
        if span_rank < self.dim {
            return Err(Error::SpanDeficient {
                span_rank,
                dim: self.dim,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateReport {
    pub index: usize,
    pub prior: f64,
    /// Smallest eigenvalue of `ρ_i` (negative means not PSD).
    pub psd_margin: f64,
    /// `|Tr ρ_i - 1|`.
    pub trace_deviation: f64,
    pub hermitian_asymmetry: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub states: Vec<StateReport>,
    /// `|Σ p_i - 1|`.
    pub prior_sum_deviation: f64,
    pub span_rank: usize,
    pub failures: Vec<String>,
    pub pass: bool,
}

pub fn validate(e: &Ensemble) -> ValidationReport {
    let mut failures = Vec::new();
    let mut states = Vec::with_capacity(e.len());

    for (i, s) in e.states.iter().enumerate() {
        let asym = s.rho.hermitian_asymmetry();
        let scale = 1.0 + s.rho.max_abs();
        if asym > 1e-12 * scale {
            failures.push(format!("state {i}: not Hermitian (asymmetry {asym:e})"));
        }
        let (psd_margin, rank) = match eig_hermitian(&s.rho.symmetrized()) {
            Ok(eig) => {
                let max = eig.max();
                let rank = eig.values.iter().filter(|&&v| v > RANK_TOL * max).count();
                (eig.min(), rank)
            }
            Err(_) => (f64::NAN, 0),
        };
        if psd_margin.is_nan() || psd_margin < -PSD_TOL * scale {
            failures.push(format!("state {i}: not PSD (min eigenvalue {psd_margin:e})"));
        }
        let trace_deviation = (s.rho.trace().re - 1.0).abs();
        if trace_deviation > TRACE_TOL {
            failures.push(format!("state {i}: trace deviates from 1 by {trace_deviation:e}"));
        }
        if !(s.prior > 0.0 && s.prior <= 1.0) {
            failures.push(format!("state {i}: prior {} outside (0, 1]", s.prior));
        }
        states.push(StateReport {
            index: i,
            prior: s.prior,
            psd_margin,
            trace_deviation,
            hermitian_asymmetry: asym,
            rank,
        });
    }

    let prior_sum_deviation = (e.states.iter().map(|s| s.prior).sum::<f64>() - 1.0).abs();
    if prior_sum_deviation > PRIOR_SUM_TOL {
        failures.push(format!("priors sum deviates from 1 by {prior_sum_deviation:e}"));
    }
    let span_rank = e.span_rank();
    if span_rank < e.dim {
        failures.push(format!(
            "eigenvectors span {span_rank} of {} dimensions",
            e.dim
        ));
    }

    ValidationReport {
        dim: e.dim,
        states,
        prior_sum_deviation,
        span_rank,
        pass: failures.is_empty(),
        failures,
    }
}

/// Fails with [`Error::InvalidEnsemble`] (or [`Error::SpanDeficient`]) when
/// [`validate`] does not pass.
pub fn ensure_valid(e: &Ensemble) -> Result<()> {
    let report = validate(e);
    if report.pass {
        return Ok(());
    }
    if report.span_rank < e.dim && report.failures.len() == 1 {
        return Err(Error::SpanDeficient {
            span_rank: report.span_rank,
            dim: e.dim,
        });
    }
    Err(Error::InvalidEnsemble(report.failures.join("; ")))
}

/// Per-state factors `φ_i` with `ρ_i = φ_i φ_i*`.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// `n x r_i`, orthogonal columns with squared norms equal to the kept eigenvalues.
    pub phi: Vec<ComplexMatrix>,
    pub ranks: Vec<usize>,
}

impl Factorization {
    pub fn total_rank(&self) -> usize {
        self.ranks.iter().sum()
    }

    /// Factors with unit-norm columns, i.e. the eigenvectors themselves.
    pub fn eigenvectors(&self) -> Vec<ComplexMatrix> {
        self.phi
            .iter()
            .map(|phi| {
                let mut unit = phi.clone();
                for j in 0..phi.cols() {
                    let col = phi.col(j);
                    let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    let scaled: Vec<Complex64> = col.iter().map(|z| z / norm).collect();
                    unit.set_col(j, &scaled);
                }
                unit
            })
            .collect()
    }
}

pub fn factorize(e: &Ensemble) -> Result<Factorization> {
    let mut phi = Vec::with_capacity(e.len());
    let mut ranks = Vec::with_capacity(e.len());
    for s in &e.states {
        let eig = eig_hermitian(&s.rho)?;
        let threshold = RANK_TOL * eig.max();
        let kept: Vec<usize> = (0..e.dim)
            .rev()
            .filter(|&k| eig.values[k] > threshold)
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidEnsemble("zero density operator".into()));
        }
        let mut f = ComplexMatrix::zeros(e.dim, kept.len());
        for (c, &k) in kept.iter().enumerate() {
            let w = eig.values[k].sqrt();
            let col: Vec<Complex64> = eig.vectors.col(k).iter().map(|z| z * w).collect();
            f.set_col(c, &col);
        }
        ranks.push(kept.len());
        phi.push(f);
    }
    Ok(Factorization { phi, ranks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Independence {
    pub independent: bool,
    /// Rank of the concatenated eigenvectors.
    pub span_rank: usize,
    /// `Σ r_i`.
    pub total_rank: usize,
}

pub fn is_linearly_independent(f: &Factorization) -> Independence {
    let vecs = f.eigenvectors();
    let refs: Vec<&ComplexMatrix> = vecs.iter().collect();
    let all = ComplexMatrix::hcat(&refs).expect("factors share the row count");
    let span_rank = numeric_rank(&all, RANK_TOL);
    let total_rank = f.total_rank();
    Independence {
        independent: span_rank == total_rank,
        span_rank,
        total_rank,
    }
}

/// Factorizes and tests independence in one step.
pub fn independence_of(e: &Ensemble) -> Result<Independence> {
    Ok(is_linearly_independent(&factorize(e)?))
}

/// `Ψ = [ψ_1 … ψ_m]` with `ψ_i = √p_i φ_i`.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    pub psi: ComplexMatrix,
    pub block_offsets: Vec<usize>,
    pub ranks: Vec<usize>,
}

impl BlockMatrix {
    pub fn block(&self, i: usize) -> ComplexMatrix {
        self.psi.columns(self.block_offsets[i], self.ranks[i])
    }
}

pub fn build_psi(e: &Ensemble, f: &Factorization) -> BlockMatrix {
    let blocks: Vec<ComplexMatrix> = e
        .states
        .iter()
        .zip(&f.phi)
        .map(|(s, phi)| phi.scale(s.prior.sqrt()))
        .collect();
    let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
    let psi = ComplexMatrix::hcat(&refs).expect("factors share the row count");
    let block_offsets = f
        .ranks
        .iter()
        .scan(0, |acc, &r| {
            let start = *acc;
            *acc += r;
            Some(start)
        })
        .collect();
    BlockMatrix {
        psi,
        block_offsets,
        ranks: f.ranks.clone(),
    }
}

/// The `(Σ r_k) x r_i` selector `E_i` with `Ψ E_i = ψ_i`. `i` is zero-based.
pub fn selector(i: usize, ranks: &[usize]) -> Result<ComplexMatrix> {
    if i >= ranks.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: ranks.len(),
        });
    }
    let total: usize = ranks.iter().sum();
    let offset: usize = ranks[..i].iter().sum();
    let mut e = ComplexMatrix::zeros(total, ranks[i]);
    for q in 0..ranks[i] {
        e[(offset + q, q)] = ONE;
    }
    Ok(e)
}

/// The ensemble re-expressed on the subspace its eigenvectors span.
#[derive(Debug, Clone)]
pub struct Deflated {
    pub ensemble: Ensemble,
    /// `n x k` orthonormal basis of the spanned subspace.
    pub basis: ComplexMatrix,
}

impl Deflated {
    /// Maps an operator on the subspace back to the full space, `B M B*`.
    pub fn lift(&self, m: &ComplexMatrix) -> ComplexMatrix {
        &(&self.basis * m) * &self.basis.adjoint()
    }
}

pub fn deflate(e: &Ensemble) -> Result<Deflated> {
    let mut total = ComplexMatrix::zeros(e.dim, e.dim);
    for s in &e.states {
        total = &total + &s.rho;
    }
    let eig = eig_hermitian(&total)?;
    let basis = eig
        .range_basis(RANK_TOL * eig.max())
        .ok_or_else(|| Error::InvalidEnsemble("all states are zero".into()))?;
    let bh = basis.adjoint();
    let states = e
        .states
        .iter()
        .map(|s| State::new(s.prior, (&(&bh * &s.rho) * &basis).symmetrized()))
        .collect();
    Ok(Deflated {
        ensemble: Ensemble::new(basis.cols(), states)?,
        basis,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Priors {
    /// Exactly `1/m` each, last one absorbing the rounding.
    Uniform,
    Given(Vec<f64>),
    /// Weights drawn uniformly from `[0.1, 1)` then normalized.
    Random,
}

fn close_priors(mut p: Vec<f64>) -> Vec<f64> {
    let head: f64 = p[..p.len() - 1].iter().sum();
    let last = p.len() - 1;
    p[last] = 1.0 - head;
    p
}

fn resolve_priors(priors: &Priors, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let p = match priors {
        Priors::Uniform => close_priors(vec![1.0 / m as f64; m]),
        Priors::Random => {
            let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            close_priors(w.into_iter().map(|x| x / total).collect())
        }
        Priors::Given(p) => {
            if p.len() != m {
                return Err(Error::BadPriors(format!("{} priors for {m} states", p.len())));
            }
            p.clone()
        }
    };
    if let Some(bad) = p.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::BadPriors(format!("prior {bad} outside (0, 1]")));
    }
    let dev = (p.iter().sum::<f64>() - 1.0).abs();
    if dev > PRIOR_SUM_TOL {
        return Err(Error::BadPriors(format!("priors sum deviates from 1 by {dev:e}")));
    }
    Ok(p)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("positive shape")
}

fn density_from_factor(a: &ComplexMatrix) -> ComplexMatrix {
    let g = &(a * &a.adjoint()).symmetrized();
    let t = g.trace().re;
    g.scale(1.0 / t)
}

/// Seeded random ensemble.
///
/// The stream comes from `ChaCha8Rng::seed_from_u64(seed)` and is consumed in
/// a fixed order: random priors first (if requested), then matrix entries in
/// state-major, row-major order with the real part drawn before the
/// imaginary part. Each `ρ_i = A_i A_i* / Tr(A_i A_i*)`.
///
/// With `require_independent`, the `A_i` are disjoint column blocks of one
/// `n x n` complex Gaussian matrix, redrawn until its condition number is
/// below `1e3`, which makes the eigenvectors linearly independent.
pub fn random_ensemble(
    dim: usize,
    ranks: &[usize],
    priors: &Priors,
    seed: u64,
    require_independent: bool,
) -> Result<Ensemble> {
    if dim == 0 {
        return Err(Error::BadRanks("dimension must be positive".into()));
    }
    if ranks.is_empty() || ranks.iter().any(|&r| r == 0 || r > dim) {
        return Err(Error::BadRanks(format!(
            "ranks {ranks:?} must be non-empty and within 1..={dim}"
        )));
    }
    let total: usize = ranks.iter().sum();
    if require_independent && total != dim {
        return Err(Error::BadRanks(format!(
            "independent ensembles need ranks summing to {dim}, got {total}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = resolve_priors(priors, ranks.len(), &mut rng)?;

    let factors: Vec<ComplexMatrix> = if require_independent {
        let g = loop {
            let g = gaussian_matrix(&mut rng, dim, dim);
            let sv = singular_values(&g);
            if sv[dim - 1] > 1e-3 * sv[0] {
                break g;
            }
        };
        let mut offset = 0;
        ranks
            .iter()
            .map(|&r| {
                let block = g.columns(offset, r);
                offset += r;
                block
            })
            .collect()
    } else {
        loop {
            let factors: Vec<ComplexMatrix> = ranks
                .iter()
                .map(|&r| gaussian_matrix(&mut rng, dim, r))
                .collect();
            // Full column rank per block (almost sure, but checked).
            if factors.iter().all(|a| numeric_rank(a, 1e-6) == a.cols()) {
                break factors;
            }
        }
    };

    let states = factors
        .iter()
        .zip(p)
        .map(|(a, prior)| State::new(prior, density_from_factor(a)))
        .collect();
    Ensemble::new(dim, states)
}

/// Named ensembles used throughout the tests and examples.
pub mod library {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// `{(1/2, |0⟩⟨0|), (1/2, |1⟩⟨1|)}`.
    pub fn orthogonal_pair() -> Ensemble {
        Ensemble::new(
            2,
            vec![
                State::pure(0.5, &[re(1.0), re(0.0)]),
                State::pure(0.5, &[re(0.0), re(1.0)]),
            ],
        )
        .expect("well formed")
    }

    /// `{(1/2, |0⟩⟨0|), (1/2, |+⟩⟨+|)}`.
    pub fn zero_plus() -> Ensemble {
        Ensemble::new(
            2,
            vec![
                State::pure(0.5, &[re(1.0), re(0.0)]),
                State::pure(0.5, &[re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]),
            ],
        )
        .expect("well formed")
    }

    /// Three equiprobable real qubit states `(cos 2πk/3, sin 2πk/3)`.
    pub fn trine() -> Ensemble {
        let mut states: Vec<State> = (0..3)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 3.0;
                State::pure(1.0 / 3.0, &[re(a.cos()), re(a.sin())])
            })
            .collect();
        states[2].prior = 1.0 - 2.0 / 3.0;
        Ensemble::new(2, states).expect("well formed")
    }
}
