//! Monte Carlo simulation of the detection experiment.
//!
//! Each trial draws a state index from the priors and then an outcome from
//! the Born-rule row `C[i][·]`, using one uniform draw per stage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::povm::Povm;

const CLAMP_TOL: f64 = 1e-10;
const ROW_SUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    /// `C[i][j] = Tr(ρ_i Π_j)`.
    pub entries: Vec<Vec<f64>>,
    /// `Σ p_i C[i][i]`.
    pub analytic_pd: f64,
}

pub fn born_probabilities(e: &Ensemble, p: &Povm) -> Result<ConfusionMatrix> {
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
    let entries: Vec<Vec<f64>> = e
        .states()
        .iter()
        .map(|s| p.operators().iter().map(|op| s.rho.trace_product(op).re).collect())
        .collect();
    let analytic_pd = e
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| s.prior * entries[i][i])
        .sum();
    Ok(ConfusionMatrix {
        entries,
        analytic_pd,
    })
}

/// Cumulative distribution of a probability row after clamping roundoff
/// negatives and renormalizing.
fn cumulative(row: &[f64], state: usize) -> Result<Vec<f64>> {
    if let Some(&value) = row.iter().find(|&&x| x < -CLAMP_TOL) {
        return Err(Error::NegativeProbability { state, value });
    }
    let clamped: Vec<f64> = row.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if (total - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::InvalidPovm(format!(
            "outcome probabilities for state {state} sum to {total}"
        )));
    }
    Ok(clamped
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x / total;
            Some(*acc)
        })
        .collect())
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub trials: u64,
    pub seed: u64,
    /// `counts[i][j]`: state `i` prepared, outcome `j` observed.
    pub counts: Vec<Vec<u64>>,
    pub empirical_pd: f64,
    pub std_error: f64,
}

impl SimResult {
    fn from_counts(counts: Vec<Vec<u64>>, trials: u64, seed: u64) -> Self {
        let correct: u64 = (0..counts.len()).map(|i| counts[i][i]).sum();
        let empirical_pd = correct as f64 / trials as f64;
        let std_error = (empirical_pd * (1.0 - empirical_pd) / trials as f64).sqrt();
        Self {
            trials,
            seed,
            counts,
            empirical_pd,
            std_error,
        }
    }

    /// Largest `|counts[i][j] / Σ_j counts[i][j] - C[i][j]|` over rows that
    /// were sampled at least once.
    pub fn max_row_deviation(&self, c: &ConfusionMatrix) -> f64 {
        let mut worst = 0.0f64;
        for (row, probs) in self.counts.iter().zip(&c.entries) {
            let n: u64 = row.iter().sum();
            if n == 0 {
                continue;
            }
            for (&k, &q) in row.iter().zip(probs) {
                worst = worst.max((k as f64 / n as f64 - q).abs());
            }
        }
        worst
    }
}

fn run_counts(
    prior_cdf: &[f64],
    outcome_cdfs: &[Vec<f64>],
    trials: u64,
    seed: u64,
) -> Vec<Vec<u64>> {
    let m = prior_cdf.len();
    let mut counts = vec![vec![0u64; outcome_cdfs[0].len()]; m];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let i = draw(prior_cdf, rng.random::<f64>());
        let j = draw(&outcome_cdfs[i], rng.random::<f64>());
        counts[i][j] += 1;
    }
    counts
}

fn prepare(e: &Ensemble, p: &Povm) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let c = born_probabilities(e, p)?;
    let prior_cdf = cumulative(&e.priors(), usize::MAX)
        .map_err(|_| Error::BadPriors("priors are not a distribution".into()))?;
    let outcome_cdfs = c
        .entries
        .iter()
        .enumerate()
        .map(|(i, row)| cumulative(row, i))
        .collect::<Result<Vec<_>>>()?;
    Ok((prior_cdf, outcome_cdfs))
}

/// Sequential simulation; identical inputs give identical counts.
pub fn simulate(e: &Ensemble, p: &Povm, trials: u64, seed: u64) -> Result<SimResult> {
    if trials == 0 {
        return Err(Error::InvalidPovm("trials must be positive".into()));
    }
    let (prior_cdf, outcome_cdfs) = prepare(e, p)?;
    let counts = run_counts(&prior_cdf, &outcome_cdfs, trials, seed);
    Ok(SimResult::from_counts(counts, trials, seed))
}

/// Splits the trials over `shards` threads; shard `k` uses seed `seed + k`
/// and the counts are summed.
pub fn simulate_sharded(
    e: &Ensemble,
    p: &Povm,
    trials: u64,
    seed: u64,
    shards: usize,
) -> Result<SimResult> {
    if trials == 0 || shards == 0 {
        return Err(Error::InvalidPovm("trials and shards must be positive".into()));
    }
    let (prior_cdf, outcome_cdfs) = prepare(e, p)?;
    let per = trials / shards as u64;
    let extra = trials % shards as u64;
    let parts: Vec<Vec<Vec<u64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..shards as u64)
            .map(|k| {
                let n = per + u64::from(k < extra);
                let (pc, oc) = (&prior_cdf, &outcome_cdfs);
                scope.spawn(move || run_counts(pc, oc, n, seed.wrapping_add(k)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("shard panicked")).collect()
    });
    let mut counts = parts[0].clone();
    for part in &parts[1..] {
        for (row, add) in counts.iter_mut().zip(part) {
            for (c, a) in row.iter_mut().zip(add) {
                *c += a;
            }
        }
    }
    Ok(SimResult::from_counts(counts, trials, seed))
}
