//! Seeded ensemble corpora for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{random_ensemble, Ensemble, Priors};
use crate::error::Result;

/// One generated instance and the parameters that produced it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub ranks: Vec<usize>,
    pub independent: bool,
    pub ensemble: Ensemble,
}

/// Random composition of `n` into `m` positive parts.
fn composition(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    let mut ranks = vec![1; m];
    for _ in 0..(n - m) {
        ranks[rng.random_range(0..m)] += 1;
    }
    ranks
}

/// Linearly independent mixed ensembles with `n ∈ {2..=6}`, `m ∈ {2, 3, 4}`
/// (`m <= n`), ranks summing to `n` and random priors.
pub fn independent(count: usize, seed: u64) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = rng.random_range(2..=6);
            let m = rng.random_range(2..=4usize).min(n);
            let ranks = composition(&mut rng, n, m);
            let s = seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
            Ok(Instance {
                seed: s,
                ensemble: random_ensemble(n, &ranks, &Priors::Random, s, true)?,
                ranks,
                independent: true,
            })
        })
        .collect()
}

/// Two-state ensembles in dimension 2..=4: pure and mixed, with random priors;
/// about half are linearly dependent (`r_1 + r_2 > n`).
pub fn binary(count: usize, seed: u64) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = rng.random_range(2..=4);
            let dependent = rng.random_bool(0.5);
            let ranks = if dependent {
                let r1 = rng.random_range(1..=n);
                let r2 = rng.random_range((n + 1 - r1).max(1)..=n);
                vec![r1, r2]
            } else {
                composition(&mut rng, n, 2)
            };
            let s = seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
            Ok(Instance {
                seed: s,
                ensemble: random_ensemble(n, &ranks, &Priors::Random, s, !dependent)?,
                ranks,
                independent: !dependent,
            })
        })
        .collect()
}
