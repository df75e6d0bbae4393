//! Direct Quicksort simulation and brute-force enumeration, kept free of
//! the generating-function machinery so it can cross-check it.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::{Error, Result};

/// Largest `n` accepted by [`exhaustive_distribution`].
pub const MAX_EXHAUSTIVE_N: u64 = 12;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalStats {
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub min: u64,
    pub max: u64,
}

/// Sorts `v` with random-pivot Quicksort and returns the number of key
/// comparisons: partitioning a sublist of length `L` costs `L − 1`.
///
/// Keys strictly below the pivot go left and every other key except the
/// pivot itself goes right, so duplicates of the pivot are sorted again.
pub fn quicksort_count<T: Ord, R: Rng + ?Sized>(v: &mut Vec<T>, rng: &mut R) -> u64 {
    if v.len() <= 1 {
        return 0;
    }
    let pivot = v.swap_remove(rng.random_range(0..v.len()));
    let cost = v.len() as u64;
    let (mut less, mut rest): (Vec<T>, Vec<T>) = v.drain(..).partition(|x| *x < pivot);
    let c = cost + quicksort_count(&mut less, rng) + quicksort_count(&mut rest, rng);
    v.append(&mut less);
    v.push(pivot);
    v.append(&mut rest);
    c
}

/// Selection sort comparison count; always `n(n−1)/2`.
pub fn selection_sort_count<T: Ord>(v: &mut [T]) -> u64 {
    let mut count = 0;
    for i in 0..v.len() {
        let mut best = i;
        for j in i + 1..v.len() {
            count += 1;
            if v[j] < v[best] {
                best = j;
            }
        }
        v.swap(i, best);
    }
    count
}

/// Exact law of the comparison count by enumerating every pivot choice.
///
/// Only the sublist length matters, so the enumeration recurses on sizes,
/// but it walks all `n!` pivot sequences and does not memoize.
pub fn exhaustive_distribution(n: u64) -> Result<BTreeMap<u64, Rational>> {
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::OracleTooLarge {
            n,
            max: MAX_EXHAUSTIVE_N,
        });
    }
    fn walk(sizes: &mut Vec<u64>, cost: u64, weight: &Rational, out: &mut BTreeMap<u64, Rational>) {
        let Some(len) = sizes.pop() else {
            *out.entry(cost).or_default() += weight;
            return;
        };
        if len <= 1 {
            walk(sizes, cost, weight, out);
        } else {
            let w = Rational::from(weight / Integer::from(len));
            for rank in 0..len {
                sizes.push(rank);
                sizes.push(len - 1 - rank);
                walk(sizes, cost + len - 1, &w, out);
                sizes.truncate(sizes.len() - 2);
            }
        }
        sizes.push(len);
    }
    let mut out = BTreeMap::new();
    walk(&mut vec![n], 0, &Rational::from(1), &mut out);
    Ok(out)
}

/// `trials` independent uniform permutations of `0..n`, seeded.
pub fn shuffled_keys(n: u64, trials: u64, seed: u64) -> impl Iterator<Item = Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(move |_| {
        let mut keys: Vec<u64> = (0..n).collect();
        keys.shuffle(&mut rng);
        keys
    })
}

/// Runs `trials` independent sorts of a random permutation of `0..n`.
pub fn monte_carlo(cfg: &SimConfig) -> Result<EmpiricalStats> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut s1, mut s2, mut s3) = (0u128, 0u128, 0u128);
    let (mut min, mut max) = (u64::MAX, 0u64);
    let mut keys: Vec<u64> = (0..cfg.n).collect();
    for _ in 0..cfg.trials {
        keys.shuffle(&mut rng);
        let c = quicksort_count(&mut keys, &mut rng);
        debug_assert!(keys.windows(2).all(|w| w[0] <= w[1]));
        let c128 = c as u128;
        s1 += c128;
        s2 += c128 * c128;
        s3 += c128 * c128 * c128;
        min = min.min(c);
        max = max.max(c);
    }
    let t = cfg.trials as f64;
    let mean = s1 as f64 / t;
    let m2 = s2 as f64 / t - mean * mean;
    let m3 = s3 as f64 / t - 3.0 * mean * (s2 as f64 / t) + 2.0 * mean.powi(3);
    let variance = if cfg.trials > 1 {
        m2 * t / (t - 1.0)
    } else {
        0.0
    };
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    Ok(EmpiricalStats {
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        mean,
        variance,
        skewness,
        min,
        max,
    })
}
