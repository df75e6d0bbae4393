//! Closed forms for the mean and central moments as polynomials in `n` and
//! the harmonic numbers `H_1(n), ..., H_r(n)`, found by undetermined
//! coefficients: write a generic template, solve it exactly on a block of
//! training points, then demand an exact match on every held-out test
//! point.
//!
//! The training systems can have several hundred unknowns whose entries
//! are harmonic numbers with very large denominators. They are solved
//! modulo a sequence of word-sized primes, lifted by Chinese remaindering
//! and rational reconstruction, and only accepted after the candidate is
//! checked in exact rational arithmetic on every training and test point.

mod expr;
mod modular;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::sync::{Mutex, OnceLock};

use rug::Rational;
use serde::Serialize;

pub use expr::{HarmonicExpr, Monomial, TermWire};

use crate::moments::moment_data;
use crate::numeric::RationalRepr;
use crate::{Error, Result};

/// Extra training equations beyond the number of unknowns.
pub const DEFAULT_SLACK: usize = 5;

/// Minimum number of held-out test points in [`guess_moment`].
pub const MIN_TEST_POINTS: u64 = 150;

/// Data is always generated at least through this `n`.
pub const MIN_DATA_N: u64 = 306;

// Confirmations needed before a negative verdict is trusted.
const NEGATIVE_CONFIRMATIONS: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitStatus {
    Verified,
    Refuted,
    Underdetermined,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FitReport {
    pub expr: HarmonicExpr,
    pub train_range: RangeInclusive<u64>,
    pub test_range: RangeInclusive<u64>,
    /// `data(n) - expr(n)` for every test point, in order. Empty when no
    /// candidate survived the training system.
    pub residuals: Vec<Rational>,
    pub status: FitStatus,
}

impl FitReport {
    pub fn is_verified(&self) -> bool {
        self.status == FitStatus::Verified
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wire<'a> {
            status: FitStatus,
            train: [u64; 2],
            test: [u64; 2],
            expr: &'a HarmonicExpr,
            nonzero_residuals: usize,
            residuals: Vec<RationalRepr>,
        }
        serde_json::to_string(&Wire {
            status: self.status,
            train: [*self.train_range.start(), *self.train_range.end()],
            test: [*self.test_range.start(), *self.test_range.end()],
            expr: &self.expr,
            nonzero_residuals: self.residuals.iter().filter(|r| !r.is_zero()).count(),
            residuals: self.residuals.iter().map(RationalRepr::from).collect(),
        })
        .expect("serializable")
    }
}

/// Every monomial `n^a Π_{m<=r} H_m^{b_m}` with `a <= n_degree_bound` and
/// `Σ m·b_m <= h_weight_bound`, in canonical order.
pub fn template(r: u32, n_degree_bound: u32, h_weight_bound: u32) -> Vec<Monomial> {
    let mut parts = Vec::new();
    harmonic_parts(r, 1, h_weight_bound, &mut Vec::new(), &mut parts);
    let mut out: Vec<Monomial> = (0..=n_degree_bound)
        .flat_map(|a| {
            parts
                .iter()
                .map(move |p: &Vec<(u32, u32)>| Monomial::new(a, p))
        })
        .collect();
    out.sort();
    out
}

fn harmonic_parts(
    max_order: u32,
    m: u32,
    budget: u32,
    current: &mut Vec<(u32, u32)>,
    out: &mut Vec<Vec<(u32, u32)>>,
) {
    if m > max_order || m > budget {
        out.push(current.clone());
        return;
    }
    for b in 0..=budget / m {
        if b > 0 {
            current.push((m, b));
        }
        harmonic_parts(max_order, m + 1, budget - m * b, current, out);
        if b > 0 {
            current.pop();
        }
    }
}

/// [`fit_with_slack`] with the default slack of 5 equations.
pub fn fit(
    data: &BTreeMap<u64, Rational>,
    monomials: &[Monomial],
    train_range: RangeInclusive<u64>,
    test_range: RangeInclusive<u64>,
) -> Result<FitReport> {
    fit_with_slack(data, monomials, train_range, test_range, DEFAULT_SLACK)
}

/// Fits `data` by a rational combination of `monomials` on `train_range`
/// and checks the result on `test_range`.
pub fn fit_with_slack(
    data: &BTreeMap<u64, Rational>,
    monomials: &[Monomial],
    train_range: RangeInclusive<u64>,
    test_range: RangeInclusive<u64>,
    slack: usize,
) -> Result<FitReport> {
    let train: Vec<u64> = train_range.clone().collect();
    let test: Vec<u64> = test_range.clone().collect();
    if train.len() < monomials.len() + slack {
        return Err(Error::InsufficientData(format!(
            "{} training points for {} unknowns (+{} slack)",
            train.len(),
            monomials.len(),
            slack
        )));
    }
    if let Some(n) = train.iter().chain(&test).find(|n| !data.contains_key(n)) {
        return Err(Error::InsufficientData(format!("no data at n = {n}")));
    }
    if train.contains(&0) || test.contains(&0) {
        return Err(Error::InvalidArgument(
            "fitting points start at n = 1".into(),
        ));
    }

    let report = |expr, residuals, status| FitReport {
        expr,
        train_range: train_range.clone(),
        test_range: test_range.clone(),
        residuals,
        status,
    };

    let cols = monomials.len();
    if cols == 0 {
        let residuals: Vec<Rational> = test.iter().map(|n| data[n].clone()).collect();
        let status = if train.iter().chain(&test).all(|n| data[n].is_zero()) {
            FitStatus::Verified
        } else {
            FitStatus::Refuted
        };
        return Ok(report(HarmonicExpr::zero(), residuals, status));
    }

    let max_order = monomials.iter().map(Monomial::max_order).max().unwrap_or(0);
    let max_n = train.iter().chain(&test).copied().max().unwrap_or(1);
    let mut crt = modular::Crt::new(cols);
    let mut previous: Option<Vec<Rational>> = None;
    let (mut inconsistent, mut deficient) = (0u32, 0u32);

    for &p in modular::primes() {
        let Some(rhs) = train
            .iter()
            .map(|n| modular::rational_mod(&data[n], p))
            .collect::<Option<Vec<u64>>>()
        else {
            continue;
        };
        let values = MonomialValues::new(monomials, max_order, max_n, p);
        let rows: Vec<u64> = train.iter().flat_map(|&n| values.row(n)).collect();
        let test_rows: Vec<u64> = test.iter().flat_map(|&n| values.row(n)).collect();

        let solution = match modular::solve(rows, rhs, cols, &test_rows, p) {
            modular::ModSolution::Inconsistent => {
                inconsistent += 1;
                if inconsistent >= NEGATIVE_CONFIRMATIONS {
                    return Ok(report(HarmonicExpr::zero(), Vec::new(), FitStatus::Refuted));
                }
                continue;
            }
            modular::ModSolution::Deficient {
                affects_test: true, ..
            } => {
                deficient += 1;
                if deficient >= NEGATIVE_CONFIRMATIONS {
                    return Ok(report(
                        HarmonicExpr::zero(),
                        Vec::new(),
                        FitStatus::Underdetermined,
                    ));
                }
                continue;
            }
            modular::ModSolution::Unique(x)
            | modular::ModSolution::Deficient { particular: x, .. } => x,
        };
        crt.add(&solution, p);
        let Some(candidate) = crt.reconstruct() else {
            previous = None;
            continue;
        };
        if previous.as_ref() != Some(&candidate) {
            previous = Some(candidate);
            continue;
        }

        let expr = HarmonicExpr::from_terms(monomials.iter().cloned().zip(candidate));
        let points: Vec<u64> = train.iter().chain(&test).copied().collect();
        let values = expr.evaluate_many(&points);
        let residuals: Vec<Rational> = points
            .iter()
            .zip(values)
            .map(|(n, v)| Rational::from(&data[n] - &v))
            .collect();
        let (train_res, test_res) = residuals.split_at(train.len());
        if train_res.iter().any(|r| !r.is_zero()) {
            // reconstruction stabilised early; keep lifting
            continue;
        }
        let status = if test_res.iter().all(|r| r.is_zero()) {
            FitStatus::Verified
        } else {
            FitStatus::Refuted
        };
        return Ok(report(expr, test_res.to_vec(), status));
    }
    Ok(report(HarmonicExpr::zero(), Vec::new(), FitStatus::Refuted))
}

// Monomial values modulo p at n = 1..=max_n.
struct MonomialValues<'a> {
    monomials: &'a [Monomial],
    harmonics: Vec<Vec<u64>>,
    p: u64,
}

impl<'a> MonomialValues<'a> {
    fn new(monomials: &'a [Monomial], max_order: u32, max_n: u64, p: u64) -> Self {
        let mut harmonics = vec![vec![0u64; max_order as usize]];
        let mut current = vec![0u64; max_order as usize];
        for i in 1..=max_n {
            let inv = modular::inv_mod(i % p, p);
            let mut pw = 1u64;
            for h in current.iter_mut() {
                pw = pw * inv % p;
                *h = (*h + pw) % p;
            }
            harmonics.push(current.clone());
        }
        Self {
            monomials,
            harmonics,
            p,
        }
    }

    fn row(&self, n: u64) -> Vec<u64> {
        let p = self.p;
        let h = &self.harmonics[n as usize];
        self.monomials
            .iter()
            .map(|mono| {
                let mut v = modular::pow_mod(n, mono.n_power() as u64, p);
                for (m, b) in mono.h_powers() {
                    v = v * modular::pow_mod(h[m as usize - 1], b as u64, p) % p;
                }
                v
            })
            .collect()
    }
}

/// Size of the largest template tried for moment `r`.
pub fn template_size(r: u32) -> usize {
    template(r, r, r).len()
}

/// Largest `n` of moment data [`guess_moment`] needs by default: enough
/// training points for the largest template plus at least
/// [`MIN_TEST_POINTS`] test points, and never below [`MIN_DATA_N`].
pub fn required_data(r: u32) -> u64 {
    let train = (template_size(r) + DEFAULT_SLACK) as u64;
    (train + MIN_TEST_POINTS).max(MIN_DATA_N)
}

/// Guesses a closed form for the mean (`r = 1`) or the `r`-th central
/// moment, escalating the template degree `d = 1, 2, ..., r` until a fit
/// verifies on every held-out point up to `n_max_data`.
pub fn guess_moment(r: u32, n_max_data: Option<u64>) -> Result<FitReport> {
    let n_max = n_max_data.unwrap_or_else(|| required_data(r));
    let data = moment_data(r, n_max)?;
    guess_from_data(r, &data, n_max)
}

/// [`guess_moment`] on caller-supplied data covering `1..=n_max`.
pub fn guess_from_data(r: u32, data: &BTreeMap<u64, Rational>, n_max: u64) -> Result<FitReport> {
    if r == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    let mut size = 0;
    for d in 1..=r {
        let monomials = template(r, d, d);
        size = monomials.len();
        let train_end = (size + DEFAULT_SLACK) as u64;
        if train_end >= n_max {
            return Err(Error::InsufficientData(format!(
                "degree-{d} template for r = {r} needs more than {train_end} points; data ends at {n_max}"
            )));
        }
        let report = fit(data, &monomials, 1..=train_end, train_end + 1..=n_max)?;
        if report.is_verified() {
            return Ok(report);
        }
    }
    Err(Error::GuessExhausted { r, degree: r, size })
}

/// [`guess_moment`] with default data range, memoized process-wide.
pub fn cached_guess(r: u32) -> Result<FitReport> {
    static CACHE: OnceLock<Mutex<BTreeMap<u32, FitReport>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(rep) = cache.lock().expect("guess cache poisoned").get(&r) {
        return Ok(rep.clone());
    }
    let rep = guess_moment(r, None)?;
    cache
        .lock()
        .expect("guess cache poisoned")
        .insert(r, rep.clone());
    Ok(rep)
}
