//! Exact probability generating function of the comparison count `X_n`.
//!
//! `g_n(t) = t^{n-1}/n · Σ_{k=1}^{n} g_{k-1}(t) g_{n-k}(t)`, with
//! `g_0 = g_1 = 1`. Internally every `g_n` is scaled by `n!`, which turns
//! the recurrence into one over non-negative integers:
//!
//! `G_n(t) = t^{n-1} Σ_{k=1}^{n} C(n-1, k-1) G_{k-1}(t) G_{n-k}(t)`
//!
//! where `G_n = n!·g_n` counts permutations by comparisons. Products are
//! taken by Kronecker substitution: each polynomial is packed into one big
//! integer with fixed-width slots and multiplied by GMP.
//!
//! Coefficient sizes grow like `n!`; the default ceiling of 130 keeps the
//! whole table around 100 MB. Larger tables work but memory grows roughly
//! with `n^3 log n`.

use std::sync::{Arc, Mutex, OnceLock};

use rug::integer::Order;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::numeric::RationalRepr;

/// Default largest `n` for which the exact table is built.
pub const DEFAULT_MAX_N: u64 = 130;

/// Exact distribution of `X_n` as a dense table of permutation counts over
/// the support interval `[min_k, max_k]`; `Pr(X_n = k) = count / n!`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistPoly {
    n: u64,
    min_k: u64,
    counts: Vec<Integer>,
    total: Integer,
}

impl DistPoly {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn min_k(&self) -> u64 {
        self.min_k
    }

    pub fn max_k(&self) -> u64 {
        self.min_k + self.counts.len() as u64 - 1
    }

    /// Unnormalized weights, indexed from `min_k`.
    pub fn counts(&self) -> &[Integer] {
        &self.counts
    }

    /// Common denominator of all probabilities (`n!`).
    pub fn total(&self) -> &Integer {
        &self.total
    }

    pub fn probability(&self, k: u64) -> Rational {
        if k < self.min_k || k > self.max_k() {
            return Rational::new();
        }
        Rational::from((
            self.counts[(k - self.min_k) as usize].clone(),
            self.total.clone(),
        ))
    }

    /// `(k, Pr(X_n = k))` over the support, zero entries included.
    pub fn coefficients(&self) -> impl Iterator<Item = (u64, Rational)> + '_ {
        self.counts.iter().enumerate().map(move |(i, c)| {
            (
                self.min_k + i as u64,
                Rational::from((c.clone(), self.total.clone())),
            )
        })
    }

    pub fn to_table(&self) -> CoeffTable {
        CoeffTable {
            min_k: self.min_k,
            coeffs: self.coefficients().map(|(_, p)| p).collect(),
        }
    }

    /// Exact `Σ_k k^r Pr(X_n = k)`.
    pub fn raw_moment(&self, r: u32) -> Rational {
        let mut acc = Integer::new();
        for (i, c) in self.counts.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let k = Integer::from(self.min_k + i as u64);
            acc += k.pow(r) * c;
        }
        Rational::from((acc, self.total.clone()))
    }

    /// Exact `g_n(t)`.
    pub fn eval(&self, t: &Rational) -> Rational {
        // Horner on numerators: q^D Σ c_i (p/q)^i with D = len - 1.
        let (p, q) = (t.numer(), t.denom());
        let mut acc = Integer::new();
        let mut qpow = Integer::from(1);
        for c in self.counts.iter().rev() {
            acc = acc * p + Integer::from(c * &qpow);
            qpow *= q;
        }
        let d = self.counts.len() as u32 - 1;
        let mut value = Rational::from((acc, Integer::from(q.pow(d))));
        value *= t.clone().pow(self.min_k as u32);
        value / &self.total
    }

    /// CSV rows `k,num,den` in increasing `k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, p) in self.coefficients() {
            out.push_str(&format!("{},{},{}\n", k, p.numer(), p.denom()));
        }
        out
    }

    /// `{"n": n, "coeffs": [[k, num, den], ...]}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wire {
            n: u64,
            coeffs: Vec<(u64, String, String)>,
        }
        let wire = Wire {
            n: self.n,
            coeffs: self
                .coefficients()
                .map(|(k, p)| (k, p.numer().to_string(), p.denom().to_string()))
                .collect(),
        };
        serde_json::to_string(&wire).expect("serializable")
    }
}

/// A finite polynomial with exact rational coefficients, indexed from
/// `min_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffTable {
    pub min_k: u64,
    pub coeffs: Vec<Rational>,
}

impl CoeffTable {
    pub fn monomial(k: u64, c: Rational) -> Self {
        Self {
            min_k: k,
            coeffs: vec![c],
        }
    }

    pub fn get(&self, k: u64) -> Rational {
        if k < self.min_k {
            return Rational::new();
        }
        self.coeffs
            .get((k - self.min_k) as usize)
            .cloned()
            .unwrap_or_default()
    }

    pub fn sum(&self) -> Rational {
        self.coeffs.iter().sum()
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc * t.clone().pow(self.min_k as u32)
    }

    pub fn to_repr(&self) -> Vec<(u64, RationalRepr)> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (self.min_k + i as u64, RationalRepr::from(c)))
            .collect()
    }
}

/// Exact polynomial product.
pub fn convolve(a: &CoeffTable, b: &CoeffTable) -> CoeffTable {
    if a.coeffs.is_empty() || b.coeffs.is_empty() {
        return CoeffTable {
            min_k: 0,
            coeffs: Vec::new(),
        };
    }
    let mut coeffs = vec![Rational::new(); a.coeffs.len() + b.coeffs.len() - 1];
    for (i, x) in a.coeffs.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.coeffs.iter().enumerate() {
            coeffs[i + j] += Rational::from(x * y);
        }
    }
    CoeffTable {
        min_k: a.min_k + b.min_k,
        coeffs,
    }
}

/// Exact `g(t)` for a distribution table.
pub fn eval(g: &DistPoly, t: &Rational) -> Rational {
    g.eval(t)
}

/// Bottom-up table `g_0..=g_n`.
#[derive(Clone, Debug, Default)]
pub struct PgfTable {
    polys: Vec<Arc<DistPoly>>,
}

impl PgfTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn get(&self, n: u64) -> Option<&Arc<DistPoly>> {
        self.polys.get(n as usize)
    }

    /// Extends the table through `n`, folding the symmetric terms of the
    /// recurrence.
    pub fn extend_to(&mut self, n: u64) {
        self.extend_to_with(n, true);
    }

    /// Like [`extend_to`](Self::extend_to), optionally summing every term
    /// of the recurrence without folding.
    pub fn extend_to_with(&mut self, n: u64, fold: bool) {
        while (self.polys.len() as u64) <= n {
            let next = self.polys.len() as u64;
            let poly = if next <= 1 {
                DistPoly {
                    n: next,
                    min_k: 0,
                    counts: vec![Integer::from(1)],
                    total: Integer::from(1),
                }
            } else {
                next_pgf(&self.polys, next, fold)
            };
            self.polys.push(Arc::new(poly));
        }
    }
}

fn next_pgf(prev: &[Arc<DistPoly>], n: u64, fold: bool) -> DistPoly {
    let total = Integer::from(Integer::factorial(n as u32));
    // Every partial sum is bounded coefficientwise by G_n <= n!.
    let slot_limbs = (total.significant_bits() as usize + 1).div_ceil(64);
    let slot_bits = slot_limbs * 64;

    // (left index, right index, weight)
    let mut terms: Vec<(usize, usize, Integer)> = Vec::new();
    let last = if fold { n.div_ceil(2) } else { n };
    for k in 1..=last {
        let (a, b) = ((k - 1) as usize, (n - k) as usize);
        let mut w = Integer::from(Integer::binomial_u((n - 1) as u32, (k - 1) as u32));
        if fold && a != b {
            w *= 2;
        }
        terms.push((a, b, w));
    }

    let base = terms
        .iter()
        .map(|&(a, b, _)| prev[a].min_k + prev[b].min_k)
        .min()
        .expect("n >= 2 has terms");
    let top = terms
        .iter()
        .map(|&(a, b, _)| prev[a].max_k() + prev[b].max_k())
        .max()
        .expect("n >= 2 has terms");

    let mut packed: Vec<Option<Integer>> = vec![None; n as usize];
    let mut acc = Integer::new();
    for (a, b, w) in terms {
        for idx in [a, b] {
            if packed[idx].is_none() {
                packed[idx] = Some(pack(&prev[idx].counts, slot_limbs));
            }
        }
        let pa = packed[a].as_ref().expect("packed");
        let mut product = if a == b {
            Integer::from(pa.square_ref())
        } else {
            Integer::from(pa * packed[b].as_ref().expect("packed"))
        };
        product *= w;
        let shift = (prev[a].min_k + prev[b].min_k - base) as usize * slot_bits;
        acc += product << shift as u32;
    }

    let len = (top - base + 1) as usize;
    let mut counts = unpack(&acc, slot_limbs, len);
    let mut min_k = base + n - 1;
    let lead = counts.iter().take_while(|c| c.is_zero()).count();
    counts.drain(..lead);
    min_k += lead as u64;
    while counts.last().is_some_and(|c| c.is_zero()) {
        counts.pop();
    }
    debug_assert_eq!(counts.iter().sum::<Integer>(), total);
    DistPoly {
        n,
        min_k,
        counts,
        total,
    }
}

fn pack(counts: &[Integer], slot_limbs: usize) -> Integer {
    let mut limbs = vec![0u64; counts.len() * slot_limbs];
    for (i, c) in counts.iter().enumerate() {
        let digits = c.to_digits::<u64>(Order::Lsf);
        debug_assert!(digits.len() <= slot_limbs);
        limbs[i * slot_limbs..i * slot_limbs + digits.len()].copy_from_slice(&digits);
    }
    Integer::from_digits(&limbs, Order::Lsf)
}

fn unpack(x: &Integer, slot_limbs: usize, len: usize) -> Vec<Integer> {
    let limbs = x.to_digits::<u64>(Order::Lsf);
    (0..len)
        .map(|i| {
            let start = (i * slot_limbs).min(limbs.len());
            let end = ((i + 1) * slot_limbs).min(limbs.len());
            Integer::from_digits(&limbs[start..end], Order::Lsf)
        })
        .collect()
}

fn shared_table() -> &'static Mutex<PgfTable> {
    static TABLE: OnceLock<Mutex<PgfTable>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(PgfTable::new()))
}

/// Exact `g_n`, memoized process-wide; computing it also computes every
/// smaller `n`.
pub fn pgf(n: u64) -> Arc<DistPoly> {
    let mut table = shared_table().lock().expect("pgf table poisoned");
    table.extend_to(n);
    Arc::clone(table.get(n).expect("extended"))
}

/// `g_0..=g_n_max` from the shared table.
pub fn pgf_range(n_max: u64) -> Vec<Arc<DistPoly>> {
    let mut table = shared_table().lock().expect("pgf table poisoned");
    table.extend_to(n_max);
    table.polys[..=n_max as usize].to_vec()
}
