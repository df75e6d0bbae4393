//! Raw, central and factorial moments of `X_n`.
//!
//! Two routes are provided. The exact route sums `k^r Pr(X_n = k)` over the
//! full distribution from [`crate::pgf`]. The truncated route carries only
//! the first `M + 1` coefficients of `g_n(1 + w)` through the recurrence
//!
//! `g_n(1+w) = (1+w)^{n-1}/n · Σ_{k=1}^{n} g_{k-1}(1+w) g_{n-k}(1+w)`,
//!
//! which reaches much larger `n`. As in the exact route the series are
//! scaled by `n!` so the recurrence runs over integers. Coefficient `r` is
//! `f_r(n)/r!`, where `f_r` is the `r`-th factorial moment.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use rug::{Integer, Rational};

use crate::pgf::pgf;
use crate::{Error, Result};

/// Default truncation order for factorial-moment series.
pub const DEFAULT_ORDER: u32 = 10;

/// First `order + 1` coefficients of `g_n(1 + w)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    pub n: u64,
    pub order: u32,
    /// Entry `r` is `f_r(n) / r!`.
    pub coeffs: Vec<Rational>,
}

impl TruncatedSeries {
    /// Factorial moment `f_r(n) = E[X(X-1)...(X-r+1)]`.
    pub fn factorial_moment(&self, r: u32) -> Result<Rational> {
        if r > self.order {
            return Err(Error::TruncationOrder {
                r,
                order: self.order,
            });
        }
        Ok(self.coeffs[r as usize].clone() * Integer::from(Integer::factorial(r)))
    }

    /// Mean `c_n`.
    pub fn mean(&self) -> Rational {
        self.coeffs[1].clone()
    }
}

/// Table of one moment order over a range of `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentTable {
    pub r: u32,
    pub central: bool,
    pub values: BTreeMap<u64, Rational>,
}

impl MomentTable {
    /// CSV rows `n,r,num,den`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (n, v) in &self.values {
            out.push_str(&format!("{},{},{},{}\n", n, self.r, v.numer(), v.denom()));
        }
        out
    }
}

/// Exact `E[X_n^r]` from the full distribution.
pub fn raw_moment(n: u64, r: u32) -> Rational {
    pgf(n).raw_moment(r)
}

/// Exact `m_r(n) = E[(X_n - c_n)^r]` from the full distribution.
pub fn central_moment(n: u64, r: u32) -> Rational {
    let g = pgf(n);
    let raw: Vec<Rational> = (0..=r).map(|j| g.raw_moment(j)).collect();
    central_from_raw(&raw)
}

/// Central moment of order `raw.len() - 1` from raw moments `E[X^0..=X^r]`,
/// by binomial expansion about `E[X]`.
pub fn central_from_raw(raw: &[Rational]) -> Rational {
    let r = raw.len() as u32 - 1;
    if r == 0 {
        return raw[0].clone();
    }
    let neg_mean = Rational::from(-&raw[1]);
    let mut acc = Rational::new();
    let mut mean_pow = Rational::from(1);
    for i in (0..=r).rev() {
        let binom = Integer::from(Integer::binomial_u(r, i));
        acc += Rational::from(&raw[i as usize] * &mean_pow) * binom;
        mean_pow *= &neg_mean;
    }
    acc
}

/// Stirling numbers of the second kind `S(r, j)`, `0 <= j <= r`.
pub fn stirling2_row(r: u32) -> Vec<Integer> {
    static CACHE: OnceLock<Mutex<Vec<Vec<Integer>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![vec![Integer::from(1)]]));
    let mut rows = cache.lock().expect("stirling cache poisoned");
    while rows.len() <= r as usize {
        let prev = rows.last().expect("seeded");
        let m = prev.len();
        let mut row = vec![Integer::new(); m + 1];
        for j in 1..=m {
            // S(m, j) = j S(m-1, j) + S(m-1, j-1)
            let keep = if j < m {
                Integer::from(&prev[j] * j as u32)
            } else {
                Integer::new()
            };
            row[j] = keep + &prev[j - 1];
        }
        rows.push(row);
    }
    rows[r as usize].clone()
}

/// `E[X_n^r]` from a truncated factorial series: `Σ_j S(r, j) f_j(n)`.
pub fn moments_from_factorial(series: &TruncatedSeries, r: u32) -> Result<Rational> {
    if r > series.order {
        return Err(Error::TruncationOrder {
            r,
            order: series.order,
        });
    }
    let row = stirling2_row(r);
    let mut acc = Rational::new();
    for (j, s) in row.iter().enumerate() {
        if s.is_zero() {
            continue;
        }
        acc += series.factorial_moment(j as u32)? * s;
    }
    Ok(acc)
}

/// `m_r(n)` from a truncated factorial series.
pub fn central_from_factorial(series: &TruncatedSeries, r: u32) -> Result<Rational> {
    let raw = (0..=r)
        .map(|j| moments_from_factorial(series, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(central_from_raw(&raw))
}

// n!-scaled truncated series, one cache per truncation order.
fn series_cache() -> &'static Mutex<HashMap<u32, Vec<Vec<Integer>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Vec<Vec<Integer>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn next_scaled_series(prev: &[Vec<Integer>], n: u64, order: u32) -> Vec<Integer> {
    let len = order as usize + 1;
    let mut sum = vec![Integer::new(); len];
    let mut prod = vec![Integer::new(); len];
    for k in 1..=n.div_ceil(2) {
        let (a, b) = (&prev[(k - 1) as usize], &prev[(n - k) as usize]);
        for p in prod.iter_mut() {
            *p = Integer::new();
        }
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b[..len - i].iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        let mut w = Integer::from(Integer::binomial_u((n - 1) as u32, (k - 1) as u32));
        if k - 1 != n - k {
            w *= 2;
        }
        for (s, p) in sum.iter_mut().zip(&prod) {
            *s += p * &w;
        }
    }
    // times (1+w)^{n-1}
    let binoms: Vec<Integer> = (0..len as u32)
        .map(|i| Integer::from(Integer::binomial_u((n - 1) as u32, i)))
        .collect();
    (0..len)
        .map(|r| {
            let mut acc = Integer::new();
            for i in 0..=r {
                acc += &binoms[i] * &sum[r - i];
            }
            acc
        })
        .collect()
}

fn scaled_series(n_max: u64, order: u32) -> Vec<Vec<Integer>> {
    let mut cache = series_cache().lock().expect("series cache poisoned");
    let table = cache.entry(order).or_insert_with(|| {
        let mut one = vec![Integer::new(); order as usize + 1];
        one[0] = Integer::from(1);
        vec![one.clone(), one]
    });
    while (table.len() as u64) <= n_max {
        let n = table.len() as u64;
        let next = next_scaled_series(table, n, order);
        table.push(next);
    }
    table[..=n_max as usize].to_vec()
}

/// Truncated series of `g_n(1 + w)` for `n = 0..=n_max`, to order `order`.
pub fn factorial_series(n_max: u64, order: u32) -> Result<Vec<TruncatedSeries>> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "truncation order must be at least 1".into(),
        ));
    }
    let mut factorial = Integer::from(1);
    Ok(scaled_series(n_max, order)
        .into_iter()
        .enumerate()
        .map(|(n, coeffs)| {
            if n > 0 {
                factorial *= n as u64;
            }
            TruncatedSeries {
                n: n as u64,
                order,
                coeffs: coeffs
                    .into_iter()
                    .map(|c| Rational::from((c, factorial.clone())))
                    .collect(),
            }
        })
        .collect())
}

/// Exact moment data for closed-form fitting over `1..=n_max`: the mean for
/// `r = 1`, the central moment `m_r(n)` for `r >= 2`. Computed on the
/// truncated route.
pub fn moment_data(r: u32, n_max: u64) -> Result<BTreeMap<u64, Rational>> {
    if r == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    let series = factorial_series(n_max, r.max(2))?;
    series
        .iter()
        .skip(1)
        .map(|s| {
            let v = if r == 1 {
                s.mean()
            } else {
                central_from_factorial(s, r)?
            };
            Ok((s.n, v))
        })
        .collect()
}

/// Central (or, for `central = false`, raw) moment table over `1..=n_max`
/// on the truncated route.
pub fn moment_table(r: u32, n_max: u64, central: bool) -> Result<MomentTable> {
    let series = factorial_series(n_max, r.max(1))?;
    let mut values = BTreeMap::new();
    for s in series.iter().skip(1) {
        let v = if central {
            central_from_factorial(s, r)?
        } else {
            moments_from_factorial(s, r)?
        };
        values.insert(s.n, v);
    }
    Ok(MomentTable { r, central, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn raw_moment_examples() {
        assert_eq!(raw_moment(3, 1), q("8/3"));
        assert_eq!(raw_moment(4, 1), q("29/6"));
        for n in 0..8 {
            assert_eq!(raw_moment(n, 0), 1);
        }
        assert_eq!(raw_moment(3, 2), q("22/3"));
    }

    #[test]
    fn central_moment_examples() {
        assert_eq!(central_moment(2, 2), 0);
        assert_eq!(central_moment(3, 2), q("2/9"));
        assert_eq!(central_moment(3, 3), q("-2/27"));
        for n in 0..30 {
            assert_eq!(central_moment(n, 1), 0);
        }
    }

    #[test]
    fn series_examples() {
        let s = factorial_series(100, 2).unwrap();
        assert_eq!(s[2].coeffs, vec![q("1"), q("1"), q("0")]);
        assert_eq!(s[3].coeffs, vec![q("1"), q("8/3"), q("7/3")]);
        // c_100 = 2·101·H_100 − 400
        let h = crate::numeric::harmonic(1, 100).unwrap();
        assert_eq!(s[100].coeffs[1], h * 202u32 - 400u32);
        for t in &s {
            assert_eq!(t.coeffs[0], 1);
            assert!(t.coeffs.iter().all(|c| *c >= 0));
        }
    }

    #[test]
    fn factorial_to_raw_examples() {
        let s = &factorial_series(3, 4).unwrap()[3];
        assert_eq!(moments_from_factorial(s, 1).unwrap(), q("8/3"));
        assert_eq!(moments_from_factorial(s, 2).unwrap(), q("22/3"));
        assert_eq!(central_from_factorial(s, 2).unwrap(), q("2/9"));
        assert!(matches!(
            moments_from_factorial(s, 5),
            Err(Error::TruncationOrder { r: 5, order: 4 })
        ));
    }

    #[test]
    fn order_zero_rejected() {
        assert!(factorial_series(5, 0).is_err());
    }

    #[test]
    fn stirling_rows() {
        let row = stirling2_row(5);
        let expect = [0, 1, 15, 25, 10, 1];
        assert_eq!(row.len(), expect.len());
        for (a, b) in row.iter().zip(expect) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn truncated_series_match_exact_expansion() {
        // coefficients of g_n(1+w) from the full pgf by binomial expansion
        let series = factorial_series(25, 6).unwrap();
        for s in &series {
            let g = pgf(s.n);
            for r in 0..=6u32 {
                let mut acc = Rational::new();
                for (k, p) in g.coefficients() {
                    if k >= r as u64 {
                        acc += p * Integer::from(Integer::binomial_u(k as u32, r));
                    }
                }
                assert_eq!(acc, s.coeffs[r as usize], "n = {}, r = {r}", s.n);
            }
        }
    }

    #[test]
    fn moment_table_csv() {
        let t = moment_table(2, 3, true).unwrap();
        assert_eq!(t.to_csv(), "1,2,0,1\n2,2,0,1\n3,2,2,9\n");
    }

    #[test]
    fn even_central_moments_non_negative() {
        let series = factorial_series(80, 8).unwrap();
        for s in &series {
            for r in [2, 4, 6, 8] {
                assert!(central_from_factorial(s, r).unwrap() >= 0);
            }
        }
    }
}
