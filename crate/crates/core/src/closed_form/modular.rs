//! Linear algebra over `Z/pZ` for word-sized primes, Chinese remaindering
//! and rational reconstruction. Used to solve the exact fitting systems
//! without the coefficient swell of elimination over the rationals.

use std::sync::OnceLock;

use rug::integer::IsPrime;
use rug::{Integer, Rational};

/// Primes below `2^31`, largest first, so products fit in a `u64`.
pub(crate) fn primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut out = Vec::with_capacity(512);
        let mut c = (1u64 << 31) - 1;
        while out.len() < 512 {
            if Integer::from(c).is_probably_prime(30) != IsPrime::No {
                out.push(c);
            }
            c -= 2;
        }
        out
    })
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

/// `q mod p`, or `None` when `p` divides the denominator.
pub(crate) fn rational_mod(q: &Rational, p: u64) -> Option<u64> {
    let den = q.denom().mod_u(p as u32) as u64;
    if den == 0 {
        return None;
    }
    let num = q.numer().mod_u(p as u32) as u64;
    Some(num * inv_mod(den, p) % p)
}

#[derive(Debug)]
pub(crate) enum ModSolution {
    /// Full column rank and consistent.
    Unique(Vec<u64>),
    Inconsistent,
    /// Consistent but with free columns. `particular` sets every free
    /// variable to zero; `affects_test` tells whether some null vector
    /// changes a test-row value.
    Deficient {
        particular: Vec<u64>,
        affects_test: bool,
    },
}

/// Solves `rows · x = rhs (mod p)`, where `rows` is `m × cols` flattened.
pub(crate) fn solve(
    mut rows: Vec<u64>,
    mut rhs: Vec<u64>,
    cols: usize,
    test_rows: &[u64],
    p: u64,
) -> ModSolution {
    let m = rhs.len();
    debug_assert_eq!(rows.len(), m * cols);
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    for c in 0..cols {
        let Some(pr) = (rank..m).find(|&r| rows[r * cols + c] != 0) else {
            continue;
        };
        if pr != rank {
            for j in c..cols {
                rows.swap(pr * cols + j, rank * cols + j);
            }
            rhs.swap(pr, rank);
        }
        let inv = inv_mod(rows[rank * cols + c], p);
        for j in c..cols {
            let v = &mut rows[rank * cols + j];
            *v = *v * inv % p;
        }
        rhs[rank] = rhs[rank] * inv % p;
        let (head, tail) = rows.split_at_mut((rank + 1) * cols);
        let pivot_row = &head[rank * cols..];
        for (i, row) in tail.chunks_exact_mut(cols).enumerate() {
            let f = row[c];
            if f == 0 {
                continue;
            }
            let nf = p - f;
            for j in c..cols {
                row[j] = (row[j] + nf * pivot_row[j]) % p;
            }
            let r = rank + 1 + i;
            rhs[r] = (rhs[r] + nf * rhs[rank]) % p;
        }
        pivots.push(c);
        rank += 1;
        if rank == m {
            break;
        }
    }
    if rhs[rank..].iter().any(|&v| v != 0) {
        return ModSolution::Inconsistent;
    }

    let back_substitute = |fixed: &[(usize, u64)], rhs: &[u64]| -> Vec<u64> {
        let mut x = vec![0u64; cols];
        for &(j, v) in fixed {
            x[j] = v;
        }
        for (r, &c) in pivots.iter().enumerate().rev() {
            let row = &rows[r * cols..(r + 1) * cols];
            let mut acc = rhs[r];
            for j in c + 1..cols {
                if row[j] != 0 && x[j] != 0 {
                    acc = (acc + (p - row[j]) * x[j]) % p;
                }
            }
            x[c] = acc;
        }
        x
    };

    let particular = back_substitute(&[], &rhs);
    if rank == cols {
        return ModSolution::Unique(particular);
    }
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; cols];
        for &c in &pivots {
            v[c] = true;
        }
        v
    };
    let zeros = vec![0u64; rank];
    let mut affects_test = false;
    for f in (0..cols).filter(|&c| !is_pivot[c]) {
        let null = back_substitute(&[(f, 1)], &zeros);
        for t in test_rows.chunks_exact(cols) {
            let dot = t
                .iter()
                .zip(&null)
                .fold(0u64, |acc, (a, b)| (acc + a * b) % p);
            if dot != 0 {
                affects_test = true;
                break;
            }
        }
        if affects_test {
            break;
        }
    }
    ModSolution::Deficient {
        particular,
        affects_test,
    }
}

/// Running Chinese-remainder reconstruction of an integer vector.
#[derive(Clone, Debug)]
pub(crate) struct Crt {
    pub modulus: Integer,
    pub residues: Vec<Integer>,
}

impl Crt {
    pub fn new(len: usize) -> Self {
        Self {
            modulus: Integer::from(1),
            residues: vec![Integer::new(); len],
        }
    }

    pub fn add(&mut self, values: &[u64], p: u64) {
        let m_mod_p = self.modulus.mod_u(p as u32) as u64;
        let m_inv = inv_mod(m_mod_p, p);
        for (x, &v) in self.residues.iter_mut().zip(values) {
            let x_mod_p = x.mod_u(p as u32) as u64;
            let t = (v + p - x_mod_p) % p * m_inv % p;
            *x += Integer::from(&self.modulus * t);
        }
        self.modulus *= p;
    }

    /// Rational reconstruction of every coordinate.
    pub fn reconstruct(&self) -> Option<Vec<Rational>> {
        let bound = Integer::from(&self.modulus >> 1u32).sqrt();
        self.residues
            .iter()
            .map(|a| rational_reconstruct(a, &self.modulus, &bound))
            .collect()
    }
}

/// Finds `num/den ≡ a (mod m)` with `|num|, den <= bound`.
pub(crate) fn rational_reconstruct(a: &Integer, m: &Integer, bound: &Integer) -> Option<Rational> {
    let (mut r0, mut r1) = (m.clone(), a.clone());
    let (mut t0, mut t1) = (Integer::new(), Integer::from(1));
    while r1 > *bound {
        let (q, r) = r0.div_rem_floor(r1.clone());
        r0 = r1;
        r1 = r;
        let t = t0 - Integer::from(&q * &t1);
        t0 = t1;
        t1 = t;
    }
    if t1.is_zero() || Integer::from(t1.abs_ref()) > *bound {
        return None;
    }
    if Integer::from(r1.gcd_ref(&t1)) != 1 {
        return None;
    }
    Some(Rational::from((r1, t1)))
}
