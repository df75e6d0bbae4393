use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::numeric::{harmonic_asymptotic_with, Constants, HarmonicTable, RationalRepr};
use crate::{Error, Result};

/// `n^a · Π_m H_m(n)^{b_m}`.
///
/// Ordered lexicographically on `(a, b_1, b_2, ...)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    n_power: u32,
    // b_m at index m - 1, no trailing zeros
    h_powers: Vec<u32>,
}

impl Monomial {
    /// `n^n_power · Π H_m^b` for the listed `(m, b)` pairs (`m >= 1`).
    pub fn new(n_power: u32, h_powers: &[(u32, u32)]) -> Self {
        let mut powers = Vec::new();
        for &(m, b) in h_powers {
            assert!(m >= 1, "harmonic orders start at 1");
            let idx = m as usize - 1;
            if powers.len() <= idx {
                powers.resize(idx + 1, 0);
            }
            powers[idx] += b;
        }
        Self::from_parts(n_power, powers)
    }

    fn from_parts(n_power: u32, mut h_powers: Vec<u32>) -> Self {
        while h_powers.last() == Some(&0) {
            h_powers.pop();
        }
        Self { n_power, h_powers }
    }

    pub fn one() -> Self {
        Self::from_parts(0, Vec::new())
    }

    pub fn n_power(&self) -> u32 {
        self.n_power
    }

    /// Exponent of `H_m`.
    pub fn h_power(&self, m: u32) -> u32 {
        self.h_powers.get(m as usize - 1).copied().unwrap_or(0)
    }

    /// Nonzero `(m, b_m)` pairs in increasing `m`.
    pub fn h_powers(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.h_powers
            .iter()
            .enumerate()
            .filter(|(_, b)| **b > 0)
            .map(|(i, b)| (i as u32 + 1, *b))
    }

    /// Weighted harmonic degree `Σ m·b_m`.
    pub fn weight(&self) -> u32 {
        self.h_powers().map(|(m, b)| m * b).sum()
    }

    /// Largest harmonic order present, 0 if none.
    pub fn max_order(&self) -> u32 {
        self.h_powers.len() as u32
    }

    fn harmonic_part(&self) -> &[u32] {
        &self.h_powers
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let len = self.h_powers.len().max(other.h_powers.len());
        let powers = (0..len)
            .map(|i| {
                self.h_powers.get(i).copied().unwrap_or(0)
                    + other.h_powers.get(i).copied().unwrap_or(0)
            })
            .collect();
        Self::from_parts(self.n_power + other.n_power, powers)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut factors = Vec::new();
        match self.n_power {
            0 => {}
            1 => factors.push("n".to_string()),
            a => factors.push(format!("n^{a}")),
        }
        for (m, b) in self.h_powers() {
            if b == 1 {
                factors.push(format!("H{m}"));
            } else {
                factors.push(format!("H{m}^{b}"));
            }
        }
        if factors.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&factors.join("*"))
        }
    }
}

/// A rational linear combination of [`Monomial`]s; zero coefficients are
/// never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HarmonicExpr {
    terms: BTreeMap<Monomial, Rational>,
}

impl HarmonicExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<Rational>) -> Self {
        Self::term(Monomial::one(), c)
    }

    /// The variable `n`.
    pub fn n() -> Self {
        Self::term(Monomial::new(1, &[]), 1)
    }

    /// `H_m(n)`.
    pub fn h(m: u32) -> Self {
        Self::term(Monomial::new(0, &[(m, 1)]), 1)
    }

    pub fn term(mono: Monomial, c: impl Into<Rational>) -> Self {
        let mut e = Self::zero();
        e.add_term(mono, c.into());
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut e = Self::zero();
        for (m, c) in terms {
            e.add_term(m, c);
        }
        e
    }

    pub fn add_term(&mut self, mono: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono.clone()).or_default();
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&mono);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mono: &Monomial) -> Rational {
        self.terms.get(mono).cloned().unwrap_or_default()
    }

    /// Highest power of `n` present (0 for the zero expression).
    pub fn n_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::n_power).max().unwrap_or(0)
    }

    pub fn max_order(&self) -> u32 {
        self.terms
            .keys()
            .map(Monomial::max_order)
            .max()
            .unwrap_or(0)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(1);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(m, v)| (m.clone(), Rational::from(v * c))),
        )
    }

    /// Exact value at `n`.
    pub fn evaluate(&self, n: u64) -> Rational {
        self.evaluate_many(&[n]).pop().expect("one point")
    }

    /// Exact values at each of `points` (any order).
    ///
    /// Works over integers: with `L = lcm(1..n)` every `L^m H_m(n)` is an
    /// integer, so the whole sum is an integer over `L^W · D` where `W` is
    /// the largest weight and `D` the common coefficient denominator.
    pub fn evaluate_many(&self, points: &[u64]) -> Vec<Rational> {
        if self.is_zero() {
            return vec![Rational::new(); points.len()];
        }
        let max_order = self.max_order();
        let max_weight = self.terms.keys().map(Monomial::weight).max().unwrap_or(0);
        let den = self
            .terms
            .values()
            .fold(Integer::from(1), |acc, c| acc.lcm(c.denom()));
        // harmonic part -> integer coefficients of n^a
        let mut groups: BTreeMap<&[u32], Vec<(u32, Integer)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let scaled = c.numer() * Integer::from(&den / c.denom());
            groups
                .entry(m.harmonic_part())
                .or_default()
                .push((m.n_power(), scaled));
        }

        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by_key(|&i| points[i]);
        let mut out = vec![Rational::new(); points.len()];
        let mut table = HarmonicTable::new(max_order.max(1));
        let mut lcm = Integer::from(1);
        for idx in order {
            let n = points[idx];
            while table.n() < n {
                table.advance();
                lcm.lcm_u_mut(table.n() as u32);
            }
            let lcm_pows: Vec<Integer> = (0..=max_weight).map(|e| lcm.clone().pow(e)).collect();
            let scaled_h: Vec<Integer> = (1..=max_order)
                .map(|m| {
                    let h = table.get(m);
                    h.numer() * Integer::from(&lcm_pows[m as usize] / h.denom())
                })
                .collect();
            let n_int = Integer::from(n);
            let mut total = Integer::new();
            for (part, coeffs) in &groups {
                let mut poly = Integer::new();
                for (a, c) in coeffs {
                    poly += n_int.clone().pow(*a) * c;
                }
                if poly.is_zero() {
                    continue;
                }
                let mut weight = 0u32;
                for (i, b) in part.iter().enumerate() {
                    if *b > 0 {
                        poly *= scaled_h[i].clone().pow(*b);
                        weight += (i as u32 + 1) * b;
                    }
                }
                poly *= &lcm_pows[(max_weight - weight) as usize];
                total += poly;
            }
            out[idx] =
                Rational::from((total, Integer::from(&lcm_pows[max_weight as usize] * &den)));
        }
        out
    }

    /// Value at a real `n` with each `H_m(n)` replaced by its
    /// Euler–Maclaurin expansion (`em_terms` corrections).
    pub fn evaluate_asymptotic(&self, consts: &Constants, n: &Float, em_terms: u32) -> Float {
        let bits = consts.bits();
        let hs: Vec<Float> = (1..=self.max_order())
            .map(|m| harmonic_asymptotic_with(consts, m, n, em_terms))
            .collect();
        let mut total = Float::with_val(bits, 0);
        for (mono, c) in &self.terms {
            let mut v = Float::with_val(bits, c);
            if mono.n_power > 0 {
                v *= Float::with_val(bits, n.pow(mono.n_power));
            }
            for (m, b) in mono.h_powers() {
                v *= Float::with_val(bits, (&hs[m as usize - 1]).pow(b));
            }
            total += v;
        }
        total
    }

    /// Wire form: canonical-order list of `{"n_pow", "h_pows", "coeff"}`.
    pub fn to_wire(&self) -> Vec<TermWire> {
        self.terms
            .iter()
            .map(|(m, c)| TermWire {
                n_pow: m.n_power,
                h_pows: m.h_powers().map(|(m, b)| [m, b]).collect(),
                coeff: RationalRepr::from(c),
            })
            .collect()
    }

    pub fn from_wire(wire: &[TermWire]) -> Result<Self> {
        let mut e = Self::zero();
        for t in wire {
            if t.h_pows.iter().any(|[m, _]| *m == 0) {
                return Err(Error::InvalidArgument("harmonic order 0 in term".into()));
            }
            let pairs: Vec<(u32, u32)> = t.h_pows.iter().map(|[m, b]| (*m, *b)).collect();
            e.add_term(
                Monomial::new(t.n_pow, &pairs),
                Rational::try_from(&t.coeff)?,
            );
        }
        Ok(e)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// One term of a serialized [`HarmonicExpr`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TermWire {
    pub n_pow: u32,
    pub h_pows: Vec<[u32; 2]>,
    pub coeff: RationalRepr,
}

impl Serialize for HarmonicExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_wire().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HarmonicExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = Vec::<TermWire>::deserialize(d)?;
        Self::from_wire(&wire).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for HarmonicExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = *c < 0;
            let abs = Rational::from(c.abs_ref());
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if *m == Monomial::one() {
                write!(f, "{abs}")?;
            } else if abs == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

impl Add for &HarmonicExpr {
    type Output = HarmonicExpr;

    fn add(self, rhs: &HarmonicExpr) -> HarmonicExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Add for HarmonicExpr {
    type Output = HarmonicExpr;

    fn add(self, rhs: HarmonicExpr) -> HarmonicExpr {
        &self + &rhs
    }
}

impl Neg for &HarmonicExpr {
    type Output = HarmonicExpr;

    fn neg(self) -> HarmonicExpr {
        self.scale(&Rational::from(-1))
    }
}

impl Neg for HarmonicExpr {
    type Output = HarmonicExpr;

    fn neg(self) -> HarmonicExpr {
        -&self
    }
}

impl Sub for &HarmonicExpr {
    type Output = HarmonicExpr;

    fn sub(self, rhs: &HarmonicExpr) -> HarmonicExpr {
        self + &(-rhs)
    }
}

impl Sub for HarmonicExpr {
    type Output = HarmonicExpr;

    fn sub(self, rhs: HarmonicExpr) -> HarmonicExpr {
        &self - &rhs
    }
}

impl Mul for &HarmonicExpr {
    type Output = HarmonicExpr;

    fn mul(self, rhs: &HarmonicExpr) -> HarmonicExpr {
        let mut out = HarmonicExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), Rational::from(ca * cb));
            }
        }
        out
    }
}

impl Mul for HarmonicExpr {
    type Output = HarmonicExpr;

    fn mul(self, rhs: HarmonicExpr) -> HarmonicExpr {
        &self * &rhs
    }
}

impl Mul<i64> for HarmonicExpr {
    type Output = HarmonicExpr;

    fn mul(self, rhs: i64) -> HarmonicExpr {
        self.scale(&Rational::from(rhs))
    }
}

impl Add<i64> for HarmonicExpr {
    type Output = HarmonicExpr;

    fn add(self, rhs: i64) -> HarmonicExpr {
        self + HarmonicExpr::constant(rhs)
    }
}
