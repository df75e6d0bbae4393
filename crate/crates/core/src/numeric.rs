//! Exact rationals, high-precision reals, harmonic numbers and the
//! mathematical constants (γ, π, ζ(m)) used throughout the crate.
//!
//! Rationals are GMP `mpq` values via [`rug::Rational`], which are kept in
//! lowest terms with a positive denominator after every operation.
//! High-precision reals are MPFR floats; [`HighReal`] pairs one with the
//! number of decimal digits it is meant to carry.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest precision accepted by [`constants`].
pub const MIN_PRECISION_DIGITS: u32 = 50;

/// Default number of Euler–Maclaurin corrections in [`harmonic_asymptotic`].
pub const DEFAULT_EM_TERMS: u32 = 4;

const LITERAL_DIGITS: u32 = 100;

// Reference values, 100+ significant digits.
const GAMMA: &str = "0.5772156649015328606065120900824024310421593359399235988057672348848677267776646709369470632917467495";
const PI: &str = "3.1415926535897932384626433832795028841971693993751058209749445923078164062862089986280348253421170679";
const ZETA: [&str; 7] = [
    "1.6449340668482264364724151666460251892189499012067984377355582293700074704032008738336289006197587053",
    "1.2020569031595942853997381615114499907649862923404988817922715553418382057863130901864558736093352581",
    "1.0823232337111381915160036965411679027747509519187269076829762154441206161869688465569096359416999172",
    "1.0369277551433699263313654864570341680570809195019128119741926779038035897862814845600431065571333363",
    "1.0173430619844491397145179297909205279018174900328535618424086640043321829019578978827739779385351705",
    "1.0083492773819228268397975498497967595998635605652387064172831365716014783173557353460969689138513239",
    "1.0040773561979443393786852385086524652589607906498500203291102026525829525747488143952872303723719711",
];

/// Binary precision needed to carry `digits` significant decimal digits,
/// plus a small guard.
pub fn digits_to_bits(digits: u32) -> u32 {
    (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as u32 + 16
}

/// A high-precision real tagged with the number of decimal digits it is
/// meant to be accurate to.
#[derive(Clone, Debug, PartialEq)]
pub struct HighReal {
    value: Float,
    digits: u32,
}

impl HighReal {
    pub fn new(value: Float, digits: u32) -> Self {
        Self { value, digits }
    }

    pub fn value(&self) -> &Float {
        &self.value
    }

    pub fn into_value(self) -> Float {
        self.value
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// Plain positional decimal string with `digits` significant digits.
    pub fn to_decimal_string(&self) -> String {
        format_decimal(&self.value, self.digits)
    }
}

impl fmt::Display for HighReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

/// Wire form: `{"value": "<decimal>", "precision": <digits>}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct HighRealRepr {
    pub value: String,
    pub precision: u32,
}

impl Serialize for HighReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HighRealRepr {
            value: self.to_decimal_string(),
            precision: self.digits,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HighReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = HighRealRepr::deserialize(d)?;
        let parsed = Float::parse(&repr.value).map_err(serde::de::Error::custom)?;
        Ok(HighReal::new(
            Float::with_val(digits_to_bits(repr.precision), parsed),
            repr.precision,
        ))
    }
}

/// Formats `x` positionally (no exponent) with `digits` significant digits.
pub fn format_decimal(x: &Float, digits: u32) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let (neg, mantissa, exp) = x.to_sign_string_exp(10, Some(digits.max(1) as usize));
    let exp = exp.unwrap_or(0);
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    // value = 0.mantissa × 10^exp
    if exp <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp) as usize));
        out.push_str(&mantissa);
    } else {
        let e = exp as usize;
        if mantissa.len() <= e {
            out.push_str(&mantissa);
            out.extend(std::iter::repeat_n('0', e - mantissa.len()));
        } else {
            out.push_str(&mantissa[..e]);
            out.push('.');
            out.push_str(&mantissa[e..]);
        }
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    out
}

/// JSON form of an exact rational: `{"num": "<int>", "den": "<int>"}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RationalRepr {
    pub num: String,
    pub den: String,
}

impl From<&Rational> for RationalRepr {
    fn from(q: &Rational) -> Self {
        Self {
            num: q.numer().to_string(),
            den: q.denom().to_string(),
        }
    }
}

impl TryFrom<&RationalRepr> for Rational {
    type Error = Error;

    fn try_from(r: &RationalRepr) -> Result<Self> {
        let num: Integer = r
            .num
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad numerator {:?}", r.num)))?;
        let den: Integer = r
            .den
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad denominator {:?}", r.den)))?;
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(Rational::from((num, den)))
    }
}

/// `#[serde(with = "serde_rational")]` adapter for [`Rational`] fields.
pub mod serde_rational {
    use super::RationalRepr;
    use rug::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        RationalRepr::from(q).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let repr = RationalRepr::deserialize(d)?;
        Rational::try_from(&repr).map_err(serde::de::Error::custom)
    }
}

/// Exact generalized harmonic number `H_m(n) = Σ_{i=1}^{n} 1/i^m`.
pub fn harmonic(m: u32, n: u64) -> Result<Rational> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "harmonic order m must be >= 1".into(),
        ));
    }
    if n == 0 {
        return Ok(Rational::new());
    }
    let (p, q) = harmonic_split(m, 1, n + 1);
    Ok(Rational::from((p, q)))
}

// Σ_{i=a}^{b-1} 1/i^m as an unreduced fraction, by binary splitting.
fn harmonic_split(m: u32, a: u64, b: u64) -> (Integer, Integer) {
    if b - a <= 16 {
        let mut p = Integer::new();
        let mut q = Integer::from(1);
        for i in a..b {
            let d = Integer::from(i).pow(m);
            p = p * &d + &q;
            q *= d;
        }
        return (p, q);
    }
    let mid = a + (b - a) / 2;
    let (p1, q1) = harmonic_split(m, a, mid);
    let (p2, q2) = harmonic_split(m, mid, b);
    (p1 * &q2 + p2 * &q1, q1 * q2)
}

/// Incrementally maintained table of `H_m(n)` for `m = 1..=max_order`.
#[derive(Clone, Debug)]
pub struct HarmonicTable {
    n: u64,
    values: Vec<Rational>,
}

impl HarmonicTable {
    pub fn new(max_order: u32) -> Self {
        Self {
            n: 0,
            values: vec![Rational::new(); max_order as usize],
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `H_m(n)` at the current `n`.
    pub fn get(&self, m: u32) -> &Rational {
        &self.values[m as usize - 1]
    }

    pub fn advance(&mut self) {
        self.n += 1;
        let mut power = Integer::from(1);
        for h in self.values.iter_mut() {
            power *= self.n;
            *h += Rational::from((Integer::from(1), power.clone()));
        }
    }

    pub fn advance_to(&mut self, n: u64) {
        assert!(n >= self.n, "harmonic table cannot move backwards");
        while self.n < n {
            self.advance();
        }
    }
}

/// Exact Bernoulli numbers `B_0..=B_k` (with `B_1 = -1/2`).
pub fn bernoulli(k: usize) -> Vec<Rational> {
    static CACHE: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![Rational::from(1)]));
    let mut table = cache.lock().expect("bernoulli cache poisoned");
    while table.len() <= k {
        // Σ_{j=0}^{m} C(m+1, j) B_j = 0
        let m = table.len() as u32;
        let mut acc = Rational::new();
        for (j, b) in table.iter().enumerate() {
            acc += Integer::from(Integer::binomial_u(m + 1, j as u32)) * b.clone();
        }
        table.push(-acc / Integer::from(m + 1));
    }
    table[..=k].to_vec()
}

/// The constants the asymptotic analysis consumes, to a given precision.
#[derive(Clone, Debug)]
pub struct Constants {
    digits: u32,
    gamma: Float,
    pi: Float,
    zeta: BTreeMap<u32, Float>,
}

/// γ, π and ζ(2..=8) to `precision` significant digits.
///
/// Up to 100 digits the values come from embedded reference literals;
/// beyond that they are evaluated with MPFR.
pub fn constants(precision: u32) -> Result<Constants> {
    if precision < MIN_PRECISION_DIGITS {
        return Err(Error::InvalidArgument(format!(
            "precision {precision} is below the minimum of {MIN_PRECISION_DIGITS} digits"
        )));
    }
    Ok(Constants::with_digits(precision))
}

impl Constants {
    /// Like [`constants`] but without the lower bound, for internal
    /// guard-digit computations.
    pub(crate) fn with_digits(digits: u32) -> Self {
        let bits = digits_to_bits(digits);
        let parse = |s: &str| Float::with_val(bits, Float::parse(s).expect("valid literal"));
        let (gamma, pi, zeta) = if digits + 5 <= LITERAL_DIGITS {
            let zeta = ZETA
                .iter()
                .enumerate()
                .map(|(i, s)| (i as u32 + 2, parse(s)))
                .collect();
            (parse(GAMMA), parse(PI), zeta)
        } else {
            let zeta = (2..=8u32)
                .map(|m| (m, Float::with_val(bits, Float::zeta_u(m))))
                .collect();
            (
                Float::with_val(bits, Constant::Euler),
                Float::with_val(bits, Constant::Pi),
                zeta,
            )
        };
        Self {
            digits,
            gamma,
            pi,
            zeta,
        }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn bits(&self) -> u32 {
        digits_to_bits(self.digits)
    }

    pub fn gamma(&self) -> &Float {
        &self.gamma
    }

    pub fn pi(&self) -> &Float {
        &self.pi
    }

    /// ζ(m) for integer `m >= 2`; orders above 8 are evaluated on demand.
    pub fn zeta(&self, m: u32) -> Float {
        assert!(m >= 2, "zeta(m) needs m >= 2");
        match self.zeta.get(&m) {
            Some(z) => z.clone(),
            None => Float::with_val(self.bits(), Float::zeta_u(m)),
        }
    }
}

/// Euler–Maclaurin approximation of `H_m(n)` with `terms` Bernoulli
/// corrections, evaluated at `precision` digits.
///
/// For `m = 1` this is `ln n + γ + 1/(2n) − Σ_k B_{2k}/(2k n^{2k})`; for
/// `m >= 2` it is `ζ(m)` minus the Euler–Maclaurin estimate of the tail.
pub fn harmonic_asymptotic(m: u32, n: u128, terms: u32, precision: u32) -> Result<HighReal> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "harmonic_asymptotic needs m >= 1 and n >= 1".into(),
        ));
    }
    let consts = Constants::with_digits(precision);
    let nf = Float::with_val(consts.bits(), Float::parse(n.to_string()).expect("integer"));
    Ok(HighReal::new(
        harmonic_asymptotic_with(&consts, m, &nf, terms),
        precision,
    ))
}

/// Euler–Maclaurin `H_m(n)` for a real `n`, using precomputed constants.
pub fn harmonic_asymptotic_with(consts: &Constants, m: u32, n: &Float, terms: u32) -> Float {
    let bits = consts.bits();
    let bern = bernoulli(2 * terms as usize);
    let n_m = Float::with_val(bits, n.pow(m));
    if m == 1 {
        let mut h = Float::with_val(bits, n.ln_ref());
        h += consts.gamma();
        h += Float::with_val(bits, 0.5) / n.clone();
        let n2 = Float::with_val(bits, n * n);
        let mut npow = n2.clone();
        for k in 1..=terms as usize {
            let coeff = Rational::from(&bern[2 * k] / Integer::from(2 * k));
            h -= Float::with_val(bits, &coeff) / &npow;
            npow *= &n2;
        }
        h
    } else {
        // H_m(n) = ζ(m) − n^{1−m}/(m−1) + n^{−m}/2 − Σ_k B_{2k}/(2k)! (m)_{2k−1} n^{−m−2k+1}
        let mut h = consts.zeta(m);
        h -= Float::with_val(bits, n / n_m.clone()) / (m - 1);
        h += Float::with_val(bits, 0.5) / &n_m;
        let n2 = Float::with_val(bits, n * n);
        let mut npow = Float::with_val(bits, &n_m * n);
        for k in 1..=terms as usize {
            let rising: Integer = (0..(2 * k as u32 - 1))
                .map(|j| Integer::from(m + j))
                .product();
            let fact = Integer::from(Integer::factorial(2 * k as u32));
            let coeff = &bern[2 * k] * Rational::from((rising, fact));
            h -= Float::with_val(bits, &coeff) / &npow;
            npow *= &n2;
        }
        h
    }
}

/// Converts an exact rational to a float at `bits` precision.
pub fn to_float(q: &Rational, bits: u32) -> Float {
    Float::with_val(bits, q)
}

/// Number of leading decimal digits on which `a` and `b` agree, measured
/// relative to `|b|` (absolute when `b` is zero), capped at `cap`.
pub fn agreeing_digits(a: &Float, b: &Float, cap: u32) -> u32 {
    let bits = a.prec().max(b.prec());
    let diff = Float::with_val(bits, a - b).abs();
    if diff.is_zero() {
        return cap;
    }
    let scale = if b.is_zero() {
        Float::with_val(bits, 1)
    } else {
        Float::with_val(bits, b.abs_ref())
    };
    let rel = diff / scale;
    let d = -rel.log10().to_f64();
    if d <= 0.0 {
        0
    } else {
        (d.floor() as u32).min(cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic(1, 0).unwrap(), 0);
        assert_eq!(harmonic(1, 3).unwrap(), q("11/6"));
        assert_eq!(harmonic(2, 3).unwrap(), q("49/36"));
        assert_eq!(harmonic(1, 6).unwrap(), q("49/20"));
    }

    #[test]
    fn harmonic_rejects_order_zero() {
        assert!(matches!(harmonic(0, 5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn harmonic_split_matches_direct_sum() {
        for m in 1..=3 {
            let mut direct = Rational::new();
            for i in 1..=200u64 {
                direct += Rational::from((1, Integer::from(i).pow(m)));
                assert_eq!(harmonic(m, i).unwrap(), direct);
            }
        }
    }

    #[test]
    fn harmonic_recurrence() {
        for m in 1..=8u32 {
            let mut table = HarmonicTable::new(m);
            let mut prev = Rational::new();
            for n in 1..=1000u64 {
                table.advance();
                let h = table.get(m).clone();
                assert_eq!(
                    Rational::from(&h - &prev),
                    Rational::from((1, Integer::from(n).pow(m)))
                );
                prev = h;
            }
            assert_eq!(prev, harmonic(m, 1000).unwrap());
        }
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli(10);
        assert_eq!(b[1], q("-1/2"));
        assert_eq!(b[2], q("1/6"));
        assert_eq!(b[4], q("-1/30"));
        assert_eq!(b[6], q("1/42"));
        assert_eq!(b[8], q("-1/30"));
        assert_eq!(b[10], q("5/66"));
        assert_eq!(b[3], 0);
    }

    #[test]
    fn asymptotic_at_one_is_close() {
        let h = harmonic_asymptotic(1, 1, 4, 50).unwrap();
        assert!((h.to_f64() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn asymptotic_agrees_with_exact_at_ten_thousand() {
        for m in 1..=4 {
            let exact = to_float(&harmonic(m, 10_000).unwrap(), 300);
            let approx = harmonic_asymptotic(m, 10_000, 4, 60).unwrap();
            assert!(agreeing_digits(approx.value(), &exact, 80) >= 30, "m = {m}");
        }
    }

    #[test]
    fn zeta_two_approached_by_h2() {
        let c = constants(50).unwrap();
        let h = harmonic_asymptotic(2, 10u128.pow(30), 4, 50).unwrap();
        let bits = c.bits();
        let pi2_6 = Float::with_val(bits, c.pi().square_ref()) / 6;
        assert!(agreeing_digits(h.value(), &pi2_6, 60) >= 29);
    }

    #[test]
    fn constants_reject_low_precision() {
        assert!(constants(49).is_err());
        assert!(constants(50).is_ok());
    }

    #[test]
    fn literal_and_mpfr_constants_agree() {
        let lit = Constants::with_digits(90);
        let bits = lit.bits();
        assert!(agreeing_digits(lit.gamma(), &Float::with_val(bits, Constant::Euler), 120) >= 90);
        assert!(agreeing_digits(lit.pi(), &Float::with_val(bits, Constant::Pi), 120) >= 90);
        for m in 2..=8 {
            let z = Float::with_val(bits, Float::zeta_u(m));
            assert!(agreeing_digits(&lit.zeta(m), &z, 120) >= 90, "zeta({m})");
        }
        let big = Constants::with_digits(150);
        assert!(agreeing_digits(big.gamma(), lit.gamma(), 200) >= 90);
    }

    #[test]
    fn decimal_formatting() {
        let x = Float::with_val(200, Float::parse("0.0012345").unwrap());
        assert_eq!(format_decimal(&x, 5), "0.0012345");
        let y = Float::with_val(200, Float::parse("-858.2032039900022601").unwrap());
        assert_eq!(format_decimal(&y, 10), "-858.203204");
        assert_eq!(format_decimal(&Float::with_val(64, 120), 10), "120");
    }

    #[test]
    fn rational_repr_round_trip() {
        let x = q("-22/7");
        let json = serde_json::to_string(&RationalRepr::from(&x)).unwrap();
        assert_eq!(json, r#"{"num":"-22","den":"7"}"#);
        let back: RationalRepr = serde_json::from_str(&json).unwrap();
        assert_eq!(Rational::try_from(&back).unwrap(), x);
    }
}
