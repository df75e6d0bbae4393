//! Large-`n` behaviour of the fitted closed forms: leading coefficients in
//! terms of π, γ and ζ(m), and the limits of the scaled moments
//! `m_r(n) / m_2(n)^{r/2}`.
//!
//! A limit is obtained two ways. The top power of `n` is read off the
//! expression with `H_m(n) -> ζ(m)` for `m >= 2` (a surviving `H_1` at the
//! top power means the ratio diverges like a power of `ln n`). Separately,
//! the expression is evaluated at a ladder of very large `n` with every
//! harmonic number replaced by its Euler–Maclaurin expansion. The value is
//! only reported when the ladder agrees with itself and with the extracted
//! constant to the requested number of digits.
//!
//! Corrections decay like `ln n / n`, so the ladder uses `n` in the
//! `10^20..10^30` range; at `n ~ 10^8` the scaled moments still differ
//! from their limits in the seventh digit.

use rug::ops::Pow;
use rug::{Float, Integer};
use serde::Serialize;

use crate::closed_form::{cached_guess, HarmonicExpr};
use crate::numeric::{
    agreeing_digits, digits_to_bits, to_float, Constants, HighReal, DEFAULT_EM_TERMS,
};
use crate::{Error, Result};

/// Evaluation ladder for the numerical limit check.
pub const DEFAULT_LADDER: [u128; 3] = [
    100_000_000_000_000_000_000,
    10_000_000_000_000_000_000_000_000,
    1_000_000_000_000_000_000_000_000_000_000,
];

/// Agreement required before a limit is reported.
pub const DEFAULT_STABLE_DIGITS: u32 = 12;

/// Default working precision in decimal digits.
pub const DEFAULT_PRECISION: u32 = 50;

/// Lowest precision accepted by the limit routines.
pub const MIN_PRECISION: u32 = 30;

const GUARD_DIGITS: u32 = 40;

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticValue {
    pub value: HighReal,
    pub n_used: Vec<String>,
    /// Decimal digits on which the evaluation ladder agrees.
    pub stability: u32,
}

fn check_precision(precision: u32) -> Result<()> {
    if precision < MIN_PRECISION {
        return Err(Error::InvalidArgument(format!(
            "precision {precision} is below the minimum of {MIN_PRECISION} digits"
        )));
    }
    Ok(())
}

fn float_of(n: u128, bits: u32) -> Float {
    Float::with_val(bits, Integer::from(n))
}

/// Top power of `n` and its coefficient with `H_m -> ζ(m)`.
pub fn leading_term(expr: &HarmonicExpr, consts: &Constants) -> Result<(u32, Float)> {
    if expr.is_zero() {
        return Err(Error::Divergent(
            "zero expression has no leading term".into(),
        ));
    }
    let deg = expr.n_degree();
    let bits = consts.bits();
    let mut total = Float::with_val(bits, 0);
    for (mono, c) in expr.terms().filter(|(m, _)| m.n_power() == deg) {
        if mono.h_power(1) > 0 {
            return Err(Error::Divergent(format!(
                "term {mono} grows like n^{deg} (ln n)^{}",
                mono.h_power(1)
            )));
        }
        let mut v = to_float(c, bits);
        for (m, b) in mono.h_powers() {
            v *= consts.zeta(m).pow(b);
        }
        total += v;
    }
    Ok((deg, total))
}

/// `expr(n) / n^deg` with asymptotic harmonic substitution.
fn normalized_at(expr: &HarmonicExpr, deg: u32, consts: &Constants, n: u128) -> Float {
    let nf = float_of(n, consts.bits());
    let v = expr.evaluate_asymptotic(consts, &nf, DEFAULT_EM_TERMS);
    v / nf.pow(deg)
}

/// Limit of `expr(n) / n^deg`, where `deg` is the top power of `n`.
pub fn leading_coefficient(expr: &HarmonicExpr, precision: u32) -> Result<HighReal> {
    check_precision(precision)?;
    let consts = Constants::with_digits(precision + GUARD_DIGITS);
    let (deg, lead) = leading_term(expr, &consts)?;
    let ladder: Vec<Float> = DEFAULT_LADDER
        .iter()
        .map(|&n| normalized_at(expr, deg, &consts, n))
        .collect();
    let stable = ladder_agreement(&ladder, &lead, precision);
    if stable < DEFAULT_STABLE_DIGITS {
        return Err(Error::Unstable {
            stable,
            required: DEFAULT_STABLE_DIGITS,
        });
    }
    Ok(HighReal::new(
        Float::with_val(digits_to_bits(precision), &lead),
        precision,
    ))
}

fn ladder_agreement(ladder: &[Float], limit: &Float, cap: u32) -> u32 {
    let mut stable = cap;
    for w in ladder.windows(2) {
        stable = stable.min(agreeing_digits(&w[1], &w[0], cap));
    }
    let last = ladder.last().expect("non-empty ladder");
    stable.min(agreeing_digits(last, limit, cap))
}

/// `m_r(n) / m_2(n)^{r/2}` at a real `n`, asymptotic harmonic substitution.
pub fn scaled_moment_at(
    r: u32,
    expr_r: &HarmonicExpr,
    expr_2: &HarmonicExpr,
    consts: &Constants,
    n: u128,
) -> Float {
    let nf = float_of(n, consts.bits());
    let num = expr_r.evaluate_asymptotic(consts, &nf, DEFAULT_EM_TERMS);
    let var = expr_2.evaluate_asymptotic(consts, &nf, DEFAULT_EM_TERMS);
    num / scale_power(&var, r)
}

/// `m_r(n) / m_2(n)^{r/2}` at an integer `n` with exact harmonic numbers.
pub fn scaled_moment_exact(
    expr_r: &HarmonicExpr,
    expr_2: &HarmonicExpr,
    r: u32,
    n: u64,
    bits: u32,
) -> Float {
    let num = to_float(&expr_r.evaluate(n), bits);
    let var = to_float(&expr_2.evaluate(n), bits);
    num / scale_power(&var, r)
}

// var^{r/2}
fn scale_power(var: &Float, r: u32) -> Float {
    let root = Float::with_val(var.prec(), var.sqrt_ref());
    root.pow(r)
}

/// Limit of the scaled `r`-th moment from fitted closed forms of `m_r` and
/// `m_2`.
pub fn scaled_moment_limit(
    r: u32,
    expr_r: &HarmonicExpr,
    expr_2: &HarmonicExpr,
    precision: u32,
) -> Result<AsymptoticValue> {
    scaled_moment_limit_on(r, expr_r, expr_2, precision, &DEFAULT_LADDER)
}

/// [`scaled_moment_limit`] on an explicit evaluation ladder.
pub fn scaled_moment_limit_on(
    r: u32,
    expr_r: &HarmonicExpr,
    expr_2: &HarmonicExpr,
    precision: u32,
    ladder: &[u128],
) -> Result<AsymptoticValue> {
    check_precision(precision)?;
    if r < 2 {
        return Err(Error::InvalidArgument("scaled limits need r >= 2".into()));
    }
    if ladder.len() < 2 {
        return Err(Error::InvalidArgument(
            "evaluation ladder needs two points".into(),
        ));
    }
    let consts = Constants::with_digits(precision + GUARD_DIGITS);
    let (deg_r, lead_r) = leading_term(expr_r, &consts)?;
    let (deg_2, lead_2) = leading_term(expr_2, &consts)?;
    if deg_2 != 2 || deg_r != r {
        return Err(Error::Divergent(format!(
            "expected degrees ({r}, 2), found ({deg_r}, {deg_2})"
        )));
    }
    let limit = lead_r / scale_power(&lead_2, r);
    let values: Vec<Float> = ladder
        .iter()
        .map(|&n| scaled_moment_at(r, expr_r, expr_2, &consts, n))
        .collect();
    let stability = ladder_agreement(&values, &limit, precision);
    if stability < DEFAULT_STABLE_DIGITS {
        return Err(Error::Unstable {
            stable: stability,
            required: DEFAULT_STABLE_DIGITS,
        });
    }
    Ok(AsymptoticValue {
        value: HighReal::new(
            Float::with_val(digits_to_bits(precision), &limit),
            precision,
        ),
        n_used: ladder.iter().map(u128::to_string).collect(),
        stability,
    })
}

/// Scaled-moment limit for order `r` from freshly guessed closed forms.
pub fn scaled_limit_for(r: u32, precision: u32) -> Result<AsymptoticValue> {
    let expr_2 = cached_guess(2)?.expr;
    if r == 2 {
        return scaled_moment_limit(2, &expr_2, &expr_2, precision);
    }
    let expr_r = cached_guess(r)?.expr;
    scaled_moment_limit(r, &expr_r, &expr_2, precision)
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanGrowth {
    /// `2 / ln 2`: average over best-case comparisons, asymptotically.
    pub two_over_ln2: HighReal,
    /// `(c_n − (2γ − 4) n) / (n ln n)` at `n = 10^8`.
    pub corrected_ratio: HighReal,
    /// `√m_2(n) / c_n` at `n = 10^6, 10^7, 10^8`.
    pub coefficient_of_variation: Vec<HighReal>,
}

/// `2 / ln 2`, after checking `c_n / (n ln n) -> 2` on the fitted mean.
pub fn mean_asymptotic_check(precision: u32) -> Result<MeanGrowth> {
    check_precision(precision)?;
    let bits = digits_to_bits(precision);
    let mean = cached_guess(1)?.expr;
    let var = cached_guess(2)?.expr;
    let consts = Constants::with_digits(precision + GUARD_DIGITS);
    let wbits = consts.bits();

    let ln2 = Float::with_val(wbits, Float::with_val(wbits, 2).ln_ref());
    let two_over_ln2 = Float::with_val(wbits, 2) / ln2;

    let ratio = corrected_mean_ratio(&mean, &consts, 100_000_000);
    let gap = Float::with_val(wbits, &ratio - 2u32).abs();
    if gap > 1e-5 {
        return Err(Error::Unstable {
            stable: agreeing_digits(&ratio, &Float::with_val(wbits, 2), precision),
            required: 5,
        });
    }
    let cov = [1_000_000u128, 10_000_000, 100_000_000]
        .iter()
        .map(|&n| {
            let v = coefficient_of_variation(&mean, &var, &consts, n);
            HighReal::new(Float::with_val(bits, v), precision)
        })
        .collect();
    Ok(MeanGrowth {
        two_over_ln2: HighReal::new(Float::with_val(bits, two_over_ln2), precision),
        corrected_ratio: HighReal::new(Float::with_val(bits, ratio), precision),
        coefficient_of_variation: cov,
    })
}

/// `(c_n − (2γ − 4) n) / (n ln n)`.
pub fn corrected_mean_ratio(mean: &HarmonicExpr, consts: &Constants, n: u128) -> Float {
    let bits = consts.bits();
    let nf = float_of(n, bits);
    let c = mean.evaluate_asymptotic(consts, &nf, DEFAULT_EM_TERMS);
    let linear = Float::with_val(bits, consts.gamma() * 2u32) - 4u32;
    let ln = Float::with_val(bits, nf.ln_ref());
    (c - linear * &nf) / (nf * ln)
}

/// `√m_2(n) / c_n`.
pub fn coefficient_of_variation(
    mean: &HarmonicExpr,
    var: &HarmonicExpr,
    consts: &Constants,
    n: u128,
) -> Float {
    let nf = float_of(n, consts.bits());
    let c = mean.evaluate_asymptotic(consts, &nf, DEFAULT_EM_TERMS);
    let v = var.evaluate_asymptotic(consts, &nf, DEFAULT_EM_TERMS);
    v.sqrt() / c
}
