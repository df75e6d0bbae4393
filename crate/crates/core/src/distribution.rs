//! The scaled variable `Z_n = (X_n − c_n) / √m_2(n)`, its histogram, and
//! tail estimates for large `n` that reuse a moderate-size `Z_s` as a
//! stand-in for the limiting shape.

use std::collections::{BTreeMap, HashMap};

use rug::ops::Pow;
use rug::{Float, Rational};
use serde::Serialize;

use crate::closed_form::cached_guess;
use crate::numeric::{digits_to_bits, format_decimal, to_float, HighReal};
use crate::pgf::pgf;
use crate::{Error, Result};

/// Default surrogate size for tail queries.
pub const DEFAULT_SURROGATE: u64 = 130;

/// Default histogram bin width in `z`.
pub const DEFAULT_BIN_WIDTH: f64 = 0.1;

/// Working precision of `z` coordinates, in decimal digits.
pub const Z_DIGITS: u32 = 50;

/// Exact `c_n` and `m_2(n)` from the fitted closed forms.
pub fn mean_and_variance(n: u64) -> Result<(Rational, Rational)> {
    let mean = cached_guess(1)?.expr.evaluate(n);
    let var = cached_guess(2)?.expr.evaluate(n);
    Ok((mean, var))
}

#[derive(Clone, Debug)]
pub struct ScaledDistribution {
    pub n: u64,
    pub mean: Rational,
    pub variance: Rational,
    /// `(z, Pr(Z_n = z))` in increasing `z`, one entry per comparison count.
    pub points: Vec<(Float, Rational)>,
    /// Comparison count of the first point.
    pub min_k: u64,
}

/// Builds `Z_n` from the exact distribution of `X_n`.
pub fn scale(n: u64) -> Result<ScaledDistribution> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Z_n needs n >= 2 (X_{n} has zero variance)"
        )));
    }
    let g = pgf(n);
    let (mean, variance) = mean_and_variance(n)?;
    let bits = digits_to_bits(Z_DIGITS);
    let sd = to_float(&variance, bits).sqrt();
    let points = g
        .coefficients()
        .map(|(k, p)| {
            let centered = Rational::from(k) - &mean;
            (to_float(&centered, bits) / &sd, p)
        })
        .collect();
    Ok(ScaledDistribution {
        n,
        mean,
        variance,
        points,
        min_k: g.min_k(),
    })
}

impl ScaledDistribution {
    pub fn total_mass(&self) -> Rational {
        self.points.iter().map(|(_, p)| p).sum()
    }

    /// Cumulative masses `Pr(Z_n <= z)` at each support point.
    pub fn cdf(&self) -> Vec<(Float, Rational)> {
        let mut acc = Rational::new();
        self.points
            .iter()
            .map(|(z, p)| {
                acc += p;
                (z.clone(), acc.clone())
            })
            .collect()
    }

    /// `E[(X_n − c_n)^r]` computed exactly in comparison-count space.
    pub fn central_moment(&self, r: u32) -> Rational {
        let mut acc = Rational::new();
        for (i, (_, p)) in self.points.iter().enumerate() {
            let d = Rational::from(self.min_k + i as u64) - &self.mean;
            acc += d.pow(r as i32) * p;
        }
        acc
    }

    /// Exact `E[Z_n^2]`, which must be 1.
    pub fn scaled_second_moment(&self) -> Rational {
        self.central_moment(2) / &self.variance
    }

    /// `E[Z_n^r]` in floating point from the `z` coordinates.
    pub fn weighted_moment(&self, r: u32) -> Float {
        let bits = digits_to_bits(Z_DIGITS);
        let mut acc = Float::with_val(bits, 0);
        for (z, p) in &self.points {
            acc += Float::with_val(bits, z.pow(r)) * to_float(p, bits);
        }
        acc
    }

    /// Exact-moment skewness `m_3 / m_2^{3/2}`.
    pub fn skewness(&self) -> Float {
        let bits = digits_to_bits(Z_DIGITS);
        let m3 = to_float(&self.central_moment(3), bits);
        let sd = to_float(&self.variance, bits).sqrt();
        m3 / Float::with_val(bits, sd.pow(3u32))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailEstimate {
    pub n: u64,
    pub threshold: String,
    pub surrogate: u64,
    pub probability: HighReal,
    /// Threshold lies outside the support of `X_n`; the probability is
    /// exact (0 or 1) rather than estimated.
    pub saturated: bool,
}

/// Fewest comparisons Quicksort can make on `n` distinct keys (perfectly
/// balanced pivots all the way down).
pub fn min_comparisons(n: u64) -> u64 {
    fn go(n: u64, memo: &mut HashMap<u64, u64>) -> u64 {
        if n <= 1 {
            return 0;
        }
        if let Some(&v) = memo.get(&n) {
            return v;
        }
        let rest = n - 1;
        let v = rest + go(rest / 2, memo) + go(rest - rest / 2, memo);
        memo.insert(n, v);
        v
    }
    go(n, &mut HashMap::new())
}

/// `Pr(X_n > threshold)` approximated by `Pr(Z_s > (threshold − c_n)/√m_2(n))`
/// for surrogate size `s`.
///
/// Each surrogate atom at comparison count `k` is spread uniformly over
/// `(k − 1, k]`, so the estimate is continuous and non-increasing in the
/// threshold, and exact at integer thresholds when `s = n`.
pub fn tail_probability(n: u64, threshold: &Rational, surrogate_n: u64) -> Result<TailEstimate> {
    if n < 2 || surrogate_n < 2 {
        return Err(Error::InvalidArgument(
            "tail queries need n >= 2 and surrogate >= 2".into(),
        ));
    }
    let bits = digits_to_bits(Z_DIGITS);
    let estimate = |prob: Float, saturated| TailEstimate {
        n,
        threshold: threshold.to_string(),
        surrogate: surrogate_n,
        probability: HighReal::new(prob, Z_DIGITS),
        saturated,
    };
    if *threshold < min_comparisons(n) {
        return Ok(estimate(Float::with_val(bits, 1), true));
    }
    let worst = Rational::from(n * (n - 1) / 2);
    if *threshold >= worst {
        return Ok(estimate(Float::with_val(bits, 0), true));
    }

    let g = pgf(surrogate_n);
    let mut prob = Float::with_val(bits, 0);
    if surrogate_n == n {
        for (k, p) in g.coefficients() {
            let frac = (Rational::from(k) - threshold).clamp(&0, &1);
            prob += to_float(&(frac * p), bits);
        }
        return Ok(estimate(prob, false));
    }

    let (c_n, var_n) = mean_and_variance(n)?;
    let (c_s, var_s) = mean_and_variance(surrogate_n)?;
    // threshold mapped into surrogate comparison counts
    let ratio = (to_float(&var_s, bits) / to_float(&var_n, bits)).sqrt();
    let cut = to_float(&c_s, bits) + to_float(&Rational::from(threshold - &c_n), bits) * ratio;
    let zero = Float::with_val(bits, 0);
    let one = Float::with_val(bits, 1);
    for (k, p) in g.coefficients() {
        let frac = (Float::with_val(bits, k) - &cut).clamp(&zero, &one);
        prob += frac * to_float(&p, bits);
    }
    Ok(estimate(prob, false))
}

#[derive(Clone, Debug)]
pub struct DensityBin {
    pub z_left: Float,
    pub z_right: Float,
    pub mass: Rational,
}

/// Histogram of `Z_n` on equal-width bins `[j·w, (j+1)·w)`.
pub fn export_density(n: u64, bin_width: &Float) -> Result<Vec<DensityBin>> {
    if *bin_width <= 0 || !bin_width.is_finite() {
        return Err(Error::InvalidArgument("bin width must be positive".into()));
    }
    let dist = scale(n)?;
    let bits = digits_to_bits(Z_DIGITS);
    let w = Float::with_val(bits, bin_width);
    let mut bins: BTreeMap<i64, Rational> = BTreeMap::new();
    for (z, p) in &dist.points {
        let idx = Float::with_val(bits, z / &w)
            .floor()
            .to_i32_saturating()
            .expect("finite") as i64;
        *bins.entry(idx).or_default() += p;
    }
    Ok(bins
        .into_iter()
        .map(|(j, mass)| DensityBin {
            z_left: Float::with_val(bits, &w * j),
            z_right: Float::with_val(bits, &w * (j + 1)),
            mass,
        })
        .collect())
}

/// CSV `z_left,z_right,mass`; masses to 20 significant digits.
pub fn density_csv(bins: &[DensityBin]) -> String {
    let mut out = String::from("z_left,z_right,mass\n");
    for b in bins {
        let mass = to_float(&b.mass, 128);
        out.push_str(&format!(
            "{},{},{}\n",
            format_decimal(&b.z_left, 12),
            format_decimal(&b.z_right, 12),
            format_decimal(&mass, 20)
        ));
    }
    out
}
