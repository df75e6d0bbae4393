mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qsa_core::asymptotics::{
    leading_coefficient, scaled_limit_for, scaled_moment_at, scaled_moment_exact,
};
use qsa_core::closed_form::{cached_guess, fit, template};
use qsa_core::distribution::{mean_and_variance, min_comparisons, scale, tail_probability};
use qsa_core::moments::{
    central_from_factorial, central_moment, factorial_series, moment_data, moments_from_factorial,
    raw_moment,
};
use qsa_core::numeric::{agreeing_digits, constants, to_float};
use qsa_core::simulator::{exhaustive_distribution, quicksort_count};
use qsa_core::{pgf, Float, HarmonicExpr, Integer, Rational};

use common::{closed_limit, known_moment};

fn rational() -> impl Strategy<Value = Rational> {
    (any::<i64>(), 1..i64::MAX).prop_map(|(a, b)| Rational::from((a, b)))
}

fn small_expr() -> impl Strategy<Value = HarmonicExpr> {
    prop::collection::vec((0u32..3, 0u32..3, 1u32..4, -20i64..20), 0..5).prop_map(|terms| {
        terms
            .into_iter()
            .map(|(a, b, m, c)| HarmonicExpr::n().pow(a) * HarmonicExpr::h(m).pow(b) * c)
            .fold(HarmonicExpr::zero(), |acc, t| acc + t)
    })
}

proptest! {
    #[test]
    fn rational_field_axioms(a in rational(), b in rational(), c in rational()) {
        prop_assert_eq!(Rational::from(&a + &b), Rational::from(&b + &a));
        prop_assert_eq!(Rational::from(&a * &b), Rational::from(&b * &a));
        prop_assert_eq!(
            Rational::from(&a + &b) + &c,
            a.clone() + Rational::from(&b + &c)
        );
        prop_assert_eq!(
            Rational::from(&a * &b) * &c,
            a.clone() * Rational::from(&b * &c)
        );
        prop_assert_eq!(
            a.clone() * Rational::from(&b + &c),
            Rational::from(&a * &b) + Rational::from(&a * &c)
        );
        prop_assert_eq!(Rational::from(&a - &a), 0);
        if a != 0 {
            prop_assert_eq!(&a * Rational::from(a.recip_ref()), 1);
        }
    }

    #[test]
    fn evaluation_is_a_ring_map(x in small_expr(), y in small_expr(), n in 1u64..40) {
        prop_assert_eq!((&x + &y).evaluate(n), x.evaluate(n) + y.evaluate(n));
        prop_assert_eq!((&x * &y).evaluate(n), x.evaluate(n) * y.evaluate(n));
        prop_assert_eq!(x.evaluate_many(&[n]), vec![x.evaluate(n)]);
        let back = HarmonicExpr::from_wire(&x.to_wire()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn quicksort_sorts_within_bounds(mut v in prop::collection::vec(-50i32..50, 0..80), seed: u64) {
        let mut expect = v.clone();
        expect.sort();
        let mut distinct = expect.clone();
        distinct.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = quicksort_count(&mut v, &mut rng);
        prop_assert_eq!(&v, &expect);
        let len = v.len() as u64;
        prop_assert!(c <= len * len.saturating_sub(1) / 2);

        let mut d = distinct.clone();
        d.reverse();
        let c = quicksort_count(&mut d, &mut rng);
        let len = d.len() as u64;
        if len >= 2 {
            prop_assert!(c >= min_comparisons(len) && c >= len - 1);
        }
        prop_assert!(c <= len * len.saturating_sub(1) / 2);
    }
}

#[test]
fn oracle_matches_generating_function() {
    for n in 0..=10 {
        let oracle = exhaustive_distribution(n).unwrap();
        let g = pgf(n);
        let exact: Vec<(u64, Rational)> = g.coefficients().filter(|(_, p)| *p != 0).collect();
        let brute: Vec<(u64, Rational)> = oracle.into_iter().collect();
        assert_eq!(exact, brute, "n = {n}");
    }
}

#[test]
fn worst_case_probability() {
    for n in 2..=12u64 {
        let expect = Rational::from((
            Integer::from(1) << (n as u32 - 1),
            Integer::from(Integer::factorial(n as u32)),
        ));
        let g = pgf(n);
        assert_eq!(g.max_k(), n * (n - 1) / 2);
        assert_eq!(g.probability(n * (n - 1) / 2), expect, "n = {n}");
        if n <= 9 {
            let oracle = exhaustive_distribution(n).unwrap();
            assert_eq!(oracle[&(n * (n - 1) / 2)], expect);
        }
    }
}

#[test]
fn support_bounds_are_attained() {
    for n in 2..=6 {
        let oracle = exhaustive_distribution(n).unwrap();
        assert_eq!(*oracle.keys().next().unwrap(), min_comparisons(n));
        assert_eq!(*oracle.keys().last().unwrap(), n * (n - 1) / 2);
    }
    assert_eq!(min_comparisons(2), 1);
    assert_eq!(min_comparisons(3), 2);
}

#[test]
fn exact_moments_match_known_closed_forms() {
    let forms: Vec<HarmonicExpr> = (1..=6).map(known_moment).collect();
    for n in 1..=130u64 {
        let g = pgf(n);
        assert_eq!(g.eval(&Rational::from(1)), 1);
        assert_eq!(raw_moment(n, 1), forms[0].evaluate(n), "mean, n = {n}");
        assert_eq!(central_moment(n, 1), 0);
        for r in 2..=6u32 {
            let m = central_moment(n, r);
            assert_eq!(m, forms[r as usize - 1].evaluate(n), "r = {r}, n = {n}");
            if r % 2 == 0 {
                assert!(m >= 0);
            }
        }
    }
}

#[test]
fn truncated_series_matches_exact_moments() {
    let series = factorial_series(60, 10).unwrap();
    let three: Vec<Rational> = ["1", "8/3", "7/3"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(series[3].coeffs[..3], three[..]);
    // (1/3)(1+w)^2 + (2/3)(1+w)^3
    assert_eq!(series[3].coeffs[3], Rational::from((2, 3)));
    assert!(series[3].coeffs[4..].iter().all(|c| *c == 0));
    for s in &series[1..] {
        assert_eq!(s.coeffs[0], 1);
        assert!(s.coeffs.iter().all(|c| *c >= 0));
        for r in 1..=10 {
            assert_eq!(
                moments_from_factorial(s, r).unwrap(),
                raw_moment(s.n, r),
                "n = {}, r = {r}",
                s.n
            );
            assert_eq!(
                central_from_factorial(s, r).unwrap(),
                central_moment(s.n, r)
            );
        }
    }
    let c100 = &factorial_series(100, 2).unwrap()[100];
    assert_eq!(c100.mean(), known_moment(1).evaluate(100));
}

#[test]
fn guessed_forms_reproduce_exact_moments() {
    for r in 1..=6u32 {
        let rep = cached_guess(r).unwrap();
        assert!(rep.is_verified());
        assert!(rep.residuals.iter().all(|x| *x == 0));
        assert_eq!(rep.expr, known_moment(r), "r = {r}");
        let points: Vec<u64> = (1..=130).collect();
        let values = rep.expr.evaluate_many(&points);
        for (&n, v) in points.iter().zip(&values) {
            let exact = if r == 1 {
                raw_moment(n, 1)
            } else {
                central_moment(n, r)
            };
            assert_eq!(*v, exact, "r = {r}, n = {n}");
        }
    }
}

#[test]
fn fit_does_not_depend_on_training_points() {
    let data = moment_data(3, 400).unwrap();
    let monomials = template(3, 3, 3);
    let k = monomials.len() as u64 + 5;
    let a = fit(&data, &monomials, 1..=k, 200..=400).unwrap();
    let b = fit(&data, &monomials, k + 1..=2 * k, 200..=400).unwrap();
    assert!(a.is_verified() && b.is_verified());
    assert_eq!(a.expr, b.expr);
}

#[test]
fn higher_fits_agree_with_exact_moments() {
    for r in 7..=8u32 {
        let rep = cached_guess(r).unwrap();
        assert!(rep.is_verified());
        for n in [1u64, 2, 17, 60] {
            assert_eq!(
                rep.expr.evaluate(n),
                central_moment(n, r),
                "r = {r}, n = {n}"
            );
        }
    }
}

#[test]
fn scaled_limits_match_closed_expressions() {
    for r in 3..=8 {
        let v = scaled_limit_for(r, 50).unwrap();
        assert!(v.stability >= 12);
        let reference = closed_limit(r, 50);
        let agree = agreeing_digits(v.value.value(), &reference, 50);
        assert!(agree >= 48, "r = {r}: {agree} digits");
    }
}

#[test]
fn fourth_moment_leading_coefficient() {
    let lead = leading_coefficient(&known_moment(4), 50).unwrap();
    let c = constants(60).unwrap();
    let bits = c.bits();
    let pi2 = Float::with_val(bits, c.pi() * c.pi());
    let closed = Float::with_val(bits, Rational::from((2260, 9)))
        - Float::with_val(bits, &pi2 * 28u32)
        + Float::with_val(bits, &pi2 * &pi2) * 4u32 / 15u32;
    assert!(agreeing_digits(lead.value(), &closed, 50) >= 45);
}

#[test]
fn exact_and_asymptotic_harmonics_agree_at_moderate_n() {
    let (e3, e2) = (known_moment(3), known_moment(2));
    let c = constants(60).unwrap();
    let asym = scaled_moment_at(3, &e3, &e2, &c, 10_000);
    let exact = scaled_moment_exact(&e3, &e2, 3, 10_000, c.bits());
    assert!(agreeing_digits(&asym, &exact, 60) >= 25);
    // still far from the limit: convergence is only logarithmic
    let gap = (exact - closed_limit(3, 50)).abs().to_f64();
    assert!(gap > 1e-3 && gap < 0.5, "gap {gap}");
}

#[test]
fn surrogate_equal_to_target_is_exact() {
    let g = pgf(130);
    let (c130, _) = mean_and_variance(130).unwrap();
    let floor = c130.clone().floor();
    for x in [g.min_k(), floor.numer().to_u64().unwrap(), 1200, 1500] {
        let exact: Rational = g
            .coefficients()
            .filter(|(k, _)| *k > x)
            .map(|(_, p)| p)
            .sum();
        let est = tail_probability(130, &Rational::from(x), 130).unwrap();
        let e = to_float(&exact, 300);
        assert!(
            agreeing_digits(est.probability.value(), &e, 50) >= 40,
            "x = {x}"
        );
    }
}

#[test]
fn tail_at_the_mean_is_skewed() {
    let (c, _) = mean_and_variance(10_000).unwrap();
    let p = tail_probability(10_000, &c, 130)
        .unwrap()
        .probability
        .to_f64();
    assert!((0.4..0.5).contains(&p), "p = {p}");
    let top = tail_probability(10_000, &Rational::from(10_000u64 * 9_999 / 2), 130).unwrap();
    assert_eq!(top.probability.to_f64(), 0.0);
    let low = tail_probability(10_000, &Rational::from(0), 130).unwrap();
    assert!(low.saturated);
    assert_eq!(low.probability.to_f64(), 1.0);
}

#[test]
fn scaled_distribution_at_130() {
    let d = scale(130).unwrap();
    assert_eq!(d.total_mass(), 1);
    assert_eq!(d.scaled_second_moment(), 1);
    assert!(d.weighted_moment(1).abs() < 1e-40);
    assert!((d.weighted_moment(3) - d.skewness()).abs() < 1e-40);

    // skewness approaches its limit from above, slowly
    let (e3, e2) = (known_moment(3), known_moment(2));
    let bits = 200;
    let limit = closed_limit(3, 50).to_f64();
    let mut last = d.skewness().to_f64();
    assert!((0.94..0.95).contains(&last), "skewness {last}");
    for n in [1_000, 10_000, 100_000] {
        let s = scaled_moment_exact(&e3, &e2, 3, n, bits).to_f64();
        assert!(s < last && s > limit, "n = {n}: {s}");
        last = s;
    }
}
