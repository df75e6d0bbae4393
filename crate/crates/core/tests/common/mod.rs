//! Hand transcriptions of the known closed forms, shared by the
//! integration targets.
#![allow(dead_code)]

use qsa_core::numeric::{constants, digits_to_bits};
use qsa_core::{Float, HarmonicExpr, Rational};
use rug::ops::Pow;

fn n() -> HarmonicExpr {
    HarmonicExpr::n()
}

fn h(m: u32) -> HarmonicExpr {
    HarmonicExpr::h(m)
}

/// `(n+1)^k`.
fn np(k: u32) -> HarmonicExpr {
    (n() + 1).pow(k)
}

/// Polynomial in `n`, coefficients from the highest power down.
fn p(cs: &[i64]) -> HarmonicExpr {
    cs.iter().fold(HarmonicExpr::zero(), |acc, &c| {
        acc * n() + HarmonicExpr::constant(c)
    })
}

fn frac(a: i64, b: i64) -> Rational {
    Rational::from((a, b))
}

/// Mean `c_n` (`r = 1`) or central moment `m_r(n)` for `2 <= r <= 6`.
pub fn known_moment(r: u32) -> HarmonicExpr {
    match r {
        1 => np(1) * h(1) * 2 - n() * 4,
        2 => n() * p(&[7, 13]) - np(1) * h(1) * 2 - np(2) * h(2) * 4,
        3 => {
            -(n() * p(&[19, 81, 104])) + h(1) * p(&[14, 14]) + np(2) * h(2) * 12 + np(3) * h(3) * 16
        }
        4 => {
            (n() * p(&[2260, 9658, 15497, 11357])).scale(&frac(1, 9))
                - np(1) * p(&[42, 78, 77]) * h(1) * 2
                + np(2) * h(1).pow(2) * 12
                + (p(&[42, 78, 31]) * np(2) * -4 + np(3) * h(1) * 48) * h(2)
                + np(4) * h(2).pow(2) * 48
                - np(3) * h(3) * 96
                - np(4) * h(4) * 96
        }
        5 => {
            (n() * p(&[229621, 1422035, 3401325, 3915865, 2217794])).scale(&frac(-1, 108))
                + np(1) * p(&[190, 1300, 1950, 1171]) * h(1) * 2
                - np(2) * h(1).pow(2) * 280
                + (p(&[38, 204, 286, 91]) * np(2) * 20 - np(3) * h(1) * 800) * h(2)
                - np(4) * h(2).pow(2) * 480
                + (p(&[14, 26, 17]) * np(3) * 80 - np(4) * h(1) * 320 - np(5) * h(2) * 640) * h(3)
                + np(4) * h(4) * 960
                + np(5) * h(5) * 768
        }
        6 => {
            (n() * p(&[
                74250517, 523547007, 1579578725, 2571768745, 2342670258, 1133389148,
            ]))
            .scale(&frac(1, 2700))
                - (np(1) * p(&[11300, 56270, 135760, 145510, 68427]) * h(1)).scale(&frac(2, 3))
                + p(&[63, 117, 329]) * np(2) * h(1).pow(2) * 20
                - np(3) * h(1).pow(3) * 120
                + ((p(&[11300, 51710, 101830, 93640, 26013]) * np(2)).scale(&frac(-4, 3))
                    + p(&[21, 39, 68]) * np(3) * h(1) * 240
                    - np(4) * h(1).pow(2) * 720)
                    * h(2)
                + (p(&[21, 39, 37]) * np(4) * 240 - np(5) * h(1) * 1440) * h(2).pow(2)
                - np(6) * h(2).pow(3) * 960
                + (p(&[38, 225, 325, 159]) * np(3) * -160
                    + np(4) * h(1) * 7360
                    + np(5) * h(2) * 9600)
                    * h(3)
                + np(6) * h(3).pow(2) * 2560
                + (p(&[21, 39, 37]) * np(4) * -480 + np(5) * h(1) * 2880 + np(6) * h(2) * 5760)
                    * h(4)
                - np(5) * h(5) * 11520
                - np(6) * h(6) * 7680
        }
        _ => panic!("no transcription for r = {r}"),
    }
}

/// Reference decimal values of `lim m_r / m_2^{r/2}` for `r = 3..=8`.
pub const REFERENCE_LIMITS: [(u32, &str); 6] = [
    (3, "0.85488186713258853660"),
    (4, "4.1781156382698542397"),
    (5, "10.646163374673878503"),
    (6, "44.427077708169777614"),
    (7, "179.72191973561786840"),
    (8, "858.20320399000226017"),
];

/// The same limits from their closed expressions in π and ζ values,
/// evaluated at `digits` decimal digits.
pub fn closed_limit(r: u32, digits: u32) -> Float {
    let c = constants(digits + 20).unwrap();
    let bits = c.bits();
    let f = |x: i64| Float::with_val(bits, x);
    let q = |a: i64, b: i64| Float::with_val(bits, Rational::from((a, b)));
    let pi = c.pi().clone();
    let pi2 = Float::with_val(bits, &pi * &pi);
    let pi4 = Float::with_val(bits, &pi2 * &pi2);
    let pi6 = Float::with_val(bits, &pi4 * &pi2);
    let pi8 = Float::with_val(bits, &pi4 * &pi4);
    let (z3, z5, z7) = (c.zeta(3), c.zeta(5), c.zeta(7));
    let v = f(7) - q(2, 3) * &pi2;
    let vpow = |half_steps: i32| -> Float {
        // v^(half_steps / 2)
        Float::with_val(bits, v.sqrt_ref()).pow(half_steps)
    };
    let value = match r {
        3 => (f(16) * &z3 - 19) / vpow(3),
        4 => (q(2260, 9) - f(28) * &pi2 + q(4, 15) * &pi4) / vpow(4),
        5 => {
            (q(-229621, 108) + q(380, 3) * &pi2 + (f(1120) - q(320, 3) * &pi2) * &z3 + f(768) * &z5)
                / vpow(5)
        }
        6 => {
            (q(74250517, 2700) - q(22600, 9) * &pi2 + f(140) * &pi4
                - q(88, 7) * &pi6
                - f(6080) * &z3
                + f(2560) * Float::with_val(bits, &z3 * &z3)
                + (f(960) * &pi2 - 10080) * &pi4 / 90)
                / vpow(6)
        }
        7 => {
            let num = f(-30532750703) + f(2411020500) * &pi2 - f(14364000) * &pi4
                + f(11390400000) * &z3
                - f(1270080000) * Float::with_val(bits, &z3 * &pi2)
                + f(12096000) * Float::with_val(bits, &z3 * &pi4)
                - f(870912000) * Float::with_val(bits, &z5 * &pi2)
                + f(9144576000) * &z5
                + f(7464960000) * &z7;
            num / 81000 / vpow(7)
        }
        8 => {
            let z3sq = Float::with_val(bits, &z3 * &z3);
            let num = f(90558126238639) - f(7640378199300) * &pi2 + f(69766200000) * &pi4
                - f(5556600000) * &pi6
                - f(354564000) * &pi8
                - f(28353601080000) * &z3
                + f(1689206400000) * Float::with_val(bits, &z3 * &pi2)
                + f(7468070400000) * &z3sq
                - f(711244800000) * Float::with_val(bits, &z3sq * &pi2)
                - f(12162286080000) * &z5
                + f(10241925120000) * Float::with_val(bits, &z5 * &z3);
            // 14883750 = 81 * 183750
            num / 14883750 / vpow(8)
        }
        _ => panic!("no closed limit for r = {r}"),
    };
    Float::with_val(digits_to_bits(digits), value)
}
