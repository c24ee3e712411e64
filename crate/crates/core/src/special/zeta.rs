//! Riemann zeta for real `s > 1` by Euler-Maclaurin summation.
//!
//! With `N` explicit terms and `M` Bernoulli corrections,
//!
//! ```text
//! zeta(s) = sum_{n<N} n^-s + N^(1-s)/(s-1) + N^-s/2
//!           + sum_{j=1..M} B_2j/(2j)! (s)_(2j-1) N^(-s-2j+1) + R
//! |R| <= 4 (s)_(2M) N^(1-s-2M) / ((2 pi)^(2M) (s+2M-1))
//! ```
//!
//! where `(s)_m` is the rising factorial. The remainder bound uses
//! `|B~_2M(x)| <= 4 (2M)! / (2 pi)^(2M)` for the periodic Bernoulli function.

use rug::ops::Pow;
use rug::Float;

use super::{Precise, TailBounded, MIN_TARGET_TAIL, PRECISION_BITS};
use crate::error::{out_of_range, Error, Result};

/// Bernoulli corrections kept in the expansion.
pub const CORRECTION_TERMS: usize = 15;

pub const MIN_ARGUMENT: f64 = 1.1;

const MAX_TERMS: u64 = 10_000_000;

/// `B_2, B_4, ..., B_30` as exact fractions.
const BERNOULLI: [(i128, i128); CORRECTION_TERMS] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
    (-174611, 330),
    (854513, 138),
    (-236364091, 2730),
    (8553103, 6),
    (-23749461029, 870),
    (8615841276005, 14322),
];

pub(crate) fn bernoulli(prec: u32, j: usize) -> Float {
    let (num, den) = BERNOULLI[j - 1];
    Float::with_val(prec, num) / Float::with_val(prec, den)
}

/// Natural log of the Euler-Maclaurin remainder bound after `n` terms.
fn log_remainder_bound(s: f64, n: u64) -> f64 {
    let m2 = 2 * CORRECTION_TERMS;
    let log_poch: f64 = (0..m2).map(|i| (s + i as f64).ln()).sum();
    let tail_exp = s + m2 as f64 - 1.0;
    4f64.ln() + log_poch - tail_exp * (n as f64).ln()
        - m2 as f64 * std::f64::consts::TAU.ln()
        - tail_exp.ln()
}

/// The explicit remainder bound for a given term count.
pub fn remainder_bound(s: f64, n: u64) -> f64 {
    log_remainder_bound(s, n).exp()
}

fn validate(s: f64, target_tail: f64) -> Result<()> {
    if !(s.is_finite() && s >= MIN_ARGUMENT) {
        return Err(out_of_range("s", s, format!("[{MIN_ARGUMENT}, inf)")));
    }
    if !(target_tail > 0.0 && target_tail.is_finite()) {
        return Err(Error::InvalidArgument(format!("target tail must be positive, got {target_tail}")));
    }
    if target_tail < MIN_TARGET_TAIL {
        return Err(Error::TargetUnreachable {
            target: target_tail,
            reason: format!("below the working-precision floor {MIN_TARGET_TAIL:e}"),
        });
    }
    Ok(())
}

/// `zeta(s)` for an exactly given high-precision argument.
pub fn zeta_precise(s: &Float, target_tail: f64) -> Result<Precise> {
    let prec = PRECISION_BITS;
    let s_f64 = s.to_f64();
    validate(s_f64, target_tail)?;

    // one guard decade below the requested tail
    let goal = (target_tail / 10.0).ln();
    let tail_exp = s_f64 + 2.0 * CORRECTION_TERMS as f64 - 1.0;
    let mut n = ((log_remainder_bound(s_f64, 1) - goal) / tail_exp).exp().ceil().max(2.0) as u64;
    while log_remainder_bound(s_f64, n) > goal {
        n += 1;
    }
    if n > MAX_TERMS {
        return Err(Error::TargetUnreachable {
            target: target_tail,
            reason: format!("needs {n} Euler-Maclaurin terms"),
        });
    }

    let s = Float::with_val(prec, s);
    let mut sum = Float::with_val(prec, 0);
    for i in 1..n {
        let ln_i = Float::with_val(prec, i).ln();
        sum += (-(ln_i * &s)).exp();
    }
    let big_n = Float::with_val(prec, n);
    let n_pow_neg_s = Float::with_val(prec, (&big_n).pow(&-s.clone()));
    let s_minus_1 = Float::with_val(prec, &s - 1u32);
    sum += Float::with_val(prec, &n_pow_neg_s * &big_n) / &s_minus_1;
    sum += Float::with_val(prec, &n_pow_neg_s / 2u32);

    // Running pieces: (s)_(2j-1), (2j)!, N^(-s-2j+1).
    let mut rising = s.clone();
    let mut factorial = Float::with_val(prec, 2);
    let mut power = Float::with_val(prec, &n_pow_neg_s / &big_n);
    let n_sq = Float::with_val(prec, &big_n * &big_n);
    for j in 1..=CORRECTION_TERMS {
        let term = bernoulli(prec, j) / &factorial * &rising * &power;
        sum += term;
        let a = Float::with_val(prec, &s + (2 * j - 1) as u32);
        let b = Float::with_val(prec, &s + (2 * j) as u32);
        rising *= a * b;
        factorial *= ((2 * j + 1) * (2 * j + 2)) as u32;
        power /= &n_sq;
    }

    Ok(Precise::new(sum, remainder_bound(s_f64, n)))
}

/// `zeta(s)` for real `s >= 1.1`, with `tail <= target_tail`.
pub fn zeta_real(s: f64, target_tail: f64) -> Result<TailBounded> {
    validate(s, target_tail)?;
    Ok(zeta_precise(&Float::with_val(PRECISION_BITS, s), target_tail)?.to_tail_bounded())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::float::Constant;

    fn pi() -> Float {
        Float::with_val(PRECISION_BITS, Constant::Pi)
    }

    #[test]
    fn closed_forms() {
        let z2 = zeta_precise(&Float::with_val(PRECISION_BITS, 2), 1e-45).unwrap();
        let exact2 = pi().square() / 6u32;
        assert!(z2.tail <= 1e-45);
        assert!(Float::with_val(PRECISION_BITS, &z2.value - &exact2).abs().to_f64() <= z2.tail);

        let z4 = zeta_precise(&Float::with_val(PRECISION_BITS, 4), 1e-40).unwrap();
        let exact4 = pi().pow(4u32) / 90u32;
        assert!(Float::with_val(PRECISION_BITS, &z4.value - &exact4).abs().to_f64() <= z4.tail);
    }

    #[test]
    fn bernoulli_table_matches_even_zeta_values() {
        // zeta(2m) = (-1)^(m+1) B_2m (2 pi)^(2m) / (2 (2m)!)
        let prec = PRECISION_BITS;
        for m in 1..=CORRECTION_TERMS {
            let mut fact = Float::with_val(prec, 1);
            for i in 1..=(2 * m) as u32 {
                fact *= i;
            }
            let two_pi = Float::with_val(prec, pi() * 2u32);
            let mut from_b = bernoulli(prec, m) * two_pi.pow(2 * m as u32) / (fact * 2u32);
            if m % 2 == 0 {
                from_b = -from_b;
            }
            let reference = Float::with_val(prec, Float::zeta_u((2 * m) as u32));
            let rel = ((from_b - &reference) / &reference).abs().to_f64();
            assert!(rel < 1e-60, "m={m} rel={rel}");
        }
    }

    #[test]
    fn argument_and_target_validation() {
        assert!(zeta_real(1.0, 1e-10).is_err());
        assert!(zeta_real(1.05, 1e-10).is_err());
        assert!(zeta_real(f64::NAN, 1e-10).is_err());
        assert!(zeta_real(2.0, 0.0).is_err());
        assert!(matches!(zeta_real(2.0, 1e-70), Err(Error::TargetUnreachable { .. })));
    }

    #[test]
    fn tail_respects_target() {
        for &s in &[1.1, 1.5, 5.0 / 3.0, 2.0, 7.5, 40.0] {
            for &t in &[1e-8, 1e-20, 1e-40] {
                let z = zeta_real(s, t).unwrap();
                assert!(z.tail <= t, "s={s} t={t} tail={}", z.tail);
            }
        }
    }
}
