//! Euler products with rigorous truncation tails.
//!
//! [`euler_product`] multiplies local factors up to a prime cutoff and bounds
//! the rest from a decay hypothesis `|f(p) - 1| <= A / p^beta`:
//!
//! ```text
//! |log prod_{p>P} f(p)| <= sum_{n>P} 2A/n^beta <= 2A P^(1-beta) / (beta-1)
//! ```
//!
//! [`accelerated_euler_product`] handles local factors that are rational
//! functions of `y = 1/p` with integer coefficients. It divides out
//! `prod_j (1 - y^j)^(-a_j)` for `j <= ORDER`, which turns the bulk of the
//! product into `prod_j zeta(j)^(a_j)`, and leaves a remainder factor equal
//! to `1 + O(p^-(ORDER+1))`. The remainder's decay constant comes from a
//! Cauchy estimate on a disc where numerator and denominator stay away from
//! zero.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use super::zeta::zeta_precise;
use super::{Precise, MIN_TARGET_TAIL, PRECISION_BITS};
use crate::error::{Error, Result};
use crate::sieve::segmented::primes_up_to;

/// Largest prime cutoff any product will use.
pub const MAX_PRIME_CUTOFF: u64 = 100_000_000;

/// Number of zeta factors peeled off by the accelerated product.
pub const ACCELERATION_ORDER: usize = 24;

/// Smallest tail the accelerated product will promise.
pub const MIN_PRODUCT_TAIL: f64 = 1e-40;

const CHUNK: usize = 2048;
const SAMPLES: usize = 32;

/// `|f(p) - 1| <= constant / p^exponent` for every prime `p >= from_prime`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub constant: f64,
    pub exponent: f64,
    pub from_prime: u64,
}

impl DecayBound {
    /// `|f(p) - 1| <= A / p^2` for all primes.
    pub fn quadratic(constant: f64) -> Self {
        Self {
            constant,
            exponent: 2.0,
            from_prime: 2,
        }
    }

    pub fn at(&self, p: u64) -> f64 {
        self.constant * (p as f64).powf(-self.exponent)
    }

    /// Bound on `|log prod_{p > cutoff} f(p)|`.
    pub fn log_tail_beyond(&self, cutoff: u64) -> f64 {
        if self.constant == 0.0 {
            return 0.0;
        }
        let beta = self.exponent;
        2.0 * self.constant * (cutoff as f64).powf(1.0 - beta) / (beta - 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.constant >= 0.0 && self.constant.is_finite()) {
            return Err(Error::InvalidArgument(format!("decay constant must be finite and >= 0, got {}", self.constant)));
        }
        if !(self.exponent > 1.0 && self.exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!("decay exponent must exceed 1, got {}", self.exponent)));
        }
        Ok(())
    }
}

fn check_decay<F>(local_factor: &F, decay: &DecayBound, primes: &[u64]) -> Result<()>
where
    F: Fn(u64) -> Float,
{
    let eligible: Vec<u64> = primes.iter().copied().filter(|&p| p >= decay.from_prime).collect();
    let head = eligible.iter().take(SAMPLES);
    let tail = eligible.iter().rev().take(SAMPLES);
    for &p in head.chain(tail) {
        let dev = Float::with_val(PRECISION_BITS, local_factor(p) - 1u32).abs().to_f64();
        let bound = decay.at(p);
        if dev > bound * (1.0 + 1e-12) {
            return Err(Error::DecayViolated {
                prime: p,
                deviation: dev,
                bound,
            });
        }
    }
    Ok(())
}

/// `prod_{p <= prime_cutoff} f(p)` with the tail of the infinite product
/// bounded from `decay`.
///
/// The decay hypothesis is checked on a sample of primes; the partial
/// product is formed over fixed-size chunks combined in chunk order, so the
/// result is identical whatever the thread count.
pub fn euler_product<F>(local_factor: F, decay: DecayBound, prime_cutoff: u64) -> Result<Precise>
where
    F: Fn(u64) -> Float + Sync,
{
    decay.validate()?;
    if prime_cutoff > MAX_PRIME_CUTOFF {
        return Err(Error::CutoffCap {
            needed: prime_cutoff,
            cap: MAX_PRIME_CUTOFF,
        });
    }
    if decay.constant > 0.0 && prime_cutoff + 1 < decay.from_prime {
        return Err(Error::InvalidArgument(format!(
            "cutoff {prime_cutoff} is below the first prime {} covered by the decay bound",
            decay.from_prime
        )));
    }
    if decay.at(prime_cutoff + 1) > 0.5 {
        return Err(Error::InvalidArgument(format!(
            "cutoff {prime_cutoff} too small: decay bound exceeds 1/2 beyond it"
        )));
    }
    let primes = primes_up_to(prime_cutoff);
    check_decay(&local_factor, &decay, &primes)?;

    let partials: Vec<Float> = primes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Float::with_val(PRECISION_BITS, 1);
            for &p in chunk {
                acc *= local_factor(p);
            }
            acc
        })
        .collect();
    let mut value = Float::with_val(PRECISION_BITS, 1);
    for part in &partials {
        value *= part;
    }

    let log_tail = decay.log_tail_beyond(prime_cutoff);
    let tail = value.to_f64().abs() * log_tail.exp_m1();
    Ok(Precise::new(value, tail))
}

/// [`euler_product`] with the cutoff grown until `tail <= target_tail`.
pub fn euler_product_to_tail<F>(local_factor: F, decay: DecayBound, target_tail: f64) -> Result<Precise>
where
    F: Fn(u64) -> Float + Sync,
{
    decay.validate()?;
    if !(target_tail > 0.0) {
        return Err(Error::InvalidArgument(format!("target tail must be positive, got {target_tail}")));
    }
    if decay.constant == 0.0 {
        return euler_product(local_factor, decay, 1);
    }
    // Aim the log-tail one decade below the target and assume |value| <= 2.
    let beta = decay.exponent;
    let wanted = target_tail / 20.0;
    let estimate = (2.0 * decay.constant / ((beta - 1.0) * wanted)).powf(1.0 / (beta - 1.0));
    let half_point = (2.0 * decay.constant).powf(1.0 / beta);
    let mut cutoff = estimate.max(half_point).max(decay.from_prime as f64).max(2.0).ceil();
    loop {
        if cutoff > MAX_PRIME_CUTOFF as f64 {
            return Err(Error::CutoffCap {
                needed: cutoff as u64,
                cap: MAX_PRIME_CUTOFF,
            });
        }
        let result = euler_product(&local_factor, decay, cutoff as u64)?;
        if result.tail <= target_tail {
            return Ok(result);
        }
        cutoff *= 2.0;
    }
}

/// A local factor `N(y) / D(y)` in `y = 1/p`, both integer polynomials with
/// constant term 1. Coefficients are listed from `y^0` upward.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalFactor {
    numerator: Vec<i64>,
    denominator: Vec<i64>,
}

impl RationalFactor {
    pub fn new(numerator: Vec<i64>, denominator: Vec<i64>) -> Result<Self> {
        if numerator.first() != Some(&1) || denominator.first() != Some(&1) {
            return Err(Error::InvalidArgument(
                "numerator and denominator need constant term 1".into(),
            ));
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    pub fn eval(&self, p: u64) -> Float {
        let y = Float::with_val(PRECISION_BITS, 1) / Float::with_val(PRECISION_BITS, p);
        horner(&self.numerator, &y) / horner(&self.denominator, &y)
    }

    pub fn eval_f64(&self, p: u64) -> f64 {
        let y = 1.0 / p as f64;
        let h = |c: &[i64]| c.iter().rev().fold(0.0, |acc, &a| acc * y + a as f64);
        h(&self.numerator) / h(&self.denominator)
    }

    /// Power series of `N/D` through `y^order`.
    fn series(&self, order: usize) -> Result<Vec<i128>> {
        let mut inv = vec![0i128; order + 1];
        inv[0] = 1;
        for n in 1..=order {
            let mut acc = 0i128;
            for (i, &d) in self.denominator.iter().enumerate().skip(1).take_while(|&(i, _)| i <= n) {
                acc = acc
                    .checked_add(i128::from(d).checked_mul(inv[n - i]).ok_or(Error::Overflow("inverting a series"))?)
                    .ok_or(Error::Overflow("inverting a series"))?;
            }
            inv[n] = -acc;
        }
        let num: Vec<i128> = self.numerator.iter().map(|&c| i128::from(c)).collect();
        mul_trunc(&num, &inv, order)
    }

    /// Exponents `a_j` (`j = 1..=order`, index 0 unused) such that
    /// `N/D * prod_j (1 - y^j)^(a_j) = 1 + O(y^(order+1))`.
    pub fn zeta_exponents(&self, order: usize) -> Result<Vec<i64>> {
        let mut g = self.series(order)?;
        let mut exps = vec![0i64; order + 1];
        for j in 1..=order {
            let a = g[j];
            if a == 0 {
                continue;
            }
            let binom = binomial_series(a, j, order)?;
            g = mul_trunc(&g, &binom, order)?;
            debug_assert_eq!(g[j], 0);
            exps[j] = i64::try_from(a).map_err(|_| Error::Overflow("peeling zeta factors"))?;
        }
        Ok(exps)
    }
}

fn horner(coeffs: &[i64], y: &Float) -> Float {
    let mut acc = Float::with_val(PRECISION_BITS, 0);
    for &c in coeffs.iter().rev() {
        acc *= y;
        acc += c;
    }
    acc
}

fn mul_trunc(a: &[i128], b: &[i128], order: usize) -> Result<Vec<i128>> {
    let mut out = vec![0i128; order + 1];
    for (i, &x) in a.iter().enumerate().take(order + 1) {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(order + 1 - i) {
            let t = x.checked_mul(y).ok_or(Error::Overflow("multiplying series"))?;
            out[i + j] = out[i + j].checked_add(t).ok_or(Error::Overflow("multiplying series"))?;
        }
    }
    Ok(out)
}

/// Coefficients of `(1 - y^j)^a` through `y^order`, for any integer `a`.
fn binomial_series(a: i128, j: usize, order: usize) -> Result<Vec<i128>> {
    let mut out = vec![0i128; order + 1];
    let mut c: i128 = 1; // C(a, m)
    for m in 0..=order / j {
        if m > 0 {
            c = c
                .checked_mul(a - (m as i128 - 1))
                .ok_or(Error::Overflow("expanding a binomial"))?
                / m as i128;
        }
        out[j * m] = if m % 2 == 0 { c } else { -c };
    }
    Ok(out)
}

/// `prod_p N(1/p) / D(1/p)` with `tail <= target_tail`.
pub fn accelerated_euler_product(factor: &RationalFactor, target_tail: f64) -> Result<Precise> {
    if !(target_tail > 0.0) {
        return Err(Error::InvalidArgument(format!("target tail must be positive, got {target_tail}")));
    }
    if target_tail < MIN_PRODUCT_TAIL {
        return Err(Error::TargetUnreachable {
            target: target_tail,
            reason: format!("below the product precision floor {MIN_PRODUCT_TAIL:e}"),
        });
    }
    let order = ACCELERATION_ORDER;
    let exps = factor.zeta_exponents(order)?;
    if exps[1] != 0 {
        return Err(Error::InvalidArgument(
            "local factor has a 1/p term; its Euler product diverges".into(),
        ));
    }

    // Rough size of the product, only used to turn the absolute target into
    // relative budgets.
    let rough: f64 = primes_up_to(1000).iter().map(|&p| factor.eval_f64(p)).product();
    let scale = (2.0 * rough.abs()).max(1.0);
    let rel_budget = target_tail / scale;

    // zeta part: relative error <= exp(sum |a_j| t_j / (zeta_j - t_j)) - 1
    let active: Vec<(usize, i64)> = (2..=order).filter(|&j| exps[j] != 0).map(|j| (j, exps[j])).collect();
    let mut zeta_part = Float::with_val(PRECISION_BITS, 1);
    let mut zeta_log_err = 0.0;
    for &(j, a) in &active {
        let t = (rel_budget / (4.0 * active.len() as f64 * a.unsigned_abs() as f64)).max(MIN_TARGET_TAIL);
        let z = zeta_precise(&Float::with_val(PRECISION_BITS, j), t)?;
        zeta_log_err += a.unsigned_abs() as f64 * z.tail / (z.to_f64() - z.tail);
        let pow = if let Ok(a32) = i32::try_from(a) {
            Float::with_val(PRECISION_BITS, (&z.value).pow(a32))
        } else {
            (z.value.ln() * Float::with_val(PRECISION_BITS, a)).exp()
        };
        zeta_part *= pow;
    }
    let zeta_part = Precise::new(zeta_part.clone(), zeta_part.to_f64().abs() * zeta_log_err.exp_m1());

    let decay = remainder_decay(factor, &exps)?;
    let remainder_factor = |p: u64| {
        let y = Float::with_val(PRECISION_BITS, 1) / Float::with_val(PRECISION_BITS, p);
        let mut r = factor.eval(p);
        for &(j, a) in &active {
            let base = Float::with_val(PRECISION_BITS, 1u32 - Float::with_val(PRECISION_BITS, (&y).pow(j as u32)));
            r *= base.pow(a as i32);
        }
        r
    };
    let rem_target = rel_budget / 4.0;
    let remainder = euler_product_to_tail(remainder_factor, decay, rem_target)?;

    let product = zeta_part.mul(&remainder);
    // working-precision rounding, far below any tail we promise
    let rounding = product.to_f64().abs() * 2f64.powi(-(PRECISION_BITS as i32) + 32);
    Ok(Precise::new(product.value, product.tail + rounding))
}

/// Decay bound for the remainder factor `r(y) = N/D * prod (1-y^j)^(a_j)`.
///
/// `R = log r` vanishes to order `ORDER + 1` at `y = 0` and is analytic on
/// `|y| <= rho` once both `|N - 1|` and `|D - 1|` are at most 1/2 there, with
/// `|R| <= M`. Cauchy then gives `|R(y)| <= M (|y|/rho)^(ORDER+1) / (1 - |y|/rho)`.
fn remainder_decay(factor: &RationalFactor, exps: &[i64]) -> Result<DecayBound> {
    let order = exps.len() - 1;
    let excess = |coeffs: &[i64], rho: f64| -> f64 {
        coeffs.iter().enumerate().skip(1).map(|(i, &c)| c.unsigned_abs() as f64 * rho.powi(i as i32)).sum()
    };
    let mut rho = 0.5f64;
    while excess(&factor.numerator, rho) > 0.5 || excess(&factor.denominator, rho) > 0.5 {
        rho /= 2.0;
        if rho < 1e-6 {
            return Err(Error::InvalidArgument("local factor has no usable zero-free disc".into()));
        }
    }
    let log_bound = |eta: f64| -(1.0 - eta).ln();
    let mut m = log_bound(excess(&factor.numerator, rho)) + log_bound(excess(&factor.denominator, rho));
    for (j, &a) in exps.iter().enumerate().skip(1) {
        m += a.unsigned_abs() as f64 * log_bound(rho.powi(j as i32));
    }
    // 5% slack for f64 rounding in the bound itself
    let m = m * 1.05;
    let beta = (order + 1) as f64;
    // For p >= 2/rho: |R| <= 2M (rho p)^-beta; with |R| <= 1/4 also
    // |r - 1| <= 2|R|.
    let constant = 4.0 * m * rho.powf(-beta);
    let small_r = (8.0 * m).powf(1.0 / beta) / rho;
    let from_prime = (2.0 / rho).max(small_r).ceil() as u64;
    Ok(DecayBound {
        constant,
        exponent: beta,
        from_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::float::Constant;

    fn inv_zeta2() -> f64 {
        let pi = Float::with_val(PRECISION_BITS, Constant::Pi);
        (Float::with_val(PRECISION_BITS, 6) / pi.square()).to_f64()
    }

    #[test]
    fn identity_factor_is_exact() {
        let r = euler_product(|_| Float::with_val(PRECISION_BITS, 1), DecayBound::quadratic(0.0), 1000).unwrap();
        assert_eq!(r.to_f64(), 1.0);
        assert_eq!(r.tail, 0.0);
    }

    #[test]
    fn classical_product_gives_inverse_zeta2() {
        let f = |p: u64| Float::with_val(PRECISION_BITS, 1) - Float::with_val(PRECISION_BITS, p * p).recip();
        let r = euler_product(f, DecayBound::quadratic(1.0), 100_000).unwrap();
        assert!(r.to_tail_bounded().contains(inv_zeta2()));
        assert!(r.tail < 3e-5);
    }

    #[test]
    fn decay_violation_detected() {
        // 1 + 1/p does not decay quadratically
        let f = |p: u64| Float::with_val(PRECISION_BITS, 1) + Float::with_val(PRECISION_BITS, p).recip();
        let err = euler_product(f, DecayBound::quadratic(1.0), 1000).unwrap_err();
        assert!(matches!(err, Error::DecayViolated { .. }));
    }

    #[test]
    fn cap_is_enforced() {
        let f = |p: u64| Float::with_val(PRECISION_BITS, 1) - Float::with_val(PRECISION_BITS, p * p).recip();
        let err = euler_product_to_tail(f, DecayBound::quadratic(1.0), 1e-12).unwrap_err();
        assert!(matches!(err, Error::CutoffCap { .. }));
    }

    #[test]
    fn zeta_exponents_peel_simple_factors() {
        // 1 - y^2 = (1 - y^2)^1: a single zeta(2)^-1
        let f = RationalFactor::new(vec![1, 0, -1], vec![1]).unwrap();
        let e = f.zeta_exponents(10).unwrap();
        assert_eq!(e[2], -1);
        assert!(e.iter().enumerate().all(|(j, &a)| j == 2 || a == 0));
        // (1 - y^2)^-2 peels off zeta(2)^2
        let g = RationalFactor::new(vec![1], vec![1, 0, -2, 0, 1]).unwrap();
        assert_eq!(g.zeta_exponents(10).unwrap()[2], 2);
    }

    #[test]
    fn accelerated_matches_closed_form() {
        // prod (1 - p^-2) = 1/zeta(2)
        let f = RationalFactor::new(vec![1, 0, -1], vec![1]).unwrap();
        let r = accelerated_euler_product(&f, 1e-30).unwrap();
        assert!(r.tail <= 1e-30);
        let pi = Float::with_val(PRECISION_BITS, Constant::Pi);
        let exact = Float::with_val(PRECISION_BITS, 6) / pi.square();
        let err = Float::with_val(PRECISION_BITS, &r.value - &exact).abs().to_f64();
        assert!(err <= r.tail.max(1e-60), "err={err:e} tail={:e}", r.tail);
    }

    #[test]
    fn accelerated_matches_plain_product() {
        // prod (1 - 2/(p(p+1))), slowly convergent when done directly
        let f = RationalFactor::new(vec![1, 1, -2], vec![1, 1]).unwrap();
        let fast = accelerated_euler_product(&f, 1e-25).unwrap();
        let plain = euler_product(|p| f.eval(p), DecayBound::quadratic(2.0), 200_000).unwrap();
        assert!(fast.to_tail_bounded().agrees_with(&plain.to_tail_bounded()));
        assert!(plain.tail < 1e-4 && fast.tail <= 1e-25);
    }

    #[test]
    fn binomial_series_negative_exponent() {
        // (1 - y)^-2 = 1 + 2y + 3y^2 + ...
        let s = binomial_series(-2, 1, 5).unwrap();
        assert_eq!(s, vec![1, 2, 3, 4, 5, 6]);
        // (1 - y^2)^3 = 1 - 3y^2 + 3y^4 - y^6
        let s = binomial_series(3, 2, 8).unwrap();
        assert_eq!(s, vec![1, 0, -3, 0, 3, 0, -1, 0, 0]);
    }
}
