//! The constants attached to the k-free integers.
//!
//! ```text
//! xi_k    = prod_p (1 - (p^k - 1)^-2)
//! gamma_k = zeta(2)^-1 prod_p (1 + 2 / ((p+1)(p^k - 2)))
//! c_k     = 2k/(2k-1) * zeta(2-1/k)/zeta(2) * zeta(k)^2 * prod_p (1 - 2p / ((p+1) p^k))
//! ```
//!
//! `c_k` is evaluated from its own product, independently of `xi_k` and
//! `gamma_k`, so the relation `gamma_k xi_k zeta(2-1/k)/(2k-1) = c_k/(2k)`
//! is a genuine cross-check.

use rug::Float;
use serde::{Deserialize, Serialize};

use super::euler::{accelerated_euler_product, RationalFactor};
use super::zeta::zeta_precise;
use super::{Precise, TailBounded, PRECISION_BITS};
use crate::error::{Error, Result};
use crate::validate_k;

/// Local factors written as rational functions of `y = 1/p`.
pub mod factors {
    use super::RationalFactor;

    fn poly(terms: &[(u32, i64)]) -> Vec<i64> {
        let deg = terms.iter().map(|&(d, _)| d).max().unwrap_or(0) as usize;
        let mut out = vec![0i64; deg + 1];
        for &(d, c) in terms {
            out[d as usize] += c;
        }
        out
    }

    fn make(num: &[(u32, i64)], den: &[(u32, i64)]) -> RationalFactor {
        RationalFactor::new(poly(num), poly(den)).expect("constant terms are 1")
    }

    /// `1 - (p^k - 1)^-2`
    pub fn xi(k: u32) -> RationalFactor {
        make(&[(0, 1), (k, -2)], &[(0, 1), (k, -2), (2 * k, 1)])
    }

    /// `1 + 2 / ((p+1)(p^k - 2))`
    pub fn gamma_zeta2(k: u32) -> RationalFactor {
        make(&[(0, 1), (1, 1), (k, -2)], &[(0, 1), (1, 1), (k, -2), (k + 1, -2)])
    }

    /// `1 - 2p / ((p+1) p^k)`
    pub fn c_display(k: u32) -> RationalFactor {
        make(&[(0, 1), (1, 1), (k, -2)], &[(0, 1), (1, 1)])
    }

    /// `1 + 2k (p^k - 1)^-2`
    pub fn bragg_divisor_total(k: u32) -> RationalFactor {
        make(&[(0, 1), (k, -2), (2 * k, 1 + 2 * i64::from(k))], &[(0, 1), (k, -2), (2 * k, 1)])
    }

    /// `1 + 1/(p^k - 2)`
    pub fn weighted_total(k: u32) -> RationalFactor {
        make(&[(0, 1), (k, -1)], &[(0, 1), (k, -2)])
    }

    /// `(1 - 2p^-k)^-1`
    pub fn max_local(k: u32) -> RationalFactor {
        make(&[(0, 1)], &[(0, 1), (k, -2)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KfreeConstants {
    pub k: u32,
    pub xi_k: TailBounded,
    pub gamma_k: TailBounded,
    pub c_k: TailBounded,
}

/// Full-precision constants together with the zeta values used.
#[derive(Debug, Clone)]
pub struct PreciseConstants {
    pub k: u32,
    pub xi: Precise,
    pub gamma: Precise,
    pub c: Precise,
    pub zeta_2: Precise,
    pub zeta_k: Precise,
    /// `zeta(2 - 1/k)`
    pub zeta_shifted: Precise,
}

impl PreciseConstants {
    pub fn to_f64(&self) -> KfreeConstants {
        KfreeConstants {
            k: self.k,
            xi_k: self.xi.to_tail_bounded(),
            gamma_k: self.gamma.to_tail_bounded(),
            c_k: self.c.to_tail_bounded(),
        }
    }

    /// `gamma_k xi_k zeta(2-1/k) / (2k-1)`
    pub fn identity_lhs(&self) -> Precise {
        let denom = Float::with_val(PRECISION_BITS, 2 * self.k - 1).recip();
        self.gamma.mul(&self.xi).mul(&self.zeta_shifted).scale(&denom)
    }

    /// `c_k / (2k)`
    pub fn identity_rhs(&self) -> Precise {
        let denom = Float::with_val(PRECISION_BITS, 2 * self.k).recip();
        self.c.scale(&denom)
    }

    /// `(|lhs - rhs|, tail_lhs + tail_rhs)`
    pub fn identity_gap(&self) -> (f64, f64) {
        let lhs = self.identity_lhs();
        let rhs = self.identity_rhs();
        let gap = Float::with_val(PRECISION_BITS, &lhs.value - &rhs.value).abs().to_f64();
        (gap, lhs.tail + rhs.tail)
    }
}

/// `zeta(2 - 1/k)`, with the argument formed at working precision.
fn zeta_shifted(k: u32, target: f64) -> Result<Precise> {
    let s = Float::with_val(PRECISION_BITS, 2 * k - 1) / k;
    zeta_precise(&s, target)
}

fn check(name: &str, x: &Precise, target: f64) -> Result<()> {
    if x.tail > target {
        return Err(Error::TargetUnreachable {
            target,
            reason: format!("{name} finished with tail {:e}", x.tail),
        });
    }
    Ok(())
}

/// All constants for `k`, each with `tail <= target_tail`.
pub fn precise_constants(k: u32, target_tail: f64) -> Result<PreciseConstants> {
    validate_k(k)?;
    if !(target_tail > 0.0 && target_tail.is_finite()) {
        return Err(Error::InvalidArgument(format!("target tail must be positive, got {target_tail}")));
    }
    let piece = target_tail / 64.0;
    let kf = Float::with_val(PRECISION_BITS, k);

    let xi = accelerated_euler_product(&factors::xi(k), piece)?;
    let zeta_2 = zeta_precise(&Float::with_val(PRECISION_BITS, 2), piece)?;
    let zeta_k = zeta_precise(&kf, piece)?;
    let zeta_shifted = zeta_shifted(k, piece)?;

    let gamma_product = accelerated_euler_product(&factors::gamma_zeta2(k), piece)?;
    let gamma = gamma_product.div(&zeta_2).expect("zeta(2) is far from 0");

    let c_product = accelerated_euler_product(&factors::c_display(k), piece)?;
    let lead = Float::with_val(PRECISION_BITS, 2 * k) / Float::with_val(PRECISION_BITS, 2 * k - 1);
    let c = zeta_shifted
        .div(&zeta_2)
        .expect("zeta(2) is far from 0")
        .mul(&zeta_k)
        .mul(&zeta_k)
        .mul(&c_product)
        .scale(&lead);

    check("xi_k", &xi, target_tail)?;
    check("gamma_k", &gamma, target_tail)?;
    check("c_k", &c, target_tail)?;
    Ok(PreciseConstants {
        k,
        xi,
        gamma,
        c,
        zeta_2,
        zeta_k,
        zeta_shifted,
    })
}

/// `xi_k`, `gamma_k`, `c_k` with tails at most `target_tail`.
pub fn constants_for_k(k: u32, target_tail: f64) -> Result<KfreeConstants> {
    Ok(precise_constants(k, target_tail)?.to_f64())
}
