//! Near-origin diffraction intensity of the k-free integers.
//!
//! Three routes to the same quantities:
//!
//! * `Z_k(eps)`, the direct Bragg sum over peaks `m/q` with `0 < m/q <= eps`;
//! * `Z~_k(N)`, the same sum with `m <= q/N`, both from its definition and
//!   through `Z~_k(N) = sum_b z_k(Nb)`;
//! * `z_k(c)`, from its double-sum definition and from the factorised
//!   squarefree tail sum.
//!
//! All evaluators borrow one [`SieveTables`] and return rigorous tails.

mod definition;
mod factorised;
mod qsum;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::numeric::snapped_floor;
use crate::sieve::SieveTables;
use crate::special::constants::{factors, precise_constants};
use crate::special::{accelerated_euler_product, zeta_real, TailBounded};
use crate::validate_k;

pub use definition::{START_D_MAX, START_R_MAX};
pub use qsum::Threshold;

/// Smallest default q cutoff.
pub const MIN_DEFAULT_Q_MAX: u64 = 1_000_000;

/// Default target for the t-sums of the factorised form.
pub const DEFAULT_FACTORISED_TARGET: f64 = 1e-14;

/// Default explicit b range in `ztilde_via_zk`.
pub const DEFAULT_B_MAX: u64 = 16;

const TOTALS_TARGET: f64 = 1e-20;

/// `prod_{p | q} (p^k - 1)^-2`.
pub fn bragg_weight(q: u64, k: u32) -> f64 {
    assert!(q >= 1, "q must be positive");
    let mut w = 1.0;
    let mut m = q;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            w *= local_weight(p, k);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        w *= local_weight(m, k);
    }
    w
}

#[inline]
pub(crate) fn local_weight(p: u64, k: u32) -> f64 {
    let pk = (p as f64).powi(k as i32);
    1.0 / ((pk - 1.0) * (pk - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DirectBmp,
    ZtildeDefinition,
    ZtildeViaZk,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::DirectBmp => "direct-bmp",
            Method::ZtildeDefinition => "ztilde-definition",
            Method::ZtildeViaZk => "ztilde-via-zk",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" | "direct-bmp" => Ok(Method::DirectBmp),
            "definition" | "ztilde-definition" => Ok(Method::ZtildeDefinition),
            "via-zk" | "ztilde-via-zk" => Ok(Method::ZtildeViaZk),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Truncation parameters actually used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cutoffs {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b_max: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityResult {
    pub k: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<u64>,
    pub value: TailBounded,
    pub method: Method,
    pub cutoffs: Cutoffs,
}

/// Infinite sums and products the evaluators subtract partial sums from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    /// `zeta(k) = sum_q mu_{k+1}(q) w(q) phi(q)`
    pub zeta_k: TailBounded,
    /// `sum_q mu_{k+1}(q) w(q) 2^omega(q) = prod_p (1 + 2k (p^k-1)^-2)`
    pub divisor_weighted: TailBounded,
    /// `sum_t mu(t)^2 prod_{p|t} (p^k-2)^-1`
    pub weighted: TailBounded,
    /// `prod_p (1 - 2p^-k)^-1`, the largest value of `t^2k u(t)`
    pub max_local: TailBounded,
    pub xi: TailBounded,
}

impl Totals {
    pub fn compute(k: u32) -> Result<Self> {
        validate_k(k)?;
        let product = |f| accelerated_euler_product(&f, TOTALS_TARGET).map(|p| p.to_tail_bounded());
        Ok(Self {
            zeta_k: zeta_real(f64::from(k), TOTALS_TARGET)?,
            divisor_weighted: product(factors::bragg_divisor_total(k))?,
            weighted: product(factors::weighted_total(k))?,
            max_local: product(factors::max_local(k))?,
            xi: precise_constants(k, TOTALS_TARGET)?.xi.to_tail_bounded(),
        })
    }
}

/// Report of the two inequalities `Z~(N+1) <= Z(eps) <= Z~(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub k: u32,
    pub epsilon: f64,
    pub n: u64,
    pub lower: IntensityResult,
    pub direct: IntensityResult,
    pub upper: IntensityResult,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

impl SandwichReport {
    pub fn verdict(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// `N = floor(1/eps)`, snapped when `1/eps` is within rounding of an integer.
pub fn reciprocal_floor(epsilon: f64) -> u64 {
    snapped_floor(1.0 / epsilon)
}

pub(crate) fn validate_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(out_of_range("epsilon", epsilon, "(0, 1)"));
    }
    Ok(())
}

/// All evaluators for one `k`, borrowing a sieve.
#[derive(Debug, Clone)]
pub struct Diffraction<'s> {
    k: u32,
    sieve: &'s SieveTables,
    totals: Totals,
}

impl<'s> Diffraction<'s> {
    pub fn new(k: u32, sieve: &'s SieveTables) -> Result<Self> {
        Ok(Self::with_totals(k, sieve, Totals::compute(k)?))
    }

    /// Reuse totals computed earlier for the same `k`.
    pub fn with_totals(k: u32, sieve: &'s SieveTables, totals: Totals) -> Self {
        Self { k, sieve, totals }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn sieve(&self) -> &'s SieveTables {
        self.sieve
    }

    pub fn totals(&self) -> &Totals {
        &self.totals
    }

    /// `max(10^6, 100/eps)`, or an error when the sieve is too small for it.
    pub fn default_q_max(&self, epsilon: f64) -> Result<u64> {
        let want = MIN_DEFAULT_Q_MAX.max((100.0 / epsilon).ceil() as u64);
        self.check_q_max(want)?;
        Ok(want)
    }

    pub(crate) fn check_q_max(&self, q_max: u64) -> Result<()> {
        if q_max == 0 {
            return Err(out_of_range("q_max", 0, "[1, sieve limit]"));
        }
        if q_max > self.sieve.limit() {
            return Err(Error::SieveTooSmall {
                needed: q_max,
                limit: self.sieve.limit(),
            });
        }
        Ok(())
    }

    /// `Z~(N+1) <= Z(eps) <= Z~(N)` with `N = floor(1/eps)`, checked up to
    /// the combined tails. All three values share one q cutoff.
    pub fn sandwich_check(&self, epsilon: f64, q_max: Option<u64>) -> Result<SandwichReport> {
        validate_epsilon(epsilon)?;
        let n = reciprocal_floor(epsilon);
        let q_max = match q_max {
            Some(q) => q,
            None => self.default_q_max(epsilon)?,
        };
        let direct = self.z_direct(epsilon, Some(q_max))?;
        let mut both = self.ztilde_definition_many(&[n, n + 1], Some(q_max))?;
        let lower = both.pop().expect("two results");
        let upper = both.pop().expect("two results");
        let lower_holds = lower.value.lower() <= direct.value.upper();
        let upper_holds = direct.value.lower() <= upper.value.upper();
        Ok(SandwichReport {
            k: self.k,
            epsilon,
            n,
            lower,
            direct,
            upper,
            lower_holds,
            upper_holds,
        })
    }
}
