//! `z_k(c)` from its double-sum definition
//!
//! ```text
//! z_k(c) = sum_{r >= c} sum_{d >= 1} mu(d) mu_{k+1}(dr) w(dr)
//! ```
//!
//! Slow to converge; meant as an oracle at small `c`. Summing `|terms|`
//! over all pairs gives `sum_n mu_{k+1}(n) w(n) 2^omega(n)`, a known product,
//! so the unvisited pairs are bounded by that total minus what was visited.

use rayon::prelude::*;

use super::{local_weight, Diffraction};
use crate::error::{out_of_range, Error, Result};
use crate::numeric::CompensatedSum;
use crate::sieve::gcd;
use crate::special::TailBounded;

const CHUNK: u64 = 4096;
const ROUNDING: f64 = 1e-15;

/// Starting cutoffs of [`Diffraction::zk_definition_to_tail`].
pub const START_R_MAX: u64 = 50_000;
pub const START_D_MAX: u64 = 200;

struct RInfo {
    weight: f64,
    radical: u64,
    /// product of the primes dividing r exactly k times
    saturated: u64,
}

impl Diffraction<'_> {
    /// Truncated double sum over `r <= r_max`, `d <= d_max`.
    pub fn zk_definition(&self, c: u64, r_max: u64, d_max: u64) -> Result<TailBounded> {
        if c == 0 {
            return Err(out_of_range("c", 0, "[1, ...)"));
        }
        if r_max < c {
            return Err(out_of_range("r_max", r_max, format!("[{c}, ...)")));
        }
        if d_max == 0 {
            return Err(out_of_range("d_max", 0, "[1, ...)"));
        }
        let need = r_max.max(d_max);
        if need > self.sieve.limit() {
            return Err(Error::SieveTooSmall {
                needed: need,
                limit: self.sieve.limit(),
            });
        }
        let k = self.k;
        let sieve = self.sieve;

        let mut d_weight = vec![0.0f64; d_max as usize + 1];
        let mut d_list: Vec<(u64, i64)> = Vec::new();
        let mut buf = Vec::with_capacity(16);
        for d in 1..=d_max {
            let mu = sieve.mu_unchecked(d);
            if mu != 0 {
                sieve.factor_into(d, &mut buf);
                d_weight[d as usize] = buf.iter().map(|&(p, _)| local_weight(p, k)).product();
                d_list.push((d, i64::from(mu)));
            }
        }

        let n_chunks = r_max.div_ceil(CHUNK);
        let parts: Vec<(CompensatedSum, CompensatedSum)> = (0..n_chunks)
            .into_par_iter()
            .map(|i| {
                let lo = 1 + i * CHUNK;
                let hi = (lo + CHUNK - 1).min(r_max);
                let mut signed = CompensatedSum::new();
                let mut absolute = CompensatedSum::new();
                let mut buf = Vec::with_capacity(16);
                for r in lo..=hi {
                    let Some(info) = r_info(self, r, &mut buf) else {
                        continue;
                    };
                    let count_signed = r >= c;
                    for &(d, mu) in &d_list {
                        if info.saturated != 1 && gcd(d, info.saturated) != 1 {
                            continue;
                        }
                        let g = if info.radical == 1 { 1 } else { gcd(d, info.radical) };
                        let w = info.weight * d_weight[d as usize] / d_weight[g as usize];
                        absolute.add(w);
                        if count_signed {
                            signed.add(mu as f64 * w);
                        }
                    }
                }
                (signed, absolute)
            })
            .collect();
        let mut signed = CompensatedSum::new();
        let mut absolute = CompensatedSum::new();
        for (s, a) in &parts {
            signed.merge(s);
            absolute.merge(a);
        }
        let total = self.totals.divisor_weighted;
        let tail = (total.upper() - absolute.value()).max(0.0) + ROUNDING * total.value;
        Ok(TailBounded::new(signed.value(), tail))
    }

    /// [`Self::zk_definition`] with both cutoffs doubled until the tail is at
    /// most `target_tail` or the sieve runs out.
    pub fn zk_definition_to_tail(&self, c: u64, target_tail: f64) -> Result<(TailBounded, u64, u64)> {
        if !(target_tail > 0.0) {
            return Err(Error::InvalidArgument(format!("target tail must be positive, got {target_tail}")));
        }
        let mut r_max = START_R_MAX.max(c);
        let mut d_max = START_D_MAX;
        loop {
            let z = self.zk_definition(c, r_max, d_max)?;
            if z.tail <= target_tail {
                return Ok((z, r_max, d_max));
            }
            if 2 * r_max > self.sieve.limit() {
                return Err(Error::CutoffCap {
                    needed: 2 * r_max,
                    cap: self.sieve.limit(),
                });
            }
            r_max *= 2;
            d_max = d_max * 3 / 2;
        }
    }
}

fn r_info(d: &Diffraction<'_>, r: u64, buf: &mut Vec<(u64, u32)>) -> Option<RInfo> {
    let k = d.k;
    d.sieve.factor_into(r, buf);
    let mut weight = 1.0;
    let mut radical = 1;
    let mut saturated = 1;
    for &(p, e) in buf.iter() {
        if e > k {
            return None;
        }
        weight *= local_weight(p, k);
        radical *= p;
        if e == k {
            saturated *= p;
        }
    }
    Some(RInfo {
        weight,
        radical,
        saturated,
    })
}
