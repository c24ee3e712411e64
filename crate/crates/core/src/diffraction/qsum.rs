//! The Bragg q-sums behind `Z_k(eps)` and `Z~_k(N)`.
//!
//! For a threshold `x` (either `eps` or `1/N`) the intensity is
//! `sum_q mu_{k+1}(q) w(q) C_x(q)` with `C_x(q) = #{m <= qx : gcd(m, q) = 1}`.
//! Past the cutoff `Q` we use `C_x(q) = x phi(q) + O(2^(omega(q)-1))` and the
//! closed forms of `sum w phi` and `sum w 2^omega`:
//!
//! ```text
//! Z = sum_{q<=Q} w C + x (zeta(k) - sum_{q<=Q} w phi) + R,
//! |R| <= (sum_q w 2^omega - sum_{q<=Q} w 2^omega) / 2
//! ```
//!
//! One pass over `q <= Q` serves any number of thresholds.

use rayon::prelude::*;

use super::{local_weight, validate_epsilon, Cutoffs, Diffraction, IntensityResult, Method};
use crate::error::{out_of_range, Error, Result};
use crate::numeric::{snapped_floor, CompensatedSum};
use crate::special::TailBounded;

const CHUNK: u64 = 1 << 15;

/// Relative allowance for f64 rounding in the partial sums.
const ROUNDING: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// peaks `m/q <= eps`
    Epsilon(f64),
    /// peaks `m/q <= 1/N`
    Denominator(u64),
}

impl Threshold {
    /// `floor(q x)`.
    #[inline]
    fn numerator_limit(&self, q: u64) -> u64 {
        match *self {
            Threshold::Epsilon(e) => snapped_floor(q as f64 * e),
            Threshold::Denominator(n) => q / n,
        }
    }

    fn x(&self) -> f64 {
        match *self {
            Threshold::Epsilon(e) => e,
            Threshold::Denominator(n) => 1.0 / n as f64,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Partial {
    by_threshold: Vec<CompensatedSum>,
    phi: CompensatedSum,
    divisor: CompensatedSum,
}

impl Partial {
    fn new(n: usize) -> Self {
        Self {
            by_threshold: vec![CompensatedSum::new(); n],
            ..Default::default()
        }
    }

    fn merge(&mut self, other: &Partial) {
        for (a, b) in self.by_threshold.iter_mut().zip(&other.by_threshold) {
            a.merge(b);
        }
        self.phi.merge(&other.phi);
        self.divisor.merge(&other.divisor);
    }
}

impl Diffraction<'_> {
    fn q_pass(&self, thresholds: &[Threshold], q_max: u64) -> Partial {
        let k = self.k;
        let sieve = self.sieve;
        let n_chunks = q_max.div_ceil(CHUNK);
        let parts: Vec<Partial> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = 1 + c * CHUNK;
                let hi = (lo + CHUNK - 1).min(q_max);
                let mut acc = Partial::new(thresholds.len());
                let mut factors = Vec::with_capacity(16);
                let mut divisors: Vec<(u64, i64)> = Vec::with_capacity(256);
                for q in lo..=hi {
                    sieve.factor_into(q, &mut factors);
                    if factors.iter().any(|&(_, e)| e > k) {
                        continue;
                    }
                    let mut w = 1.0;
                    let mut phi = 1.0;
                    divisors.clear();
                    divisors.push((1, 1));
                    for &(p, e) in &factors {
                        w *= local_weight(p, k);
                        phi *= (p - 1) as f64 * (p as f64).powi(e as i32 - 1);
                        let len = divisors.len();
                        for i in 0..len {
                            let (d, m) = divisors[i];
                            divisors.push((d * p, -m));
                        }
                    }
                    acc.phi.add(w * phi);
                    acc.divisor.add(w * divisors.len() as f64);
                    for (t, sum) in thresholds.iter().zip(acc.by_threshold.iter_mut()) {
                        let m = t.numerator_limit(q);
                        if m == 0 {
                            continue;
                        }
                        let count: i64 = divisors.iter().map(|&(d, mu)| mu * (m / d) as i64).sum();
                        if count != 0 {
                            sum.add(w * count as f64);
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total = Partial::new(thresholds.len());
        for p in &parts {
            total.merge(p);
        }
        total
    }

    /// The explicit part `sum_{q <= q_max} mu_{k+1}(q) w(q) C_x(q)` alone,
    /// with no correction for larger q.
    pub fn truncated_bragg_sum(&self, threshold: Threshold, q_max: u64) -> Result<f64> {
        self.check_q_max(q_max)?;
        Ok(self.q_pass(&[threshold], q_max).by_threshold[0].value())
    }

    /// Intensities for many thresholds from one pass over `q <= q_max`.
    pub fn intensity_many(&self, thresholds: &[Threshold], q_max: u64) -> Result<Vec<TailBounded>> {
        self.check_q_max(q_max)?;
        for t in thresholds {
            match *t {
                Threshold::Epsilon(e) => validate_epsilon(e)?,
                Threshold::Denominator(0) => return Err(out_of_range("N", 0, "[1, ...)")),
                Threshold::Denominator(_) => {}
            }
        }
        let pass = self.q_pass(thresholds, q_max);
        let zeta_k = self.totals.zeta_k;
        let total_div = self.totals.divisor_weighted;
        let phi_sum = pass.phi.value();
        let div_sum = pass.divisor.value();
        let remainder_bound = ((total_div.upper() - div_sum) / 2.0).max(0.0) + ROUNDING * total_div.value;
        Ok(thresholds
            .iter()
            .zip(&pass.by_threshold)
            .map(|(t, s)| {
                let x = t.x();
                let main = x * (zeta_k.value - phi_sum);
                let value = s.value() + main;
                let tail = remainder_bound + x * zeta_k.tail + ROUNDING * value.abs();
                TailBounded::new(value, tail)
            })
            .collect())
    }

    /// [`Self::intensity_many`] with the cutoff grown until every tail is at
    /// most `target_tail`. Returns the values and the cutoff used.
    ///
    /// The remainder decays roughly like `Q^((1-2k)/k)`; the first pass
    /// calibrates that law and later passes extrapolate from it.
    pub fn intensity_many_to_tail(
        &self,
        thresholds: &[Threshold],
        start_q_max: u64,
        target_tail: f64,
    ) -> Result<(Vec<TailBounded>, u64)> {
        if !(target_tail > 0.0) {
            return Err(Error::InvalidArgument(format!("target tail must be positive, got {target_tail}")));
        }
        let limit = self.sieve.limit();
        let decay = f64::from(2 * self.k - 1) / f64::from(self.k);
        let mut q_max = start_q_max.min(limit);
        loop {
            let values = self.intensity_many(thresholds, q_max)?;
            let worst = values.iter().map(|v| v.tail).fold(0.0, f64::max);
            if worst <= target_tail {
                return Ok((values, q_max));
            }
            if q_max == limit {
                let needed = (q_max as f64 * (worst / target_tail).powf(1.0 / decay)).ceil() as u64;
                return Err(Error::CutoffCap { needed, cap: limit });
            }
            let grow = (1.25 * (worst / target_tail).powf(1.0 / decay)).max(2.0);
            q_max = ((q_max as f64 * grow).ceil() as u64).min(limit);
        }
    }

    /// Direct Bragg sum `Z_k(eps)`.
    pub fn z_direct(&self, epsilon: f64, q_max: Option<u64>) -> Result<IntensityResult> {
        Ok(self.z_direct_many(&[epsilon], q_max)?.remove(0))
    }

    /// [`Self::z_direct`] for a batch of epsilons sharing one q pass. Without
    /// an explicit cutoff the default for the smallest epsilon is used.
    pub fn z_direct_many(&self, epsilons: &[f64], q_max: Option<u64>) -> Result<Vec<IntensityResult>> {
        for &e in epsilons {
            validate_epsilon(e)?;
        }
        let smallest = epsilons.iter().copied().fold(f64::INFINITY, f64::min);
        if epsilons.is_empty() {
            return Ok(Vec::new());
        }
        let q_max = match q_max {
            Some(q) => {
                if (q as f64) * smallest < 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "q_max = {q} is below 1/eps = {}",
                        1.0 / smallest
                    )));
                }
                q
            }
            None => self.default_q_max(smallest)?,
        };
        let thresholds: Vec<Threshold> = epsilons.iter().map(|&e| Threshold::Epsilon(e)).collect();
        let values = self.intensity_many(&thresholds, q_max)?;
        Ok(epsilons
            .iter()
            .zip(values)
            .map(|(&e, value)| IntensityResult {
                k: self.k,
                epsilon: Some(e),
                n: None,
                value,
                method: Method::DirectBmp,
                cutoffs: Cutoffs {
                    q_max: Some(q_max),
                    ..Default::default()
                },
            })
            .collect())
    }

    /// `Z~_k(N)` from its defining q-sum.
    pub fn ztilde_definition(&self, n: u64, q_max: Option<u64>) -> Result<IntensityResult> {
        Ok(self.ztilde_definition_many(&[n], q_max)?.remove(0))
    }

    pub fn ztilde_definition_many(&self, ns: &[u64], q_max: Option<u64>) -> Result<Vec<IntensityResult>> {
        if ns.is_empty() {
            return Ok(Vec::new());
        }
        let q_max = match q_max {
            Some(q) => q,
            None => {
                let largest = *ns.iter().max().expect("non-empty");
                let want = super::MIN_DEFAULT_Q_MAX.max(largest.saturating_mul(100));
                self.check_q_max(want)?;
                want
            }
        };
        let thresholds: Vec<Threshold> = ns.iter().map(|&n| Threshold::Denominator(n)).collect();
        let values = self.intensity_many(&thresholds, q_max)?;
        Ok(ns
            .iter()
            .zip(values)
            .map(|(&n, value)| IntensityResult {
                k: self.k,
                epsilon: None,
                n: Some(n),
                value,
                method: Method::ZtildeDefinition,
                cutoffs: Cutoffs {
                    q_max: Some(q_max),
                    ..Default::default()
                },
            })
            .collect())
    }
}
