//! `z_k(c)` in factorised form and `Z~_k(N) = sum_b z_k(Nb)`.
//!
//! ```text
//! z_k(c) = xi_k sum_{t^k >= c} mu(t)^2 u(t),   u(t) = prod_{p|t} 1/(p^k (p^k - 2))
//! ```
//!
//! Since `t^2k u(t) <= prod_p (1 - 2p^-k)^-1 =: Pi`, cutting the t-sum at `T`
//! loses at most `Pi T^(1-2k) / (2k-1)`.
//!
//! Summing over b exchanges the order: `Z~_k(N) = xi_k sum_t mu^2 u(t) floor(t^k/N)`.
//! The first `b_max` multiples are summed explicitly, and the remaining ones
//! are handled in closed form through `sum_t mu(t)^2 u(t) t^k = sum_t mu(t)^2 v(t)`
//! with `v(t) = prod_{p|t} 1/(p^k - 2)`.

use super::{Cutoffs, Diffraction, IntensityResult, Method, DEFAULT_B_MAX, DEFAULT_FACTORISED_TARGET};
use crate::error::{out_of_range, Error, Result};
use crate::numeric::{ceil_root, pow_mod, CompensatedSum};
use crate::special::TailBounded;

const ROUNDING: f64 = 1e-15;

/// Explicit t range beyond the smallest index, as a multiple of it.
const RELATIVE_SPAN: u64 = 32;

impl Diffraction<'_> {
    /// `(u(t), v(t))` for squarefree `t`, `None` otherwise.
    #[inline]
    fn uv(&self, t: u64, buf: &mut Vec<(u64, u32)>) -> Option<(f64, f64)> {
        self.sieve.factor_into(t, buf);
        let mut u = 1.0;
        let mut v = 1.0;
        for &(p, e) in buf.iter() {
            if e > 1 {
                return None;
            }
            let pk = (p as f64).powi(self.k as i32);
            u /= pk * (pk - 2.0);
            v /= pk - 2.0;
        }
        Some((u, v))
    }

    fn t_sum_tail(&self, t_max: u64) -> f64 {
        let k2 = f64::from(2 * self.k);
        self.totals.max_local.upper() * (t_max as f64).powf(1.0 - k2) / (k2 - 1.0)
    }

    /// Smallest `T` whose truncation bound, times `xi`, is at most `target`.
    fn t_for_target(&self, target: f64) -> u64 {
        let k2 = f64::from(2 * self.k);
        let need = self.totals.xi.upper() * self.totals.max_local.upper() / ((k2 - 1.0) * target);
        need.powf(1.0 / (k2 - 1.0)).ceil().max(1.0) as u64
    }

    fn check_t_max(&self, t_max: u64) -> Result<()> {
        if t_max > self.sieve.limit() {
            return Err(Error::SieveTooSmall {
                needed: t_max,
                limit: self.sieve.limit(),
            });
        }
        Ok(())
    }

    /// Default cutoff for `z_k(c)`: meets [`DEFAULT_FACTORISED_TARGET`] and
    /// runs well past the first index so the relative error stays small.
    pub fn default_t_max(&self, c: u64) -> Result<u64> {
        let t0 = ceil_root(c, self.k);
        let abs = self.t_for_target(DEFAULT_FACTORISED_TARGET);
        self.check_t_max(abs)?;
        Ok(abs.max(t0.saturating_mul(RELATIVE_SPAN).min(self.sieve.limit())).max(t0))
    }

    /// `z_k(c)` from the factorised tail sum.
    pub fn zk_factorised(&self, c: u64, t_max: Option<u64>) -> Result<TailBounded> {
        Ok(self.zk_factorised_with_cutoff(c, t_max)?.0)
    }

    /// [`Self::zk_factorised`] together with the cutoff used.
    pub fn zk_factorised_with_cutoff(&self, c: u64, t_max: Option<u64>) -> Result<(TailBounded, u64)> {
        if c == 0 {
            return Err(out_of_range("c", 0, "[1, ...)"));
        }
        let t0 = ceil_root(c, self.k);
        let t_max = match t_max {
            Some(t) => t,
            None => self.default_t_max(c)?,
        };
        if t_max < t0 {
            return Err(out_of_range("t_max", t_max, format!("[{t0}, ...)")));
        }
        self.check_t_max(t_max)?;
        let mut buf = Vec::with_capacity(16);
        let mut sum = CompensatedSum::new();
        for t in t0..=t_max {
            if let Some((u, _)) = self.uv(t, &mut buf) {
                sum.add(u);
            }
        }
        let s = TailBounded::new(sum.value(), self.t_sum_tail(t_max) + ROUNDING * sum.value());
        Ok((self.totals.xi * s, t_max))
    }

    /// `Z~_k(N)` via `sum_b z_k(Nb)`.
    pub fn ztilde_via_zk(&self, n: u64, b_max: Option<u64>, t_max: Option<u64>) -> Result<IntensityResult> {
        self.ztilde_via_zk_target(n, b_max, t_max, DEFAULT_FACTORISED_TARGET)
    }

    /// [`Self::ztilde_via_zk`] with an explicit tail target for the automatic
    /// `t_max`.
    pub fn ztilde_via_zk_target(
        &self,
        n: u64,
        b_max: Option<u64>,
        t_max: Option<u64>,
        target_tail: f64,
    ) -> Result<IntensityResult> {
        if n == 0 {
            return Err(out_of_range("N", 0, "[1, ...)"));
        }
        if !(target_tail > 0.0) {
            return Err(Error::InvalidArgument(format!("target tail must be positive, got {target_tail}")));
        }
        let b_max = b_max.unwrap_or(DEFAULT_B_MAX);
        if b_max == 0 {
            return Err(out_of_range("b_max", 0, "[1, ...)"));
        }
        let k = self.k;
        let top = n
            .checked_mul(b_max + 1)
            .ok_or(Error::Overflow("N * (b_max + 1)"))?;
        let t1 = ceil_root(top, k);
        let t_max = match t_max {
            Some(t) => t,
            None => {
                let abs = self.t_for_target(target_tail / 2.0);
                self.check_t_max(abs)?;
                abs.max(t1.saturating_mul(RELATIVE_SPAN).min(self.sieve.limit()))
            }
        };
        if t_max < t1 {
            return Err(out_of_range("t_max", t_max, format!("[{t1}, ...)")));
        }
        self.check_t_max(t_max)?;

        // suffix[t] = sum_{t <= s <= T} mu(s)^2 u(s)
        let mut u_vals = vec![0.0f64; t_max as usize + 2];
        let mut v_below = CompensatedSum::new();
        let mut frac_part = CompensatedSum::new();
        let mut buf = Vec::with_capacity(16);
        for t in 1..=t_max {
            if let Some((u, v)) = self.uv(t, &mut buf) {
                u_vals[t as usize] = u;
                if t < t1 {
                    v_below.add(v);
                } else {
                    let frac = pow_mod(t, k, n) as f64 / n as f64;
                    frac_part.add(u * (b_max as f64 + frac));
                }
            }
        }
        let mut suffix = vec![0.0f64; t_max as usize + 2];
        let mut running = CompensatedSum::new();
        for t in (1..=t_max as usize).rev() {
            running.add(u_vals[t]);
            suffix[t] = running.value();
        }
        let mut explicit = CompensatedSum::new();
        for b in 1..=b_max {
            explicit.add(suffix[ceil_root(n * b, k) as usize]);
        }
        let weighted = self.totals.weighted;
        let b_tail = (weighted.value - v_below.value()) / n as f64 - frac_part.value();
        let mut inner = explicit;
        inner.add(b_tail);
        let inner = inner.value();
        let inner_tail = self.t_sum_tail(t_max) + weighted.tail / n as f64 + ROUNDING * (inner.abs() + weighted.value / n as f64);
        let value = self.totals.xi * TailBounded::new(inner, inner_tail);
        Ok(IntensityResult {
            k,
            epsilon: None,
            n: Some(n),
            value,
            method: Method::ZtildeViaZk,
            cutoffs: Cutoffs {
                q_max: None,
                t_max: Some(t_max),
                b_max: Some(b_max),
            },
        })
    }

    /// `sum_{b <= b_max} z_k(Nb)` alone, without the remaining multiples.
    pub fn zk_multiples_partial(&self, n: u64, b_max: u64, t_max: u64) -> Result<TailBounded> {
        if n == 0 || b_max == 0 {
            return Err(out_of_range("N, b_max", 0, "[1, ...)"));
        }
        let mut total = TailBounded::exact(0.0);
        for b in 1..=b_max {
            total = total + self.zk_factorised(n * b, Some(t_max))?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::build_sieve;

    #[test]
    fn zk_at_one_is_one() {
        let sieve = build_sieve(200_000).unwrap();
        let d = Diffraction::new(2, &sieve).unwrap();
        let z = d.zk_factorised(1, None).unwrap();
        assert!((z.value - 1.0).abs() <= z.tail + 1e-15, "{z}");
    }

    #[test]
    fn starting_index() {
        let sieve = build_sieve(200_000).unwrap();
        let d = Diffraction::new(2, &sieve).unwrap();
        // c = 17 starts at t = 5, so c in 17..=25 all agree
        let a = d.zk_factorised(17, Some(10_000)).unwrap();
        let b = d.zk_factorised(25, Some(10_000)).unwrap();
        assert_eq!(a.value, b.value);
        let c = d.zk_factorised(26, Some(10_000)).unwrap();
        assert!(c.value < b.value);
        assert!(d.zk_factorised(17, Some(4)).is_err());
    }

    #[test]
    fn via_zk_at_one_is_zeta_k() {
        let sieve = build_sieve(200_000).unwrap();
        for k in [2, 3] {
            let d = Diffraction::new(k, &sieve).unwrap();
            let r = d.ztilde_via_zk(1, None, None).unwrap();
            let z = d.totals().zeta_k;
            assert!(r.value.agrees_with(&z), "k={k} {} vs {}", r.value, z);
        }
    }

    #[test]
    fn partial_b_sum_is_below_full() {
        let sieve = build_sieve(200_000).unwrap();
        let d = Diffraction::new(2, &sieve).unwrap();
        let full = d.ztilde_via_zk(10, None, None).unwrap();
        let first = d.zk_multiples_partial(10, 1, 10_000).unwrap();
        assert!(first.lower() <= full.value.upper());
        assert!(first.value < full.value.value);
        // explicit range does not change the result beyond the tails
        for b in [1, 3, 50] {
            let other = d.ztilde_via_zk(10, Some(b), Some(20_000)).unwrap();
            assert!(other.value.agrees_with(&full.value));
        }
    }
}
