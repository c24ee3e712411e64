//! Numerical checks of the asymptotic statements: Walfisz-type squarefree
//! counts, weighted squarefree sums, the decay of `z_k(c)` and the power law
//! of `Z_k(eps)`.

mod fit;
mod grid;

use serde::{Deserialize, Serialize};

pub use fit::{fit_power_law, PowerLawFit};
pub use grid::GridSpec;

use crate::diffraction::{Diffraction, IntensityResult};
use crate::error::{out_of_range, Error, Result};
use crate::numeric::CompensatedSum;
use crate::sieve::segmented::count_squarefree_many;
use crate::sieve::{trial_factorize, SieveConfig, SieveTables};
use crate::special::{euler_product, zeta_real, DecayBound, TailBounded, PRECISION_BITS};

/// Tail used for `zeta(2)` in main terms.
pub const MAIN_TERM_ZETA_TAIL: f64 = 1e-20;

/// Minimum number of points for [`power_law_fit`].
pub const MIN_POWER_LAW_POINTS: usize = 5;

/// `exact - main` and its normalisation at each sample point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries {
    pub x: Vec<f64>,
    pub main: Vec<f64>,
    pub exact: Vec<f64>,
    pub residual: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl ResidualSeries {
    /// Residuals normalised by `scale(x)`.
    pub fn build(x: Vec<f64>, main: Vec<f64>, exact: Vec<f64>, scale: impl Fn(f64) -> f64) -> Result<Self> {
        if x.len() != main.len() || x.len() != exact.len() {
            return Err(Error::InvalidArgument("series lengths differ".into()));
        }
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("sample points must increase strictly".into()));
        }
        let residual: Vec<f64> = exact.iter().zip(&main).map(|(e, m)| e - m).collect();
        let normalized = residual.iter().zip(&x).map(|(r, &x)| r / scale(x)).collect();
        Ok(Self {
            x,
            main,
            exact,
            residual,
            normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn max_abs_normalized(&self) -> f64 {
        self.normalized.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Largest `|normalized|` over `x > max(x) / 10`.
    pub fn top_decade_max(&self) -> f64 {
        let top = self.x.last().copied().unwrap_or(0.0) / 10.0;
        self.x
            .iter()
            .zip(&self.normalized)
            .filter(|(x, _)| **x > top)
            .fold(0.0, |m, (_, r)| m.max(r.abs()))
    }

    /// `exact / main` at each point.
    pub fn ratios(&self) -> Vec<f64> {
        self.exact.iter().zip(&self.main).map(|(e, m)| e / m).collect()
    }
}

fn inverse_zeta2() -> Result<f64> {
    Ok(1.0 / zeta_real(2.0, MAIN_TERM_ZETA_TAIL)?.value)
}

fn sorted_points(points: &[f64], limit: u64) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(points.len());
    for &u in points {
        if !(u >= 1.0 && u.is_finite()) {
            return Err(out_of_range("u", u, "[1, ...)"));
        }
        let n = u.floor() as u64;
        if n > limit {
            return Err(Error::SieveTooSmall { needed: n, limit });
        }
        out.push(n);
    }
    Ok(out)
}

/// `sum_{m <= u_i} mu(m)^2 prod_{p | m} (1 + delta(p))` at every `u_i`, in one pass.
///
/// `delta` must satisfy `|delta(p)| <= 4/p^2` at every prime up to the largest
/// point; this is checked.
pub fn weighted_sum_generic_many<F>(sieve: &SieveTables, delta: F, points: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(u64) -> f64,
{
    let ns = sorted_points(points, sieve.limit())?;
    let Some(&top) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    let mut local = vec![0.0f64; top as usize + 1];
    for &p in sieve.primes() {
        let p = u64::from(p);
        if p > top {
            break;
        }
        let d = delta(p);
        let bound = 4.0 / (p * p) as f64;
        if !(d.abs() <= bound) {
            return Err(Error::DecayViolated {
                prime: p,
                deviation: d.abs(),
                bound,
            });
        }
        local[p as usize] = 1.0 + d;
    }
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| ns[i]);
    let mut out = vec![0.0; ns.len()];
    let mut acc = CompensatedSum::new();
    let mut next = 0usize;
    let mut buf = Vec::with_capacity(16);
    for m in 1..=top {
        if sieve.mu_unchecked(m) != 0 {
            sieve.factor_into(m, &mut buf);
            acc.add(buf.iter().map(|&(p, _)| local[p as usize]).product());
        }
        while next < order.len() && ns[order[next]] == m {
            out[order[next]] = acc.value();
            next += 1;
        }
    }
    Ok(out)
}

/// `sum_{m <= u} mu(m)^2 prod_{p | m} (1 + delta(p))`.
pub fn weighted_sum_generic<F>(sieve: &SieveTables, delta: F, u: f64) -> Result<f64>
where
    F: Fn(u64) -> f64,
{
    Ok(weighted_sum_generic_many(sieve, delta, &[u])?[0])
}

/// `delta(p) = 2/(p^k - 2)`, which turns the generic sum into `S_k(u)`.
pub fn gamma_delta(k: u32) -> impl Fn(u64) -> f64 {
    move |p| 2.0 / ((p as f64).powi(k as i32) - 2.0)
}

/// `S_k(u) = sum_{t <= u} mu(t)^2 prod_{p | t} (1 - 2p^-k)^-1`.
pub fn weighted_squarefree_sum(sieve: &SieveTables, k: u32, u: f64) -> Result<f64> {
    Ok(weighted_squarefree_sums(sieve, k, &[u])?[0])
}

pub fn weighted_squarefree_sums(sieve: &SieveTables, k: u32, points: &[f64]) -> Result<Vec<f64>> {
    crate::validate_k(k)?;
    let ns = sorted_points(points, sieve.limit())?;
    let Some(&top) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    let mut local = vec![0.0f64; top as usize + 1];
    for &p in sieve.primes().iter().take_while(|&&p| u64::from(p) <= top) {
        local[p as usize] = 1.0 / (1.0 - 2.0 * (p as f64).powi(-(k as i32)));
    }
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| ns[i]);
    let mut out = vec![0.0; ns.len()];
    let mut acc = CompensatedSum::new();
    let mut next = 0usize;
    let mut buf = Vec::with_capacity(16);
    for t in 1..=top {
        if sieve.mu_unchecked(t) != 0 {
            sieve.factor_into(t, &mut buf);
            acc.add(buf.iter().map(|&(p, _)| local[p as usize]).product());
        }
        while next < order.len() && ns[order[next]] == t {
            out[order[next]] = acc.value();
            next += 1;
        }
    }
    Ok(out)
}

/// `prod_p (1 + delta(p)/(p+1))`, the main-term constant of the generic sum
/// divided by `1/zeta(2)`.
pub fn generic_main_constant<F>(delta: F, prime_cutoff: u64) -> Result<TailBounded>
where
    F: Fn(u64) -> f64 + Sync,
{
    let decay = DecayBound {
        constant: 4.0,
        exponent: 3.0,
        from_prime: 2,
    };
    let f = |p: u64| {
        let mut x = rug::Float::with_val(PRECISION_BITS, delta(p));
        x /= p + 1;
        x += 1u32;
        x
    };
    // each delta(p) carries one f64 rounding; sum_p 4/p^3 < 1 bounds the effect
    let product = euler_product(f, decay, prime_cutoff)?.to_tail_bounded();
    Ok(TailBounded::new(product.value, product.tail + f64::EPSILON * product.value))
}

/// `S_k(u) - gamma_k u`, normalised by `sqrt(u)`.
pub fn weighted_residuals(sieve: &SieveTables, k: u32, gamma_k: f64, points: &[f64]) -> Result<ResidualSeries> {
    let exact = weighted_squarefree_sums(sieve, k, points)?;
    let main = points.iter().map(|u| gamma_k * u).collect();
    ResidualSeries::build(points.to_vec(), main, exact, f64::sqrt)
}

/// Squarefree counts coprime to `a` against `x / zeta(2) prod_{p|a} p/(p+1)`,
/// normalised by `sqrt(x)`. Counting is segmented, so `x` may exceed any
/// dense sieve.
pub fn walfisz_residuals(points: &[f64], coprime_to: u64, config: &SieveConfig) -> Result<ResidualSeries> {
    if coprime_to == 0 {
        return Err(out_of_range("a", 0, "[1, ...)"));
    }
    let mut ns = Vec::with_capacity(points.len());
    for &x in points {
        if !(x >= 1.0 && x.is_finite()) {
            return Err(out_of_range("x", x, "[1, ...)"));
        }
        ns.push(x.floor() as u64);
    }
    let counts = count_squarefree_many(&ns, coprime_to, config)?;
    let mut density = inverse_zeta2()?;
    for p in trial_factorize(coprime_to)?.primes() {
        density *= p as f64 / (p as f64 + 1.0);
    }
    let main = points.iter().map(|x| density * x).collect();
    let exact = counts.iter().map(|&c| c as f64).collect();
    ResidualSeries::build(points.to_vec(), main, exact, f64::sqrt)
}

/// `z_k(c) / xi_k` against `gamma_k/(2k-1) c^(-2+1/k)`; residuals are
/// normalised by the secondary scale `c^(-2+1/(2k))`.
pub fn zk_asymptotic_check(d: &Diffraction<'_>, gamma_k: f64, c_grid: &[u64]) -> Result<ResidualSeries> {
    let k = f64::from(d.k());
    let xi = d.totals().xi.value;
    let mut exact = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        exact.push(d.zk_factorised(c, None)?.value / xi);
    }
    let x: Vec<f64> = c_grid.iter().map(|&c| c as f64).collect();
    let main = x.iter().map(|c| gamma_k / (2.0 * k - 1.0) * c.powf(-2.0 + 1.0 / k)).collect();
    ResidualSeries::build(x, main, exact, |c| c.powf(-2.0 + 1.0 / (2.0 * k)))
}

/// Fit `Z_k(eps)` over the grid, evaluating all points in one q pass.
pub fn power_law_fit(
    d: &Diffraction<'_>,
    eps_grid: &[f64],
    q_max: Option<u64>,
) -> Result<(PowerLawFit, Vec<IntensityResult>)> {
    if eps_grid.len() < MIN_POWER_LAW_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_POWER_LAW_POINTS,
            got: eps_grid.len(),
        });
    }
    for &e in eps_grid {
        if !(e > 0.0 && e <= 0.1) {
            return Err(out_of_range("epsilon", e, "(0, 0.1]"));
        }
    }
    let lo = eps_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_grid.iter().copied().fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "grid must span at least two decades, got {lo:e}..{hi:e}"
        )));
    }
    let results = d.z_direct_many(eps_grid, q_max)?;
    let points: Vec<(f64, f64)> = results.iter().map(|r| (r.epsilon.expect("direct"), r.value.value)).collect();
    Ok((fit_power_law(&points)?, results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::build_sieve;

    #[test]
    fn weighted_sum_small_cases() {
        let sieve = build_sieve(1000).unwrap();
        assert_eq!(weighted_squarefree_sum(&sieve, 2, 1.0).unwrap(), 1.0);
        let s3 = weighted_squarefree_sum(&sieve, 2, 3.0).unwrap();
        assert!((s3 - (1.0 + 2.0 + 9.0 / 7.0)).abs() < 1e-15);
        // the generic form with delta = 2/(p^k - 2) is the same sum
        for u in [10.0, 99.5, 1000.0] {
            let a = weighted_squarefree_sum(&sieve, 3, u).unwrap();
            let b = weighted_sum_generic(&sieve, gamma_delta(3), u).unwrap();
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn generic_sum_checks_decay() {
        let sieve = build_sieve(100).unwrap();
        assert!(matches!(
            weighted_sum_generic(&sieve, |p| 1.0 / p as f64, 50.0),
            Err(Error::DecayViolated { .. })
        ));
        let zero = weighted_sum_generic(&sieve, |_| 0.0, 100.0).unwrap();
        assert_eq!(zero, sieve.count_squarefree(100.0).unwrap() as f64);
    }

    #[test]
    fn walfisz_single_point() {
        let r = walfisz_residuals(&[1.0], 1, &SieveConfig::default()).unwrap();
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((r.residual[0] - (1.0 - 1.0 / z2)).abs() < 1e-15);
        let r30 = walfisz_residuals(&[1000.0], 30, &SieveConfig::default()).unwrap();
        let expected = 1000.0 / z2 * (2.0 / 3.0) * (3.0 / 4.0) * (5.0 / 6.0);
        assert!((r30.main[0] - expected).abs() < 1e-10);
    }

    #[test]
    fn residual_series_rejects_unsorted() {
        assert!(ResidualSeries::build(vec![2.0, 1.0], vec![0.0; 2], vec![0.0; 2], f64::sqrt).is_err());
        assert!(ResidualSeries::build(vec![1.0], vec![0.0; 2], vec![0.0], f64::sqrt).is_err());
    }

    #[test]
    fn fit_preconditions() {
        let sieve = build_sieve(1_000_000).unwrap();
        let d = Diffraction::new(2, &sieve).unwrap();
        assert!(matches!(power_law_fit(&d, &[0.01, 0.02], None), Err(Error::TooFewPoints { .. })));
        assert!(power_law_fit(&d, &[0.01, 0.02, 0.03, 0.04, 0.05], None).is_err());
        assert!(power_law_fit(&d, &[0.001, 0.01, 0.02, 0.05, 0.2], None).is_err());
    }
}
