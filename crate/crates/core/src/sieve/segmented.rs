//! Segmented sieving: prime lists and squarefree counts without dense tables.
//!
//! Segments are processed independently (in parallel when rayon has more
//! than one worker) and reduced by integer addition in segment order, so
//! results never depend on scheduling.

use rayon::prelude::*;

use super::{trial_factorize, SieveConfig};
use crate::error::{out_of_range, Error, Result};

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).map_or(true, |sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

fn small_primes(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// All primes `<= n`, via a segmented sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    const SEGMENT: u64 = 1 << 18;
    let base = small_primes(isqrt(n));
    let mut out = Vec::new();
    let mut lo = 2u64;
    let mut mask = vec![true; SEGMENT as usize];
    while lo <= n {
        let hi = (lo + SEGMENT - 1).min(n);
        let len = (hi - lo + 1) as usize;
        mask[..len].fill(true);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut m = (p * p).max(lo.div_ceil(p) * p);
            while m <= hi {
                mask[(m - lo) as usize] = false;
                m += p;
            }
        }
        out.extend((0..len).filter(|&i| mask[i]).map(|i| lo + i as u64));
        lo = hi + 1;
    }
    out
}

/// `#{n <= x : n squarefree}` by segmented sieving of prime squares.
pub fn count_squarefree(x: u64, config: &SieveConfig) -> Result<u64> {
    Ok(count_squarefree_many(&[x], 1, config)?[0])
}

/// Squarefree counts `#{n <= x_i : n squarefree, gcd(n, coprime_to) = 1}`
/// for every point, in one pass up to the largest point.
///
/// `coprime_to = 1` gives plain squarefree counts. Points need not be
/// sorted; the output follows the input order.
pub fn count_squarefree_many(points: &[u64], coprime_to: u64, config: &SieveConfig) -> Result<Vec<u64>> {
    if coprime_to == 0 {
        return Err(out_of_range("a", 0, "[1, ...)"));
    }
    if points.contains(&0) {
        return Err(out_of_range("x", 0, "[1, ...)"));
    }
    let Some(&top) = points.iter().max() else {
        return Ok(Vec::new());
    };
    let segment = config.segment_size.max(64) as u64;
    if segment > config.memory_budget {
        return Err(Error::LimitTooLarge {
            limit: top,
            needed: segment,
            budget: config.memory_budget,
        });
    }
    let squares: Vec<u64> = small_primes(isqrt(top)).into_iter().map(|p| p * p).collect();
    let excluded: Vec<u64> = trial_factorize(coprime_to)?.primes().collect();

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| points[i]);

    let n_segments = top.div_ceil(segment);
    // (count over the whole segment, partial counts at the points inside it)
    let per_segment: Vec<(u64, Vec<(usize, u64)>)> = (0..n_segments)
        .into_par_iter()
        .map(|s| {
            let lo = 1 + s * segment;
            let hi = (lo + segment - 1).min(top);
            let len = (hi - lo + 1) as usize;
            let mut keep = vec![true; len];
            for &q in squares.iter().take_while(|&&q| q <= hi) {
                let mut m = lo.div_ceil(q) * q;
                while m <= hi {
                    keep[(m - lo) as usize] = false;
                    m += q;
                }
            }
            for &p in &excluded {
                let mut m = lo.div_ceil(p) * p;
                while m <= hi {
                    keep[(m - lo) as usize] = false;
                    m += p;
                }
            }
            let start = order.partition_point(|&i| points[i] < lo);
            let end = order.partition_point(|&i| points[i] <= hi);
            let mut partials = Vec::with_capacity(end - start);
            let mut running = 0u64;
            let mut cursor = 0usize;
            for &i in &order[start..end] {
                let upto = (points[i] - lo) as usize + 1;
                running += keep[cursor..upto].iter().filter(|&&b| b).count() as u64;
                cursor = upto;
                partials.push((i, running));
            }
            let total = running + keep[cursor..].iter().filter(|&&b| b).count() as u64;
            (total, partials)
        })
        .collect();

    let mut out = vec![0u64; points.len()];
    let mut before = 0u64;
    for (total, partials) in per_segment {
        for (i, c) in partials {
            out[i] = before + c;
        }
        before += total;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::build_sieve;

    #[test]
    fn primes_match_naive() {
        let naive: Vec<u64> = (2..2000u64)
            .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect();
        assert_eq!(primes_up_to(1999), naive);
        assert!(primes_up_to(1).is_empty());
        assert_eq!(primes_up_to(2), vec![2]);
    }

    #[test]
    fn segmented_matches_table_across_segment_edges() {
        let cfg = SieveConfig {
            segment_size: 97,
            ..SieveConfig::default()
        };
        let s = build_sieve(5000).unwrap();
        let pts: Vec<u64> = vec![5000, 1, 96, 97, 98, 194, 1000, 4999, 2];
        let got = count_squarefree_many(&pts, 1, &cfg).unwrap();
        for (x, c) in pts.iter().zip(got) {
            assert_eq!(c, s.count_squarefree(*x as f64).unwrap(), "x={x}");
        }
        let got = count_squarefree_many(&pts, 30, &cfg).unwrap();
        for (x, c) in pts.iter().zip(got) {
            assert_eq!(c, s.count_squarefree_coprime(*x as f64, 30).unwrap(), "x={x}");
        }
    }

    #[test]
    fn isqrt_exact() {
        for n in 0..10_000u64 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
        assert_eq!(isqrt(u32::MAX as u64 * u32::MAX as u64), u32::MAX as u64);
    }
}
