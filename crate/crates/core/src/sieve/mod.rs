//! Sieve-backed arithmetic functions.
//!
//! [`SieveTables`] holds a smallest-prime-factor table and the Möbius function
//! up to a fixed limit, built with a linear sieve. Everything above the limit
//! either falls back to trial division (factorisation and the functions
//! derived from it) or is rejected (counting).
//!
//! Counting squarefree integers far beyond any table is handled by
//! [`segmented`], which never materialises more than one segment at a time.

pub mod segmented;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};

pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;
pub const DEFAULT_SEGMENT_SIZE: usize = 1 << 22;

/// Largest n accepted by the trial-division fallback.
pub const TRIAL_DIVISION_MAX: u64 = 1 << 48;

/// Bytes of table storage per sieved integer (`u32` spf plus `i8` mu).
const BYTES_PER_ENTRY: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SieveConfig {
    /// Upper bound on the bytes a dense table or a segment pass may allocate.
    pub memory_budget: u64,
    /// Width of one segment in the segmented squarefree counter.
    pub segment_size: usize,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            memory_budget: DEFAULT_MEMORY_BUDGET,
            segment_size: DEFAULT_SEGMENT_SIZE,
        }
    }
}

/// Prime factorisation `n = prod p^e`, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn big_omega(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }

    pub fn tau(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| u64::from(e) + 1).product()
    }

    pub fn mobius(&self) -> i8 {
        if self.factors.iter().any(|&(_, e)| e > 1) {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// `mu_k(n)`: true iff no prime power `p^k` divides `n`.
    pub fn is_kfree(&self, k: u32) -> bool {
        self.factors.iter().all(|&(_, e)| e < k)
    }

    pub fn radical(&self) -> u64 {
        self.primes().product()
    }
}

/// Trial division up to `sqrt(n)`.
pub fn trial_factorize(n: u64) -> Result<Factorization> {
    if n == 0 || n > TRIAL_DIVISION_MAX {
        return Err(out_of_range("n", n, format!("[1, {TRIAL_DIVISION_MAX}]")));
    }
    let mut factors = Vec::new();
    let mut m = n;
    let mut push = |p: u64, m: &mut u64| {
        let mut e = 0;
        while *m % p == 0 {
            *m /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    push(2, &mut m);
    push(3, &mut m);
    let mut p = 5;
    while p * p <= m {
        push(p, &mut m);
        push(p + 2, &mut m);
        p += 6;
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Ok(Factorization { n, factors })
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

/// `g_a(c) = 1[p | c => p | a] * (-1)^Omega(c)`, the multiplicative function
/// whose Dirichlet convolution with `mu^2` is the coprime-to-`a` squarefree
/// indicator.
///
/// Panics if `c` or `a` is zero.
pub fn g_weight(c: u64, a: u64) -> i8 {
    assert!(c >= 1 && a >= 1, "g_weight needs c, a >= 1");
    // Strip from c every prime it shares with a; anything left over is a
    // prime outside the support.
    let mut rest = c;
    let mut big_omega = 0u32;
    loop {
        let g = gcd(rest, a);
        if g == 1 {
            break;
        }
        let f = trial_factorize(g).expect("g divides a");
        for p in f.primes() {
            while rest % p == 0 {
                rest /= p;
                big_omega += 1;
            }
        }
    }
    if rest != 1 {
        0
    } else if big_omega % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Dense smallest-prime-factor and Möbius tables on `[1, limit]`.
///
/// Immutable after construction; every query is a pure read.
#[derive(Debug, Clone)]
pub struct SieveTables {
    limit: u64,
    spf: Vec<u32>,
    mu: Vec<i8>,
    primes: Vec<u32>,
}

pub fn build_sieve(limit: u64) -> Result<SieveTables> {
    SieveTables::build(limit, &SieveConfig::default())
}

impl SieveTables {
    pub fn build(limit: u64, config: &SieveConfig) -> Result<Self> {
        if limit == 0 {
            return Err(out_of_range("limit", 0, "[1, 2^32)"));
        }
        if limit >= u64::from(u32::MAX) {
            return Err(out_of_range("limit", limit, "[1, 2^32)"));
        }
        let needed = (limit + 1) * BYTES_PER_ENTRY;
        if needed > config.memory_budget {
            return Err(Error::LimitTooLarge {
                limit,
                needed,
                budget: config.memory_budget,
            });
        }

        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut mu = vec![0i8; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        mu[1] = 1;
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                mu[i] = -1;
                primes.push(i as u32);
            }
            let si = spf[i];
            let mi = mu[i];
            for &p in &primes {
                let ip = i * p as usize;
                if p > si || ip > n {
                    break;
                }
                spf[ip] = p;
                mu[ip] = if p == si { 0 } else { -mi };
            }
        }
        Ok(Self {
            limit,
            spf,
            mu,
            primes,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Primes up to the limit, increasing.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Smallest prime factor; `None` for `n < 2` or beyond the table.
    pub fn spf(&self, n: u64) -> Option<u64> {
        if (2..=self.limit).contains(&n) {
            Some(u64::from(self.spf[n as usize]))
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn mu_unchecked(&self, n: u64) -> i8 {
        self.mu[n as usize]
    }

    /// Distinct primes of `n <= limit` together with their exponents,
    /// written into `out` (cleared first). Allocation-free hot path.
    #[inline]
    pub(crate) fn factor_into(&self, mut n: u64, out: &mut Vec<(u64, u32)>) {
        debug_assert!(n >= 1 && n <= self.limit);
        out.clear();
        while n > 1 {
            let p = self.spf[n as usize];
            let mut e = 0;
            while n > 1 && self.spf[n as usize] == p {
                n /= u64::from(p);
                e += 1;
            }
            out.push((u64::from(p), e));
        }
    }

    pub fn factorize(&self, n: u64) -> Result<Factorization> {
        if n == 0 {
            return Err(out_of_range("n", 0, "[1, ...)"));
        }
        if n > self.limit {
            return trial_factorize(n);
        }
        let mut factors = Vec::new();
        self.factor_into(n, &mut factors);
        Ok(Factorization { n, factors })
    }

    pub fn mobius(&self, n: u64) -> Result<i8> {
        match n {
            0 => Err(out_of_range("n", 0, "[1, ...)")),
            n if n <= self.limit => Ok(self.mu[n as usize]),
            n => Ok(trial_factorize(n)?.mobius()),
        }
    }

    pub fn is_kfree(&self, n: u64, k: u32) -> Result<bool> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        Ok(self.factorize(n)?.is_kfree(k))
    }

    pub fn tau(&self, n: u64) -> Result<u64> {
        Ok(self.factorize(n)?.tau())
    }

    pub fn big_omega(&self, n: u64) -> Result<u32> {
        Ok(self.factorize(n)?.big_omega())
    }

    pub fn g_weight(&self, c: u64, a: u64) -> i8 {
        if c > self.limit {
            return g_weight(c, a);
        }
        assert!(c >= 1 && a >= 1, "g_weight needs c, a >= 1");
        let mut sign = 1i8;
        let mut m = c;
        while m > 1 {
            let p = u64::from(self.spf[m as usize]);
            if a % p != 0 {
                return 0;
            }
            m /= p;
            sign = -sign;
        }
        sign
    }

    fn table_index(&self, x: f64) -> Result<u64> {
        if !x.is_finite() || x < 1.0 {
            return Err(out_of_range("x", x, format!("[1, {}]", self.limit)));
        }
        let n = x.floor() as u64;
        if n > self.limit {
            return Err(out_of_range("x", x, format!("[1, {}]", self.limit)));
        }
        Ok(n)
    }

    /// `#{n <= x : n squarefree}`, read off the Möbius table.
    pub fn count_squarefree(&self, x: f64) -> Result<u64> {
        let n = self.table_index(x)?;
        Ok(self.mu[1..=n as usize].iter().filter(|&&m| m != 0).count() as u64)
    }

    /// `#{n <= x : n squarefree, gcd(n, a) = 1}`.
    pub fn count_squarefree_coprime(&self, x: f64, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(out_of_range("a", 0, "[1, ...)"));
        }
        let n = self.table_index(x)?;
        let a_primes: Vec<u64> = self.factorize(a)?.primes().collect();
        let count = (1..=n)
            .filter(|&m| self.mu[m as usize] != 0 && a_primes.iter().all(|&p| m % p != 0))
            .count();
        Ok(count as u64)
    }
}
