//! Small numeric helpers shared by the evaluators.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `floor(n^(1/k))`.
pub fn iroot(n: u64, k: u32) -> u64 {
    if k == 1 || n < 2 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / f64::from(k)).round() as u64;
    let fits = |r: u64| r.checked_pow(k).is_some_and(|v| v <= n);
    while r > 0 && !fits(r) {
        r -= 1;
    }
    while fits(r + 1) {
        r += 1;
    }
    r
}

/// Smallest `t` with `t^k >= n`.
pub fn ceil_root(n: u64, k: u32) -> u64 {
    let r = iroot(n, k);
    if r.checked_pow(k) == Some(n) {
        r
    } else {
        r + 1
    }
}

/// `floor(x)` for `x >= 0`, except that values within a few ulps of an
/// integer are taken to be that integer. Products like `q * 0.001` then
/// count the lattice point `q/1000` the way the decimal input intends.
#[inline]
pub fn snapped_floor(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// `base^exp mod m`.
pub fn pow_mod(base: u64, exp: u32, m: u64) -> u64 {
    let m = u128::from(m);
    let mut acc = 1u128 % m;
    let b = u128::from(base) % m;
    for _ in 0..exp {
        acc = acc * b % m;
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_lost_bits() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-17);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-14).abs() < 1e-26);
    }

    #[test]
    fn roots() {
        assert_eq!(iroot(17, 2), 4);
        assert_eq!(ceil_root(17, 2), 5);
        assert_eq!(ceil_root(16, 2), 4);
        assert_eq!(iroot(26, 3), 2);
        assert_eq!(iroot(27, 3), 3);
        assert_eq!(ceil_root(1, 5), 1);
        assert_eq!(iroot(u64::MAX, 2), u64::from(u32::MAX));
        for n in 1..5000u64 {
            for k in 2..5 {
                let r = iroot(n, k);
                assert!(r.pow(k) <= n && (r + 1).pow(k) > n);
            }
        }
    }

    #[test]
    fn snapping() {
        assert_eq!(snapped_floor(3000.0 * 0.001), 3);
        assert_eq!(snapped_floor(2.9999), 2);
        assert_eq!(snapped_floor(0.5), 0);
        assert_eq!(snapped_floor(7.0 * (1.0 / 7.0)), 1);
    }

    #[test]
    fn modular_power() {
        assert_eq!(pow_mod(10, 3, 7), 6);
        assert_eq!(pow_mod(1_000_000, 3, 999_983), (1_000_000u128.pow(3) % 999_983) as u64);
        assert_eq!(pow_mod(5, 0, 1), 0);
    }
}
