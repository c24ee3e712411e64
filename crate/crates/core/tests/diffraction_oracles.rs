use std::sync::OnceLock;

use kfree_core::diffraction::{Diffraction, IntensityResult, Threshold};
use kfree_core::sieve::{build_sieve, SieveTables};
use proptest::prelude::*;

fn sieve() -> &'static SieveTables {
    static SIEVE: OnceLock<SieveTables> = OnceLock::new();
    SIEVE.get_or_init(|| build_sieve(2_000_000).unwrap())
}

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `sum_{q <= q_max} mu_{k+1}(q) w(q) #{1 <= m <= q eps : gcd(m, q) = 1}` by the obvious loops.
fn brute_bragg_sum(k: u32, eps: f64, q_max: u64) -> f64 {
    let mut terms = Vec::new();
    for q in 1..=q_max {
        let f = factor(q);
        if f.iter().any(|&(_, e)| e > k) {
            continue;
        }
        let w: f64 = f
            .iter()
            .map(|&(p, _)| {
                let pk = (p as f64).powi(k as i32);
                1.0 / ((pk - 1.0) * (pk - 1.0))
            })
            .product();
        let count = (1..=q).filter(|&m| m as f64 <= q as f64 * eps && gcd(m, q) == 1).count();
        terms.push(w * count as f64);
    }
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    terms.iter().sum()
}

#[test]
fn truncated_sum_matches_brute_force() {
    let d = Diffraction::new(3, sieve()).unwrap();
    for eps in [0.9, 0.5, 0.137, 1.0 / 3.0] {
        let ours = d.truncated_bragg_sum(Threshold::Epsilon(eps), 10_000).unwrap();
        let oracle = brute_bragg_sum(3, eps, 10_000);
        assert!((ours - oracle).abs() <= 1e-15 * oracle, "eps={eps}: {ours} vs {oracle}");
    }
}

#[test]
fn complement_formula_for_small_c() {
    // z_k(c) = 1 - xi_k sum_{t^k < c} mu(t)^2 u(t), since the full t-sum is 1/xi_k
    for k in [2u32, 3] {
        let d = Diffraction::new(k, sieve()).unwrap();
        let xi = d.totals().xi.value;
        for c in [2u64, 5, 17, 100, 1000, 30_000] {
            let mut head = 0.0;
            let mut t = 1u64;
            while t.pow(k) < c {
                let f = factor(t);
                if f.iter().all(|&(_, e)| e == 1) {
                    head += f
                        .iter()
                        .map(|&(p, _)| {
                            let pk = (p as f64).powi(k as i32);
                            1.0 / (pk * (pk - 2.0))
                        })
                        .product::<f64>();
                }
                t += 1;
            }
            let oracle = 1.0 - xi * head;
            let z = d.zk_factorised(c, None).unwrap();
            assert!((z.value - oracle).abs() <= z.tail + 1e-14, "k={k} c={c}: {z} vs {oracle}");
        }
    }
}

#[test]
fn definition_agrees_with_factorised() {
    let d = Diffraction::new(3, sieve()).unwrap();
    for c in [1u64, 2, 3, 8, 9] {
        let def = d.zk_definition(c, 100_000, 300).unwrap();
        let fac = d.zk_factorised(c, None).unwrap();
        assert!(def.agrees_with(&fac), "c={c}: {def} vs {fac}");
        assert!(def.tail < 1e-6);
    }
}

#[test]
fn ztilde_methods_agree() {
    for k in [2u32, 3] {
        let d = Diffraction::new(k, sieve()).unwrap();
        let ns: Vec<u64> = (1..=12).collect();
        let defs = d.ztilde_definition_many(&ns, Some(2_000_000)).unwrap();
        for def in defs {
            let n = def.n.unwrap();
            let via = d.ztilde_via_zk(n, None, None).unwrap();
            assert!(via.value.agrees_with(&def.value), "k={k} N={n}: {} vs {}", via.value, def.value);
        }
    }
}

#[test]
fn sandwich_at_sample_points() {
    let d2 = Diffraction::new(2, sieve()).unwrap();
    let r = d2.sandwich_check(0.137, None).unwrap();
    assert_eq!(r.n, 7);
    assert!(r.verdict(), "{r:?}");
    let d3 = Diffraction::new(3, sieve()).unwrap();
    let r = d3.sandwich_check(0.01, None).unwrap();
    assert_eq!(r.n, 100);
    assert!(r.verdict(), "{r:?}");
}

#[test]
fn result_json_round_trip() {
    let d = Diffraction::new(2, sieve()).unwrap();
    let results = [
        d.z_direct(0.25, None).unwrap(),
        d.ztilde_definition(4, None).unwrap(),
        d.ztilde_via_zk(4, None, None).unwrap(),
    ];
    for r in results {
        let json = serde_json::to_string(&r).unwrap();
        let back: IntensityResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}

#[test]
fn cutoff_beyond_sieve_is_an_error() {
    let d = Diffraction::new(2, sieve()).unwrap();
    assert!(d.z_direct(0.5, Some(10_000_000)).is_err());
    assert!(d.zk_factorised(4, Some(10_000_000)).is_err());
    assert!(Diffraction::new(1, sieve()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn z_is_positive_and_monotone(a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let d = Diffraction::new(2, sieve()).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let r = d.z_direct_many(&[lo, hi], Some(200_000)).unwrap();
        prop_assert!(r[0].value.lower() > 0.0);
        prop_assert!(r[0].value.lower() <= r[1].value.upper());
    }

    #[test]
    fn ztilde_is_monotone(n in 1u64..200, step in 1u64..50) {
        let d = Diffraction::new(3, sieve()).unwrap();
        let r = d.ztilde_definition_many(&[n, n + step], Some(100_000)).unwrap();
        prop_assert!(r[1].value.lower() <= r[0].value.upper());
        prop_assert!(r[1].value.lower() > 0.0);
    }

    #[test]
    fn zk_is_monotone_in_c(c in 1u64..100_000, step in 1u64..1000) {
        let d = Diffraction::new(2, sieve()).unwrap();
        let a = d.zk_factorised(c, None).unwrap();
        let b = d.zk_factorised(c + step, None).unwrap();
        prop_assert!(b.lower() <= a.upper());
        prop_assert!(b.upper() > 0.0);
    }
}
