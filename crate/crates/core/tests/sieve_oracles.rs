use kfree_core::sieve::segmented::{count_squarefree, count_squarefree_many};
use kfree_core::sieve::{build_sieve, g_weight, gcd, SieveConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mobius_by_trial_division(mut n: u64) -> i8 {
    let mut sign = 1i8;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// `sum_{d <= sqrt x} mu(d) floor(x / d^2)`
fn squarefree_by_inclusion_exclusion(x: u64) -> u64 {
    let mut total = 0i64;
    let mut d = 1u64;
    while d * d <= x {
        total += i64::from(mobius_by_trial_division(d)) * (x / (d * d)) as i64;
        d += 1;
    }
    total as u64
}

#[test]
fn mobius_at_1e8_matches_trial_division() {
    let limit = 100_000_000;
    let sieve = build_sieve(limit).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=limit);
        assert_eq!(sieve.mobius(n).unwrap(), mobius_by_trial_division(n), "n={n}");
        let spf = sieve.spf(n);
        if n >= 2 {
            let p = spf.unwrap();
            assert_eq!(n % p, 0);
            assert_eq!(mobius_by_trial_division(p), -1, "spf({n}) = {p} is not prime");
        }
    }
}

#[test]
fn hand_examples() {
    let sieve = build_sieve(100).unwrap();
    assert_eq!(sieve.mobius(30).unwrap(), -1);
    assert_eq!(sieve.mobius(12).unwrap(), 0);
    assert!(!sieve.is_kfree(8, 3).unwrap());
    assert!(sieve.is_kfree(8, 4).unwrap());
    assert_eq!(sieve.tau(12).unwrap(), 6);
    assert_eq!(sieve.count_squarefree(10.0).unwrap(), 7);
    assert_eq!(sieve.count_squarefree(1.0).unwrap(), 1);
    assert_eq!(sieve.count_squarefree_coprime(10.0, 1).unwrap(), 7);
    // odd squarefree numbers up to 10 are 1, 3, 5, 7
    assert_eq!(sieve.count_squarefree_coprime(10.0, 2).unwrap(), 4);
}

#[test]
fn squarefree_counts_match_inclusion_exclusion() {
    let sieve = build_sieve(100_000).unwrap();
    let points: Vec<u64> = (1..=100_000u64).step_by(997).chain([99_999, 100_000]).collect();
    let segmented = count_squarefree_many(&points, 1, &SieveConfig::default()).unwrap();
    for (&x, &seg) in points.iter().zip(&segmented) {
        let oracle = squarefree_by_inclusion_exclusion(x);
        assert_eq!(sieve.count_squarefree(x as f64).unwrap(), oracle, "x={x}");
        assert_eq!(seg, oracle, "segmented x={x}");
    }
}

#[test]
fn squarefree_count_at_1e6_near_density() {
    let c = count_squarefree(1_000_000, &SieveConfig::default()).unwrap();
    let main = 1e6 * 6.0 / std::f64::consts::PI.powi(2);
    assert!((c as f64 - main).abs() < 1.5e3, "count {c} vs {main}");
}

#[test]
fn coprime_counts_match_brute_force() {
    let sieve = build_sieve(100_000).unwrap();
    for a in [6u64, 30, 7, 1] {
        let brute = (1..=100_000u64)
            .filter(|&n| mobius_by_trial_division(n) != 0 && gcd(n, a) == 1)
            .count() as u64;
        assert_eq!(sieve.count_squarefree_coprime(1e5, a).unwrap(), brute, "a={a}");
        let seg = count_squarefree_many(&[100_000], a, &SieveConfig::default()).unwrap()[0];
        assert_eq!(seg, brute, "segmented a={a}");
    }
}

#[test]
fn convolution_identity_small_range() {
    // mu(n)^2 [gcd(n, a) = 1] = sum_{cd = n} g_a(c) mu(d)^2
    let sieve = build_sieve(2000).unwrap();
    for a in 1..=12u64 {
        for n in 1..=2000u64 {
            let lhs = i64::from(mobius_by_trial_division(n) != 0 && gcd(n, a) == 1);
            let rhs: i64 = (1..=n)
                .filter(|c| n % c == 0)
                .map(|c| i64::from(g_weight(c, a)) * i64::from(mobius_by_trial_division(n / c)).pow(2))
                .sum();
            assert_eq!(lhs, rhs, "n={n} a={a}");
            assert_eq!(sieve.g_weight(n, a), g_weight(n, a));
        }
    }
}

#[test]
fn oversize_sieve_is_rejected() {
    let cfg = SieveConfig {
        memory_budget: 1 << 20,
        ..SieveConfig::default()
    };
    assert!(kfree_core::sieve::SieveTables::build(10_000_000, &cfg).is_err());
}
