use kfree_core::asymptotics::{gamma_delta, generic_main_constant};
use kfree_core::sieve::segmented::primes_up_to;
use kfree_core::special::constants::precise_constants;
use kfree_core::special::{constants_for_k, zeta_precise, zeta_real, PRECISION_BITS};
use rug::Float;

#[test]
fn zeta_three_halves_against_long_partial_sum() {
    let m = 10_000_000u64;
    let s = 1.5f64;
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for n in (1..=m).rev() {
        let y = (n as f64).powf(-s) - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    let mf = m as f64;
    // integral tail minus the half-weight of the last term, plus the first derivative correction
    let oracle = sum + mf.powf(1.0 - s) / (s - 1.0) - mf.powf(-s) / 2.0 + s * mf.powf(-s - 1.0) / 12.0;
    let z = zeta_real(s, 1e-30).unwrap();
    assert!((z.value - oracle).abs() < 1e-12, "{} vs {}", z.value, oracle);
}

#[test]
fn zeta_matches_mpfr() {
    for s in [1.5f64, 2.0, 2.5, 3.0, 7.0, 1.75, 5.0 / 3.0] {
        let arg = Float::with_val(PRECISION_BITS, s);
        let ours = zeta_precise(&arg, 1e-45).unwrap();
        let theirs = arg.clone().zeta();
        let gap = Float::with_val(PRECISION_BITS, &ours.value - &theirs).abs();
        assert!(gap.to_f64() <= ours.tail + 1e-60, "s={s}: gap {gap}");
        assert!(ours.tail <= 1e-45);
    }
}

#[test]
fn xi_two_against_plain_products() {
    let plain = |cutoff: u64| -> f64 {
        primes_up_to(cutoff)
            .iter()
            .map(|&p| {
                let pk = (p as f64).powi(2);
                1.0 - 1.0 / ((pk - 1.0) * (pk - 1.0))
            })
            .product()
    };
    let coarse = plain(1_000_000);
    let fine = plain(10_000_000);
    // the omitted factors contribute about sum_{p > P} p^-4
    assert!((coarse - fine).abs() < 1e-17 + 1e-15);
    let xi = constants_for_k(2, 1e-20).unwrap().xi_k;
    assert!((xi.value - fine).abs() < 1e-14, "{} vs {}", xi.value, fine);
}

#[test]
fn gamma_two_against_generic_product() {
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    let product = generic_main_constant(gamma_delta(2), 10_000_000).unwrap();
    let gamma = constants_for_k(2, 1e-20).unwrap().gamma_k;
    assert!((gamma.value - product.value / zeta2).abs() < product.tail + 1e-14, "{} vs {}", gamma, product);
    assert!((gamma.value - 0.888_769_753_033_687).abs() < 1e-13);
}

#[test]
fn c_two_reference() {
    let c = constants_for_k(2, 1e-20).unwrap().c_k;
    assert!((c.value - 2.702_531_94).abs() < 1e-8, "{}", c.value);
}

#[test]
fn constant_identity_for_several_k() {
    for k in [2u32, 3, 4, 5, 8, 10] {
        let pc = precise_constants(k, 1e-30).unwrap();
        let (gap, tail) = pc.identity_gap();
        assert!(gap <= tail.max(1e-25), "k={k}: gap {gap:e} tail {tail:e}");
    }
}

#[test]
fn c_k_tends_to_one_monotonically() {
    let cs: Vec<f64> = (2..=12).map(|k| constants_for_k(k, 1e-20).unwrap().c_k.value).collect();
    for w in cs.windows(2) {
        assert!((w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    }
    assert!(cs.iter().all(|&c| c > 1.0));
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(constants_for_k(1, 1e-20).is_err());
    assert!(constants_for_k(65, 1e-20).is_err());
    assert!(zeta_real(1.0, 1e-20).is_err());
    assert!(constants_for_k(2, 0.0).is_err());
}
