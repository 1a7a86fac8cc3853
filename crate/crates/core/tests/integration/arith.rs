use crate::oracle;
use mobius_lab::arith::*;
use mobius_lab::numeric::e;
use mobius_lab::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segments_match_trial_division(lo in 1u64..200_000, len in 0u64..3_000, block in 1usize..5_000) {
        let t = sieve_mobius_with_block(lo, lo + len, block).unwrap();
        for n in lo..=lo + len {
            prop_assert_eq!(t.mu(n), oracle::mu(n), "n = {}", n);
        }
    }

    #[test]
    fn mertens_is_a_prefix_sum(x in 1u64..5_000, block in 1usize..700) {
        let direct: i64 = (1..=x).map(|n| i64::from(oracle::mu(n))).sum();
        prop_assert_eq!(mertens(x, block).unwrap(), direct);
    }

    #[test]
    fn chowla_matches_direct_sum(h1 in 0u64..6, gap in 1u64..6, n in 2u64..800) {
        let h2 = h1 + gap;
        let t = sieve_mobius(1, n + h2).unwrap();
        let raw: f64 = (1..=n)
            .map(|k| f64::from(oracle::mu(k + h1) * oracle::mu(k + h2)) / k as f64)
            .sum();
        let c = chowla_log_sum(&t, h1, h2, n).unwrap();
        prop_assert!((c.raw - raw).abs() < 1e-12);
        prop_assert!((c.ln_normalized - raw / (n as f64).ln()).abs() < 1e-12);
        prop_assert!(c.harmonic_normalized.abs() <= 1.0);
    }

    #[test]
    fn twisted_average_is_bounded(alpha in 0.0f64..1.0, n in 1u64..3_000, log in any::<bool>()) {
        let t = sieve_mobius(1, 3_000).unwrap();
        let kind = if log { AverageKind::Logarithmic } else { AverageKind::Cesaro };
        let v = weighted_average(|k| f64::from(t.mu(k)) * e(k as f64 * alpha), n, kind).unwrap();
        prop_assert!(v.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn binary_round_trip(lo in 1u64..10_000, len in 0u64..500) {
        let t = sieve_mobius(lo, lo + len).unwrap();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        let back = MobiusTable::read_binary(buf.as_slice()).unwrap();
        prop_assert_eq!(back.lo(), lo);
        prop_assert_eq!(back.values(), t.values());
    }
}

#[test]
fn chowla_hand_computed() {
    // mu(1..12) = 1 -1 -1 0 -1 1 -1 0 0 1 -1 0; only n = 1, 3, 5 survive
    let t = sieve_mobius(1, 12).unwrap();
    let c = chowla_log_sum(&t, 0, 2, 10).unwrap();
    assert!((c.raw - (-1.0 + 1.0 / 3.0 + 1.0 / 5.0)).abs() < 1e-15);
}

#[test]
fn equal_shifts_rejected() {
    let t = sieve_mobius(1, 100).unwrap();
    assert!(chowla_log_sum(&t, 3, 3, 10).is_err());
}

#[test]
fn short_table_rejected() {
    let t = sieve_mobius(1, 100).unwrap();
    assert!(matches!(chowla_log_sum(&t, 0, 1, 100), Err(Error::TableRange { .. })));
}

#[test]
fn harmonic_average_of_one() {
    let v = weighted_average(|_| e(0.0), 1000, AverageKind::Logarithmic).unwrap();
    assert!((v.re - 1.0).abs() < 1e-14 && v.im.abs() < 1e-14);
}
