use crate::oracle;
use mobius_lab::coding::*;
use mobius_lab::systems::{Point, SystemSpec};
use proptest::prelude::*;

fn in_arc(a: f64, b: f64, t: f64) -> bool {
    (t - a).rem_euclid(1.0) < (b - a).rem_euclid(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rotation_coding_matches_membership(alpha in 0.0f64..1.0, x in 0.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let sys = SystemSpec::rotation(alpha);
        let set = CodableSet::arc(a, b);
        let bits = code_point(&sys, &set, &Point::Circle(x), -20, 20).unwrap();
        for (k, &bit) in (-20i64..=20).zip(&bits) {
            let t = (x + k as f64 * alpha).rem_euclid(1.0);
            // skip points that sit on an endpoint up to rounding
            if oracle::circle(t, a) < 1e-9 || oracle::circle(t, b) < 1e-9 {
                continue;
            }
            prop_assert_eq!(bit == 1, in_arc(a, b, t), "k = {}", k);
        }
    }

    #[test]
    fn coding_commutes_with_the_shift(alpha in 0.0f64..1.0, x in 0.0f64..1.0, lo in -30i64..30) {
        let sys = SystemSpec::rotation(alpha);
        let set = CodableSet::arc(0.1, 0.6);
        let moved = sys.apply(&Point::Circle(x)).unwrap();
        let a = code_point(&sys, &set, &moved, lo, lo + 25).unwrap();
        let b = code_point(&sys, &set, &Point::Circle(x), lo + 1, lo + 26).unwrap();
        let t = |k: i64| (x + k as f64 * alpha).rem_euclid(1.0);
        // rounding can flip a bit only right at an endpoint
        let boundary = (lo + 1..=lo + 26).any(|k| oracle::circle(t(k), 0.1) < 1e-9 || oracle::circle(t(k), 0.6) < 1e-9);
        prop_assume!(!boundary);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mollifier_is_an_indicator_off_the_collar(x in 0.0f64..1.0, eps0 in 0.001f64..0.1) {
        let sys = SystemSpec::rotation(0.3);
        let set = CodableSet::arc(0.2, 0.7);
        let v = mollified_value(&sys, &set, eps0, &Point::Circle(x)).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        let near = oracle::circle(x, 0.2).min(oracle::circle(x, 0.7));
        if near > eps0 + 1e-12 {
            prop_assert_eq!(v, if in_arc(0.2, 0.7, x) { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn stability_on_an_irrational_rotation() {
    let sys = SystemSpec::rotation((5f64.sqrt() - 1.0) / 2.0);
    let r = verify_coding_stability(&sys, &CodableSet::arc(0.0, 0.5), 0.05, 2_000, 20, 4).unwrap();
    assert_eq!(r.pairs_tested, 20);
    assert!(r.pass && r.max_density <= 0.1, "{r:?}");
}

#[test]
fn transfer_inequality_for_a_rotation() {
    let sys = SystemSpec::rotation(2f64.sqrt() - 1.0);
    let t = complexity_transfer_check(&sys, &CodableSet::arc(0.25, 0.75), 0.1, 64, 64, 2).unwrap();
    assert!(t.holds && t.coded.cardinality <= t.original.cardinality, "{t:?}");
}
