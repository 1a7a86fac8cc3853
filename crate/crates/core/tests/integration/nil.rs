use mobius_lab::nil::*;
use proptest::prelude::*;

fn coords(r: f64) -> impl Strategy<Value = NilElement> {
    prop::array::uniform3(-r..r).prop_map(|c| NilElement::new(&c))
}

fn close(a: &NilElement, b: &NilElement, tol: f64) -> bool {
    a.coords.iter().zip(&b.coords).all(|(x, y)| (x - y).abs() <= tol)
}

// oracle for g^k by repeated products
fn naive_power(g: &NilGroup, x: &NilElement, k: i64) -> NilElement {
    let step = if k >= 0 { x.clone() } else { g.inverse(x) };
    (0..k.abs()).fold(g.identity(), |acc, _| g.mult(&acc, &step))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn group_laws(x in coords(10.0), y in coords(10.0), z in coords(10.0)) {
        let g = NilGroup::heisenberg();
        prop_assert!(close(&g.mult(&g.mult(&x, &y), &z), &g.mult(&x, &g.mult(&y, &z)), 1e-12));
        prop_assert!(close(&g.mult(&x, &g.inverse(&x)), &g.identity(), 1e-12));
        prop_assert!(close(&g.inverse(&g.inverse(&x)), &x, 1e-12));
    }

    #[test]
    fn integer_powers_are_repeated_products(x in coords(2.0), k in -30i64..30) {
        let g = NilGroup::heisenberg();
        prop_assert!(close(&g.power(&x, k as f64), &naive_power(&g, &x, k), 1e-9));
    }

    #[test]
    fn commutators_are_central(x in coords(3.0), y in coords(3.0)) {
        let g = NilGroup::heisenberg();
        let c = g.commutator(&x, &y);
        prop_assert!(g.in_subgroup(&c, 2, 1e-12));
        // [(a,b,.), (a',b',.)] = (0, 0, a b' - a' b)
        let want = x.coords[0] * y.coords[1] - y.coords[0] * x.coords[1];
        prop_assert!((c.coords[2] - want).abs() < 1e-9);
    }

    #[test]
    fn factorisation_reproduces_the_sequence(c0 in coords(5.0), c1 in coords(5.0), t in -5.0f64..5.0) {
        let g = NilGroup::heisenberg();
        let p = PolySeq::new(vec![c0, c1, NilElement::new(&[0.0, 0.0, t])]);
        let (prime, gamma) = factorize(&g, &p).unwrap();
        prop_assert!(prime.coeffs.iter().all(|c| g.in_fundamental_box(c)));
        prop_assert!(gamma.coeffs.iter().all(NilElement::is_integral));
        for n in -50..=50 {
            let whole = poly_eval(&g, &p, n).unwrap();
            let split = g.mult(&poly_eval(&g, &prime, n).unwrap(), &poly_eval(&g, &gamma, n).unwrap());
            prop_assert!(close(&whole, &split, 1e-9), "n = {}: {:?} vs {:?}", n, whole, split);
        }
    }

    #[test]
    fn quotient_distance_ignores_the_lattice(x in coords(1.0), y in coords(1.0), p in -3i64..3, q in -3i64..3, r in -3i64..3) {
        let g = NilGroup::heisenberg();
        let gamma = NilElement::new(&[p as f64, q as f64, r as f64]);
        let d = g.quotient_metric(&x, &y, 3, 1).value;
        let moved = g.quotient_metric(&g.mult(&x, &gamma), &y, 3, 1).value;
        prop_assert!((d - moved).abs() < 1e-9);
        prop_assert!(g.quotient_lower_bound(&x, &y) <= d + 1e-12);
    }

    #[test]
    fn deeper_search_never_increases_the_distance(x in coords(1.0), y in coords(1.0)) {
        let g = NilGroup::heisenberg();
        let d1 = g.quotient_metric(&x, &y, 2, 1).value;
        let d2 = g.quotient_metric(&x, &y, 2, 2).value;
        prop_assert!(d2 <= d1 + 1e-12);
    }

    #[test]
    fn coefficient_csv_round_trip(c0 in coords(4.0), c1 in coords(4.0)) {
        let p = PolySeq::new(vec![c0, c1]);
        prop_assert_eq!(PolySeq::from_csv(&p.to_csv()).unwrap(), p);
    }
}

#[test]
fn circle_cover_grows_with_length() {
    // degree-one polynomials n alpha + beta on the circle
    let g = NilGroup::abelian(1);
    let counts: Vec<usize> = [2usize, 8, 32]
        .iter()
        .map(|&n| {
            poly_covering_number(&g, n, 0.1, 3_000, 1, PolyCoverOptions::default())
                .unwrap()
                .cardinality
        })
        .collect();
    assert!(counts[0] < counts[1] && counts[1] < counts[2], "{counts:?}");
    // an eps-separated net is no larger than a grid in (alpha, beta) with steps eps / n and eps
    for (&n, &c) in [2usize, 8, 32].iter().zip(&counts) {
        assert!(c as f64 <= (n as f64 / 0.1 + 1.0) * 11.0, "n = {n}: {c}");
    }
}

#[test]
fn single_position_cover_is_the_nilmanifold_cover() {
    let g = NilGroup::heisenberg();
    let r = poly_covering_number(&g, 1, 0.25, 5_000, 2, PolyCoverOptions::default()).unwrap();
    // n = 1 is a cover of the nilmanifold alone; 64 is a 4 x 4 x 4 grid at this radius
    assert!(r.cardinality <= 64, "{}", r.cardinality);
}

#[test]
fn group_text_round_trip() {
    for g in [NilGroup::heisenberg(), NilGroup::abelian(3)] {
        let back = group_spec_from_str(&group_spec_to_string(&g)).unwrap();
        assert_eq!(back, g);
    }
}
