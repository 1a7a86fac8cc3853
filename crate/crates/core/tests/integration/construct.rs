use mobius_lab::construct::*;
use mobius_lab::fourier::FrequencySet;
use mobius_lab::systems::Symbol;
use mobius_lab::Complex64;
use proptest::prelude::*;

// best mass of a subset with pairwise gaps >= gap, by dynamic programming
fn best_mass(s: &[u64], gap: u64) -> f64 {
    let n = s.len();
    let mut best = vec![0.0f64; n + 1];
    for i in (0..n).rev() {
        let next = s.partition_point(|&x| x < s[i] + gap);
        best[i] = best[i + 1].max(1.0 / s[i] as f64 + best[next]);
    }
    best[0]
}

fn block(start: u64, len: u64, theta: f64, phi: f64) -> Block {
    Block {
        start,
        len,
        scale: 0,
        theta,
        phi,
        g: None,
    }
}

fn sample_sequence() -> AssembledSequence {
    let mut spec = BlockSpec::new(0.5, vec![Scale { h: 4, n: 1_000 }]).unwrap();
    spec.blocks = vec![
        block(10, 5, 0.1, 0.3),
        block(40, 8, 0.25, 0.0),
        block(100, 12, 0.1, 0.9),
    ];
    assemble_sequence(&spec, Variant::Fourier).unwrap()
}

fn set() -> FrequencySet {
    FrequencySet::finite(vec![0.1, 0.25]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn greedy_gapped_subset_is_optimal(mut s in prop::collection::btree_set(1u64..400, 0..40), gap in 1u64..30) {
        let s: Vec<u64> = std::mem::take(&mut s).into_iter().collect();
        let sel = select_gapped_subset(&s, gap, 0.0);
        for w in sel.subset.windows(2) {
            prop_assert!(w[1] - w[0] >= gap);
        }
        prop_assert!((sel.mass - best_mass(&s, gap)).abs() < 1e-12);
    }

    #[test]
    fn log_average_bounded_by_tail_window(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let spec = BlockSpec::new(0.5, vec![Scale { h: 3, n: 300 }, Scale { h: 6, n: 3_000 }]).unwrap();
        let signal: Vec<Complex64> = (0..3_006)
            .map(|_| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let r = verify_lower_bound_chain(&spec, &signal, Variant::Fourier, &FrequencyRule::Fixed(0.0)).unwrap();
        let windows: Vec<f64> = r.links.iter().filter(|l| l.id == "tail-window").map(|l| l.measured).collect();
        for (i, sc) in spec.scales.iter().enumerate() {
            let m = mobius_lab::numeric::harmonic(sc.n);
            prop_assert!(r.finals[i] >= (windows[i] - r.excluded_mass[i]) / m - 1e-12);
        }
    }
}

#[test]
fn assembled_blocks_satisfy_property_star() {
    let y = sample_sequence();
    let rep = check_property_star(&y, &set(), 1e-9);
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.lengths, vec![5, 8, 12]);
    assert!(rep.lengths_grow);
    let thetas: Vec<f64> = rep.blocks.iter().map(|b| b.theta).collect();
    for (t, want) in thetas.iter().zip([0.1, 0.25, 0.1]) {
        assert!((t - want).abs() < 1e-12);
    }
}

#[test]
fn one_corrupted_symbol_is_located() {
    let mut y = sample_sequence();
    // position 45 lies in the second block
    y.symbols[44] = Symbol::Angle(0.5);
    let rep = check_property_star(&y, &set(), 1e-9);
    assert!(!rep.pass);
    assert_eq!(rep.failures(), vec![1]);
}

#[test]
fn frequency_just_outside_the_set_fails() {
    let tol = 1e-6;
    let mut spec = BlockSpec::new(0.5, vec![Scale { h: 4, n: 1_000 }]).unwrap();
    spec.blocks = vec![block(10, 6, 0.1 + 2.0 * tol, 0.0)];
    let y = assemble_sequence(&spec, Variant::Fourier).unwrap();
    let rep = check_property_star(&y, &set(), tol);
    assert!(rep.blocks[0].symbols_ok && !rep.blocks[0].in_c, "{rep:?}");
}

#[test]
fn sequence_file_round_trip() {
    let y = sample_sequence();
    let back = AssembledSequence::from_sequence_spec(&y.to_sequence_spec());
    assert_eq!(back.symbols, y.symbols);
}

#[test]
fn generic_point_frequencies() {
    let mut spec = BlockSpec::new(0.5, vec![Scale { h: 4, n: 100_000 }]).unwrap();
    let starts: Vec<u64> = (0..10).map(|k| 10u64 << k).collect();
    spec.blocks = starts.iter().map(|&s| block(s, 4, 0.1, 0.0)).collect();
    let y = assemble_sequence(&spec, Variant::Fourier).unwrap();
    let windows = [(0i64, 100i64), (100, 1_000), (1_000, 6_000)];
    let rep = gen_measure_support_check(&y, &windows);
    for (w, row) in windows.iter().zip(&rep.windows) {
        // a block starting at s opens at s + 1
        let direct = starts.iter().filter(|&&s| (s as i64 + 1) > w.0 && (s as i64 + 1) <= w.1).count() as u64;
        assert_eq!(row.transitions, direct);
    }
    assert!(rep.decreasing, "{rep:?}");
}

#[test]
fn zero_signal_breaks_the_first_link() {
    let spec = BlockSpec::new(0.5, vec![Scale { h: 3, n: 300 }, Scale { h: 6, n: 3_000 }]).unwrap();
    let r = verify_lower_bound_chain(&spec, &constant_signal(3_006, 0.0), Variant::Fourier, &FrequencyRule::Fixed(0.0))
        .unwrap();
    assert!(!r.chain_pass);
    assert_eq!(r.first_failure.as_deref(), Some("threshold-average (scale 0)"));
}

#[test]
fn correlated_signal_keeps_the_final_bound() {
    let spec = BlockSpec::new(0.5, vec![Scale { h: 3, n: 300 }, Scale { h: 6, n: 3_000 }]).unwrap();
    let r = verify_lower_bound_chain(&spec, &constant_signal(3_006, 1.0), Variant::Fourier, &FrequencyRule::Fixed(0.0))
        .unwrap();
    assert!(r.finals.iter().all(|&f| f >= 0.0025), "{}", r.to_text());
    assert!(r.spec.block_violations().iter().all(|v| !v.contains("closer than")));
    // the separation condition cannot hold at this sigma
    assert!(!r.preconditions_pass);
    let ids: Vec<&str> = r.links.iter().map(|l| l.id).collect();
    for id in LINK_IDS {
        assert!(ids.contains(&id), "{id}");
    }
}

#[test]
fn nil_variant_blocks_are_linear_phases() {
    let spec = heisenberg_spec(0.5, vec![Scale { h: 3, n: 300 }]).unwrap();
    let r = verify_lower_bound_chain(&spec, &constant_signal(303, 1.0), Variant::Nil, &FrequencyRule::Fixed(0.0)).unwrap();
    let rep = check_property_star(&r.sequence, &FrequencySet::finite(vec![0.0]).unwrap(), 1e-12);
    assert!(rep.pass && !rep.blocks.is_empty());
}

#[test]
fn short_signal_rejected() {
    let spec = BlockSpec::new(0.5, vec![Scale { h: 3, n: 300 }]).unwrap();
    assert!(verify_lower_bound_chain(&spec, &constant_signal(302, 1.0), Variant::Fourier, &FrequencyRule::Fixed(0.0)).is_err());
}
