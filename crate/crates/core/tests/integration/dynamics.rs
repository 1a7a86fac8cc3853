use crate::oracle;
use mobius_lab::complexity::*;
use mobius_lab::fourier::FrequencySet;
use mobius_lab::systems::*;
use proptest::prelude::*;

fn skew() -> SystemSpec {
    SystemSpec::Skew {
        base: FrequencySet::cantor(0.1, 3).unwrap(),
        metric: CircleMetric::Arc,
    }
}

fn skew_point(x: f64, y: f64) -> Point {
    Point::Skew { base: x, angle: y }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rotation_mean_distance_is_constant(alpha in 0.0f64..1.0, s in 0.0f64..1.0, t in 0.0f64..1.0, n in 1usize..500) {
        let sys = SystemSpec::rotation(alpha);
        let d = mean_distance(&sys, &Point::Circle(s), &Point::Circle(t), n).unwrap();
        prop_assert!((d.value - oracle::circle(s, t)).abs() < 1e-12);
    }

    #[test]
    fn skew_mean_distance_matches_direct_average(
        x1 in 0.0f64..1.0, y1 in 0.0f64..1.0, x2 in 0.0f64..1.0, y2 in 0.0f64..1.0, n in 1usize..200
    ) {
        let sys = skew();
        let direct: f64 = (0..n)
            .map(|i| {
                let i = i as f64;
                (x1 - x2).abs().max(oracle::circle(y1 + i * x1, y2 + i * x2))
            })
            .sum::<f64>() / n as f64;
        let d = mean_distance(&sys, &skew_point(x1, y1), &skew_point(x2, y2), n).unwrap();
        prop_assert!((d.value - direct).abs() < 1e-9);
    }

    #[test]
    fn distance_at_commutes_with_iteration(x1 in 0.0f64..1.0, y1 in 0.0f64..1.0, x2 in 0.0f64..1.0, y2 in 0.0f64..1.0, i in -50i64..50) {
        let sys = skew();
        let (a, b) = (skew_point(x1, y1), skew_point(x2, y2));
        let lazy = sys.distance_at(&a, &b, i).unwrap().value;
        let eager = sys.distance(&sys.iterate(&a, i).unwrap(), &sys.iterate(&b, i).unwrap()).unwrap().value;
        prop_assert!((lazy - eager).abs() < 1e-9);
    }

    #[test]
    fn shift_iterates_compose(seed in any::<u64>(), i in -5i64..5, j in -5i64..5) {
        use rand::SeedableRng;
        let sys = SystemSpec::full_shift();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = random_point(&sys, 20, &mut rng).unwrap();
        let lhs = sys.iterate(&sys.iterate(&x, i).unwrap(), j).unwrap();
        let rhs = sys.iterate(&x, i + j).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn greedy_net_is_separated_and_covering(seed in any::<u64>(), n in 1usize..40, eps in 0.05f64..0.5) {
        let sys = skew();
        let cfg = SamplerConfig { sample_size: 60, seed, truncation_radius: 0 };
        let sample = draw_sample(&sys, &cfg, n).unwrap();
        let r = covering_number(&sys, &sample, n, eps).unwrap();
        for (a, &c) in r.net.iter().enumerate() {
            for &d in &r.net[a + 1..] {
                prop_assert!(mean_distance(&sys, &sample[c], &sample[d], n).unwrap().value >= eps);
            }
        }
        for p in &sample {
            let near = r.net.iter().any(|&c| mean_distance(&sys, &sample[c], p, n).unwrap().value < eps);
            prop_assert!(near);
        }
    }
}

#[test]
fn measure_net_covers_requested_mass() {
    let sys = skew();
    let cfg = SamplerConfig {
        sample_size: 200,
        seed: 3,
        truncation_radius: 0,
    };
    let sample = draw_sample(&sys, &cfg, 32).unwrap();
    let w = vec![1.0 / 200.0; 200];
    let r = measure_covering_number(&sys, &sample, &w, 32, 0.2).unwrap();
    assert!(r.covered_mass > 0.8 - 1e-12, "{r:?}");
    let top = covering_number(&sys, &sample, 32, 0.2).unwrap();
    assert!(r.report.cardinality <= top.cardinality);
}

#[test]
fn classification_of_model_growth() {
    let grid = [4usize, 8, 16, 32, 64];
    let class = |f: &dyn Fn(usize) -> usize| classify(&grid, &grid.map(f)).3;
    assert_eq!(class(&|_| 7), Some(Classification::Bounded));
    assert_eq!(class(&|n| (n as f64).sqrt().round() as usize), Some(Classification::Sublinear));
    assert_eq!(class(&|n| n * n), Some(Classification::Polynomial));
    assert_eq!(class(&|n| 1 << (n / 4)), Some(Classification::Superpolynomial));
}

#[test]
fn full_shift_prefix_counts_double() {
    let sys = SystemSpec::full_shift();
    let cfg = SamplerConfig {
        sample_size: 2048,
        seed: 1,
        truncation_radius: 0,
    };
    let sample = draw_sample(&sys, &cfg, 8).unwrap();
    for n in 1..=6i64 {
        let distinct: std::collections::HashSet<Vec<u8>> = sample
            .iter()
            .map(|p| match p {
                Point::Window(w) => (0..n).map(|k| w.bit(k).unwrap()).collect(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(distinct.len(), 1 << n);
    }
}

#[test]
fn sequence_text_round_trip() {
    let syms: Vec<Symbol> = (0..50)
        .map(|k| if k % 3 == 0 { Symbol::P } else { Symbol::Angle((k as f64 * 0.618_033_988_749_895).fract()) })
        .collect();
    let seq = SequenceSpec::new(
        Alphabet::ExtendedTorus(CircleMetric::Chord),
        SymbolWindow::symbols(-10, syms),
        Some(Symbol::P),
    );
    let back = SequenceSpec::from_text(&seq.to_text()).unwrap();
    assert_eq!(back, seq);
}

#[test]
fn sliding_sums_match_direct_sums() {
    let mob = mobius_lab::arith::sieve_mobius(1, 400).unwrap();
    let len = 7;
    let beta = 0.3;
    let sums = sliding_twisted_sums(&mob, 300, len, beta);
    for (idx, s) in sums.iter().enumerate().step_by(37) {
        let n = idx as u64 + 1;
        let direct: mobius_lab::Complex64 = (0..len as u64)
            .map(|l| mobius_lab::numeric::e(l as f64 * beta) * f64::from(oracle::mu(n + l)))
            .sum();
        assert!((s - direct).norm() < 1e-9, "n = {n}: {s} vs {direct}");
    }
}
