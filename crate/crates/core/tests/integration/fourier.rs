use crate::oracle;
use mobius_lab::arith::sieve_mobius;
use mobius_lab::fourier::*;
use mobius_lab::numeric::e;
use mobius_lab::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn single_interval_cover(a in 0.0f64..1.0, len in 0.0f64..1.0, eps in 0.01f64..0.5) {
        let ratio = len / eps;
        prop_assume!((ratio - ratio.round()).abs() > 1e-6);
        let want = (ratio.ceil() as usize).max(1);
        prop_assert_eq!(interval_cover_count(&[(a, a + len)], eps), want);
    }

    #[test]
    fn separated_intervals_add(lens in prop::collection::vec(0.0f64..0.3, 1..8), eps in 0.02f64..0.2) {
        prop_assume!(lens.iter().all(|l| ((l / eps) - (l / eps).round()).abs() > 1e-6));
        let mut ivs = Vec::new();
        let mut start = 0.0;
        for &l in &lens {
            ivs.push((start, start + l));
            start += l + 1.0;
        }
        let want: usize = lens.iter().map(|l| ((l / eps).ceil() as usize).max(1)).sum();
        prop_assert_eq!(interval_cover_count(&ivs, eps), want);
    }

    #[test]
    fn vitali_selection(balls in prop::collection::vec((0.0f64..10.0, 0.01f64..1.0), 1..40)) {
        let kept = vitali_5r_subfamily(&balls);
        for (i, &a) in kept.iter().enumerate() {
            for &b in &kept[i + 1..] {
                prop_assert!((balls[a].0 - balls[b].0).abs() > balls[a].1 + balls[b].1);
            }
        }
        // each ball sits inside the 5-fold inflation of some kept ball
        for &(c, r) in &balls {
            prop_assert!(kept.iter().any(|&k| (balls[k].0 - c).abs() + r <= 5.0 * balls[k].1 + 1e-12));
        }
        prop_assert!(verify_vitali(&balls, &kept));
    }

    #[test]
    fn refinement_is_eta_dense(ratio in 0.05f64..0.45, level in 1u32..5, eta in 1e-4f64..0.05, u in 0.0f64..1.0, pick in any::<prop::sample::Index>()) {
        let c = FrequencySet::cantor(ratio, level).unwrap();
        let ivs = c.intervals();
        let (a, b) = ivs[pick.index(ivs.len())];
        let x = a + u * (b - a);
        let grid = c.refine(eta);
        prop_assert!(grid.iter().any(|g| (g - x).abs() <= eta / 2.0 + 1e-15));
    }

    #[test]
    fn finite_set_supremum_is_exact(n in 0u64..2_000, h in 1u64..40, pts in prop::collection::vec(0.0f64..1.0, 1..5)) {
        let mob = sieve_mobius(1, 2_100).unwrap();
        let c = FrequencySet::finite(pts.clone()).unwrap();
        let s = local_fourier_sup(&mob, n, h, &c, 0.01).unwrap();
        let direct = pts
            .iter()
            .map(|&a| {
                let z: Complex64 = (1..=h).map(|k| e(k as f64 * a) * f64::from(oracle::mu(n + k))).sum();
                z.norm() / h as f64
            })
            .fold(0.0, f64::max);
        prop_assert!((s.grid_lower - direct).abs() < 1e-12);
        prop_assert_eq!(s.certified_upper, s.grid_lower);
    }
}

#[test]
fn quarter_cantor_dimension() {
    let c = FrequencySet::cantor(0.25, 9).unwrap();
    let eps: Vec<f64> = (1..=7).map(|k| 4f64.powi(-k)).collect();
    let est = box_dimension_estimate(&c.intervals(), &eps).unwrap();
    for (k, &(_, count)) in est.counts.iter().enumerate() {
        assert_eq!(count, 1 << (k + 1));
    }
    assert!((est.slope - 0.5).abs() < 1e-9);
}

#[test]
fn restricted_average_matches_direct_mean() {
    let mob = sieve_mobius(1, 5_100).unwrap();
    let c = FrequencySet::cantor(0.2, 2).unwrap();
    let (n, h) = (5_000u64, 9u64);
    let eta = 0.01;
    let r = restricted_uniformity_average(&mob, n, h, &c, mobius_lab::arith::AverageKind::Cesaro, Some(eta)).unwrap();
    let direct: f64 = (1..=n)
        .map(|m| local_fourier_sup(&mob, m, h, &c, eta).unwrap().grid_lower)
        .sum::<f64>()
        / n as f64;
    assert!((r.grid_lower - direct).abs() < 1e-9, "{} vs {direct}", r.grid_lower);
}
