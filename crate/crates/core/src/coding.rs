//! Codings `x -> x^` through a set `U`, boundary smallness, the stability and
//! complexity-transfer checks for codings, and collar mollification of indicators.
//!
//! Arcs are closed on the left and open on the right, so every indicator is defined
//! everywhere. Boundary distances use the metric of the system.

use crate::arith::{normaliser, AverageKind, MobiusTable};
use crate::complexity::{covering_number, mean_distance, CoveringReport};
use crate::error::{Error, Result};
use crate::numeric::{frac, ComplexSum, NeumaierSum};
use crate::systems::{perturb, random_point, CircleMetric, Point, SymbolWindow, SystemSpec};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CodableSet {
    Whole,
    /// `[a, b)` on the circle, read cyclically (so `a > b` wraps through 0).
    Arc { a: f64, b: f64 },
    /// Product of arcs, one per factor of a product of circle systems.
    Rectangle { sides: Vec<(f64, f64)> },
    /// `{x : x(index) = symbol}` on the binary shift.
    Cylinder { index: i64, symbol: u8 },
}

fn arc_contains(a: f64, b: f64, t: f64) -> bool {
    let len = frac(b - a);
    if len == 0.0 {
        // a == b mod 1 is read as the empty arc
        return false;
    }
    frac(t - a) < len
}

/// Signed distance to the boundary of an arc: positive inside, negative outside.
fn arc_signed(a: f64, b: f64, t: f64, metric: CircleMetric) -> f64 {
    let d = metric.dist(t, a).min(metric.dist(t, b));
    if arc_contains(a, b, t) {
        d
    } else {
        -d
    }
}

fn circle_metric_of(system: &SystemSpec) -> Option<CircleMetric> {
    match system {
        SystemSpec::Rotation { metric, .. } | SystemSpec::Skew { metric, .. } => Some(*metric),
        _ => None,
    }
}

/// Circle coordinate used by arcs: the point itself, or the fiber of a skew point.
fn circle_coordinate(system: &SystemSpec, x: &Point) -> Result<(f64, CircleMetric)> {
    let metric = circle_metric_of(system);
    match (x, metric) {
        (Point::Circle(t), Some(m)) => Ok((*t, m)),
        (Point::Skew { angle, .. }, Some(m)) => Ok((*angle, m)),
        _ => Err(Error::Mismatch(format!(
            "arcs need a circle coordinate, got a {} system",
            system.kind()
        ))),
    }
}

impl CodableSet {
    pub fn arc(a: f64, b: f64) -> Self {
        CodableSet::Arc {
            a: frac(a),
            b: frac(b),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CodableSet::Whole => "whole".into(),
            CodableSet::Arc { a, b } => format!("arc[{a},{b})"),
            CodableSet::Rectangle { sides } => {
                let s: Vec<String> = sides.iter().map(|(a, b)| format!("[{a},{b})")).collect();
                format!("rectangle{}", s.join("x"))
            }
            CodableSet::Cylinder { index, symbol } => format!("cylinder(x({index})={symbol})"),
        }
    }

    pub fn contains(&self, system: &SystemSpec, x: &Point) -> Result<bool> {
        match self {
            CodableSet::Whole => Ok(true),
            CodableSet::Arc { a, b } => {
                let (t, _) = circle_coordinate(system, x)?;
                Ok(arc_contains(*a, *b, t))
            }
            CodableSet::Rectangle { sides } => match (system, x) {
                (SystemSpec::Product(specs), Point::Product(points))
                    if specs.len() == sides.len() && points.len() == sides.len() =>
                {
                    for ((s, p), (a, b)) in specs.iter().zip(points).zip(sides) {
                        let (t, _) = circle_coordinate(s, p)?;
                        if !arc_contains(*a, *b, t) {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }
                _ => Err(Error::Mismatch("rectangles live on products of circle systems".into())),
            },
            CodableSet::Cylinder { index, symbol } => match x {
                Point::Window(w) => w
                    .bit(*index)
                    .map(|b| b == *symbol)
                    .ok_or(Error::InsufficientSupport {
                        required: *index,
                        available: w.hi(),
                    }),
                _ => Err(Error::Mismatch("cylinders live on the binary shift".into())),
            },
        }
    }

    /// Signed distance to `∂U`: `d(x, ∂U)` inside `U`, `-d(x, ∂U)` outside.
    /// Clopen sets have empty boundary and return `±inf`.
    pub fn signed_boundary_distance(&self, system: &SystemSpec, x: &Point) -> Result<f64> {
        match self {
            CodableSet::Whole => Ok(f64::INFINITY),
            CodableSet::Cylinder { .. } => Ok(if self.contains(system, x)? {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }),
            CodableSet::Arc { a, b } => {
                let (t, m) = circle_coordinate(system, x)?;
                if frac(b - a) == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(arc_signed(*a, *b, t, m))
            }
            CodableSet::Rectangle { sides } => {
                let (SystemSpec::Product(specs), Point::Product(points)) = (system, x) else {
                    return Err(Error::Mismatch("rectangles live on products of circle systems".into()));
                };
                if specs.len() != sides.len() || points.len() != sides.len() {
                    return Err(Error::Mismatch("rectangle dimension differs from the product".into()));
                }
                // max metric: inside, the nearest exit; outside, the farthest violated side
                let mut inside_min = f64::INFINITY;
                let mut outside_max = 0.0f64;
                let mut inside = true;
                for ((s, p), (a, b)) in specs.iter().zip(points).zip(sides) {
                    let (t, m) = circle_coordinate(s, p)?;
                    let sd = arc_signed(*a, *b, t, m);
                    if sd >= 0.0 && arc_contains(*a, *b, t) {
                        inside_min = inside_min.min(sd);
                    } else {
                        inside = false;
                        outside_max = outside_max.max(-sd);
                    }
                }
                Ok(if inside { inside_min } else { -outside_max })
            }
        }
    }

    /// Membership in the open collar `B(∂U, eps0)`.
    pub fn in_collar(&self, system: &SystemSpec, x: &Point, eps0: f64) -> Result<bool> {
        Ok(self.signed_boundary_distance(system, x)?.abs() < eps0)
    }
}

/// `h = 1` on `U \ B(∂U, eps0)`, `0` off `U ∪ B(∂U, eps0)`, linear in the signed
/// boundary distance across the collar.
pub fn mollified_value(system: &SystemSpec, set: &CodableSet, eps0: f64, x: &Point) -> Result<f64> {
    if !(eps0 > 0.0) {
        return Err(Error::invalid("eps0 must be positive"));
    }
    let s = set.signed_boundary_distance(system, x)?;
    Ok(((s + eps0) / (2.0 * eps0)).clamp(0.0, 1.0))
}

/// The observable `h` of [`mollified_value`].
pub fn mollify_indicator(set: &CodableSet, eps0: f64) -> Result<crate::systems::Observable> {
    if !(eps0 > 0.0) {
        return Err(Error::invalid("eps0 must be positive"));
    }
    Ok(crate::systems::Observable::Mollified {
        set: set.clone(),
        eps0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub eps0: f64,
    pub n: usize,
    /// Max over trial points of `(1/N) #{0 <= n < N : T^n x in B(∂U, eps0)}`.
    pub cesaro_max: f64,
    /// Same with weights `1/n` over `1 <= n <= N`, normalised by `M_N`.
    pub log_max: f64,
}

pub fn smallness_test(
    system: &SystemSpec,
    set: &CodableSet,
    eps0: f64,
    n: usize,
    trial_points: &[Point],
) -> Result<SmallnessReport> {
    if n == 0 || trial_points.is_empty() {
        return Err(Error::invalid("N and the trial set must be nonempty"));
    }
    let mut cesaro_max = 0.0f64;
    let mut log_max = 0.0f64;
    for x in trial_points {
        let mut ces = 0usize;
        let mut log = NeumaierSum::new();
        for k in 0..=n as i64 {
            let hit = set.in_collar(system, &system.iterate(x, k)?, eps0)?;
            if hit && k < n as i64 {
                ces += 1;
            }
            if hit && k >= 1 {
                log.add(1.0 / k as f64);
            }
        }
        cesaro_max = cesaro_max.max(ces as f64 / n as f64);
        log_max = log_max.max(log.value() / normaliser(n as u64, AverageKind::Logarithmic));
    }
    Ok(SmallnessReport {
        eps0,
        n,
        cesaro_max,
        log_max,
    })
}

/// `x^(n)` for `n` in `[lo, hi]`.
pub fn code_point(system: &SystemSpec, set: &CodableSet, x: &Point, lo: i64, hi: i64) -> Result<Vec<u8>> {
    if hi < lo {
        return Err(Error::invalid("empty coding range"));
    }
    (lo..=hi)
        .map(|k| Ok(u8::from(set.contains(system, &system.iterate(x, k)?)?)))
        .collect()
}

/// The coding as a window of the binary shift, centered at index 0.
pub fn code_window(system: &SystemSpec, set: &CodableSet, x: &Point, lo: i64, hi: i64) -> Result<SymbolWindow> {
    Ok(SymbolWindow::bits(lo, code_point(system, set, x, lo, hi)?))
}

fn disagreement(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub delta: f64,
    pub n: usize,
    pub eps0: f64,
    /// The `epsilon in (0, delta^2)` passed to the pair sampler.
    pub epsilon: f64,
    pub collar_frequency: f64,
    pub pairs_tested: usize,
    pub max_density: f64,
    pub pass: bool,
    pub vacuous: bool,
    pub inconclusive: bool,
}

/// Stability of codings under mean-metric closeness: finds a collar radius `eps0`
/// with collar frequency below `delta`, then `epsilon < delta^2` by bisection so that
/// points outside the collar are at least `sqrt(epsilon)` from the other side, then
/// samples pairs with `d_N < epsilon` and reports the largest disagreement density.
pub fn verify_coding_stability(
    system: &SystemSpec,
    set: &CodableSet,
    delta: f64,
    n: usize,
    pair_count: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if !(delta > 0.0) || n == 0 {
        return Err(Error::invalid("delta and N must be positive"));
    }
    let mut report = StabilityReport {
        delta,
        n,
        eps0: 0.0,
        epsilon: 0.0,
        collar_frequency: 0.0,
        pairs_tested: 0,
        max_density: 0.0,
        pass: false,
        vacuous: false,
        inconclusive: false,
    };
    if delta >= 1.0 {
        report.vacuous = true;
        report.pass = true;
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let firsts: Vec<Point> = (0..pair_count.max(1))
        .map(|_| random_point(system, n as i64 + 32, &mut rng))
        .collect::<Result<_>>()?;

    // collar radius with small boundary frequency on the trial orbits
    let mut eps0 = delta / 2.0;
    let mut freq = smallness_test(system, set, eps0, n, &firsts)?.cesaro_max;
    let mut halvings = 0;
    while freq >= delta && halvings < 40 {
        eps0 /= 2.0;
        freq = smallness_test(system, set, eps0, n, &firsts)?.cesaro_max;
        halvings += 1;
    }
    report.eps0 = eps0;
    report.collar_frequency = freq;
    if freq >= delta {
        report.inconclusive = true;
        return Ok(report);
    }

    // smallest |signed distance| outside the collar along the trial orbits
    let mut clearance = f64::INFINITY;
    for x in &firsts {
        for k in 0..n as i64 {
            let s = set.signed_boundary_distance(system, &system.iterate(x, k)?)?.abs();
            if s >= eps0 {
                clearance = clearance.min(s);
            }
        }
    }
    let separated = |eps: f64| eps.sqrt() <= clearance;
    let (mut lo, mut hi) = (0.0f64, delta * delta);
    if separated(hi * (1.0 - 1e-12)) {
        lo = hi * (1.0 - 1e-12);
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if separated(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let epsilon = lo;
    report.epsilon = epsilon;
    if !(epsilon > 0.0) {
        report.inconclusive = true;
        return Ok(report);
    }

    for x1 in &firsts {
        let x2 = match perturb(system, x1, epsilon, &mut rng) {
            Ok(p) => p,
            Err(Error::Unsupported(_)) => {
                report.inconclusive = true;
                return Ok(report);
            }
            Err(e) => return Err(e),
        };
        if mean_distance(system, x1, &x2, n)?.value >= epsilon {
            continue;
        }
        let c1 = code_point(system, set, x1, 0, n as i64 - 1)?;
        let c2 = code_point(system, set, &x2, 0, n as i64 - 1)?;
        let density = disagreement(&c1, &c2) as f64 / n as f64;
        report.max_density = report.max_density.max(density);
        report.pairs_tested += 1;
    }
    if report.pairs_tested == 0 {
        report.inconclusive = true;
        return Ok(report);
    }
    report.pass = report.max_density <= 2.0 * delta;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub delta: f64,
    pub n: usize,
    /// Smallest `L` with `2 / 2^L < delta / 2`.
    pub l: u32,
    /// `delta' = 0.99 delta / (8 L)`, so that `4 delta' L + 2 / 2^L < delta`.
    pub delta_prime: f64,
    pub epsilon: f64,
    pub coded: CoveringReport,
    pub original: CoveringReport,
    pub holds: bool,
}

/// Compares the greedy net of the coded sample at `delta` in the binary shift with the
/// greedy net of the original sample at `epsilon(delta')` in the system.
pub fn complexity_transfer_check(
    system: &SystemSpec,
    set: &CodableSet,
    delta: f64,
    n: usize,
    sample_size: usize,
    seed: u64,
) -> Result<TransferReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    let mut l = 1u32;
    while 2.0 / 2f64.powi(l as i32) >= delta / 2.0 {
        l += 1;
    }
    let delta_prime = 0.99 * delta / (8.0 * f64::from(l));
    let stab = verify_coding_stability(system, set, delta_prime, n, 16, seed)?;
    let epsilon = if stab.epsilon > 0.0 {
        stab.epsilon
    } else {
        delta_prime * delta_prime / 2.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let sample: Vec<Point> = (0..sample_size.max(1))
        .map(|_| random_point(system, n as i64 + 64, &mut rng))
        .collect::<Result<_>>()?;
    let original = covering_number(system, &sample, n, epsilon)?;
    let radius = 48i64;
    let coded_points: Vec<Point> = sample
        .iter()
        .map(|x| code_window(system, set, x, -radius, n as i64 + radius).map(Point::Window))
        .collect::<Result<_>>()?;
    let coded = covering_number(&SystemSpec::full_shift(), &coded_points, n, delta)?;
    Ok(TransferReport {
        delta,
        n,
        l,
        delta_prime,
        epsilon,
        holds: coded.cardinality <= original.cardinality,
        coded,
        original,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollificationGap {
    /// `|E^log 1_U(T^n x) mu(n) - E^log h(T^n x) mu(n)|`.
    pub gap: f64,
    /// `E^log 1_{B(∂U, eps0)}(T^n x)`.
    pub collar_frequency: f64,
}

/// Compares the indicator and its mollification along one orbit under log averages.
pub fn mollification_gap(
    system: &SystemSpec,
    set: &CodableSet,
    eps0: f64,
    x: &Point,
    mob: &MobiusTable,
    n: u64,
) -> Result<MollificationGap> {
    mob.require(1, n)?;
    let mut diff = ComplexSum::new();
    let mut collar = NeumaierSum::new();
    for k in 1..=n {
        let p = system.iterate(x, k as i64)?;
        let ind = if set.contains(system, &p)? { 1.0 } else { 0.0 };
        let h = mollified_value(system, set, eps0, &p)?;
        let w = f64::from(mob.mu(k)) / k as f64;
        diff.add(Complex64::new((ind - h) * w, 0.0));
        if set.in_collar(system, &p, eps0)? {
            collar.add(1.0 / k as f64);
        }
    }
    let m = normaliser(n, AverageKind::Logarithmic);
    Ok(MollificationGap {
        gap: diff.value().norm() / m,
        collar_frequency: collar.value() / m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot() -> SystemSpec {
        SystemSpec::rotation(0.414_213_562_373_095_1)
    }

    #[test]
    fn whole_space_codes_to_ones() {
        let c = code_point(&rot(), &CodableSet::Whole, &Point::Circle(0.3), 0, 20).unwrap();
        assert!(c.iter().all(|&b| b == 1));
        let s = smallness_test(&rot(), &CodableSet::Whole, 0.1, 100, &[Point::Circle(0.0)]).unwrap();
        assert_eq!(s.cesaro_max, 0.0);
    }

    #[test]
    fn closed_left_convention() {
        let u = CodableSet::arc(0.25, 0.5);
        assert!(u.contains(&rot(), &Point::Circle(0.25)).unwrap());
        assert!(!u.contains(&rot(), &Point::Circle(0.5)).unwrap());
        let wrap = CodableSet::arc(0.9, 0.1);
        assert!(wrap.contains(&rot(), &Point::Circle(0.95)).unwrap());
        assert!(wrap.contains(&rot(), &Point::Circle(0.05)).unwrap());
        assert!(!wrap.contains(&rot(), &Point::Circle(0.5)).unwrap());
    }

    #[test]
    fn cylinder_is_clopen() {
        let s = SystemSpec::full_shift();
        let u = CodableSet::Cylinder { index: 0, symbol: 1 };
        let x = Point::Window(SymbolWindow::bits(-2, vec![0, 1, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0]));
        let r = smallness_test(&s, &u, 0.5, 10, &[x]).unwrap();
        assert_eq!(r.cesaro_max, 0.0);
    }

    #[test]
    fn mollifier_values() {
        let u = CodableSet::arc(0.2, 0.6);
        let h = |t| mollified_value(&rot(), &u, 0.02, &Point::Circle(t)).unwrap();
        assert_eq!(h(0.4), 1.0);
        assert_eq!(h(0.9), 0.0);
        let v = h(0.19);
        assert!(v > 0.0 && v < 1.0);
        assert!((h(0.2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rectangle_distances() {
        let s = SystemSpec::Product(vec![SystemSpec::rotation(0.1), SystemSpec::rotation(0.2)]);
        let u = CodableSet::Rectangle {
            sides: vec![(0.0, 0.5), (0.0, 0.5)],
        };
        let inside = Point::Product(vec![Point::Circle(0.1), Point::Circle(0.25)]);
        assert!((u.signed_boundary_distance(&s, &inside).unwrap() - 0.1).abs() < 1e-12);
        let outside = Point::Product(vec![Point::Circle(0.6), Point::Circle(0.7)]);
        assert!((u.signed_boundary_distance(&s, &outside).unwrap() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn coding_commutes_with_dynamics() {
        let s = rot();
        let u = CodableSet::arc(0.1, 0.45);
        let x = Point::Circle(0.77);
        let tx = s.apply(&x).unwrap();
        let a = code_point(&s, &u, &x, 1, 50).unwrap();
        let b = code_point(&s, &u, &tx, 0, 49).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stability_identical_and_vacuous() {
        let r = verify_coding_stability(&rot(), &CodableSet::arc(0.0, 0.5), 1.5, 100, 4, 1).unwrap();
        assert!(r.vacuous && r.pass);
    }

    #[test]
    fn transfer_whole_space() {
        let r = complexity_transfer_check(&rot(), &CodableSet::Whole, 0.2, 32, 20, 3).unwrap();
        assert_eq!(r.coded.cardinality, 1);
        assert!(r.holds);
    }
}
