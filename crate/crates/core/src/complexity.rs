//! Mean metrics, greedy covering numbers (topological and measure versions),
//! growth profiles, and the logarithmic disjointness certificate.
//!
//! Covering numbers of the full space are out of reach; every count here is a
//! greedy net over a finite sample and therefore an upper bound on the covering
//! number of that sample. A greedy net is also an `epsilon`-separated set, so its
//! size bounds the covering number at radius `epsilon / 2` from below.

use crate::arith::{normaliser, AverageKind, MobiusTable};
use crate::error::{Error, Result};
use crate::numeric::{e, fit_line, quadratic_coefficient, ComplexSum, NeumaierSum};
use crate::systems::{random_point, Observable, Point, Symbol, SystemSpec};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDirection {
    Upper,
}

impl BoundDirection {
    pub fn as_str(self) -> &'static str {
        "upper_bound"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub n: usize,
    pub epsilon: f64,
    /// Indices of the net centers in the sample.
    pub net: Vec<usize>,
    pub cardinality: usize,
    pub direction: BoundDirection,
    pub sample_size: usize,
    pub tail_bound: f64,
    pub note: String,
}

impl CoveringReport {
    pub fn statement(&self) -> String {
        format!(
            "{} is an upper bound on S_{}(sample, {}) and a lower bound on S_{}(sample, {})",
            self.cardinality,
            self.n,
            self.epsilon,
            self.n,
            self.epsilon / 2.0
        )
    }
}

/// `(1/n) sum_{i < n} d(T^i x, T^i y)`; the tail bound is averaged the same way.
pub fn mean_distance(system: &SystemSpec, x: &Point, y: &Point, n: usize) -> Result<crate::systems::Measured> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if system.is_isometry() {
        return system.distance(x, y);
    }
    let mut value = NeumaierSum::new();
    let mut tail = NeumaierSum::new();
    for i in 0..n as i64 {
        let m = system.distance_at(x, y, i)?;
        value.add(m.value);
        tail.add(m.tail_bound);
    }
    Ok(crate::systems::Measured {
        value: value.value() / n as f64,
        tail_bound: tail.value() / n as f64,
    })
}

/// Whether `d_n(x, y) < eps`, stopping as soon as the partial sum reaches `eps * n`.
pub fn mean_distance_below(
    system: &SystemSpec,
    x: &Point,
    y: &Point,
    n: usize,
    eps: f64,
) -> Result<bool> {
    if system.is_isometry() {
        return Ok(system.distance(x, y)?.value < eps);
    }
    let budget = eps * n as f64;
    let mut acc = 0.0;
    for i in 0..n as i64 {
        acc += system.distance_at(x, y, i)?.value;
        if acc >= budget {
            return Ok(false);
        }
    }
    Ok(acc / (n as f64) < eps)
}

/// Worst tail bound over the first `n` iterates of the sample.
pub fn sample_tail_bound(system: &SystemSpec, sample: &[Point], n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in sample {
        for i in [0, n as i64 - 1] {
            worst = worst.max(system.distance_at(p, p, i)?.tail_bound);
        }
    }
    Ok(worst)
}

/// Greedy sequential `eps`-net under the mean metric: a sample becomes a new center
/// when it is at distance `>= eps` from every current center.
pub fn covering_number(
    system: &SystemSpec,
    sample: &[Point],
    n: usize,
    epsilon: f64,
) -> Result<CoveringReport> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let tail_bound = sample_tail_bound(system, sample, n)?;
    let mut net: Vec<usize> = Vec::new();
    for (i, p) in sample.iter().enumerate() {
        let mut covered = false;
        for &c in &net {
            if mean_distance_below(system, &sample[c], p, n, epsilon)? {
                covered = true;
                break;
            }
        }
        if !covered {
            net.push(i);
        }
    }
    Ok(CoveringReport {
        n,
        epsilon,
        cardinality: net.len(),
        net,
        direction: BoundDirection::Upper,
        sample_size: sample.len(),
        tail_bound,
        note: format!("greedy net, {}", system.describe()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureCoveringReport {
    pub report: CoveringReport,
    pub covered_mass: f64,
    /// `epsilon >= 1`: the covering condition is vacuous and the count is reported as 1.
    pub degenerate: bool,
}

/// Ball membership lists `{j : d_n(x_i, x_j) < eps}` for every sample point.
pub fn ball_lists(system: &SystemSpec, sample: &[Point], n: usize, eps: f64) -> Result<Vec<Vec<u32>>> {
    let rows: Vec<Result<Vec<u32>>> = (0..sample.len())
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for (j, q) in sample.iter().enumerate() {
                if i == j || mean_distance_below(system, &sample[i], q, n, eps)? {
                    row.push(j as u32);
                }
            }
            Ok(row)
        })
        .collect();
    rows.into_iter().collect()
}

/// Greedy mass cover: add the ball covering the most uncovered weight (ties by index)
/// until the covered weight exceeds `1 - eps`.
pub fn measure_covering_number(
    system: &SystemSpec,
    sample: &[Point],
    weights: &[f64],
    n: usize,
    epsilon: f64,
) -> Result<MeasureCoveringReport> {
    if sample.is_empty() || sample.len() != weights.len() {
        return Err(Error::invalid("weights must match a nonempty sample"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("weights sum to {total}, not 1")));
    }
    if !(epsilon > 0.0) || n == 0 {
        return Err(Error::invalid("epsilon and n must be positive"));
    }
    let tail_bound = sample_tail_bound(system, sample, n)?;
    let base = |net: Vec<usize>, note: String| CoveringReport {
        n,
        epsilon,
        cardinality: net.len(),
        net,
        direction: BoundDirection::Upper,
        sample_size: sample.len(),
        tail_bound,
        note,
    };
    if epsilon >= 1.0 {
        return Ok(MeasureCoveringReport {
            report: base(vec![0], "epsilon >= 1: condition vacuous, reporting 1".into()),
            covered_mass: weights[0],
            degenerate: true,
        });
    }
    let balls = ball_lists(system, sample, n, epsilon)?;
    Ok(greedy_mass_cover(&balls, weights, epsilon, |net, mass| MeasureCoveringReport {
        report: base(net, format!("greedy mass cover, {}", system.describe())),
        covered_mass: mass,
        degenerate: false,
    }))
}

fn greedy_mass_cover<T>(
    balls: &[Vec<u32>],
    weights: &[f64],
    epsilon: f64,
    finish: impl FnOnce(Vec<usize>, f64) -> T,
) -> T {
    let mut covered = vec![false; weights.len()];
    let mut mass = 0.0;
    let mut net = Vec::new();
    while mass <= 1.0 - epsilon && net.len() < weights.len() {
        let mut best = usize::MAX;
        let mut best_gain = -1.0;
        for (i, ball) in balls.iter().enumerate() {
            let gain: f64 = ball
                .iter()
                .filter(|&&j| !covered[j as usize])
                .map(|&j| weights[j as usize])
                .sum();
            if gain > best_gain {
                best_gain = gain;
                best = i;
            }
        }
        if best_gain <= 0.0 {
            break;
        }
        for &j in &balls[best] {
            if !covered[j as usize] {
                covered[j as usize] = true;
                mass += weights[j as usize];
            }
        }
        net.push(best);
    }
    finish(net, mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Bounded,
    Sublinear,
    Polynomial,
    Superpolynomial,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Bounded => "bounded",
            Classification::Sublinear => "sublinear",
            Classification::Polynomial => "polynomial",
            Classification::Superpolynomial => "superpolynomial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMode {
    Topological,
    Measure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub sample_size: usize,
    pub seed: u64,
    /// Extra symbolic radius beyond the longest orbit segment.
    pub truncation_radius: i64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            sample_size: 512,
            seed: 0,
            truncation_radius: 24,
        }
    }
}

/// Draws the sample once so that every `n` of a profile sees the same points.
pub fn draw_sample(system: &SystemSpec, cfg: &SamplerConfig, max_n: usize) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let radius = max_n as i64 + cfg.truncation_radius;
    (0..cfg.sample_size)
        .map(|_| random_point(system, radius, &mut rng))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub epsilon: f64,
    pub mode: CoverMode,
    pub grid: Vec<usize>,
    pub counts: Vec<usize>,
    pub tail_bounds: Vec<f64>,
    pub fitted_exponent: f64,
    pub fit_r2: f64,
    pub semilog_r2: f64,
    pub classification: Option<Classification>,
    pub flags: Vec<String>,
}

/// Classification rule on `(n, count)` pairs.
pub fn classify(grid: &[usize], counts: &[usize]) -> (f64, f64, f64, Option<Classification>, Vec<String>) {
    let mut flags = Vec::new();
    let xs: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let lin: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c.max(1) as f64).ln()).collect();
    let Some(loglog) = fit_line(&xs, &ys) else {
        flags.push("degenerate grid: log-log fit undefined".into());
        return (f64::NAN, f64::NAN, f64::NAN, None, flags);
    };
    let semilog = fit_line(&lin, &ys).map_or(f64::NAN, |f| f.r2);
    let slope = loglog.slope;
    let class = if slope < 0.1 {
        Some(Classification::Bounded)
    } else if slope < 0.9 {
        Some(Classification::Sublinear)
    } else {
        let convex = quadratic_coefficient(&xs, &ys).is_some_and(|a| a > 0.0);
        if convex && semilog > loglog.r2 {
            Some(Classification::Superpolynomial)
        } else if loglog.r2 >= 0.95 {
            Some(Classification::Polynomial)
        } else {
            flags.push(format!(
                "no class: slope {slope:.3}, log-log R^2 {:.3}, semilog R^2 {semilog:.3}",
                loglog.r2
            ));
            None
        }
    };
    (slope, loglog.r2, semilog, class, flags)
}

/// Covering counts over `n_grid` on one shared sample, with the growth fit and class.
pub fn complexity_profile(
    system: &SystemSpec,
    sampler: &SamplerConfig,
    epsilon: f64,
    n_grid: &[usize],
    mode: CoverMode,
) -> Result<ComplexityProfile> {
    if n_grid.len() < 4 {
        return Err(Error::invalid("profile grid needs at least 4 points"));
    }
    if n_grid.iter().any(|&n| n == 0) {
        return Err(Error::invalid("grid values must be positive"));
    }
    let max_n = *n_grid.iter().max().unwrap_or(&1);
    let sample = draw_sample(system, sampler, max_n)?;
    let weights = vec![1.0 / sample.len() as f64; sample.len()];
    let reports: Vec<Result<CoveringReport>> = n_grid
        .par_iter()
        .map(|&n| match mode {
            CoverMode::Topological => covering_number(system, &sample, n, epsilon),
            CoverMode::Measure => {
                measure_covering_number(system, &sample, &weights, n, epsilon).map(|r| r.report)
            }
        })
        .collect();
    let reports: Vec<CoveringReport> = reports.into_iter().collect::<Result<_>>()?;
    let counts: Vec<usize> = reports.iter().map(|r| r.cardinality).collect();
    let (fitted_exponent, fit_r2, semilog_r2, classification, mut flags) = classify(n_grid, &counts);
    if counts.iter().any(|&c| c == sample.len()) {
        flags.push("sample saturated: every sample point is its own center at some n".into());
    }
    Ok(ComplexityProfile {
        epsilon,
        mode,
        grid: n_grid.to_vec(),
        counts,
        tail_bounds: reports.iter().map(|r| r.tail_bound).collect(),
        fitted_exponent,
        fit_r2,
        semilog_r2,
        classification,
        flags,
    })
}

/// CSV rows `(epsilon, n, cardinality, tail_bound, direction)`.
pub fn write_covering_csv<W: std::io::Write>(w: W, reports: &[CoveringReport], delimiter: u8) -> Result<()> {
    let mut out = csv::WriterBuilder::new().delimiter(delimiter).from_writer(w);
    out.write_record(["epsilon", "n", "cardinality", "tail_bound", "direction"])?;
    for r in reports {
        out.write_record([
            format!("{}", r.epsilon),
            r.n.to_string(),
            r.cardinality.to_string(),
            format!("{:e}", r.tail_bound),
            r.direction.as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateOptions {
    /// Points of the log-weighted empirical measure.
    pub measure_points: usize,
    /// Largest `L` tried (powers of two from 2).
    pub max_length: usize,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            measure_points: 1024,
            max_length: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub n: u64,
    /// `|E^log mu(n) f(T^n x)|` against `7 eps`.
    pub direct: f64,
    /// Replacement error against `5 eps`.
    pub replacement: f64,
    /// `|E^log (1/L) sum_l mu(n + l) f(T^l x_{j_n})|` against `2 eps`.
    pub blocked: f64,
    /// Log-weighted mass of `E ∩ [1, N]`.
    pub visit_mass: f64,
    pub direct_ok: bool,
    pub replacement_ok: bool,
    pub blocked_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub system: String,
    pub observable: String,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub lipschitz: f64,
    pub length: usize,
    pub centers: usize,
    /// `(L, S_L)` for every length tried.
    pub search: Vec<(usize, usize)>,
    pub measure_points: usize,
    pub rows: Vec<CertificateRow>,
}

impl Certificate {
    pub fn all_hold(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.direct_ok && r.replacement_ok && r.blocked_ok)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "system: {}", self.system);
        let _ = writeln!(s, "observable: {}", self.observable);
        let _ = writeln!(s, "epsilon: {}", self.epsilon);
        let _ = writeln!(s, "epsilon1: {}", self.epsilon1);
        let _ = writeln!(s, "lipschitz: {}", self.lipschitz);
        let _ = writeln!(s, "measure_points: {}", self.measure_points);
        for (l, m) in &self.search {
            let _ = writeln!(s, "search L={l} S_L={m} admissible={}", (*m as f64) < self.epsilon * *l as f64);
        }
        let _ = writeln!(s, "L: {}", self.length);
        let _ = writeln!(s, "centers: {}", self.centers);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "N={} direct={:.6e} (<{}: {}) replacement={:.6e} (<{}: {}) blocked={:.6e} (<{}: {}) visit_mass={:.6}",
                r.n,
                r.direct,
                7.0 * self.epsilon,
                r.direct_ok,
                r.replacement,
                5.0 * self.epsilon,
                r.replacement_ok,
                r.blocked,
                2.0 * self.epsilon,
                r.blocked_ok,
                r.visit_mass
            );
        }
        s
    }
}

/// `f(T^l y) = c e(l beta)` for every `l`, when the orbit of `y` has that shape.
fn orbit_character(system: &SystemSpec, f: &Observable, y: &Point) -> Option<(Complex64, f64)> {
    match (f, system, y) {
        (Observable::Zero, _, _) => Some((Complex64::new(0.0, 0.0), 0.0)),
        (Observable::Exp | Observable::FTilde, SystemSpec::Rotation { alpha, .. }, Point::Circle(t)) => {
            Some((e(*t), *alpha))
        }
        (Observable::Exp | Observable::FTilde, SystemSpec::Skew { .. }, Point::Skew { base, angle }) => {
            Some((e(*angle), *base))
        }
        (Observable::Exp | Observable::FTilde, SystemSpec::Skew { .. }, Point::Extended(Symbol::P)) => {
            Some((Complex64::new(0.0, 0.0), 0.0))
        }
        _ => None,
    }
}

/// Positions `n_k` whose uniform measure approximates the log-weighted empirical
/// measure of `n <= N`: log-uniform quantiles of the weights `1/n`.
pub fn log_quantile_positions(n_max: u64, k: usize) -> Vec<u64> {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let m = normaliser(n_max, AverageKind::Logarithmic);
    (0..k)
        .map(|i| {
            let q = (i as f64 + 0.5) / k as f64 * m;
            ((q - EULER_GAMMA).exp().round() as u64).clamp(1, n_max)
        })
        .collect()
}

/// Logarithmic disjointness certificate: chooses `eps1`, searches `L` with
/// `S_L(rho, eps1) < eps L`, assigns every `n` to a center and evaluates the three
/// quantities bounded by `7 eps`, `5 eps` and `2 eps` at each `N` of `n_list`.
pub fn disjointness_certificate(
    system: &SystemSpec,
    mob: &MobiusTable,
    x: &Point,
    f: &Observable,
    epsilon: f64,
    n_list: &[u64],
    options: CertificateOptions,
) -> Result<Certificate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon must lie in (0, 1)"));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::invalid("N list must be nonempty and positive"));
    }
    if f.sup_norm_bound() > 1.0 {
        return Err(Error::invalid("observable must be bounded by 1"));
    }
    let lipschitz = f.lipschitz(system).ok_or_else(|| {
        Error::Unsupported(format!("no modulus of continuity known for {}", f.describe()))
    })?;
    // eps1 < eps^2 and |f(y) - f(z)| < eps whenever d(y, z) < sqrt(eps1)
    let eps1 = if lipschitz > 0.0 {
        0.99 * (epsilon * epsilon).min((epsilon / lipschitz).powi(2))
    } else {
        0.99 * epsilon * epsilon
    };
    let n_max = *n_list.iter().max().expect("nonempty");

    let positions = log_quantile_positions(n_max, options.measure_points);
    let sample: Vec<Point> = positions
        .iter()
        .map(|&n| system.iterate(x, n as i64))
        .collect::<Result<_>>()?;
    let weights = vec![1.0 / sample.len() as f64; sample.len()];

    let mut search = Vec::new();
    let mut chosen = None;
    let mut l = 2usize;
    while l <= options.max_length {
        let cover = measure_covering_number(system, &sample, &weights, l, eps1)?;
        search.push((l, cover.report.cardinality));
        if (cover.report.cardinality as f64) < epsilon * l as f64 {
            chosen = Some((l, cover.report.net));
            break;
        }
        l *= 2;
    }
    let Some((length, net)) = chosen else {
        let (best_l, best_count) = search
            .iter()
            .copied()
            .min_by(|a, b| (a.1 as f64 / a.0 as f64).total_cmp(&(b.1 as f64 / b.0 as f64)))
            .unwrap_or((0, 0));
        return Err(Error::NoAdmissibleLength {
            cap: options.max_length,
            best_l,
            best_count,
        });
    };
    mob.require(1, n_max + length as u64)?;
    let centers: Vec<Point> = net.iter().map(|&i| sample[i].clone()).collect();

    let isometry = system.is_isometry();
    // j_n: the first candidate in order of first-step distance whose L-ball contains T^n x.
    let assign = |n: u64| -> Result<Option<usize>> {
        let xn = system.iterate(x, n as i64)?;
        let mut cands: Vec<(f64, usize)> = centers
            .iter()
            .enumerate()
            .map(|(j, c)| system.distance(&xn, c).map(|d| (d.value, j)))
            .collect::<Result<_>>()?;
        if isometry {
            // the mean distance is the first-step distance
            let best = cands
                .iter()
                .copied()
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            return Ok(best.filter(|b| b.0 < eps1).map(|b| b.1));
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (d0, j) in cands {
            if d0 >= eps1 * length as f64 {
                break;
            }
            if mean_distance_below(system, &centers[j], &xn, length, eps1)? {
                return Ok(Some(j));
            }
        }
        Ok(None)
    };
    let assignment: Vec<Option<usize>> = (1..=n_max)
        .into_par_iter()
        .map(assign)
        .collect::<Result<_>>()?;

    // f along each center's orbit: character form when available, else stored values.
    let chars: Vec<Option<(Complex64, f64)>> =
        centers.iter().map(|c| orbit_character(system, f, c)).collect();
    let mut freqs: Vec<f64> = chars.iter().flatten().map(|&(_, b)| b).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    let tables: Vec<Vec<Complex64>> = centers
        .iter()
        .zip(&chars)
        .map(|(c, ch)| match ch {
            Some(_) => Ok(Vec::new()),
            None => (0..length as i64)
                .map(|l| f.evaluate(system, &system.iterate(c, l)?))
                .collect(),
        })
        .collect::<Result<_>>()?;
    // W_beta(n) = sum_{l < L} mu(n + l) e(l beta), by a sliding recurrence.
    let sliding: Vec<Vec<Complex64>> = freqs
        .par_iter()
        .map(|&beta| sliding_twisted_sums(mob, n_max, length, beta))
        .collect();

    let mut sorted_n = n_list.to_vec();
    sorted_n.sort_unstable();
    let mut rows = Vec::new();
    let mut direct = ComplexSum::new();
    let mut blocked = ComplexSum::new();
    let mut diff = ComplexSum::new();
    let mut visit = NeumaierSum::new();
    let mut next = 0usize;
    for n in 1..=n_max {
        let w = 1.0 / n as f64;
        let mu = f64::from(mob.mu(n));
        let fx = f.evaluate(system, &system.iterate(x, n as i64)?)?;
        let a = fx * mu * w;
        // n outside E is assigned to the first center
        let j = assignment[(n - 1) as usize];
        if j.is_some() {
            visit.add(w);
        }
        let j = j.unwrap_or(0);
        let inner = match chars[j] {
            Some((c, beta)) => {
                let k = freqs.binary_search_by(|p| p.total_cmp(&beta)).expect("frequency present");
                c * sliding[k][(n - 1) as usize]
            }
            None => {
                let mut s = Complex64::new(0.0, 0.0);
                for (l, v) in tables[j].iter().enumerate() {
                    let m = mob.mu(n + l as u64);
                    if m != 0 {
                        s += v * f64::from(m);
                    }
                }
                s
            }
        } / length as f64;
        let b = inner * w;
        direct.add(a);
        blocked.add(b);
        diff.add(a - b);
        while next < sorted_n.len() && sorted_n[next] == n {
            let m = normaliser(n, AverageKind::Logarithmic);
            let d = direct.value().norm() / m;
            let r = diff.value().norm() / m;
            let bl = blocked.value().norm() / m;
            rows.push(CertificateRow {
                n,
                direct: d,
                replacement: r,
                blocked: bl,
                visit_mass: visit.value() / m,
                direct_ok: d < 7.0 * epsilon,
                replacement_ok: r < 5.0 * epsilon,
                blocked_ok: bl < 2.0 * epsilon,
            });
            next += 1;
        }
    }
    Ok(Certificate {
        system: system.describe(),
        observable: f.describe(),
        epsilon,
        epsilon1: eps1,
        lipschitz,
        length,
        centers: centers.len(),
        search,
        measure_points: sample.len(),
        rows,
    })
}

/// `W(n) = sum_{l=0}^{L-1} mu(n + l) e(l beta)` for `n = 1..=n_max`.
pub fn sliding_twisted_sums(mob: &MobiusTable, n_max: u64, length: usize, beta: f64) -> Vec<Complex64> {
    const RESYNC: u64 = 1 << 12;
    let l = length as u64;
    let back = e(-beta);
    let far = e(l as f64 * beta);
    let exact = |n: u64| {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..l {
            let m = mob.mu(n + k);
            if m != 0 {
                s += e(k as f64 * beta) * f64::from(m);
            }
        }
        s
    };
    let mut out = Vec::with_capacity(n_max as usize);
    let mut w = Complex64::new(0.0, 0.0);
    for n in 1..=n_max {
        if n == 1 || (n - 1) % RESYNC == 0 {
            w = exact(n);
        } else {
            // W(n) = e(-beta) (W(n-1) - mu(n-1) + mu(n-1+L) e(L beta))
            let drop = f64::from(mob.mu(n - 1));
            let add = f64::from(mob.mu(n - 1 + l));
            w = back * (w - drop + far * add);
        }
        out.push(w);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_mobius;
    use crate::systems::{CircleMetric, SymbolWindow};

    #[test]
    fn single_point_sample() {
        let s = SystemSpec::rotation(0.3);
        let r = covering_number(&s, &[Point::Circle(0.2)], 5, 0.1).unwrap();
        assert_eq!(r.cardinality, 1);
        assert!(covering_number(&s, &[Point::Circle(0.2)], 5, 0.0).is_err());
    }

    #[test]
    fn mean_distance_single_term() {
        let s = SystemSpec::full_shift();
        let x = Point::Window(SymbolWindow::bits(-4, vec![0, 1, 1, 0, 1, 0, 0, 1, 1]));
        let y = Point::Window(SymbolWindow::bits(-4, vec![1, 1, 0, 0, 0, 0, 1, 1, 1]));
        let d1 = mean_distance(&s, &x, &y, 1).unwrap();
        assert_eq!(d1, s.distance(&x, &y).unwrap());
    }

    #[test]
    fn identity_rotation_counts_do_not_depend_on_n() {
        let s = SystemSpec::rotation(0.0);
        let sample: Vec<Point> = (0..50).map(|k| Point::Circle(k as f64 / 50.0)).collect();
        let a = covering_number(&s, &sample, 1, 0.05).unwrap().cardinality;
        let b = covering_number(&s, &sample, 100, 0.05).unwrap().cardinality;
        assert_eq!(a, b);
    }

    #[test]
    fn point_mass_and_degenerate_eps() {
        let s = SystemSpec::rotation(0.1);
        let sample = vec![Point::Circle(0.3), Point::Circle(0.6)];
        let r = measure_covering_number(&s, &sample, &[1.0, 0.0], 4, 0.1).unwrap();
        assert_eq!(r.report.cardinality, 1);
        let d = measure_covering_number(&s, &sample, &[0.5, 0.5], 4, 1.5).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.report.cardinality, 1);
        assert!(measure_covering_number(&s, &sample, &[0.5, 0.6], 4, 0.1).is_err());
    }

    #[test]
    fn classify_shapes() {
        let grid = [16, 32, 64, 128, 256];
        assert_eq!(classify(&grid, &[7, 7, 7, 7, 7]).3, Some(Classification::Bounded));
        let poly: Vec<usize> = grid.iter().map(|&n| n * n).collect();
        assert_eq!(classify(&grid, &poly).3, Some(Classification::Polynomial));
        let grid2 = [1, 2, 4, 8, 16];
        let expo: Vec<usize> = grid2.iter().map(|&n| 1usize << n).collect();
        assert_eq!(classify(&grid2, &expo).3, Some(Classification::Superpolynomial));
    }

    #[test]
    fn sliding_sums_match_direct() {
        let mob = sieve_mobius(1, 20_000).unwrap();
        let w = sliding_twisted_sums(&mob, 10_000, 37, 0.377);
        for n in [1u64, 2, 500, 4096, 4097, 9999] {
            let mut s = Complex64::new(0.0, 0.0);
            for l in 0..37u64 {
                s += e(l as f64 * 0.377) * f64::from(mob.mu(n + l));
            }
            assert!((w[(n - 1) as usize] - s).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_observable_certificate() {
        let mob = sieve_mobius(1, 20_000).unwrap();
        let s = SystemSpec::Rotation {
            alpha: 0.618_033_988_749_894_8,
            metric: CircleMetric::Chord,
        };
        let c = disjointness_certificate(
            &s,
            &mob,
            &Point::Circle(0.0),
            &Observable::Zero,
            0.1,
            &[1000, 5000],
            CertificateOptions {
                measure_points: 128,
                max_length: 1 << 12,
            },
        )
        .unwrap();
        for r in &c.rows {
            assert_eq!((r.direct, r.replacement, r.blocked), (0.0, 0.0, 0.0));
        }
    }
}
