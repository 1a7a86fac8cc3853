//! Short-interval twisted Möbius sums restricted to a frequency set, box-dimension
//! estimation on the line, and the Vitali `5r` covering subfamily.
//!
//! Dimension reports carry the analytic box dimension of the frequency set; box
//! dimension bounds packing dimension from above, which is all the uniformity
//! statements here need.

use crate::arith::{normaliser, AverageKind, MobiusTable};
use crate::error::{Error, Result};
use crate::numeric::{e, fit_line, NeumaierSum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FrequencySet {
    Finite { points: Vec<f64> },
    /// Level `L` of the middle-interval Cantor construction with ratio `r`: the
    /// union of `2^L` closed intervals of length `r^L`.
    Cantor { ratio: f64, level: u32 },
    /// The whole interval `[0, 1]`, sampled at spacing `step` or finer.
    Grid { step: f64 },
}

/// Note attached to every dimension report.
pub const DIMENSION_NOTE: &str =
    "analytic box dimension reported; it bounds the packing dimension from above";

impl FrequencySet {
    pub fn finite(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("empty frequency set"));
        }
        if points.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("frequencies must lie in [0, 1]"));
        }
        Ok(FrequencySet::Finite { points })
    }

    pub fn cantor(ratio: f64, level: u32) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 0.5) {
            return Err(Error::invalid("Cantor ratio must lie in (0, 1/2)"));
        }
        if level > 24 {
            return Err(Error::invalid("Cantor level above 24 is not supported"));
        }
        Ok(FrequencySet::Cantor { ratio, level })
    }

    pub fn grid(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::invalid("grid step must lie in (0, 1]"));
        }
        Ok(FrequencySet::Grid { step })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FrequencySet::Finite { points } => Self::finite(points.clone()).map(|_| ()),
            FrequencySet::Cantor { ratio, level } => Self::cantor(*ratio, *level).map(|_| ()),
            FrequencySet::Grid { step } => Self::grid(*step).map(|_| ()),
        }
    }

    /// `0` for finite sets, `log 2 / log(1/r)` for Cantor sets, `1` for the interval.
    pub fn analytic_dim(&self) -> f64 {
        match self {
            FrequencySet::Finite { .. } => 0.0,
            FrequencySet::Cantor { ratio, .. } => 2f64.ln() / (1.0 / ratio).ln(),
            FrequencySet::Grid { .. } => 1.0,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FrequencySet::Finite { points } if points.len() <= 4 => {
                let p: Vec<String> = points.iter().map(|a| format!("{a}")).collect();
                format!("finite[{}]", p.join(";"))
            }
            FrequencySet::Finite { points } => format!("finite[{} points]", points.len()),
            FrequencySet::Cantor { ratio, level } => format!("cantor(r={ratio};L={level})"),
            FrequencySet::Grid { step } => format!("grid(step={step})"),
        }
    }

    /// Closed intervals (possibly degenerate) whose union is the set, in increasing order.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        match self {
            FrequencySet::Finite { points } => {
                let mut p = points.clone();
                p.sort_by(f64::total_cmp);
                p.dedup();
                p.into_iter().map(|a| (a, a)).collect()
            }
            FrequencySet::Cantor { ratio, level } => {
                let len = ratio.powi(*level as i32);
                cantor_left_endpoints(*ratio, *level)
                    .into_iter()
                    .map(|a| (a, a + len))
                    .collect()
            }
            FrequencySet::Grid { .. } => vec![(0.0, 1.0)],
        }
    }

    pub fn contains(&self, alpha: f64, tol: f64) -> bool {
        self.intervals()
            .iter()
            .any(|&(a, b)| alpha >= a - tol && alpha <= b + tol)
    }

    /// Frequencies with every point of the set within `eta / 2` of one of them.
    pub fn refine(&self, eta: f64) -> Vec<f64> {
        let eta = match self {
            FrequencySet::Grid { step } => eta.min(*step),
            _ => eta,
        };
        let mut out = Vec::new();
        for (a, b) in self.intervals() {
            if b <= a {
                out.push(a);
                continue;
            }
            let m = ((b - a) / eta).ceil().max(1.0) as usize;
            for k in 0..=m {
                out.push(a + (b - a) * k as f64 / m as f64);
            }
        }
        out
    }

    /// True when the set has no interior pieces, so no Lipschitz slack is needed.
    pub fn is_discrete(&self) -> bool {
        matches!(self, FrequencySet::Finite { .. })
    }
}

/// Left endpoints `sum_k d_k (1 - r) r^{k-1}`, `d_k in {0, 1}`, in increasing order.
pub fn cantor_left_endpoints(ratio: f64, level: u32) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut scale = 1.0;
    for _ in 0..level {
        let jump = (1.0 - ratio) * scale;
        let mut next = Vec::with_capacity(pts.len() * 2);
        for &p in &pts {
            next.push(p);
        }
        for &p in &pts {
            next.push(p + jump);
        }
        pts = next;
        scale *= ratio;
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// Default grid spacing so that the Lipschitz slack is `0.01`.
pub fn default_eta(h: u64) -> f64 {
    0.01 / (PI * (h as f64 + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSup {
    pub grid_lower: f64,
    pub certified_upper: f64,
    pub eta: f64,
}

fn slack(c: &FrequencySet, h: u64, eta: f64) -> f64 {
    if c.is_discrete() {
        0.0
    } else {
        PI * (h as f64 + 1.0) * eta
    }
}

/// `sup_{alpha in C} (1/H) |sum_{h <= H} mu(n + h) e(h alpha)|`, bracketed between a
/// grid maximum and that maximum plus `pi (H + 1) eta`.
pub fn local_fourier_sup(
    mob: &MobiusTable,
    n: u64,
    h: u64,
    c: &FrequencySet,
    refinement: f64,
) -> Result<FourierSup> {
    if h == 0 {
        return Err(Error::invalid("H must be positive"));
    }
    if !(refinement > 0.0) {
        return Err(Error::invalid("refinement must be positive"));
    }
    c.validate()?;
    mob.require(n + 1, n + h)?;
    let grid = c.refine(refinement);
    let mut best = 0.0f64;
    for &alpha in &grid {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 1..=h {
            let m = mob.mu(n + k);
            if m != 0 {
                s += e(k as f64 * alpha) * f64::from(m);
            }
        }
        best = best.max(s.norm() / h as f64);
    }
    Ok(FourierSup {
        grid_lower: best,
        certified_upper: best + slack(c, h, refinement),
        eta: refinement,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedAverage {
    pub h: u64,
    pub n: u64,
    pub kind: AverageKind,
    pub descriptor: String,
    pub grid_lower: f64,
    pub certified_upper: f64,
    pub eta: f64,
    pub analytic_dim: f64,
}

/// Positions per parallel chunk; fixed so results do not depend on the thread count.
const CHUNK: u64 = 1 << 15;
/// Exact recomputation period for the sliding sums.
const RESYNC: u64 = 1 << 12;

/// `E_{n <= N}` (or `E^log`) of the grid supremum over `C`, with the same certified slack.
pub fn restricted_uniformity_average(
    mob: &MobiusTable,
    n_max: u64,
    h: u64,
    c: &FrequencySet,
    kind: AverageKind,
    refinement: Option<f64>,
) -> Result<RestrictedAverage> {
    if n_max == 0 || h == 0 {
        return Err(Error::invalid("N and H must be positive"));
    }
    c.validate()?;
    mob.require(2, n_max + h)?;
    let eta = refinement.unwrap_or_else(|| default_eta(h));
    let grid = c.refine(eta);
    let phase1: Vec<Complex64> = grid.iter().map(|&a| e(-a)).collect();
    let phase_h: Vec<Complex64> = grid.iter().map(|&a| e(h as f64 * a)).collect();
    let exact = |n: u64, out: &mut [Complex64]| {
        for (slot, &alpha) in out.iter_mut().zip(&grid) {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 1..=h {
                let m = mob.mu(n + k);
                if m != 0 {
                    s += e(k as f64 * alpha) * f64::from(m);
                }
            }
            *slot = s;
        }
    };
    let chunks = n_max.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let start = ci * CHUNK + 1;
            let end = ((ci + 1) * CHUNK).min(n_max);
            let mut w = vec![Complex64::new(0.0, 0.0); grid.len()];
            let mut acc = NeumaierSum::new();
            for n in start..=end {
                if n == start || (n - start) % RESYNC == 0 {
                    exact(n, &mut w);
                } else {
                    // W_n = e(-a) (W_{n-1} - mu(n) e(a)) + mu(n + H) e(H a)
                    let drop = f64::from(mob.mu(n));
                    let add = f64::from(mob.mu(n + h));
                    for ((wi, p1), ph) in w.iter_mut().zip(&phase1).zip(&phase_h) {
                        let mut v = *wi;
                        if drop != 0.0 {
                            v -= p1.conj() * drop;
                        }
                        v *= p1;
                        if add != 0.0 {
                            v += ph * add;
                        }
                        *wi = v;
                    }
                }
                let sup = w.iter().fold(0.0f64, |m, z| m.max(z.norm())) / h as f64;
                let weight = match kind {
                    AverageKind::Cesaro => 1.0,
                    AverageKind::Logarithmic => 1.0 / n as f64,
                };
                acc.add(sup * weight);
            }
            acc.value()
        })
        .collect();
    let mut total = NeumaierSum::new();
    for p in partials {
        total.add(p);
    }
    let lower = total.value() / normaliser(n_max, kind);
    Ok(RestrictedAverage {
        h,
        n: n_max,
        kind,
        descriptor: c.describe(),
        grid_lower: lower,
        certified_upper: lower + slack(c, h, eta),
        eta,
        analytic_dim: c.analytic_dim(),
    })
}

/// Trend rows `(H, N, kind, C, grid_lower, certified_upper)`.
pub fn write_trend_csv<W: std::io::Write>(
    w: W,
    rows: &[RestrictedAverage],
    delimiter: u8,
) -> Result<()> {
    let mut out = csv::WriterBuilder::new().delimiter(delimiter).from_writer(w);
    out.write_record(["H", "N", "kind", "C", "grid_lower", "certified_upper"])?;
    for r in rows {
        out.write_record([
            r.h.to_string(),
            r.n.to_string(),
            r.kind.as_str().to_string(),
            r.descriptor.clone(),
            format!("{:.17e}", r.grid_lower),
            format!("{:.17e}", r.certified_upper),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDimension {
    pub slope: f64,
    pub r2: f64,
    /// `(epsilon, N_epsilon)` per scale.
    pub counts: Vec<(f64, usize)>,
    /// Set when every scale needs one interval (a single point, up to resolution).
    pub degenerate: bool,
    pub note: String,
}

/// Minimal number of closed intervals of length `eps` covering a union of closed intervals.
pub fn interval_cover_count(intervals: &[(f64, f64)], eps: f64) -> usize {
    let mut iv: Vec<(f64, f64)> = intervals.to_vec();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    // absorb rounding in lengths that are exact multiples of eps
    let reach = eps * (1.0 + 1e-9);
    let mut count = 0usize;
    let mut covered_to = f64::NEG_INFINITY;
    for (a, b) in iv {
        if b <= covered_to {
            continue;
        }
        let mut start = a.max(covered_to);
        loop {
            count += 1;
            covered_to = start + reach;
            if covered_to >= b {
                break;
            }
            start = covered_to;
        }
    }
    count
}

/// Least-squares slope of `log N_eps` against `-log eps`.
pub fn box_dimension_estimate(intervals: &[(f64, f64)], eps_grid: &[f64]) -> Result<BoxDimension> {
    if intervals.is_empty() {
        return Err(Error::invalid("empty set"));
    }
    if eps_grid.len() < 4 {
        return Err(Error::invalid("box dimension needs at least 4 scales"));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("scales must be positive"));
    }
    let counts: Vec<(f64, usize)> = eps_grid
        .iter()
        .map(|&eps| (eps, interval_cover_count(intervals, eps)))
        .collect();
    let degenerate = counts.iter().all(|&(_, c)| c == 1);
    let xs: Vec<f64> = counts.iter().map(|&(e, _)| -e.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, c)| (c as f64).ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::invalid("scales must be distinct"))?;
    Ok(BoxDimension {
        slope: if degenerate { 0.0 } else { fit.slope },
        r2: fit.r2,
        counts,
        degenerate,
        note: DIMENSION_NOTE.to_string(),
    })
}

/// Greedy Vitali selection: by decreasing radius (ties by index), keep balls disjoint
/// from every kept ball. Returns the kept indices in increasing order.
pub fn vitali_5r_subfamily(balls: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&i, &j| balls[j].1.total_cmp(&balls[i].1).then(i.cmp(&j)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let (c, r) = balls[i];
        if kept
            .iter()
            .all(|&k| (balls[k].0 - c).abs() > balls[k].1 + r)
        {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Both Vitali postconditions: kept balls pairwise disjoint, and every ball meets a
/// kept ball of radius at least its own (so it lies in that ball's `5r` inflation).
pub fn verify_vitali(balls: &[(f64, f64)], kept: &[usize]) -> bool {
    for (a, &i) in kept.iter().enumerate() {
        for &j in &kept[a + 1..] {
            if (balls[i].0 - balls[j].0).abs() <= balls[i].1 + balls[j].1 {
                return false;
            }
        }
    }
    balls.iter().all(|&(c, r)| {
        kept.iter().any(|&k| {
            let (ck, rk) = balls[k];
            rk >= r && (ck - c).abs() <= rk + r && (ck - c).abs() + r <= 5.0 * rk
        })
    })
}
