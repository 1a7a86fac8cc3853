//! Block-structured sequences over `T u {p}` (or `G/Gamma u {p}`), their block
//! ledgers, and the multi-scale lower-bound chain for correlated signals.

use crate::error::{Error, Result};
use crate::fourier::FrequencySet;
use crate::nil::{poly_eval, NilElement, NilGroup, PolySeq};
use crate::numeric::{circle_dist, e, frac, harmonic, ComplexSum, NeumaierSum};
use crate::systems::{ftilde, Alphabet, CircleMetric, SequenceSpec, Symbol, SymbolWindow};
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Fourier,
    Nil,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Fourier => "fourier",
            Variant::Nil => "nil",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    pub h: u64,
    pub n: u64,
}

/// One block: `y(start + h)` for `1 <= h <= len`.
///
/// Fourier blocks carry `y(start + h) = e(phi + h theta)`; nil blocks carry
/// `y(start + h) = g^h x0` with `g` stored in `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub start: u64,
    pub len: u64,
    pub scale: usize,
    pub theta: f64,
    pub phi: f64,
    pub g: Option<NilElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub tau: f64,
    pub sigma: f64,
    pub scales: Vec<Scale>,
    pub blocks: Vec<Block>,
    pub group: Option<NilGroup>,
    pub x0: Option<NilElement>,
}

/// One row of the scale-separation condition `H_i < s N_i^s < (s/10) H_{i+1}^s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationRow {
    pub scale: usize,
    pub h: f64,
    pub middle: f64,
    pub next: Option<f64>,
    pub ok: bool,
}

impl BlockSpec {
    pub fn new(tau: f64, scales: Vec<Scale>) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid(format!("tau must lie in (0, 1), got {tau}")));
        }
        if scales.is_empty() {
            return Err(Error::invalid("at least one scale is required"));
        }
        for (i, s) in scales.iter().enumerate() {
            if s.h == 0 || s.n == 0 {
                return Err(Error::invalid(format!("scale {i} has a zero entry")));
            }
            if i > 0 && (s.h <= scales[i - 1].h || s.n <= scales[i - 1].n) {
                return Err(Error::invalid("scales must be strictly increasing"));
            }
        }
        Ok(BlockSpec {
            tau,
            sigma: tau * tau / 200.0,
            scales,
            blocks: Vec::new(),
            group: None,
            x0: None,
        })
    }

    pub fn with_nil(mut self, group: NilGroup, x0: NilElement) -> Self {
        self.group = Some(group);
        self.x0 = Some(x0);
        self
    }

    /// `N_i^sigma`, the start of the admissible range for block starts.
    pub fn head(&self, i: usize) -> f64 {
        (self.scales[i].n as f64).powf(self.sigma)
    }

    pub fn separation_rows(&self) -> Vec<SeparationRow> {
        let s = self.sigma;
        (0..self.scales.len())
            .map(|i| {
                let h = self.scales[i].h as f64;
                let middle = s * self.head(i);
                let next = self
                    .scales
                    .get(i + 1)
                    .map(|nx| s / 10.0 * (nx.h as f64).powf(s));
                let ok = h < middle && next.is_none_or(|nx| middle < nx);
                SeparationRow {
                    scale: i,
                    h,
                    middle,
                    next,
                    ok,
                }
            })
            .collect()
    }

    /// Violations of the per-scale gap and head conditions, one message each.
    pub fn block_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, sc) in self.scales.iter().enumerate() {
            let head = self.head(i);
            let mut starts: Vec<u64> = self
                .blocks
                .iter()
                .filter(|b| b.scale == i)
                .map(|b| b.start)
                .collect();
            starts.sort_unstable();
            for w in starts.windows(2) {
                if w[1] - w[0] < 2 * sc.h {
                    out.push(format!("scale {i}: starts {} and {} closer than 2H", w[0], w[1]));
                }
            }
            for &n in &starts {
                if (n as f64) <= head {
                    out.push(format!("scale {i}: start {n} inside [1, N^sigma]"));
                }
                if n > sc.n {
                    out.push(format!("scale {i}: start {n} beyond N"));
                }
            }
        }
        out
    }
}

/// Block ledger entry: the block occupies `[m, end]` and `y(m + j) = e(phi + j theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub m: u64,
    pub end: u64,
    pub theta: f64,
    pub phi: f64,
    pub scale: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSequence {
    pub alphabet: Alphabet,
    /// `symbols[k]` is `y(k + 1)`.
    pub symbols: Vec<Symbol>,
    pub ledger: Vec<LedgerEntry>,
}

impl AssembledSequence {
    pub fn constant_p(len: usize) -> Self {
        AssembledSequence {
            alphabet: Alphabet::ExtendedTorus(CircleMetric::Arc),
            symbols: vec![Symbol::P; len],
            ledger: Vec::new(),
        }
    }

    pub fn hi(&self) -> i64 {
        self.symbols.len() as i64
    }

    /// `y(k)`; `p` outside `[1, hi]`.
    pub fn symbol(&self, k: i64) -> &Symbol {
        if k >= 1 && k <= self.hi() {
            &self.symbols[(k - 1) as usize]
        } else {
            &Symbol::P
        }
    }

    pub fn ftilde(&self, k: i64) -> Complex64 {
        ftilde(self.symbol(k))
    }

    pub fn to_sequence_spec(&self) -> SequenceSpec {
        SequenceSpec::new(
            self.alphabet.clone(),
            SymbolWindow::symbols(1, self.symbols.clone()),
            Some(Symbol::P),
        )
    }

    pub fn from_sequence_spec(seq: &SequenceSpec) -> Self {
        let hi = seq.hi().max(0);
        let symbols = (1..=hi)
            .map(|k| seq.symbol(k).unwrap_or(Symbol::P))
            .collect();
        AssembledSequence {
            alphabet: seq.alphabet.clone(),
            symbols,
            ledger: Vec::new(),
        }
    }
}

fn symbol_angle(s: &Symbol) -> Option<f64> {
    match s {
        Symbol::P => None,
        Symbol::Angle(t) => Some(*t),
        Symbol::Coset(g) => Some(g.coords[0]),
    }
}

pub fn assemble_sequence(spec: &BlockSpec, variant: Variant) -> Result<AssembledSequence> {
    let (alphabet, nil) = match variant {
        Variant::Fourier => (Alphabet::ExtendedTorus(CircleMetric::Arc), None),
        Variant::Nil => {
            let group = spec
                .group
                .clone()
                .ok_or_else(|| Error::invalid("nil variant needs a group"))?;
            let x0 = spec
                .x0
                .clone()
                .ok_or_else(|| Error::invalid("nil variant needs a base point"))?;
            (Alphabet::ExtendedNil(group.clone()), Some((group, x0)))
        }
    };
    let mut order: Vec<usize> = (0..spec.blocks.len()).collect();
    order.sort_by_key(|&k| (spec.blocks[k].start, k));
    for w in order.windows(2) {
        let (a, b) = (&spec.blocks[w[0]], &spec.blocks[w[1]]);
        if a.len > 0 && b.len > 0 && b.start < a.start + a.len {
            return Err(Error::BlockCollision {
                first: a.start,
                second: b.start,
            });
        }
    }
    let hi = spec
        .blocks
        .iter()
        .map(|b| b.start + b.len)
        .max()
        .unwrap_or(0);
    let mut symbols = vec![Symbol::P; hi as usize];
    let mut ledger = Vec::with_capacity(order.len());
    for &k in &order {
        let b = &spec.blocks[k];
        if b.len == 0 {
            continue;
        }
        match &nil {
            None => {
                for h in 1..=b.len {
                    symbols[(b.start + h - 1) as usize] =
                        Symbol::Angle(frac(b.phi + h as f64 * b.theta));
                }
                ledger.push(LedgerEntry {
                    m: b.start + 1,
                    end: b.start + b.len,
                    theta: frac(b.theta),
                    phi: frac(b.phi + b.theta),
                    scale: b.scale,
                });
            }
            Some((group, x0)) => {
                let g = b
                    .g
                    .as_ref()
                    .ok_or_else(|| Error::invalid(format!("block {k} has no group element")))?;
                let poly = PolySeq::from_linear(group, g, x0);
                for h in 1..=b.len {
                    let z = poly_eval(group, &poly, h as i64)?;
                    symbols[(b.start + h - 1) as usize] = Symbol::Coset(group.reduce(&z).0);
                }
                // first coordinates move linearly along g^h x0
                ledger.push(LedgerEntry {
                    m: b.start + 1,
                    end: b.start + b.len,
                    theta: frac(g.coords[0]),
                    phi: frac(x0.coords[0] + g.coords[0]),
                    scale: b.scale,
                });
            }
        }
    }
    Ok(AssembledSequence {
        alphabet,
        symbols,
        ledger,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub m: i64,
    pub end: i64,
    pub theta: f64,
    pub phi: f64,
    pub max_residual: f64,
    pub symbols_ok: bool,
    pub in_c: bool,
}

impl BlockCheck {
    pub fn ok(&self) -> bool {
        self.symbols_ok && self.in_c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyStarReport {
    pub blocks: Vec<BlockCheck>,
    pub lengths: Vec<u64>,
    /// The last block is longer than the first.
    pub lengths_grow: bool,
    pub pass: bool,
}

impl PropertyStarReport {
    pub fn failures(&self) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&k| !self.blocks[k].ok())
            .collect()
    }
}

/// Re-derives blocks as maximal runs of non-`p` symbols and checks each one
/// against the two-point fit `e(phi + j theta)`.
pub fn check_property_star(y: &AssembledSequence, c: &FrequencySet, tol: f64) -> PropertyStarReport {
    let mut blocks = Vec::new();
    let n = y.hi();
    let mut k = 1;
    while k <= n {
        if symbol_angle(y.symbol(k)).is_none() {
            k += 1;
            continue;
        }
        let m = k;
        while k <= n && symbol_angle(y.symbol(k)).is_some() {
            k += 1;
        }
        let end = k - 1;
        let a0 = symbol_angle(y.symbol(m)).unwrap_or(0.0);
        let phi = frac(a0);
        // a single-symbol block fixes no slope; 0 is reported
        let theta = if end > m {
            frac(symbol_angle(y.symbol(m + 1)).unwrap_or(0.0) - a0)
        } else {
            0.0
        };
        let mut max_residual = 0.0f64;
        for j in 0..=(end - m) {
            let t = symbol_angle(y.symbol(m + j)).unwrap_or(0.0);
            max_residual = max_residual.max(circle_dist(t, phi + j as f64 * theta));
        }
        let in_c = c.contains(theta, tol) || (theta > 0.5 && c.contains(theta - 1.0, tol));
        blocks.push(BlockCheck {
            m,
            end,
            theta,
            phi,
            max_residual,
            symbols_ok: max_residual <= tol,
            in_c,
        });
    }
    let lengths: Vec<u64> = blocks.iter().map(|b| (b.end - b.m + 1) as u64).collect();
    let lengths_grow = match (lengths.first(), lengths.last()) {
        (Some(a), Some(b)) => b > a,
        _ => false,
    };
    let pass = blocks.iter().all(BlockCheck::ok);
    PropertyStarReport {
        blocks,
        lengths,
        lengths_grow,
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFrequency {
    pub m: i64,
    pub n: i64,
    pub transitions: u64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub windows: Vec<WindowFrequency>,
    /// Frequencies are non-increasing along the windows.
    pub decreasing: bool,
}

/// Frequency over `(M, N]` of positions `j` with `y(j - 1) = p` and `y(j) != p`.
pub fn gen_measure_support_check(y: &AssembledSequence, windows: &[(i64, i64)]) -> SupportReport {
    let rows: Vec<WindowFrequency> = windows
        .iter()
        .map(|&(m, n)| {
            let transitions = ((m + 1)..=n)
                .filter(|&j| *y.symbol(j - 1) == Symbol::P && *y.symbol(j) != Symbol::P)
                .count() as u64;
            let len = (n - m).max(1) as f64;
            WindowFrequency {
                m,
                n,
                transitions,
                frequency: transitions as f64 / len,
            }
        })
        .collect();
    let decreasing = rows.windows(2).all(|w| w[1].frequency <= w[0].frequency);
    SupportReport {
        windows: rows,
        decreasing,
    }
}

/// Shape of `z = sigma^center y` on `[-n, n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowShape {
    AllP,
    NoP,
    /// `z(j) = p` exactly for `-n <= j < q`.
    Head { q: i64 },
    /// `z(j) = p` exactly for `q < j <= n`.
    Tail { q: i64 },
    Mixed,
}

pub fn classify_window(y: &AssembledSequence, center: i64, n: i64) -> WindowShape {
    let is_p: Vec<bool> = (-n..=n)
        .map(|j| *y.symbol(center + j) == Symbol::P)
        .collect();
    if is_p.iter().all(|&b| b) {
        return WindowShape::AllP;
    }
    if is_p.iter().all(|&b| !b) {
        return WindowShape::NoP;
    }
    let first_non_p = is_p.iter().position(|&b| !b).unwrap_or(0);
    if is_p[first_non_p..].iter().all(|&b| !b) {
        return WindowShape::Head {
            q: first_non_p as i64 - n,
        };
    }
    let first_p = is_p.iter().position(|&b| b).unwrap_or(0);
    if first_p > 0 && is_p[first_p..].iter().all(|&b| b) {
        return WindowShape::Tail {
            q: first_p as i64 - 1 - n,
        };
    }
    WindowShape::Mixed
}

#[derive(Debug, Clone, PartialEq)]
pub struct GappedSelection {
    pub subset: Vec<u64>,
    pub mass: f64,
    pub target: f64,
    pub target_met: bool,
}

/// Greedy left-to-right choice with pairwise gaps at least `gap`, weights `1/n`.
/// Zero entries carry no weight and are skipped.
pub fn select_gapped_subset(s: &[u64], gap: u64, target: f64) -> GappedSelection {
    let mut subset = Vec::new();
    let mut mass = NeumaierSum::new();
    let mut last: Option<u64> = None;
    for &n in s {
        if n == 0 {
            continue;
        }
        if last.is_none_or(|l| n >= l + gap) {
            subset.push(n);
            mass.add(1.0 / n as f64);
            last = Some(n);
        }
    }
    let mass = mass.value();
    GappedSelection {
        subset,
        mass,
        target,
        target_met: mass > target,
    }
}

/// How `alpha_{n,i}` is picked for each start `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyRule {
    Fixed(f64),
    /// Maximiser of the rotated block correlation over a grid refining the set.
    Argmax { set: FrequencySet, eta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainLink {
    pub id: &'static str,
    pub scale: usize,
    pub bound: f64,
    pub measured: f64,
    pub margin: f64,
    pub pass: bool,
    pub precondition: bool,
}

#[derive(Debug, Clone)]
pub struct ChainReport {
    pub beta: f64,
    pub variant: Variant,
    pub links: Vec<ChainLink>,
    pub spec: BlockSpec,
    pub sequence: AssembledSequence,
    pub first_failure: Option<String>,
    pub chain_pass: bool,
    pub preconditions_pass: bool,
    /// `|E^log_{n <= N_i} s(n) F~(sigma^n y)|` per scale.
    pub finals: Vec<f64>,
    /// Harmonic mass of `n <= N_i^sigma` and of `N_i < n <= N_i + H_i`, per scale.
    pub excluded_mass: Vec<f64>,
}

impl ChainReport {
    pub fn all_pass(&self) -> bool {
        self.chain_pass && self.preconditions_pass
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "variant {}", self.variant.as_str());
        let _ = writeln!(out, "tau {} sigma {}", self.spec.tau, self.spec.sigma);
        let _ = writeln!(out, "beta {}", self.beta);
        for l in &self.links {
            let _ = writeln!(
                out,
                "scale {} {:<20} bound {:>14.6e} measured {:>14.6e} margin {:>14.6e} {}{}",
                l.scale,
                l.id,
                l.bound,
                l.measured,
                l.margin,
                if l.pass { "pass" } else { "FAIL" },
                if l.precondition { " (precondition)" } else { "" }
            );
        }
        let _ = writeln!(
            out,
            "first failure: {}",
            self.first_failure.as_deref().unwrap_or("none")
        );
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W, delimiter: u8) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().delimiter(delimiter).from_writer(w);
        wr.write_record(["link", "scale", "bound", "measured", "margin", "pass"])?;
        for l in &self.links {
            wr.write_record([
                l.id.to_string(),
                l.scale.to_string(),
                format!("{:e}", l.bound),
                format!("{:e}", l.measured),
                format!("{:e}", l.margin),
                l.pass.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub const LINK_IDS: [&str; 9] = [
    "scale-separation",
    "threshold-average",
    "large-set-mass",
    "head-removed-mass",
    "gapped-mass",
    "block-correlation",
    "reindex-error",
    "tail-window",
    "final-log-average",
];

const BETAS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

/// Per-start data at one scale: the chosen frequency and the rotated correlation.
struct ScaleScan {
    alpha: Vec<f64>,
    re: Vec<f64>,
}

/// `F(g^h x0)` with `g = (alpha, 0, ...)`: the first coordinate of `g^h x0` is
/// `h alpha + x0_1` in both supported groups.
fn block_phase(x0_first: f64, alpha: f64, h: u64) -> Complex64 {
    e(x0_first + h as f64 * alpha)
}

fn block_correlation(signal: &[Complex64], n: u64, h_len: u64, x0_first: f64, alpha: f64) -> Complex64 {
    let mut acc = ComplexSum::new();
    for h in 1..=h_len {
        acc.add(signal[(n + h - 1) as usize] * block_phase(x0_first, alpha, h));
    }
    acc.value() / h_len as f64
}

fn scan_scale(
    signal: &[Complex64],
    scale: Scale,
    beta: f64,
    x0_first: f64,
    candidates: &[f64],
) -> ScaleScan {
    let rot = e(beta);
    let rows: Vec<(f64, f64)> = (1..=scale.n)
        .into_par_iter()
        .map(|n| {
            let mut best = (candidates[0], f64::NEG_INFINITY);
            for &a in candidates {
                let v = (rot * block_correlation(signal, n, scale.h, x0_first, a)).re;
                if v > best.1 {
                    best = (a, v);
                }
            }
            best
        })
        .collect();
    let (alpha, re) = rows.into_iter().unzip();
    ScaleScan { alpha, re }
}

fn threshold_average(re: &[f64], m: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for (k, v) in re.iter().enumerate() {
        acc.add(v.max(0.0) / (k + 1) as f64);
    }
    acc.value() / m
}

fn link(id: &'static str, scale: usize, bound: f64, measured: f64, above: bool, strict: bool) -> ChainLink {
    let margin = if above { measured - bound } else { bound - measured };
    let pass = if strict { margin > 0.0 } else { margin >= 0.0 };
    ChainLink {
        id,
        scale,
        bound,
        measured,
        margin,
        pass,
        precondition: false,
    }
}

/// Evaluates every link of the multi-scale lower-bound chain for `signal`
/// (`signal[k]` is the value at `k + 1`).
///
/// `beta` is the quarter turn maximising the smallest threshold average over the
/// scales. Block starts are taken beyond both `N_i^sigma` and the reach of the
/// previous scale, so blocks never collide even when scales are not separated.
pub fn verify_lower_bound_chain(
    spec: &BlockSpec,
    signal: &[Complex64],
    variant: Variant,
    rule: &FrequencyRule,
) -> Result<ChainReport> {
    let last = *spec.scales.last().ok_or_else(|| Error::invalid("no scales"))?;
    let need = last.n + last.h;
    if (signal.len() as u64) < need {
        return Err(Error::InsufficientSupport {
            required: need as i64,
            available: signal.len() as i64,
        });
    }
    let x0_first = match variant {
        Variant::Fourier => 0.0,
        Variant::Nil => {
            spec.group
                .as_ref()
                .ok_or_else(|| Error::invalid("nil variant needs a group"))?;
            spec.x0
                .as_ref()
                .ok_or_else(|| Error::invalid("nil variant needs a base point"))?
                .coords[0]
        }
    };
    let candidates: Vec<f64> = match rule {
        FrequencyRule::Fixed(a) => vec![*a],
        FrequencyRule::Argmax { set, eta } => set.refine(*eta),
    };
    if candidates.is_empty() {
        return Err(Error::invalid("frequency rule yields no candidates"));
    }
    let tau = spec.tau;
    let masses: Vec<f64> = spec.scales.iter().map(|s| harmonic(s.n)).collect();

    let mut best: Option<(f64, f64, Vec<ScaleScan>)> = None;
    for beta in BETAS {
        let scans: Vec<ScaleScan> = spec
            .scales
            .iter()
            .map(|&s| scan_scale(signal, s, beta, x0_first, &candidates))
            .collect();
        let score = scans
            .iter()
            .zip(&masses)
            .map(|(sc, &m)| threshold_average(&sc.re, m))
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((beta, score, scans));
        }
    }
    let (beta, _, scans) = best.expect("four rotations scanned");

    let mut out_spec = spec.clone();
    out_spec.blocks.clear();
    let mut links = Vec::new();
    let mut reach = 0u64;
    let mut per_scale_links = Vec::new();
    for (i, (&sc, scan)) in spec.scales.iter().zip(&scans).enumerate() {
        let m = masses[i];
        let head = spec.head(i);
        let mut row = Vec::new();
        row.push(link("threshold-average", i, tau, threshold_average(&scan.re, m), true, true));
        let large: Vec<u64> = (1..=sc.n)
            .filter(|&n| scan.re[(n - 1) as usize] > tau / 2.0)
            .collect();
        let large_mass = large.iter().map(|&n| 1.0 / n as f64).sum::<f64>();
        row.push(link("large-set-mass", i, tau / 2.0 * m, large_mass, true, true));
        let floor = (head.floor() as u64).max(reach);
        let trimmed: Vec<u64> = large.iter().copied().filter(|&n| n > floor).collect();
        let trimmed_mass = trimmed.iter().map(|&n| 1.0 / n as f64).sum::<f64>();
        row.push(link("head-removed-mass", i, tau / 4.0 * m, trimmed_mass, true, true));
        let target = tau * m / (8.0 * sc.h as f64);
        let sel = select_gapped_subset(&trimmed, 2 * sc.h, target);
        row.push(link("gapped-mass", i, target, sel.mass, true, true));
        for &n in &sel.subset {
            let alpha = scan.alpha[(n - 1) as usize];
            let g = match variant {
                Variant::Fourier => None,
                Variant::Nil => {
                    let group = spec.group.as_ref().expect("checked above");
                    let mut coords = vec![0.0; group.dim()];
                    coords[0] = alpha;
                    Some(NilElement::new(&coords))
                }
            };
            out_spec.blocks.push(Block {
                start: n,
                len: sc.h,
                scale: i,
                theta: alpha,
                phi: 0.0,
                g,
            });
        }
        reach = reach.max(sc.n + sc.h);
        per_scale_links.push((row, sel.subset));
    }

    let sequence = assemble_sequence(&out_spec, variant)?;
    let fy = |k: u64| sequence.ftilde(k as i64);
    let sig = |k: u64| signal[(k - 1) as usize];

    let mut finals = Vec::new();
    let mut excluded_mass = Vec::new();
    let sep = spec.separation_rows();
    for (i, (mut row, subset)) in per_scale_links.into_iter().enumerate() {
        let sc = spec.scales[i];
        let m = masses[i];
        let head = spec.head(i);
        let mut by_start = ComplexSum::new();
        let mut by_pos = ComplexSum::new();
        for &n in &subset {
            for h in 1..=sc.h {
                let v = sig(n + h) * fy(n + h);
                by_start.add(v / n as f64);
                by_pos.add(v / (n + h) as f64);
            }
        }
        let by_start = by_start.value();
        let by_pos = by_pos.value();
        row.push(link("block-correlation", i, tau * tau / 16.0 * m, by_start.norm(), true, true));
        row.push(link("reindex-error", i, tau * tau / 32.0 * m, (by_start - by_pos).norm(), false, false));
        let lo = head.floor() as u64 + 1;
        let mut window = ComplexSum::new();
        for n in lo..=(sc.n + sc.h) {
            window.add(sig(n) * fy(n) / n as f64);
        }
        let window = window.value().norm();
        row.push(link("tail-window", i, tau * tau * m / 32.0, window, true, false));
        let mut total = ComplexSum::new();
        for n in 1..=sc.n {
            total.add(sig(n) * fy(n) / n as f64);
        }
        let fin = total.value().norm() / m;
        row.push(link("final-log-average", i, tau * tau / 100.0, fin, true, false));
        finals.push(fin);
        let mut excl = NeumaierSum::new();
        for n in 1..=(head.floor() as u64).min(sc.n) {
            excl.add(1.0 / n as f64);
        }
        for n in (sc.n + 1)..=(sc.n + sc.h) {
            excl.add(1.0 / n as f64);
        }
        excluded_mass.push(excl.value());

        let s = sep[i];
        let (measured, bound) = match s.next {
            // both inequalities folded into the smaller margin
            Some(nx) => {
                if s.middle - s.h <= nx - s.middle {
                    (s.middle, s.h)
                } else {
                    (nx, s.middle)
                }
            }
            None => (s.middle, s.h),
        };
        links.push(ChainLink {
            id: "scale-separation",
            scale: i,
            bound,
            measured,
            margin: measured - bound,
            pass: s.ok,
            precondition: true,
        });
        links.append(&mut row);
    }
    let first_failure = links
        .iter()
        .find(|l| !l.precondition && !l.pass)
        .map(|l| format!("{} (scale {})", l.id, l.scale));
    let chain_pass = first_failure.is_none();
    let preconditions_pass = links.iter().filter(|l| l.precondition).all(|l| l.pass);
    Ok(ChainReport {
        beta,
        variant,
        links,
        spec: out_spec,
        sequence,
        first_failure,
        chain_pass,
        preconditions_pass,
        finals,
        excluded_mass,
    })
}

/// Perfectly correlated test signal for [`FrequencyRule::Fixed`] at `alpha = 0`.
pub fn constant_signal(len: usize, value: f64) -> Vec<Complex64> {
    vec![Complex64::new(value, 0.0); len]
}

/// Nil-variant convenience: the Heisenberg group with base point the identity.
pub fn heisenberg_spec(tau: f64, scales: Vec<Scale>) -> Result<BlockSpec> {
    let g = NilGroup::heisenberg();
    let x0 = g.identity();
    Ok(BlockSpec::new(tau, scales)?.with_nil(g, x0))
}
