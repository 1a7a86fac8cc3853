//! Dynamical systems: circle rotations, the skew product `T(x, e(y)) = (x, e(y + x))`
//! over a frequency set, shifts over `{0,1}`, `T ∪ {p}` and `G/Gamma ∪ {p}`,
//! orbit closures of a stored sequence, and finite products.
//!
//! Two-sided symbolic points are finite windows; every distance on a sequence
//! space comes with a rigorous bound on the contribution of the unstored tail.

use crate::coding::CodableSet;
use crate::error::{Error, Result};
use crate::fourier::FrequencySet;
use crate::nil::{NilElement, NilGroup};
use crate::numeric::{circle_dist, e, frac};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::sync::Arc;

/// Metric on `T = R/Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleMetric {
    /// `min(|s - t|, 1 - |s - t|)`.
    #[default]
    Arc,
    /// `|e(s) - e(t)|`, the embedding in the complex plane.
    Chord,
}

impl CircleMetric {
    #[inline]
    pub fn dist(self, s: f64, t: f64) -> f64 {
        let d = circle_dist(s, t);
        match self {
            CircleMetric::Arc => d,
            CircleMetric::Chord => 2.0 * (PI * d).sin(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CircleMetric::Arc => "arc",
            CircleMetric::Chord => "chord",
        }
    }

    /// Lipschitz constant of `t -> e(t)` for this metric.
    pub fn exp_lipschitz(self) -> f64 {
        match self {
            CircleMetric::Arc => TAU,
            CircleMetric::Chord => 1.0,
        }
    }
}

/// Symbol of an extended alphabet: the added point `p`, an angle, or a nilmanifold point.
#[derive(Debug, Clone, PartialEq)]
pub enum Symbol {
    P,
    Angle(f64),
    Coset(NilElement),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Alphabet {
    Binary,
    ExtendedTorus(CircleMetric),
    ExtendedNil(NilGroup),
}

/// Lattice radius used for coset symbols.
pub const COSET_LATTICE_RADIUS: i64 = 3;

impl Alphabet {
    pub fn tag(&self) -> &'static str {
        match self {
            Alphabet::Binary => "binary",
            Alphabet::ExtendedTorus(_) => "torus",
            Alphabet::ExtendedNil(_) => "nil",
        }
    }

    /// Upper bound on the distance between two symbols.
    pub fn max_distance(&self) -> f64 {
        match self {
            Alphabet::Binary => 1.0,
            Alphabet::ExtendedTorus(CircleMetric::Arc) => 1.0,
            Alphabet::ExtendedTorus(CircleMetric::Chord) => 2.0,
            // reduced representatives differ by less than 2 in every coordinate
            Alphabet::ExtendedNil(_) => 2.0,
        }
    }

    pub fn symbol_distance(&self, a: &Symbol, b: &Symbol) -> f64 {
        match (a, b) {
            (Symbol::P, Symbol::P) => 0.0,
            (Symbol::P, _) | (_, Symbol::P) => 1.0,
            (Symbol::Angle(s), Symbol::Angle(t)) => match self {
                Alphabet::ExtendedTorus(m) => m.dist(*s, *t),
                _ => CircleMetric::Arc.dist(*s, *t),
            },
            (Symbol::Coset(x), Symbol::Coset(y)) => match self {
                Alphabet::ExtendedNil(g) => {
                    g.quotient_metric(x, y, COSET_LATTICE_RADIUS, 1).value
                }
                _ => f64::NAN,
            },
            _ => f64::NAN,
        }
    }

    /// Lipschitz constant of `F~` with respect to the symbol metric.
    pub fn ftilde_lipschitz(&self) -> f64 {
        match self {
            Alphabet::Binary => 1.0,
            Alphabet::ExtendedTorus(m) => m.exp_lipschitz(),
            // e(first coordinate); the quotient metric dominates the torus distance
            Alphabet::ExtendedNil(_) => TAU,
        }
    }
}

/// `F~(z)`: `e(t)` on an angle (or the first coordinate of a coset), `0` at `p`.
pub fn ftilde(symbol: &Symbol) -> Complex64 {
    match symbol {
        Symbol::P => Complex64::new(0.0, 0.0),
        Symbol::Angle(t) => e(*t),
        Symbol::Coset(g) => e(g.coords[0]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowData {
    Bits(Arc<[u8]>),
    Symbols(Arc<[Symbol]>),
}

impl WindowData {
    pub fn len(&self) -> usize {
        match self {
            WindowData::Bits(b) => b.len(),
            WindowData::Symbols(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A two-sided sequence known on the indices `lo ..= lo + len - 1`; coordinate 0 is the center.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolWindow {
    pub lo: i64,
    pub data: WindowData,
}

impl SymbolWindow {
    pub fn bits(lo: i64, bits: Vec<u8>) -> Self {
        Self {
            lo,
            data: WindowData::Bits(bits.into()),
        }
    }

    pub fn symbols(lo: i64, symbols: Vec<Symbol>) -> Self {
        Self {
            lo,
            data: WindowData::Symbols(symbols.into()),
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.data.len() as i64 - 1
    }

    /// Largest `R` with `[-R, R]` stored; negative when coordinate 0 is missing.
    pub fn radius(&self) -> i64 {
        (-self.lo).min(self.hi())
    }

    pub fn contains(&self, k: i64) -> bool {
        k >= self.lo && k <= self.hi()
    }

    pub fn bit(&self, k: i64) -> Option<u8> {
        match &self.data {
            WindowData::Bits(b) if self.contains(k) => Some(b[(k - self.lo) as usize]),
            _ => None,
        }
    }

    pub fn symbol(&self, k: i64) -> Option<Symbol> {
        if !self.contains(k) {
            return None;
        }
        let i = (k - self.lo) as usize;
        Some(match &self.data {
            WindowData::Bits(b) => Symbol::Angle(f64::from(b[i])),
            WindowData::Symbols(s) => s[i].clone(),
        })
    }

    /// `sigma^i` of this window.
    pub fn shifted(&self, i: i64) -> Self {
        Self {
            lo: self.lo - i,
            data: self.data.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Circle(f64),
    /// A point `(x, e(angle))` of `C × T`.
    Skew { base: f64, angle: f64 },
    Window(SymbolWindow),
    Product(Vec<Point>),
    /// A point of `T ∪ {p}`; in a skew system `Extended(Symbol::P)` is the adjoined fixed point.
    Extended(Symbol),
}

/// A sequence over an alphabet stored on `[lo, hi]`, optionally constant (`fill`) outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub alphabet: Alphabet,
    pub window: SymbolWindow,
    pub fill: Option<Symbol>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Rotation { alpha: f64, metric: CircleMetric },
    Skew { base: FrequencySet, metric: CircleMetric },
    Shift { alphabet: Alphabet },
    Product(Vec<SystemSpec>),
    OrbitClosure { sequence: Arc<SequenceSpec> },
}

/// A distance together with a bound on what the unstored tail can add.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub tail_bound: f64,
}

fn mismatch(system: &SystemSpec, point: &Point) -> Error {
    Error::Mismatch(format!(
        "point {} does not belong to a {} system",
        point_kind(point),
        system.kind()
    ))
}

fn point_kind(p: &Point) -> &'static str {
    match p {
        Point::Circle(_) => "circle",
        Point::Skew { .. } => "skew",
        Point::Window(_) => "symbol_window",
        Point::Product(_) => "product",
        Point::Extended(_) => "extended_torus",
    }
}

/// `2^{-(|k| + 2)}`.
#[inline]
fn weight(k: i64) -> f64 {
    let e = k.unsigned_abs().min(1100) as i32;
    0.25 * 2f64.powi(-e)
}

impl SystemSpec {
    pub fn rotation(alpha: f64) -> Self {
        SystemSpec::Rotation {
            alpha: frac(alpha),
            metric: CircleMetric::Arc,
        }
    }

    pub fn full_shift() -> Self {
        SystemSpec::Shift {
            alphabet: Alphabet::Binary,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SystemSpec::Rotation { .. } => "rotation",
            SystemSpec::Skew { .. } => "skew",
            SystemSpec::Shift { .. } => "shift",
            SystemSpec::Product(_) => "product",
            SystemSpec::OrbitClosure { .. } => "orbit_closure",
        }
    }

    /// Short description including the active metric choice.
    pub fn describe(&self) -> String {
        match self {
            SystemSpec::Rotation { alpha, metric } => {
                format!("rotation(alpha={alpha}, metric={})", metric.as_str())
            }
            SystemSpec::Skew { base, metric } => {
                format!("skew(C={}, fiber metric={})", base.describe(), metric.as_str())
            }
            SystemSpec::Shift { alphabet } => format!("shift({})", alphabet.tag()),
            SystemSpec::Product(parts) => {
                let inner: Vec<String> = parts.iter().map(SystemSpec::describe).collect();
                format!("product({})", inner.join(", "))
            }
            SystemSpec::OrbitClosure { sequence } => {
                format!("orbit_closure({})", sequence.alphabet.tag())
            }
        }
    }

    /// True when `d(Tx, Ty) = d(x, y)` for all points.
    pub fn is_isometry(&self) -> bool {
        match self {
            SystemSpec::Rotation { .. } => true,
            SystemSpec::Product(parts) => parts.iter().all(SystemSpec::is_isometry),
            _ => false,
        }
    }

    /// Alphabet of a sequence-space system.
    pub fn alphabet(&self) -> Option<&Alphabet> {
        match self {
            SystemSpec::Shift { alphabet } => Some(alphabet),
            SystemSpec::OrbitClosure { sequence } => Some(&sequence.alphabet),
            _ => None,
        }
    }

    /// Diameter bound, used to clamp tail bounds.
    pub fn diameter_bound(&self) -> f64 {
        match self {
            SystemSpec::Rotation { metric, .. } => match metric {
                CircleMetric::Arc => 0.5,
                CircleMetric::Chord => 2.0,
            },
            SystemSpec::Skew { metric, .. } => match metric {
                CircleMetric::Arc => 1.0,
                CircleMetric::Chord => 2.0,
            },
            SystemSpec::Shift { alphabet } => alphabet.max_distance() * 0.75,
            SystemSpec::OrbitClosure { sequence } => sequence.alphabet.max_distance() * 0.75,
            SystemSpec::Product(parts) => {
                parts.iter().map(SystemSpec::diameter_bound).fold(0.0, f64::max)
            }
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.iterate(x, 1)
    }

    pub fn apply_inverse(&self, x: &Point) -> Result<Point> {
        self.iterate(x, -1)
    }

    /// `T^i x` for any integer `i`, in closed form.
    pub fn iterate(&self, x: &Point, i: i64) -> Result<Point> {
        match (self, x) {
            (SystemSpec::Rotation { alpha, .. }, Point::Circle(t)) => {
                Ok(Point::Circle(frac(t + i as f64 * alpha)))
            }
            (SystemSpec::Skew { .. }, Point::Skew { base, angle }) => Ok(Point::Skew {
                base: *base,
                angle: frac(angle + i as f64 * base),
            }),
            (SystemSpec::Skew { .. }, Point::Extended(Symbol::P)) => Ok(x.clone()),
            (SystemSpec::Shift { .. } | SystemSpec::OrbitClosure { .. }, Point::Window(w)) => {
                Ok(Point::Window(w.shifted(i)))
            }
            (SystemSpec::Product(specs), Point::Product(points)) if specs.len() == points.len() => {
                specs
                    .iter()
                    .zip(points)
                    .map(|(s, p)| s.iterate(p, i))
                    .collect::<Result<Vec<_>>>()
                    .map(Point::Product)
            }
            _ => Err(mismatch(self, x)),
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<Measured> {
        self.distance_at(a, b, 0)
    }

    /// `d(T^i a, T^i b)` without materialising the iterates.
    pub fn distance_at(&self, a: &Point, b: &Point, i: i64) -> Result<Measured> {
        let exact = |value| {
            Ok(Measured {
                value,
                tail_bound: 0.0,
            })
        };
        match (self, a, b) {
            (SystemSpec::Rotation { metric, .. }, Point::Circle(s), Point::Circle(t)) => {
                exact(metric.dist(*s, *t))
            }
            (
                SystemSpec::Skew { metric, .. },
                Point::Skew { base: x1, angle: y1 },
                Point::Skew { base: x2, angle: y2 },
            ) => {
                let fx = i as f64;
                let fiber = metric.dist(y1 + fx * x1, y2 + fx * x2);
                exact((x1 - x2).abs().max(fiber))
            }
            (SystemSpec::Skew { .. }, Point::Extended(Symbol::P), Point::Extended(Symbol::P)) => {
                exact(0.0)
            }
            (SystemSpec::Skew { .. }, Point::Extended(Symbol::P), Point::Skew { .. })
            | (SystemSpec::Skew { .. }, Point::Skew { .. }, Point::Extended(Symbol::P)) => {
                exact(1.0)
            }
            (
                SystemSpec::Shift { .. } | SystemSpec::OrbitClosure { .. },
                Point::Window(x),
                Point::Window(y),
            ) => {
                let alphabet = self.alphabet().expect("sequence system");
                window_distance(alphabet, x, y, i)
            }
            (SystemSpec::Product(specs), Point::Product(xs), Point::Product(ys))
                if specs.len() == xs.len() && xs.len() == ys.len() =>
            {
                let mut value = 0.0f64;
                let mut tail = 0.0f64;
                for ((s, x), y) in specs.iter().zip(xs).zip(ys) {
                    let m = s.distance_at(x, y, i)?;
                    value = value.max(m.value);
                    tail = tail.max(m.tail_bound);
                }
                Ok(Measured {
                    value,
                    tail_bound: tail,
                })
            }
            _ => Err(Error::Mismatch(format!(
                "cannot measure {} against {} in a {} system",
                point_kind(a),
                point_kind(b),
                self.kind()
            ))),
        }
    }
}

/// Distance between `sigma^i x` and `sigma^i y`: `sum_{|k| <= R} d(x(k+i), y(k+i)) / 2^{|k|+2}`,
/// where `R` is the common stored radius after shifting.
fn window_distance(alphabet: &Alphabet, x: &SymbolWindow, y: &SymbolWindow, i: i64) -> Result<Measured> {
    let rx = (i - x.lo).min(x.hi() - i);
    let ry = (i - y.lo).min(y.hi() - i);
    let r = rx.min(ry);
    if r < 0 {
        return Err(Error::InsufficientSupport {
            required: i,
            available: x.hi().min(y.hi()),
        });
    }
    let mut value = 0.0;
    match (&x.data, &y.data) {
        (WindowData::Bits(bx), WindowData::Bits(by)) => {
            let ox = i - x.lo;
            let oy = i - y.lo;
            for k in -r..=r {
                let u = bx[(ox + k) as usize];
                let v = by[(oy + k) as usize];
                if u != v {
                    value += weight(k);
                }
            }
        }
        (WindowData::Symbols(sx), WindowData::Symbols(sy)) => {
            let ox = i - x.lo;
            let oy = i - y.lo;
            for k in -r..=r {
                let d = alphabet.symbol_distance(&sx[(ox + k) as usize], &sy[(oy + k) as usize]);
                value += d * weight(k);
            }
        }
        _ => return Err(Error::Mismatch("binary window against extended window".into())),
    }
    let tail_bound = alphabet.max_distance() * 2f64.powi(-(r.min(1100) as i32) - 1);
    Ok(Measured { value, tail_bound })
}

/// Built-in observables `f` for realised sequences `f(T^n x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Zero,
    /// `e(t)` of the circle coordinate, the fiber coordinate of a skew point, or `F~`
    /// of coordinate 0 for sequence spaces. In products, the first factor is used.
    Exp,
    /// The raw coordinate: `t` on the circle, the fiber angle on a skew point, `x(0)` on windows.
    Coordinate,
    /// `F~(z) = z(0)` on `T`, `0` at `p`.
    FTilde,
    Indicator(CodableSet),
    /// Collar-interpolated indicator with inflation radius `eps0`.
    Mollified { set: CodableSet, eps0: f64 },
}

impl Observable {
    pub fn evaluate(&self, system: &SystemSpec, x: &Point) -> Result<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Observable::Zero => Ok(zero),
            Observable::Exp | Observable::FTilde => match (system, x) {
                (SystemSpec::Rotation { .. }, Point::Circle(t)) => Ok(e(*t)),
                (SystemSpec::Skew { .. }, Point::Skew { angle, .. }) => Ok(e(*angle)),
                (SystemSpec::Skew { .. }, Point::Extended(Symbol::P)) => Ok(zero),
                (_, Point::Extended(s)) => Ok(ftilde(s)),
                (SystemSpec::Shift { .. } | SystemSpec::OrbitClosure { .. }, Point::Window(w)) => {
                    match &w.data {
                        WindowData::Bits(_) => {
                            let b = w.bit(0).ok_or_else(|| support_error(w))?;
                            Ok(Complex64::new(f64::from(b), 0.0))
                        }
                        WindowData::Symbols(_) => {
                            Ok(ftilde(&w.symbol(0).ok_or_else(|| support_error(w))?))
                        }
                    }
                }
                (SystemSpec::Product(specs), Point::Product(points)) if !specs.is_empty() => {
                    self.evaluate(&specs[0], &points[0])
                }
                _ => Err(mismatch(system, x)),
            },
            Observable::Coordinate => match (system, x) {
                (SystemSpec::Rotation { .. }, Point::Circle(t)) => Ok(Complex64::new(*t, 0.0)),
                (SystemSpec::Skew { .. }, Point::Skew { angle, .. }) => {
                    Ok(Complex64::new(*angle, 0.0))
                }
                (SystemSpec::Skew { .. }, Point::Extended(Symbol::P)) => Ok(zero),
                (SystemSpec::Shift { .. } | SystemSpec::OrbitClosure { .. }, Point::Window(w)) => {
                    match &w.data {
                        WindowData::Bits(_) => {
                            let b = w.bit(0).ok_or_else(|| support_error(w))?;
                            Ok(Complex64::new(f64::from(b), 0.0))
                        }
                        WindowData::Symbols(_) => {
                            Ok(ftilde(&w.symbol(0).ok_or_else(|| support_error(w))?))
                        }
                    }
                }
                (SystemSpec::Product(specs), Point::Product(points)) if !specs.is_empty() => {
                    self.evaluate(&specs[0], &points[0])
                }
                _ => Err(mismatch(system, x)),
            },
            Observable::Indicator(set) => {
                let inside = set.contains(system, x)?;
                Ok(Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0))
            }
            Observable::Mollified { set, eps0 } => {
                Ok(Complex64::new(crate::coding::mollified_value(system, set, *eps0, x)?, 0.0))
            }
        }
    }

    /// Lipschitz constant of `f` on the system's metric, when one is known analytically.
    pub fn lipschitz(&self, system: &SystemSpec) -> Option<f64> {
        match self {
            Observable::Zero => Some(0.0),
            Observable::Exp | Observable::FTilde => match system {
                SystemSpec::Rotation { metric, .. } | SystemSpec::Skew { metric, .. } => {
                    Some(metric.exp_lipschitz().max(1.0))
                }
                // |F~(z) - F~(z')| <= L d(z(0), z'(0)) <= 4 L D(z, z')
                SystemSpec::Shift { alphabet } => Some(4.0 * alphabet.ftilde_lipschitz()),
                SystemSpec::OrbitClosure { sequence } => {
                    Some(4.0 * sequence.alphabet.ftilde_lipschitz())
                }
                SystemSpec::Product(parts) => parts.first().and_then(|s| self.lipschitz(s)),
            },
            Observable::Coordinate => match system {
                SystemSpec::Shift { alphabet: Alphabet::Binary } => Some(4.0),
                _ => None,
            },
            Observable::Indicator(_) => None,
            Observable::Mollified { eps0, .. } => Some(1.0 / (2.0 * eps0)),
        }
    }

    pub fn sup_norm_bound(&self) -> f64 {
        match self {
            Observable::Zero => 0.0,
            Observable::Coordinate => 1.0,
            _ => 1.0,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Observable::Zero => "zero".into(),
            Observable::Exp => "exp".into(),
            Observable::Coordinate => "coordinate".into(),
            Observable::FTilde => "ftilde".into(),
            Observable::Indicator(s) => format!("indicator({})", s.describe()),
            Observable::Mollified { set, eps0 } => {
                format!("mollified({}, eps0={eps0})", set.describe())
            }
        }
    }
}

fn support_error(w: &SymbolWindow) -> Error {
    Error::InsufficientSupport {
        required: 0,
        available: w.hi(),
    }
}

/// `(f(T^n x0))_{n = 1..N}`.
pub fn orbit_observable(
    system: &SystemSpec,
    x0: &Point,
    f: &Observable,
    n: usize,
) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::invalid("N must be positive"));
    }
    if let Some(hi) = max_window_hi(x0) {
        if hi < n as i64 {
            return Err(Error::InsufficientSupport {
                required: n as i64,
                available: hi,
            });
        }
    }
    let mut x = system.apply(x0)?;
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        out.push(f.evaluate(system, &x)?);
        if k < n {
            x = system.apply(&x)?;
        }
    }
    Ok(out)
}

fn max_window_hi(x: &Point) -> Option<i64> {
    match x {
        Point::Window(w) => Some(w.hi()),
        Point::Product(ps) => ps.iter().filter_map(max_window_hi).min(),
        _ => None,
    }
}

impl SequenceSpec {
    pub fn new(alphabet: Alphabet, window: SymbolWindow, fill: Option<Symbol>) -> Self {
        Self {
            alphabet,
            window,
            fill,
        }
    }

    pub fn lo(&self) -> i64 {
        self.window.lo
    }

    pub fn hi(&self) -> i64 {
        self.window.hi()
    }

    pub fn symbol(&self, k: i64) -> Option<Symbol> {
        self.window.symbol(k).or_else(|| self.fill.clone())
    }

    /// The window `sigma^n y` restricted to `[-radius, radius]`.
    pub fn point(&self, n: i64, radius: i64) -> Result<SymbolWindow> {
        let (a, b) = (n - radius, n + radius);
        if self.fill.is_none() && (a < self.lo() || b > self.hi()) {
            return Err(Error::InsufficientSupport {
                required: b,
                available: self.hi(),
            });
        }
        Ok(match &self.window.data {
            WindowData::Bits(bits) if self.fill.is_none() => {
                let s = (a - self.lo()) as usize;
                let t = (b - self.lo()) as usize;
                SymbolWindow::bits(-radius, bits[s..=t].to_vec())
            }
            _ => {
                let mut syms = Vec::with_capacity((2 * radius + 1) as usize);
                for k in a..=b {
                    syms.push(self.symbol(k).expect("fill covers the gap"));
                }
                SymbolWindow::symbols(-radius, syms)
            }
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.alphabet {
            Alphabet::Binary => out.push_str("alphabet binary\n"),
            Alphabet::ExtendedTorus(m) => {
                let _ = writeln!(out, "alphabet torus\nmetric {}", m.as_str());
            }
            Alphabet::ExtendedNil(g) => {
                let _ = writeln!(
                    out,
                    "alphabet nil\ngroup {}",
                    match g.kind() {
                        crate::nil::GroupKind::Heisenberg => "heisenberg".to_string(),
                        crate::nil::GroupKind::Abelian => format!("abelian {}", g.dim()),
                    }
                );
            }
        }
        let _ = writeln!(out, "lo {}\nhi {}", self.lo(), self.hi());
        if let Some(f) = &self.fill {
            let _ = writeln!(out, "fill {}", symbol_text(f));
        }
        out.push_str("---\n");
        match &self.window.data {
            WindowData::Bits(bits) => {
                for b in bits.iter() {
                    let _ = writeln!(out, "{b}");
                }
            }
            WindowData::Symbols(syms) => {
                for s in syms.iter() {
                    let _ = writeln!(out, "{}", symbol_text(s));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut alphabet_tag = None;
        let mut metric = CircleMetric::Arc;
        let mut group = None;
        let mut lo = None;
        let mut hi = None;
        let mut fill_text = None;
        for (i, raw) in lines.by_ref() {
            let line = raw.trim();
            if line == "---" {
                break;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k, v.trim()))
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key value`", i + 1)))?;
            let int = |v: &str| {
                v.parse::<i64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            };
            match key {
                "alphabet" => alphabet_tag = Some(value.to_string()),
                "metric" => {
                    metric = match value {
                        "arc" => CircleMetric::Arc,
                        "chord" => CircleMetric::Chord,
                        other => {
                            return Err(Error::Parse(format!("line {}: unknown metric `{other}`", i + 1)))
                        }
                    }
                }
                "group" => {
                    group = Some(match value.split_whitespace().collect::<Vec<_>>().as_slice() {
                        ["heisenberg"] => NilGroup::heisenberg(),
                        ["abelian", d] => NilGroup::abelian(int(d)?.max(1) as usize),
                        _ => return Err(Error::Parse(format!("line {}: unknown group", i + 1))),
                    })
                }
                "lo" => lo = Some(int(value)?),
                "hi" => hi = Some(int(value)?),
                "fill" => fill_text = Some(value.to_string()),
                other => return Err(Error::Parse(format!("line {}: unknown key `{other}`", i + 1))),
            }
        }
        let alphabet = match alphabet_tag.as_deref() {
            Some("binary") => Alphabet::Binary,
            Some("torus") => Alphabet::ExtendedTorus(metric),
            Some("nil") => Alphabet::ExtendedNil(group.unwrap_or_else(NilGroup::heisenberg)),
            Some(other) => return Err(Error::Parse(format!("unknown alphabet `{other}`"))),
            None => return Err(Error::Parse("missing `alphabet`".into())),
        };
        let lo = lo.ok_or_else(|| Error::Parse("missing `lo`".into()))?;
        let hi = hi.ok_or_else(|| Error::Parse("missing `hi`".into()))?;
        if hi < lo {
            return Err(Error::Parse("hi < lo".into()));
        }
        let fill = fill_text
            .map(|t| parse_symbol(&alphabet, &t))
            .transpose()?;
        let payload: Vec<(usize, &str)> = lines
            .map(|(i, l)| (i, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        if payload.len() as i64 != hi - lo + 1 {
            return Err(Error::Parse(format!(
                "expected {} symbols, found {}",
                hi - lo + 1,
                payload.len()
            )));
        }
        let window = match alphabet {
            Alphabet::Binary => {
                let bits: Result<Vec<u8>> = payload
                    .iter()
                    .map(|(i, l)| match *l {
                        "0" => Ok(0),
                        "1" => Ok(1),
                        _ => Err(Error::Parse(format!("line {}: expected 0 or 1", i + 1))),
                    })
                    .collect();
                SymbolWindow::bits(lo, bits?)
            }
            _ => {
                let syms: Result<Vec<Symbol>> = payload
                    .iter()
                    .map(|(i, l)| {
                        parse_symbol(&alphabet, l)
                            .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
                    })
                    .collect();
                SymbolWindow::symbols(lo, syms?)
            }
        };
        Ok(Self {
            alphabet,
            window,
            fill,
        })
    }
}

fn symbol_text(s: &Symbol) -> String {
    match s {
        Symbol::P => "p".into(),
        Symbol::Angle(t) => format!("{t}"),
        Symbol::Coset(g) => g
            .coords
            .iter()
            .map(|t| format!("{t}"))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn parse_symbol(alphabet: &Alphabet, text: &str) -> Result<Symbol> {
    if text == "p" {
        return Ok(Symbol::P);
    }
    let nums: std::result::Result<Vec<f64>, _> =
        text.split_whitespace().map(str::parse::<f64>).collect();
    let nums = nums.map_err(|e| Error::Parse(format!("bad symbol `{text}`: {e}")))?;
    match alphabet {
        Alphabet::Binary => Err(Error::Parse("binary sequences have no `p` symbol".into())),
        Alphabet::ExtendedTorus(_) if nums.len() == 1 => Ok(Symbol::Angle(frac(nums[0]))),
        Alphabet::ExtendedNil(g) if nums.len() == g.dim() => Ok(Symbol::Coset(NilElement::new(&nums))),
        _ => Err(Error::Parse(format!("bad symbol `{text}`"))),
    }
}

/// A random point of the system. Windows get radius `radius`; orbit-closure points are
/// shifts of the stored sequence at a uniformly chosen admissible position.
pub fn random_point<R: Rng>(system: &SystemSpec, radius: i64, rng: &mut R) -> Result<Point> {
    match system {
        SystemSpec::Rotation { .. } => Ok(Point::Circle(rng.random::<f64>())),
        SystemSpec::Skew { base, .. } => {
            let ivs = base.intervals();
            let (a, b) = ivs[rng.random_range(0..ivs.len())];
            let x = a + (b - a) * rng.random::<f64>();
            Ok(Point::Skew {
                base: x,
                angle: rng.random::<f64>(),
            })
        }
        SystemSpec::Shift { alphabet } => {
            let len = (2 * radius + 1) as usize;
            match alphabet {
                Alphabet::Binary => Ok(Point::Window(SymbolWindow::bits(
                    -radius,
                    (0..len).map(|_| rng.random_range(0..2u8)).collect(),
                ))),
                Alphabet::ExtendedTorus(_) => Ok(Point::Window(SymbolWindow::symbols(
                    -radius,
                    (0..len)
                        .map(|_| {
                            if rng.random::<f64>() < 0.5 {
                                Symbol::P
                            } else {
                                Symbol::Angle(rng.random::<f64>())
                            }
                        })
                        .collect(),
                ))),
                Alphabet::ExtendedNil(g) => Ok(Point::Window(SymbolWindow::symbols(
                    -radius,
                    (0..len)
                        .map(|_| {
                            if rng.random::<f64>() < 0.5 {
                                Symbol::P
                            } else {
                                let c: Vec<f64> = (0..g.dim()).map(|_| rng.random::<f64>()).collect();
                                Symbol::Coset(NilElement::new(&c))
                            }
                        })
                        .collect(),
                ))),
            }
        }
        SystemSpec::OrbitClosure { sequence } => {
            let (lo, hi) = if sequence.fill.is_some() {
                (sequence.lo(), sequence.hi())
            } else {
                (sequence.lo() + radius, sequence.hi() - radius)
            };
            if hi < lo {
                return Err(Error::InsufficientSupport {
                    required: 2 * radius + 1,
                    available: sequence.hi() - sequence.lo() + 1,
                });
            }
            let n = rng.random_range(lo..=hi);
            Ok(Point::Window(sequence.point(n, radius)?))
        }
        SystemSpec::Product(parts) => parts
            .iter()
            .map(|s| random_point(s, radius, rng))
            .collect::<Result<Vec<_>>>()
            .map(Point::Product),
    }
}

/// A point at distance below `radius` from `x` (circle and fiber coordinates moved,
/// base and symbolic coordinates kept). Unsupported for sequence spaces.
pub fn perturb<R: Rng>(system: &SystemSpec, x: &Point, radius: f64, rng: &mut R) -> Result<Point> {
    let step = |metric: CircleMetric, rng: &mut R| {
        let u = rng.random::<f64>() * 2.0 - 1.0;
        match metric {
            CircleMetric::Arc => 0.99 * radius.min(0.5) * u,
            // chord 2 sin(pi d) <= 2 pi d
            CircleMetric::Chord => 0.99 * (radius / TAU).min(0.5) * u,
        }
    };
    match (system, x) {
        (SystemSpec::Rotation { metric, .. }, Point::Circle(t)) => {
            Ok(Point::Circle(frac(t + step(*metric, rng))))
        }
        (SystemSpec::Skew { metric, .. }, Point::Skew { base, angle }) => Ok(Point::Skew {
            base: *base,
            angle: frac(angle + step(*metric, rng)),
        }),
        (SystemSpec::Product(specs), Point::Product(points)) if specs.len() == points.len() => specs
            .iter()
            .zip(points)
            .map(|(s, p)| perturb(s, p, radius, rng))
            .collect::<Result<Vec<_>>>()
            .map(Point::Product),
        _ => Err(Error::Unsupported(format!(
            "no perturbation sampler for {} systems",
            system.kind()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rotation_three_steps() {
        let alpha = 0.2360679;
        let s = SystemSpec::rotation(alpha);
        let mut x = Point::Circle(0.0);
        for _ in 0..3 {
            x = s.apply(&x).unwrap();
        }
        match x {
            Point::Circle(t) => assert_abs_diff_eq!(t, frac(3.0 * alpha), epsilon = 1e-15),
            _ => unreachable!(),
        }
    }

    #[test]
    fn skew_zero_fiber_fixed() {
        let s = SystemSpec::Skew {
            base: FrequencySet::finite(vec![0.0]).unwrap(),
            metric: CircleMetric::Chord,
        };
        let x = Point::Skew { base: 0.0, angle: 0.3 };
        assert_eq!(s.apply(&x).unwrap(), x);
    }

    #[test]
    fn shift_moves_left() {
        let s = SystemSpec::full_shift();
        let w = SymbolWindow::bits(-3, vec![0, 1, 0, 1, 1, 0, 0]);
        let Point::Window(v) = s.apply(&Point::Window(w.clone())).unwrap() else {
            unreachable!()
        };
        for k in -2..=2 {
            assert_eq!(v.bit(k), w.bit(k + 1));
        }
        let back = s.apply_inverse(&Point::Window(v)).unwrap();
        assert_eq!(back, Point::Window(w));
    }

    #[test]
    fn binary_metric_center_difference() {
        let s = SystemSpec::full_shift();
        let x = SymbolWindow::bits(-4, vec![0; 9]);
        let mut bits = vec![0; 9];
        bits[4] = 1;
        let y = SymbolWindow::bits(-4, bits);
        let d = s.distance(&Point::Window(x.clone()), &Point::Window(y)).unwrap();
        assert_eq!(d.value, 0.25);
        assert_eq!(d.tail_bound, 2f64.powi(-5));
        assert_eq!(s.distance(&Point::Window(x.clone()), &Point::Window(x)).unwrap().value, 0.0);
    }

    #[test]
    fn extended_all_p_vs_all_angles() {
        let s = SystemSpec::Shift {
            alphabet: Alphabet::ExtendedTorus(CircleMetric::Arc),
        };
        let r = 40;
        let len = (2 * r + 1) as usize;
        let x = SymbolWindow::symbols(-r, vec![Symbol::P; len]);
        let y = SymbolWindow::symbols(-r, (0..len).map(|k| Symbol::Angle(k as f64 * 0.01)).collect());
        let d = s.distance(&Point::Window(x), &Point::Window(y)).unwrap();
        // sum_n 2^{-|n|-2} = 3/4, up to the unstored tail
        assert!((d.value - 0.75).abs() <= d.tail_bound + 1e-15);
    }

    #[test]
    fn skew_orbit_closed_form() {
        let alpha = 0.318309886;
        let phi = 0.1;
        let s = SystemSpec::Skew {
            base: FrequencySet::finite(vec![alpha]).unwrap(),
            metric: CircleMetric::Arc,
        };
        let x0 = Point::Skew { base: alpha, angle: phi };
        let seq = orbit_observable(&s, &x0, &Observable::Exp, 50).unwrap();
        for (k, z) in seq.iter().enumerate() {
            let expect = e(phi + (k + 1) as f64 * alpha);
            assert!((z - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_coordinate_stream() {
        let s = SystemSpec::full_shift();
        let bits = vec![1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1];
        let w = SymbolWindow::bits(0, bits.clone());
        let seq = orbit_observable(&s, &Point::Window(w.clone()), &Observable::Coordinate, 10).unwrap();
        for (k, z) in seq.iter().enumerate() {
            assert_eq!(z.re, f64::from(bits[k + 1]));
        }
        assert!(matches!(
            orbit_observable(&s, &Point::Window(w), &Observable::Coordinate, 11),
            Err(Error::InsufficientSupport { required: 11, available: 10 })
        ));
    }

    #[test]
    fn rotation_is_isometry() {
        let s = SystemSpec::rotation(0.61803398875);
        let x = Point::Circle(0.1);
        let y = Point::Circle(0.93);
        let d0 = s.distance(&x, &y).unwrap().value;
        for i in 0..100 {
            let xi = s.iterate(&x, i).unwrap();
            let yi = s.iterate(&y, i).unwrap();
            assert_abs_diff_eq!(s.distance(&xi, &yi).unwrap().value, d0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mismatched_points_rejected() {
        let s = SystemSpec::rotation(0.1);
        assert!(s.apply(&Point::Window(SymbolWindow::bits(0, vec![1]))).is_err());
    }

    #[test]
    fn sequence_file_round_trip() {
        let spec = SequenceSpec::new(
            Alphabet::ExtendedTorus(CircleMetric::Chord),
            SymbolWindow::symbols(-2, vec![Symbol::P, Symbol::Angle(0.25), Symbol::Angle(0.5), Symbol::P]),
            Some(Symbol::P),
        );
        let back = SequenceSpec::from_text(&spec.to_text()).unwrap();
        assert_eq!(back, spec);
        let bin = SequenceSpec::new(Alphabet::Binary, SymbolWindow::bits(3, vec![1, 0, 1]), None);
        assert_eq!(SequenceSpec::from_text(&bin.to_text()).unwrap(), bin);
        let nil = SequenceSpec::new(
            Alphabet::ExtendedNil(NilGroup::heisenberg()),
            SymbolWindow::symbols(0, vec![Symbol::Coset(NilElement::new(&[0.5, 0.25, 0.125])), Symbol::P]),
            None,
        );
        assert_eq!(SequenceSpec::from_text(&nil.to_text()).unwrap(), nil);
    }

    #[test]
    fn sequence_point_uses_fill() {
        let spec = SequenceSpec::new(
            Alphabet::ExtendedTorus(CircleMetric::Arc),
            SymbolWindow::symbols(5, vec![Symbol::Angle(0.5)]),
            Some(Symbol::P),
        );
        let w = spec.point(5, 2).unwrap();
        assert_eq!(w.symbol(0), Some(Symbol::Angle(0.5)));
        assert_eq!(w.symbol(1), Some(Symbol::P));
        assert_eq!(w.radius(), 2);
    }
}
