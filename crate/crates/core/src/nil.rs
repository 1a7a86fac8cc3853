//! Step-1 and step-2 nilpotent Lie groups in Mal'cev coordinates.
//!
//! Two families are supported: the abelian group `R^m` with lattice `Z^m`, and
//! the 3-dimensional Heisenberg group with coordinates `(a, b, c)`, lattice
//! `Z^3` and group law
//!
//! ```text
//! (a, b, c) * (a', b', c') = (a + a', b + b', c + c' + a b')
//! ```
//!
//! (the upper unitriangular matrix group). The lower central series is
//! `G_1 = G`, `G_2 = {(0, 0, c)}`, `G_3 = {e}`, so the filtration markers are
//! `l_0 = 0`, `l_1 = 2`.
//!
//! Distances use `|psi(g)| = max_i |t_i|` and the chain metric built on it.
//! The chain infimum is replaced by a minimum over chains of bounded length
//! drawn from a fixed candidate set, which gives an upper bound that is
//! nonincreasing in the chain depth.

use crate::complexity::{BoundDirection, CoveringReport};
use crate::error::{Error, Result};
use crate::numeric::frac;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::fmt::Write as _;

pub type Coords = SmallVec<[f64; 4]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Abelian,
    Heisenberg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NilGroup {
    kind: GroupKind,
    dim: usize,
    step: usize,
    /// `l_0 < l_1 < ...`: `G_{i+1}` is spanned by the coordinates from `markers[i]` on.
    markers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NilElement {
    pub coords: Coords,
}

impl NilElement {
    pub fn new(coords: &[f64]) -> Self {
        Self {
            coords: Coords::from_slice(coords),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `|psi(g)| = max_i |t_i|`.
    pub fn norm(&self) -> f64 {
        self.coords.iter().fold(0.0f64, |m, t| m.max(t.abs()))
    }

    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(|t| t.fract() == 0.0)
    }
}

impl NilGroup {
    pub fn abelian(dim: usize) -> Self {
        assert!(dim >= 1, "abelian group needs dimension >= 1");
        Self {
            kind: GroupKind::Abelian,
            dim,
            step: 1,
            markers: vec![0],
        }
    }

    pub fn heisenberg() -> Self {
        Self {
            kind: GroupKind::Heisenberg,
            dim: 3,
            step: 2,
            markers: vec![0, 2],
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn markers(&self) -> &[usize] {
        &self.markers
    }

    pub fn identity(&self) -> NilElement {
        NilElement {
            coords: Coords::from_elem(0.0, self.dim),
        }
    }

    pub fn element(&self, coords: &[f64]) -> Result<NilElement> {
        if coords.len() != self.dim {
            return Err(Error::Mismatch(format!(
                "expected {} coordinates, got {}",
                self.dim,
                coords.len()
            )));
        }
        Ok(NilElement::new(coords))
    }

    /// Index of the first coordinate spanning `G_j` (`j >= 1`); `dim` when `G_j` is trivial.
    pub fn subgroup_start(&self, j: usize) -> usize {
        if j == 0 {
            0
        } else if j > self.step {
            self.dim
        } else {
            self.markers[j - 1]
        }
    }

    pub fn in_subgroup(&self, g: &NilElement, j: usize, tol: f64) -> bool {
        let start = self.subgroup_start(j);
        g.coords[..start].iter().all(|t| t.abs() <= tol)
    }

    /// Zeroes the coordinates outside `G_j`.
    pub fn project_to_subgroup(&self, g: &NilElement, j: usize) -> NilElement {
        let start = self.subgroup_start(j);
        let mut out = g.clone();
        for t in out.coords[..start].iter_mut() {
            *t = 0.0;
        }
        out
    }

    pub fn mult(&self, g: &NilElement, h: &NilElement) -> NilElement {
        debug_assert_eq!(g.dim(), self.dim);
        debug_assert_eq!(h.dim(), self.dim);
        match self.kind {
            GroupKind::Abelian => NilElement {
                coords: g.coords.iter().zip(&h.coords).map(|(a, b)| a + b).collect(),
            },
            GroupKind::Heisenberg => {
                let (a, b, c) = (g.coords[0], g.coords[1], g.coords[2]);
                let (a2, b2, c2) = (h.coords[0], h.coords[1], h.coords[2]);
                NilElement::new(&[a + a2, b + b2, c + c2 + a * b2])
            }
        }
    }

    pub fn inverse(&self, g: &NilElement) -> NilElement {
        match self.kind {
            GroupKind::Abelian => NilElement {
                coords: g.coords.iter().map(|t| -t).collect(),
            },
            GroupKind::Heisenberg => {
                let (a, b, c) = (g.coords[0], g.coords[1], g.coords[2]);
                NilElement::new(&[-a, -b, -c + a * b])
            }
        }
    }

    /// `g^t` along the one-parameter subgroup through `g`; agrees with repeated
    /// multiplication for integer `t`.
    pub fn power(&self, g: &NilElement, t: f64) -> NilElement {
        match self.kind {
            GroupKind::Abelian => NilElement {
                coords: g.coords.iter().map(|x| t * x).collect(),
            },
            GroupKind::Heisenberg => {
                let (a, b, c) = (g.coords[0], g.coords[1], g.coords[2]);
                NilElement::new(&[t * a, t * b, t * c + 0.5 * t * (t - 1.0) * a * b])
            }
        }
    }

    /// `[g, h] = g h g^{-1} h^{-1}`.
    pub fn commutator(&self, g: &NilElement, h: &NilElement) -> NilElement {
        let gh = self.mult(g, h);
        let ghg = self.mult(&gh, &self.inverse(g));
        self.mult(&ghg, &self.inverse(h))
    }

    /// Right-multiplies `g` by a lattice element so that every coordinate lies in
    /// `[0, 1)`. Returns the representative and the lattice element `gamma` with
    /// `rep = g * gamma`.
    pub fn reduce(&self, g: &NilElement) -> (NilElement, NilElement) {
        match self.kind {
            GroupKind::Abelian => {
                let gamma: Coords = g.coords.iter().map(|t| -t.floor()).collect();
                let rep: Coords = g.coords.iter().map(|&t| frac(t)).collect();
                (NilElement { coords: rep }, NilElement { coords: gamma })
            }
            GroupKind::Heisenberg => {
                let (a, b, c) = (g.coords[0], g.coords[1], g.coords[2]);
                let p = -a.floor();
                let q = -b.floor();
                let shifted = c + a * q;
                let r = -shifted.floor();
                let rep = NilElement::new(&[frac(a), frac(b), frac(shifted)]);
                (rep, NilElement::new(&[p, q, r]))
            }
        }
    }

    /// The fundamental box `K = psi^{-1}([0,1)^m)`.
    pub fn in_fundamental_box(&self, g: &NilElement) -> bool {
        g.coords.iter().all(|t| (0.0..1.0).contains(t))
    }

    fn step_cost(&self, from: &NilElement, to: &NilElement) -> f64 {
        let fwd = self.mult(from, &self.inverse(to)).norm();
        let bwd = self.mult(to, &self.inverse(from)).norm();
        fwd.min(bwd)
    }

    /// Intermediate chain nodes tried from the relative element `z`.
    fn chain_candidates(&self, z: &NilElement) -> Vec<NilElement> {
        match self.kind {
            // |psi| is a norm on R^m, chains never shorten the direct step.
            GroupKind::Abelian => Vec::new(),
            GroupKind::Heisenberg => {
                let (a, b, c) = (z.coords[0], z.coords[1], z.coords[2]);
                let mut out = vec![
                    NilElement::new(&[a, 0.0, 0.0]),
                    NilElement::new(&[0.0, b, 0.0]),
                    NilElement::new(&[0.0, 0.0, c]),
                    NilElement::new(&[a, b, 0.0]),
                    NilElement::new(&[a, 0.0, c]),
                    NilElement::new(&[0.0, b, c]),
                    self.power(z, 0.5),
                    NilElement::new(&[a, b, a * b]),
                ];
                out.retain(|w| w != z && w.norm() > 0.0);
                out
            }
        }
    }

    fn relative_distance(&self, z: &NilElement, depth: usize) -> f64 {
        let direct = z.norm().min(self.inverse(z).norm());
        if depth <= 1 || direct == 0.0 {
            return direct;
        }
        let mut best = direct;
        for w in self.chain_candidates(z) {
            let first = self.step_cost(z, &w);
            if first >= best {
                continue;
            }
            let rest = self.relative_distance(&w, depth - 1);
            best = best.min(first + rest);
        }
        best
    }

    /// Upper bound on the right-invariant metric `d(x, y)`: the cheapest chain of
    /// at most `chain_depth` steps from `x` to `y`.
    ///
    /// Chains are parametrised by the relative elements `x_i y^{-1}`, so the value
    /// depends on `x y^{-1}` only.
    pub fn group_metric(&self, x: &NilElement, y: &NilElement, chain_depth: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        let z = self.mult(x, &self.inverse(y));
        self.relative_distance(&z, chain_depth.max(1))
    }

    /// Upper bound on `d(x Gamma, y Gamma)`: the minimum of [`Self::group_metric`]
    /// over `gamma` with integer coordinates bounded by `lattice_radius`, searched
    /// around fundamental-box representatives of both cosets.
    pub fn quotient_metric(
        &self,
        x: &NilElement,
        y: &NilElement,
        lattice_radius: i64,
        chain_depth: usize,
    ) -> QuotientDistance {
        self.quotient_search(x, y, lattice_radius, chain_depth, f64::INFINITY)
    }

    /// Lattice search that only reports values below `cutoff`; anything else comes
    /// back as `cutoff` itself.
    fn quotient_search(
        &self,
        x: &NilElement,
        y: &NilElement,
        lattice_radius: i64,
        chain_depth: usize,
        cutoff: f64,
    ) -> QuotientDistance {
        let (xr, _) = self.reduce(x);
        let (yr, y_gamma) = self.reduce(y);
        let radius = lattice_radius.max(0);
        let mut best = cutoff;
        let mut best_gamma = self.identity();
        let visit = |gamma: NilElement, best: &mut f64, best_gamma: &mut NilElement| {
            let moved = self.mult(&yr, &gamma);
            let d = self.group_metric(&xr, &moved, chain_depth);
            if d < *best {
                *best = d;
                *best_gamma = gamma;
            }
        };
        let r = radius as f64;
        match self.kind {
            GroupKind::Abelian => {
                // Coordinates decouple: each lattice coordinate is rounded independently.
                let gamma: Coords = xr
                    .coords
                    .iter()
                    .zip(&yr.coords)
                    .map(|(a, b)| (a - b).round().clamp(-r, r))
                    .collect();
                visit(NilElement { coords: gamma }, &mut best, &mut best_gamma);
            }
            GroupKind::Heisenberg => {
                // every chain costs at least its horizontal displacement; the slack
                // absorbs rounding differences against the product
                let da = xr.coords[0] - yr.coords[0];
                let db = xr.coords[1] - yr.coords[1];
                let far = |lb: f64, best: f64| lb - 1e-12 >= best;
                for p in -radius..=radius {
                    if far((da - p as f64).abs(), best) {
                        continue;
                    }
                    for q in -radius..=radius {
                        if far((da - p as f64).abs().max((db - q as f64).abs()), best) {
                            continue;
                        }
                        if chain_depth <= 1 {
                            // The cheapest third lattice coordinate rounds one of two values.
                            let probe = NilElement::new(&[p as f64, q as f64, 0.0]);
                            let w = self.mult(&xr, &self.inverse(&self.mult(&yr, &probe)));
                            let (wa, wb, wc) = (w.coords[0], w.coords[1], w.coords[2]);
                            let mut cands: SmallVec<[f64; 6]> = SmallVec::new();
                            for base in [wc, wc - wa * wb] {
                                let rr = base.round();
                                for k in [rr - 1.0, rr, rr + 1.0] {
                                    let k = k.clamp(-r, r);
                                    if !cands.contains(&k) {
                                        cands.push(k);
                                    }
                                }
                            }
                            for s in cands {
                                visit(
                                    NilElement::new(&[p as f64, q as f64, s]),
                                    &mut best,
                                    &mut best_gamma,
                                );
                            }
                        } else {
                            for s in -radius..=radius {
                                visit(
                                    NilElement::new(&[p as f64, q as f64, s as f64]),
                                    &mut best,
                                    &mut best_gamma,
                                );
                            }
                        }
                    }
                }
            }
        }
        let boundary = best_gamma.coords.iter().any(|t| t.abs() >= r && radius > 0)
            || (radius == 0 && best > 0.0);
        QuotientDistance {
            value: best,
            gamma: self.mult(&y_gamma, &best_gamma),
            boundary_touched: boundary,
        }
    }

    /// A lower bound on the quotient distance from the abelianised torus coordinates.
    pub fn quotient_lower_bound(&self, x: &NilElement, y: &NilElement) -> f64 {
        let horizontal = match self.kind {
            GroupKind::Abelian => self.dim,
            GroupKind::Heisenberg => 2,
        };
        (0..horizontal)
            .map(|i| crate::numeric::circle_dist(x.coords[i], y.coords[i]))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientDistance {
    pub value: f64,
    /// Lattice element relative to the input `y`: the minimum is attained at `d(x, y gamma)`.
    pub gamma: NilElement,
    /// The minimiser sits on the edge of the searched box; a larger radius may do better.
    pub boundary_touched: bool,
}

/// Polynomial sequence `g(n) = g_0^{C(n,0)} g_1^{C(n,1)} ... g_s^{C(n,s)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySeq {
    pub coeffs: Vec<NilElement>,
}

impl PolySeq {
    pub fn new(coeffs: Vec<NilElement>) -> Self {
        Self { coeffs }
    }

    /// The sequence `n -> g^n h`, with Taylor coefficients `h` and `h^{-1} g h`.
    pub fn from_linear(group: &NilGroup, g: &NilElement, h: &NilElement) -> Self {
        let conj = group.mult(&group.mult(&group.inverse(h), g), h);
        Self {
            coeffs: vec![h.clone(), conj],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Checks `g_j in G_j` for every coefficient.
    pub fn is_adapted(&self, group: &NilGroup, tol: f64) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(j, g)| g.dim() == group.dim() && group.in_subgroup(g, j, tol))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let dim = self.coeffs.first().map_or(0, NilElement::dim);
        out.push_str("index");
        for i in 1..=dim {
            let _ = write!(out, ",t{i}");
        }
        out.push('\n');
        for (j, g) in self.coeffs.iter().enumerate() {
            let _ = write!(out, "{j}");
            for t in &g.coords {
                let _ = write!(out, ",{t}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut coeffs = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let idx: usize = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: bad index", i + 1)))?;
            if idx != coeffs.len() {
                return Err(Error::Parse(format!("line {}: indices must be 0, 1, 2, ...", i + 1)));
            }
            let coords: std::result::Result<Vec<f64>, _> =
                fields.map(|f| f.trim().parse::<f64>()).collect();
            let coords = coords.map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
            coeffs.push(NilElement::new(&coords));
        }
        Ok(Self { coeffs })
    }
}

/// Generalised binomial coefficient `C(n, k)` for any integer `n`.
pub fn binomial(n: i64, k: usize) -> Option<i128> {
    let mut num: i128 = 1;
    for i in 0..k as i128 {
        num = num.checked_mul(n as i128 - i)?;
    }
    let mut den: i128 = 1;
    for i in 1..=k as i128 {
        den *= i;
    }
    Some(num / den)
}

/// Largest exponent magnitude representable exactly as `f64`.
const EXACT_EXPONENT: i128 = 1 << 53;

pub fn poly_eval(group: &NilGroup, p: &PolySeq, n: i64) -> Result<NilElement> {
    let mut acc = group.identity();
    for (j, g) in p.coeffs.iter().enumerate() {
        let c = binomial(n, j)
            .filter(|c| c.abs() <= EXACT_EXPONENT)
            .ok_or_else(|| {
                Error::Overflow(format!(
                    "C({n}, {j}) exceeds the exact exponent bound 2^53"
                ))
            })?;
        if c != 0 {
            acc = group.mult(&acc, &group.power(g, c as f64));
        }
    }
    Ok(acc)
}

/// `f(n + h) f(n)^{-1}`.
pub fn discrete_derivative<F>(group: &NilGroup, f: F, h: i64, n: i64) -> NilElement
where
    F: Fn(i64) -> NilElement,
{
    group.mult(&f(n + h), &group.inverse(&f(n)))
}

/// Factorisation `g(n) = g'(n) gamma(n)` with `g'` having coefficients in the
/// fundamental box and `gamma` having integer coefficients. Step at most 2.
pub fn factorize(group: &NilGroup, p: &PolySeq) -> Result<(PolySeq, PolySeq)> {
    if group.step() > 2 {
        return Err(Error::Unsupported("factorisation is implemented for step <= 2".into()));
    }
    if p.coeffs.is_empty() {
        return Err(Error::invalid("polynomial sequence without coefficients"));
    }
    if p.degree() > group.step() {
        return Err(Error::invalid(format!(
            "degree {} exceeds the nilpotency step {}",
            p.degree(),
            group.step()
        )));
    }
    if !p.is_adapted(group, 1e-12) {
        return Err(Error::invalid("coefficients are not adapted to the filtration"));
    }
    let id = group.identity();
    let g1 = p.coeffs.get(1).cloned().unwrap_or_else(|| id.clone());
    let g2 = p.coeffs.get(2).cloned().unwrap_or_else(|| id.clone());

    // g0 = g0' gamma0
    let (g0p, red0) = group.reduce(&p.coeffs[0]);
    let gamma0 = group.inverse(&red0);
    // g(n) = g0' h1^n g2^C(n,2) gamma0
    let h1 = group.mult(&group.mult(&gamma0, &g1), &red0);
    let (g1p, red1) = group.reduce(&h1);
    let gamma1 = group.inverse(&red1);
    // (g1' gamma1)^n = g1'^n gamma1^n z^C(n,2) with z central
    let sq_prod = group.power(&group.mult(&g1p, &gamma1), 2.0);
    let prod_sq = group.mult(&group.power(&g1p, 2.0), &group.power(&gamma1, 2.0));
    let z = group.project_to_subgroup(&group.mult(&sq_prod, &group.inverse(&prod_sq)), 2);
    let h2 = group.project_to_subgroup(&group.mult(&z, &g2), 2);
    let (g2p, red2) = group.reduce(&h2);
    let gamma2 = group.inverse(&red2);

    let mut prime = vec![g0p, g1p];
    let mut lattice = vec![
        gamma0.clone(),
        group.mult(&group.mult(&red0, &gamma1), &gamma0),
    ];
    if p.coeffs.len() > 2 || group.step() == 2 {
        prime.push(g2p);
        lattice.push(gamma2);
    }
    // Round the lattice part to exact integers (it is integral up to rounding).
    for g in lattice.iter_mut() {
        for t in g.coords.iter_mut() {
            *t = t.round();
        }
    }
    prime.truncate(group.step() + 1);
    lattice.truncate(prime.len());
    Ok((PolySeq::new(prime), PolySeq::new(lattice)))
}

/// Uniform random polynomial sequence with coefficients in `K ∩ G_j`.
pub fn random_poly_in_box<R: Rng>(group: &NilGroup, rng: &mut R) -> PolySeq {
    let coeffs = (0..=group.step())
        .map(|j| {
            let start = group.subgroup_start(j);
            let coords: Coords = (0..group.dim())
                .map(|i| if i < start { 0.0 } else { rng.random::<f64>() })
                .collect();
            NilElement { coords }
        })
        .collect();
    PolySeq { coeffs }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyCoverOptions {
    pub lattice_radius: i64,
    pub chain_depth: usize,
}

impl Default for PolyCoverOptions {
    fn default() -> Self {
        Self {
            lattice_radius: 3,
            chain_depth: 1,
        }
    }
}

/// Orbit strings `(g(0) Gamma, ..., g(n-1) Gamma)` as reduced representatives.
pub fn poly_strings(group: &NilGroup, polys: &[PolySeq], n: usize) -> Result<Vec<Vec<NilElement>>> {
    polys
        .iter()
        .map(|p| {
            (0..n as i64)
                .map(|j| poly_eval(group, p, j).map(|g| group.reduce(&g).0))
                .collect()
        })
        .collect()
}

/// Greedy net for `s_n(Poly(G/Gamma), epsilon)` over random polynomial sequences
/// with coefficients in the fundamental box, under the sup-over-positions
/// quotient distance. The cardinality upper-bounds the covering number of the
/// sampled strings.
pub fn poly_covering_number(
    group: &NilGroup,
    n: usize,
    epsilon: f64,
    sample_count: usize,
    seed: u64,
    options: PolyCoverOptions,
) -> Result<CoveringReport> {
    if epsilon <= 0.0 {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if n == 0 || sample_count == 0 {
        return Err(Error::invalid("n and sample_count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys: Vec<PolySeq> = (0..sample_count)
        .map(|_| random_poly_in_box(group, &mut rng))
        .collect();
    let strings = poly_strings(group, &polys, n)?;
    let close = |a: &[NilElement], b: &[NilElement]| -> bool {
        a.iter().zip(b).all(|(x, y)| {
            group.quotient_lower_bound(x, y) < epsilon
                && group
                    .quotient_search(x, y, options.lattice_radius, options.chain_depth, epsilon)
                    .value
                    < epsilon
        })
    };
    let mut net: Vec<usize> = Vec::new();
    for (i, s) in strings.iter().enumerate() {
        if !net.iter().any(|&c| close(&strings[c], s)) {
            net.push(i);
        }
    }
    Ok(CoveringReport {
        n,
        epsilon,
        cardinality: net.len(),
        net,
        direction: BoundDirection::Upper,
        sample_size: sample_count,
        tail_bound: 0.0,
        note: format!(
            "surrogate metric: chain depth {}, lattice radius {}",
            options.chain_depth, options.lattice_radius
        ),
    })
}

/// Text description of a group: step, dimension, filtration markers and bracket table.
pub fn group_spec_to_string(group: &NilGroup) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "step {}", group.step);
    let _ = writeln!(out, "dimension {}", group.dim);
    let markers: Vec<String> = group.markers.iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "filtration {}", markers.join(" "));
    if group.kind == GroupKind::Heisenberg {
        let _ = writeln!(out, "bracket 1 2 3 1");
    }
    out
}

pub fn group_spec_from_str(text: &str) -> Result<NilGroup> {
    let mut step = None;
    let mut dim = None;
    let mut markers = None;
    let mut brackets = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        let nums: std::result::Result<Vec<i64>, _> = parts.map(str::parse::<i64>).collect();
        let nums = nums.map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        match key {
            "step" => step = nums.first().copied(),
            "dimension" => dim = nums.first().copied(),
            "filtration" => markers = Some(nums),
            "bracket" => {
                if nums.len() != 4 {
                    return Err(Error::Parse(format!(
                        "line {}: bracket needs `i j k coefficient`",
                        i + 1
                    )));
                }
                brackets.push(nums);
            }
            other => return Err(Error::Parse(format!("line {}: unknown key `{other}`", i + 1))),
        }
    }
    let step = step.ok_or_else(|| Error::Parse("missing `step`".into()))?;
    let dim = dim.ok_or_else(|| Error::Parse("missing `dimension`".into()))?;
    let markers = markers.ok_or_else(|| Error::Parse("missing `filtration`".into()))?;
    if dim < 1 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    match (step, brackets.as_slice()) {
        (1, []) if markers == [0] => Ok(NilGroup::abelian(dim as usize)),
        (2, [b]) if dim == 3 && markers == [0, 2] && b == &[1, 2, 3, 1] => {
            Ok(NilGroup::heisenberg())
        }
        _ => Err(Error::Unsupported(
            "only abelian groups and the 3-dimensional Heisenberg group are supported".into(),
        )),
    }
}
