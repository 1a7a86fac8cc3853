//! Named experiment recipes, their configuration file, and deterministic output.
//!
//! A run is fixed by `(recipe, params, seed)`. Tables are checked against
//! `schema/columns.toml` and written atomically next to a `manifest.json`.

use crate::arith::{chowla_log_sum, mertens, sieve_mobius, weighted_average, AverageKind, MobiusTable};
use crate::coding::{complexity_transfer_check, verify_coding_stability, CodableSet};
use crate::complexity::{
    complexity_profile, disjointness_certificate, CertificateOptions, CoverMode, SamplerConfig,
};
use crate::construct::{
    constant_signal, heisenberg_spec, verify_lower_bound_chain, BlockSpec, FrequencyRule, Scale, Variant,
};
use crate::error::{Error, Result};
use crate::fourier::{restricted_uniformity_average, write_trend_csv, FrequencySet};
use crate::nil::{poly_covering_number, NilGroup, PolyCoverOptions};
use crate::numeric::{e, fit_line};
use crate::systems::{CircleMetric, Observable, Point, SystemSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

pub const SCHEMA: &str = include_str!("../schema/columns.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    Sieve,
    Chowla,
    Davenport,
    ComplexityProfile,
    NilPolyCover,
    CodingTransfer,
    FourierRestricted,
    ConstructChain,
    Certificate,
}

impl Recipe {
    pub const ALL: [Recipe; 9] = [
        Recipe::Sieve,
        Recipe::Chowla,
        Recipe::Davenport,
        Recipe::ComplexityProfile,
        Recipe::NilPolyCover,
        Recipe::CodingTransfer,
        Recipe::FourierRestricted,
        Recipe::ConstructChain,
        Recipe::Certificate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Recipe::Sieve => "sieve",
            Recipe::Chowla => "chowla",
            Recipe::Davenport => "davenport",
            Recipe::ComplexityProfile => "complexity-profile",
            Recipe::NilPolyCover => "nil-poly-cover",
            Recipe::CodingTransfer => "coding-transfer",
            Recipe::FourierRestricted => "fourier-restricted",
            Recipe::ConstructChain => "construct-chain",
            Recipe::Certificate => "certificate",
        }
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown recipe `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Tsv,
}

impl Format {
    pub fn delimiter(self) -> u8 {
        match self {
            Format::Csv => b',',
            Format::Tsv => b'\t',
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Tsv => "tsv",
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// The configuration file, e.g.
///
/// ```toml
/// recipe = "chowla"
/// seed = 7
/// out = "runs/chowla"
///
/// [params]
/// h1 = 0
/// h2 = 1
/// n_grid = [1000, 10000]
/// ```
///
/// Command-line flags override the file; the file overrides built-in defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub recipe: Recipe,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; absent means all available cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub format: Format,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub params: toml::Table,
}

impl ExperimentConfig {
    pub fn new(recipe: Recipe) -> Self {
        ExperimentConfig {
            recipe,
            seed: 0,
            threads: None,
            format: Format::Csv,
            out: default_out(),
            params: toml::Table::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("config: {}", e.message())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    /// Sets `params.key` from a `key=value` string; the value is read as TOML and
    /// falls back to a plain string.
    pub fn set_param(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected key=value, got `{assignment}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Usage("empty parameter name".into()));
        }
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        self.params.insert(key.to_string(), value);
        Ok(())
    }
}

/// Parameter reader that remembers which keys were consumed.
struct Params<'a> {
    table: &'a toml::Table,
    used: RefCell<BTreeSet<String>>,
}

fn bad(key: &str, want: &str) -> Error {
    Error::Usage(format!("parameter `{key}`: expected {want}"))
}

impl<'a> Params<'a> {
    fn new(table: &'a toml::Table) -> Self {
        Params {
            table,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    fn raw(&self, key: &str) -> Option<&'a toml::Value> {
        self.used.borrow_mut().insert(key.to_string());
        self.table.get(key)
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => as_u64(v).ok_or_else(|| bad(key, "a non-negative integer")),
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => as_f64(v).ok_or_else(|| bad(key, "a number")),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| bad(key, "true or false")),
        }
    }

    fn string(&self, key: &str, default: &str) -> Result<String> {
        match self.raw(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| bad(key, "a string")),
        }
    }

    fn u64_list(&self, key: &str, default: &[u64]) -> Result<Vec<u64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .as_array()
                .and_then(|a| a.iter().map(as_u64).collect::<Option<Vec<_>>>())
                .ok_or_else(|| bad(key, "a list of non-negative integers")),
        }
    }

    fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .as_array()
                .and_then(|a| a.iter().map(as_f64).collect::<Option<Vec<_>>>())
                .ok_or_else(|| bad(key, "a list of numbers")),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    /// Rejects keys the recipe never read.
    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.table.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(Error::Usage(format!("unknown parameter `{k}`"))),
            None => Ok(()),
        }
    }
}

fn as_u64(v: &toml::Value) -> Option<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Some(*i as u64),
        // 1e6 style literals
        toml::Value::Float(f) if *f >= 0.0 && f.fract() == 0.0 && *f < 9.0e15 => Some(*f as u64),
        _ => None,
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Integer(i) => Some(*i as f64),
        toml::Value::Float(f) => Some(*f),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnType {
    Integer,
    Real,
    Bool,
    Text,
}

#[derive(Debug, Deserialize)]
struct SchemaColumn {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    #[allow(dead_code)]
    doc: String,
}

#[derive(Debug, Deserialize)]
struct SchemaFile {
    tables: BTreeMap<String, Vec<SchemaColumn>>,
}

/// Column layout of every emitted table.
pub struct Schema {
    tables: BTreeMap<String, Vec<(String, ColumnType)>>,
}

impl Schema {
    pub fn builtin() -> Result<Self> {
        Self::parse(SCHEMA)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: SchemaFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut tables = BTreeMap::new();
        for (name, cols) in file.tables {
            let mut out = Vec::with_capacity(cols.len());
            for c in cols {
                let kind = match c.kind.as_str() {
                    "integer" => ColumnType::Integer,
                    "real" => ColumnType::Real,
                    "bool" => ColumnType::Bool,
                    "text" => ColumnType::Text,
                    other => {
                        return Err(Error::Parse(format!("{name}.{}: unknown type {other}", c.name)))
                    }
                };
                out.push((c.name, kind));
            }
            tables.insert(name, out);
        }
        Ok(Schema { tables })
    }

    pub fn table_names(&self) -> Vec<&str> {
        self.tables.keys().map(String::as_str).collect()
    }

    pub fn columns(&self, table: &str) -> Option<Vec<&str>> {
        self.tables
            .get(table)
            .map(|c| c.iter().map(|(n, _)| n.as_str()).collect())
    }

    /// Checks header names and the type of every field; returns the row count.
    pub fn validate(&self, table: &str, data: &[u8], delimiter: u8) -> Result<usize> {
        let cols = self
            .tables
            .get(table)
            .ok_or_else(|| Error::invalid(format!("table `{table}` is not in the schema")))?;
        let mut rd = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .from_reader(data);
        let header = rd.headers()?.clone();
        let names: Vec<&str> = header.iter().collect();
        let want: Vec<&str> = cols.iter().map(|(n, _)| n.as_str()).collect();
        if names != want {
            return Err(Error::invalid(format!(
                "table `{table}`: header {names:?} does not match schema {want:?}"
            )));
        }
        let mut rows = 0;
        for rec in rd.records() {
            let rec = rec?;
            rows += 1;
            for ((name, kind), field) in cols.iter().zip(rec.iter()) {
                let ok = match kind {
                    ColumnType::Integer => field.parse::<i64>().is_ok(),
                    ColumnType::Real => field.parse::<f64>().is_ok(),
                    ColumnType::Bool => field == "true" || field == "false",
                    ColumnType::Text => true,
                };
                if !ok {
                    return Err(Error::invalid(format!(
                        "table `{table}` row {rows}: `{field}` is not a valid {kind:?} for column {name}"
                    )));
                }
            }
        }
        Ok(rows)
    }
}

/// A table produced by a recipe, already serialised.
pub struct TableOut {
    pub name: &'static str,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub recipe: Recipe,
    pub seed: u64,
    pub threads: usize,
    pub format: Format,
    pub params: serde_json::Value,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputEntry>,
    pub checks: Vec<Check>,
}

impl Manifest {
    pub fn checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

struct Writer {
    delimiter: u8,
}

impl Writer {
    fn table<I, R>(&self, name: &'static str, header: &[&str], rows: I) -> Result<TableOut>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::WriterBuilder::new()
            .delimiter(self.delimiter)
            .from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let data = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(TableOut { name, data })
    }
}

fn real(x: f64) -> String {
    format!("{x:e}")
}

struct Output {
    tables: Vec<TableOut>,
    checks: Vec<Check>,
}

fn parse_kind(s: &str) -> Result<AverageKind> {
    match s {
        "cesaro" => Ok(AverageKind::Cesaro),
        "logarithmic" | "log" => Ok(AverageKind::Logarithmic),
        _ => Err(Error::Usage(format!("unknown average kind `{s}`"))),
    }
}

fn parse_metric(s: &str) -> Result<CircleMetric> {
    match s {
        "arc" => Ok(CircleMetric::Arc),
        "chord" => Ok(CircleMetric::Chord),
        _ => Err(Error::Usage(format!("unknown circle metric `{s}`"))),
    }
}

fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

fn frequency_set(p: &Params) -> Result<FrequencySet> {
    if p.has("frequencies") {
        return FrequencySet::finite(p.f64_list("frequencies", &[])?);
    }
    if p.has("grid_step") {
        return FrequencySet::grid(p.f64("grid_step", 0.0)?);
    }
    let ratio = p.f64("cantor_ratio", 0.1)?;
    let level = p.u64("cantor_level", 6)?;
    FrequencySet::cantor(ratio, level as u32)
}

fn system(p: &Params) -> Result<SystemSpec> {
    let kind = p.string("system", "rotation")?;
    let metric = parse_metric(&p.string("metric", "arc")?)?;
    match kind.as_str() {
        "rotation" => Ok(SystemSpec::Rotation {
            alpha: crate::numeric::frac(p.f64("alpha", golden())?),
            metric,
        }),
        "skew" => Ok(SystemSpec::Skew {
            base: frequency_set(p)?,
            metric,
        }),
        "full-shift" => Ok(SystemSpec::full_shift()),
        other => Err(Error::Usage(format!("unknown system `{other}`"))),
    }
}

fn sieve(n: u64) -> Result<MobiusTable> {
    sieve_mobius(1, n.max(2))
}

fn run_sieve(p: &Params, w: &Writer) -> Result<Output> {
    let n = p.u64("N", 1_000_000)?;
    let table = p.bool("table", true)?;
    p.finish()?;
    let mob = sieve(n)?;
    let mut tables = Vec::new();
    if table {
        tables.push(w.table(
            "mobius",
            &["n", "mu"],
            (1..=n).map(|k| [k.to_string(), mob.mu(k).to_string()]),
        )?);
    }
    let squarefree = (1..=n).filter(|&k| mob.mu(k) != 0).count();
    tables.push(w.table(
        "sieve_summary",
        &["N", "mertens", "squarefree"],
        [[n.to_string(), mertens(n, 1 << 16)?.to_string(), squarefree.to_string()]],
    )?);
    Ok(Output {
        tables,
        checks: Vec::new(),
    })
}

fn run_chowla(p: &Params, w: &Writer) -> Result<Output> {
    let h1 = p.u64("h1", 0)?;
    let h2 = p.u64("h2", 1)?;
    let grid = p.u64_list("n_grid", &[1_000, 10_000, 100_000, 1_000_000])?;
    p.finish()?;
    let top = grid.iter().copied().max().unwrap_or(1);
    let mob = sieve(top + h1.max(h2))?;
    let mut rows = Vec::new();
    for &n in &grid {
        let c = chowla_log_sum(&mob, h1, h2, n)?;
        rows.push([
            h1.to_string(),
            h2.to_string(),
            n.to_string(),
            real(c.raw),
            real(c.ln_normalized),
            real(c.harmonic_normalized),
        ]);
    }
    Ok(Output {
        tables: vec![w.table(
            "chowla",
            &["h1", "h2", "N", "raw", "ln_normalized", "harmonic_normalized"],
            rows,
        )?],
        checks: Vec::new(),
    })
}

fn run_davenport(p: &Params, w: &Writer) -> Result<Output> {
    let alpha = p.f64("alpha", 2f64.sqrt() - 1.0)?;
    let grid = p.u64_list("n_grid", &[10_000, 100_000, 1_000_000])?;
    let kinds = match p.raw("kinds") {
        None => vec![AverageKind::Cesaro, AverageKind::Logarithmic],
        Some(v) => v
            .as_array()
            .ok_or_else(|| bad("kinds", "a list of strings"))?
            .iter()
            .map(|k| parse_kind(k.as_str().unwrap_or("")))
            .collect::<Result<Vec<_>>>()?,
    };
    p.finish()?;
    let mob = sieve(grid.iter().copied().max().unwrap_or(1))?;
    let mut rows = Vec::new();
    for &kind in &kinds {
        for &n in &grid {
            let v = weighted_average(|k| f64::from(mob.mu(k)) * e(k as f64 * alpha), n, kind)?;
            rows.push([
                real(alpha),
                n.to_string(),
                kind.as_str().to_string(),
                real(v.re),
                real(v.im),
                real(v.norm()),
            ]);
        }
    }
    Ok(Output {
        tables: vec![w.table("davenport", &["alpha", "N", "kind", "re", "im", "abs"], rows)?],
        checks: Vec::new(),
    })
}

fn run_profile(p: &Params, w: &Writer, seed: u64) -> Result<Output> {
    let sys = system(p)?;
    let eps = p.f64("epsilon", 0.1)?;
    let grid: Vec<usize> = p
        .u64_list("n_grid", &[16, 64, 256, 1024])?
        .into_iter()
        .map(|n| n as usize)
        .collect();
    let mode = match p.string("mode", "topological")?.as_str() {
        "topological" => CoverMode::Topological,
        "measure" => CoverMode::Measure,
        other => return Err(Error::Usage(format!("unknown mode `{other}`"))),
    };
    let sampler = SamplerConfig {
        sample_size: p.u64("sample_size", 512)? as usize,
        seed,
        truncation_radius: p.u64("truncation_radius", 24)? as i64,
    };
    p.finish()?;
    let prof = complexity_profile(&sys, &sampler, eps, &grid, mode)?;
    let mode_str = match mode {
        CoverMode::Topological => "topological",
        CoverMode::Measure => "measure",
    };
    let rows = prof
        .grid
        .iter()
        .zip(&prof.counts)
        .zip(&prof.tail_bounds)
        .map(|((n, c), t)| [real(eps), n.to_string(), c.to_string(), real(*t), mode_str.to_string()]);
    let tables = vec![
        w.table("profile", &["epsilon", "n", "count", "tail_bound", "mode"], rows)?,
        w.table(
            "profile_fit",
            &["epsilon", "mode", "fitted_exponent", "fit_r2", "semilog_r2", "classification"],
            [[
                real(eps),
                mode_str.to_string(),
                real(prof.fitted_exponent),
                real(prof.fit_r2),
                real(prof.semilog_r2),
                prof.classification
                    .map_or("unclassified", |c| c.as_str())
                    .to_string(),
            ]],
        )?,
    ];
    Ok(Output {
        tables,
        checks: Vec::new(),
    })
}

fn run_poly_cover(p: &Params, w: &Writer, seed: u64) -> Result<Output> {
    let eps = p.f64("epsilon", 0.25)?;
    let grid = p.u64_list("n_grid", &[8, 16, 32, 64])?;
    let samples = p.u64("samples", 2000)? as usize;
    let options = PolyCoverOptions {
        lattice_radius: p.u64("lattice_radius", 3)? as i64,
        chain_depth: p.u64("chain_depth", 1)? as usize,
    };
    p.finish()?;
    let group = NilGroup::heisenberg();
    let mut rows = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in &grid {
        let r = poly_covering_number(&group, n as usize, eps, samples, seed, options)?;
        xs.push((n as f64).ln());
        ys.push((r.cardinality.max(1) as f64).ln());
        rows.push([
            real(eps),
            n.to_string(),
            r.cardinality.to_string(),
            r.sample_size.to_string(),
            r.direction.as_str().to_string(),
        ]);
    }
    let (slope, r2) = fit_line(&xs, &ys).map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r2));
    Ok(Output {
        tables: vec![
            w.table("poly_cover", &["epsilon", "n", "cardinality", "sample_size", "direction"], rows)?,
            w.table("poly_cover_fit", &["epsilon", "slope", "r2"], [[real(eps), real(slope), real(r2)]])?,
        ],
        checks: Vec::new(),
    })
}

fn run_transfer(p: &Params, w: &Writer, seed: u64) -> Result<Output> {
    let alpha = p.f64("alpha", golden())?;
    let arc = p.f64_list("arc", &[0.0, 0.5])?;
    if arc.len() != 2 {
        return Err(bad("arc", "two endpoints"));
    }
    let delta = p.f64("delta", 0.1)?;
    let n = p.u64("N", 256)? as usize;
    let sample_size = p.u64("sample_size", 256)? as usize;
    let pairs = p.u64("stability_pairs", 0)? as usize;
    let stability_n = p.u64("stability_N", 10_000)? as usize;
    let stability_delta = p.f64("stability_delta", 0.05)?;
    p.finish()?;
    let sys = SystemSpec::rotation(alpha);
    let set = CodableSet::arc(arc[0], arc[1]);
    let t = complexity_transfer_check(&sys, &set, delta, n, sample_size, seed)?;
    let mut checks = vec![Check {
        name: "transfer".into(),
        pass: t.holds,
        detail: format!("coded {} <= original {}", t.coded.cardinality, t.original.cardinality),
    }];
    let mut tables = vec![w.table(
        "transfer",
        &["delta", "N", "L", "delta_prime", "epsilon", "coded_count", "original_count", "holds"],
        [[
            real(t.delta),
            t.n.to_string(),
            t.l.to_string(),
            real(t.delta_prime),
            real(t.epsilon),
            t.coded.cardinality.to_string(),
            t.original.cardinality.to_string(),
            t.holds.to_string(),
        ]],
    )?];
    if pairs > 0 {
        let s = verify_coding_stability(&sys, &set, stability_delta, stability_n, pairs, seed)?;
        checks.push(Check {
            name: "stability".into(),
            pass: s.pass,
            detail: format!("max density {} against {}", s.max_density, 2.0 * s.delta),
        });
        tables.push(w.table(
            "stability",
            &["delta", "N", "eps0", "epsilon", "collar_frequency", "pairs", "max_density", "pass"],
            [[
                real(s.delta),
                s.n.to_string(),
                real(s.eps0),
                real(s.epsilon),
                real(s.collar_frequency),
                s.pairs_tested.to_string(),
                real(s.max_density),
                s.pass.to_string(),
            ]],
        )?);
    }
    Ok(Output { tables, checks })
}

fn run_restricted(p: &Params, w: &Writer) -> Result<Output> {
    let c = frequency_set(p)?;
    let n = p.u64("N", 100_000)?;
    let h_grid = p.u64_list("h_grid", &[5, 50])?;
    let eta = if p.has("eta") { Some(p.f64("eta", 0.0)?) } else { None };
    let kinds = match p.raw("kinds") {
        None => vec![AverageKind::Logarithmic, AverageKind::Cesaro],
        Some(v) => v
            .as_array()
            .ok_or_else(|| bad("kinds", "a list of strings"))?
            .iter()
            .map(|k| parse_kind(k.as_str().unwrap_or("")))
            .collect::<Result<Vec<_>>>()?,
    };
    p.finish()?;
    let hmax = h_grid.iter().copied().max().unwrap_or(1);
    let mob = sieve(n + hmax)?;
    let mut rows = Vec::new();
    for &kind in &kinds {
        for &h in &h_grid {
            rows.push(restricted_uniformity_average(&mob, n, h, &c, kind, eta)?);
        }
    }
    let mut data = Vec::new();
    write_trend_csv(&mut data, &rows, w.delimiter)?;
    Ok(Output {
        tables: vec![TableOut {
            name: "restricted",
            data,
        }],
        checks: Vec::new(),
    })
}

fn run_chain(p: &Params, w: &Writer) -> Result<Output> {
    let tau = p.f64("tau", 0.5)?;
    let scales = match p.raw("scales") {
        None => vec![
            Scale { h: 4, n: 2_000 },
            Scale { h: 8, n: 20_000 },
            Scale { h: 16, n: 200_000 },
        ],
        Some(v) => v
            .as_array()
            .and_then(|a| {
                a.iter()
                    .map(|s| {
                        let pair = s.as_array()?;
                        match pair.as_slice() {
                            [h, n] => Some(Scale {
                                h: as_u64(h)?,
                                n: as_u64(n)?,
                            }),
                            _ => None,
                        }
                    })
                    .collect::<Option<Vec<_>>>()
            })
            .ok_or_else(|| bad("scales", "a list of [H, N] pairs"))?,
    };
    let variant = match p.string("variant", "fourier")?.as_str() {
        "fourier" => Variant::Fourier,
        "nil" => Variant::Nil,
        other => return Err(Error::Usage(format!("unknown variant `{other}`"))),
    };
    let signal_kind = p.string("signal", "correlated")?;
    let alpha = p.f64("alpha", 0.0)?;
    p.finish()?;
    let spec = match variant {
        Variant::Fourier => BlockSpec::new(tau, scales)?,
        Variant::Nil => heisenberg_spec(tau, scales)?,
    };
    let last = *spec.scales.last().expect("validated");
    let len = (last.n + last.h) as usize;
    let signal: Vec<Complex64> = match signal_kind.as_str() {
        // conj(e(h alpha)) at every position relative to a start n is only
        // consistent for alpha = 0; other alphas correlate on average
        "correlated" => (1..=len as u64).map(|k| e(-(k as f64) * alpha)).collect(),
        "zero" => constant_signal(len, 0.0),
        "mobius" => {
            let mob = sieve(len as u64)?;
            (1..=len as u64)
                .map(|k| Complex64::new(f64::from(mob.mu(k)), 0.0))
                .collect()
        }
        other => return Err(Error::Usage(format!("unknown signal `{other}`"))),
    };
    let report = verify_lower_bound_chain(&spec, &signal, variant, &FrequencyRule::Fixed(alpha))?;
    let mut data = Vec::new();
    report.write_csv(&mut data, w.delimiter)?;
    let checks = vec![
        Check {
            name: "chain".into(),
            pass: report.chain_pass,
            detail: report
                .first_failure
                .clone()
                .unwrap_or_else(|| "every link holds".into()),
        },
        Check {
            name: "scale-separation".into(),
            pass: report.preconditions_pass,
            detail: "H_i < s N_i^s < (s/10) H_{i+1}^s".into(),
        },
    ];
    Ok(Output {
        tables: vec![TableOut { name: "chain", data }],
        checks,
    })
}

fn run_certificate(p: &Params, w: &Writer) -> Result<Output> {
    let alpha = p.f64("alpha", golden())?;
    let metric = parse_metric(&p.string("metric", "chord")?)?;
    let eps = p.f64("epsilon", 0.1)?;
    let n_list = p.u64_list("n_list", &[10_000, 100_000, 1_000_000])?;
    let x0 = p.f64("x0", 0.0)?;
    let options = CertificateOptions {
        measure_points: p.u64("measure_points", 1024)? as usize,
        max_length: p.u64("max_length", 1 << 14)? as usize,
    };
    p.finish()?;
    let sys = SystemSpec::Rotation {
        alpha: crate::numeric::frac(alpha),
        metric,
    };
    let top = n_list.iter().copied().max().unwrap_or(1);
    let mob = sieve(top + options.max_length as u64 + 1)?;
    let cert = disjointness_certificate(&sys, &mob, &Point::Circle(x0), &Observable::Exp, eps, &n_list, options)?;
    let rows = cert.rows.iter().map(|r| {
        [
            r.n.to_string(),
            real(r.direct),
            real(r.replacement),
            real(r.blocked),
            real(r.visit_mass),
            r.direct_ok.to_string(),
            r.replacement_ok.to_string(),
            r.blocked_ok.to_string(),
        ]
    });
    let tables = vec![
        w.table(
            "certificate",
            &["N", "direct", "replacement", "blocked", "visit_mass", "direct_ok", "replacement_ok", "blocked_ok"],
            rows,
        )?,
        w.table(
            "certificate_search",
            &["L", "centers"],
            cert.search.iter().map(|(l, c)| [l.to_string(), c.to_string()]),
        )?,
    ];
    Ok(Output {
        tables,
        checks: vec![Check {
            name: "certificate".into(),
            pass: cert.all_hold(),
            detail: format!("L = {}, {} centers", cert.length, cert.centers),
        }],
    })
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Output> {
    let p = Params::new(&cfg.params);
    let w = Writer {
        delimiter: cfg.format.delimiter(),
    };
    match cfg.recipe {
        Recipe::Sieve => run_sieve(&p, &w),
        Recipe::Chowla => run_chowla(&p, &w),
        Recipe::Davenport => run_davenport(&p, &w),
        Recipe::ComplexityProfile => run_profile(&p, &w, cfg.seed),
        Recipe::NilPolyCover => run_poly_cover(&p, &w, cfg.seed),
        Recipe::CodingTransfer => run_transfer(&p, &w, cfg.seed),
        Recipe::FourierRestricted => run_restricted(&p, &w),
        Recipe::ConstructChain => run_chain(&p, &w),
        Recipe::Certificate => run_certificate(&p, &w),
    }
}

fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::invalid("output path has no file name"))?;
    let tmp = path.with_file_name(format!(".{name}.partial"));
    fs::write(&tmp, data)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the recipe, validates and writes every table, then writes `manifest.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<Manifest> {
    let schema = Schema::builtin()?;
    let threads = cfg
        .threads
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let output = pool.install(|| dispatch(cfg))?;
    let wall = start.elapsed().as_secs_f64();

    fs::create_dir_all(&cfg.out)?;
    let mut outputs = Vec::new();
    for t in &output.tables {
        let rows = schema.validate(t.name, &t.data, cfg.format.delimiter())?;
        let file = format!("{}.{}", t.name, cfg.format.extension());
        write_atomic(&cfg.out.join(&file), &t.data)?;
        outputs.push(OutputEntry {
            file,
            rows,
            sha256: sha256_hex(&t.data),
        });
    }
    let manifest = Manifest {
        tool: "mobius-lab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        recipe: cfg.recipe,
        seed: cfg.seed,
        threads,
        format: cfg.format,
        params: serde_json::to_value(&cfg.params).map_err(|e| Error::Parse(e.to_string()))?,
        wall_time_seconds: wall,
        outputs,
        checks: output.checks,
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    write_atomic(&cfg.out.join("manifest.json"), &json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_parses_and_lists_tables() {
        let s = Schema::builtin().unwrap();
        for t in ["mobius", "chowla", "chain", "restricted", "certificate"] {
            assert!(s.columns(t).is_some(), "{t}");
        }
    }

    #[test]
    fn schema_rejects_bad_fields() {
        let s = Schema::builtin().unwrap();
        assert_eq!(s.validate("mobius", b"n,mu\n1,1\n2,-1\n", b',').unwrap(), 2);
        assert!(s.validate("mobius", b"n,mu\n1,x\n", b',').is_err());
        assert!(s.validate("mobius", b"n,m\n1,1\n", b',').is_err());
        assert!(s.validate("nope", b"a\n", b',').is_err());
    }

    #[test]
    fn set_param_reads_toml_values() {
        let mut c = ExperimentConfig::new(Recipe::Chowla);
        c.set_param("n_grid=[10, 20]").unwrap();
        c.set_param("system=rotation").unwrap();
        c.set_param("alpha=0.25").unwrap();
        assert_eq!(c.params["n_grid"].as_array().unwrap().len(), 2);
        assert_eq!(c.params["system"].as_str(), Some("rotation"));
        assert_eq!(c.params["alpha"].as_float(), Some(0.25));
        assert!(c.set_param("novalue").is_err());
    }

    #[test]
    fn unknown_parameter_is_named() {
        let mut c = ExperimentConfig::new(Recipe::Chowla);
        c.set_param("bogus=1").unwrap();
        match dispatch(&c) {
            Err(Error::Usage(msg)) => assert!(msg.contains("bogus"), "{msg}"),
            other => panic!("{:?}", other.map(|_| ())),
        }
    }
}
