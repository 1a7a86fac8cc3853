//! Möbius sieve and the Cesàro / logarithmic averaging operators.

use crate::error::{Error, Result};
use crate::numeric::{harmonic, ComplexSum, NeumaierSum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Default number of entries sieved per segment.
pub const DEFAULT_BLOCK: usize = 1 << 20;

/// Largest accepted upper end of a sieve range.
pub const MAX_HI: u64 = 1 << 62;

/// Values of the Möbius function on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobiusTable {
    lo: u64,
    hi: u64,
    values: Vec<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageKind {
    Cesaro,
    Logarithmic,
}

impl AverageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AverageKind::Cesaro => "cesaro",
            AverageKind::Logarithmic => "logarithmic",
        }
    }
}

impl std::str::FromStr for AverageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cesaro" => Ok(AverageKind::Cesaro),
            "log" | "logarithmic" => Ok(AverageKind::Logarithmic),
            other => Err(Error::invalid(format!("unknown average kind `{other}`"))),
        }
    }
}

impl MobiusTable {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn covers(&self, lo: u64, hi: u64) -> bool {
        self.lo <= lo && hi <= self.hi
    }

    pub fn require(&self, lo: u64, hi: u64) -> Result<()> {
        if self.covers(lo, hi) {
            Ok(())
        } else {
            Err(Error::TableRange {
                lo: self.lo,
                hi: self.hi,
                need_lo: lo,
                need_hi: hi,
            })
        }
    }

    /// `mu(n)`; panics when `n` lies outside the table.
    #[inline]
    pub fn mu(&self, n: u64) -> i8 {
        self.values[(n - self.lo) as usize]
    }

    pub fn get(&self, n: u64) -> Option<i8> {
        if n < self.lo || n > self.hi {
            None
        } else {
            Some(self.values[(n - self.lo) as usize])
        }
    }

    /// Slice of values for `[a, b]`, both inside the table.
    pub fn slice(&self, a: u64, b: u64) -> &[i8] {
        &self.values[(a - self.lo) as usize..=(b - self.lo) as usize]
    }

    /// Signed-byte export with an 8-byte header: `lo` and `hi` as little-endian `u32`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let lo = u32::try_from(self.lo)
            .map_err(|_| Error::Overflow(format!("lo = {} does not fit the u32 header", self.lo)))?;
        let hi = u32::try_from(self.hi)
            .map_err(|_| Error::Overflow(format!("hi = {} does not fit the u32 header", self.hi)))?;
        w.write_all(&lo.to_le_bytes())?;
        w.write_all(&hi.to_le_bytes())?;
        let bytes: Vec<u8> = self.values.iter().map(|&v| v as u8).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)?;
        let lo = u32::from_le_bytes(header[0..4].try_into().unwrap()) as u64;
        let hi = u32::from_le_bytes(header[4..8].try_into().unwrap()) as u64;
        if lo == 0 || lo > hi {
            return Err(Error::Parse(format!("bad table header lo={lo} hi={hi}")));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() as u64 != hi - lo + 1 {
            return Err(Error::Parse(format!(
                "payload has {} entries, header announces {}",
                bytes.len(),
                hi - lo + 1
            )));
        }
        let values: Vec<i8> = bytes.into_iter().map(|b| b as i8).collect();
        if values.iter().any(|v| !(-1..=1).contains(v)) {
            return Err(Error::Parse("payload value outside {-1, 0, 1}".into()));
        }
        Ok(Self { lo, hi, values })
    }

    /// CSV export with header `n,mu`.
    pub fn write_csv<W: Write>(&self, w: W, delimiter: u8) -> Result<()> {
        let mut out = csv::WriterBuilder::new().delimiter(delimiter).from_writer(w);
        out.write_record(["n", "mu"])?;
        for (i, v) in self.values.iter().enumerate() {
            out.write_record([(self.lo + i as u64).to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn check_range(lo: u64, hi: u64) -> Result<()> {
    if lo == 0 {
        return Err(Error::invalid("sieve range must start at 1 or above"));
    }
    if lo > hi {
        return Err(Error::invalid(format!("empty sieve range [{lo}, {hi}]")));
    }
    if hi > MAX_HI {
        return Err(Error::Overflow(format!("hi = {hi} exceeds {MAX_HI}")));
    }
    Ok(())
}

/// Streams `mu` over `[lo, hi]` segment by segment; memory is `O(block + sqrt(hi))`.
///
/// The callback receives the first integer of the segment and its values.
pub fn sieve_segments<F>(lo: u64, hi: u64, block: usize, mut visit: F) -> Result<()>
where
    F: FnMut(u64, &[i8]),
{
    check_range(lo, hi)?;
    if block == 0 {
        return Err(Error::invalid("block size must be positive"));
    }
    let primes = small_primes(isqrt(hi));
    let mut mu = vec![0i8; block];
    let mut prod = vec![0u64; block];
    let mut start = lo;
    loop {
        let end = hi.min(start.saturating_add(block as u64 - 1));
        let len = (end - start + 1) as usize;
        mu[..len].fill(1);
        prod[..len].fill(1);
        for &p in &primes {
            if p * p > end {
                break;
            }
            let first = start.div_ceil(p) * p;
            let mut m = first;
            while m <= end {
                let i = (m - start) as usize;
                mu[i] = -mu[i];
                prod[i] *= p;
                m += p;
            }
            let sq = p * p;
            let mut m = start.div_ceil(sq) * sq;
            while m <= end {
                mu[(m - start) as usize] = 0;
                m += sq;
            }
        }
        for i in 0..len {
            // One prime factor above sqrt(hi) remains when the small ones do not exhaust n.
            if mu[i] != 0 && prod[i] != start + i as u64 {
                mu[i] = -mu[i];
            }
        }
        visit(start, &mu[..len]);
        if end == hi {
            break;
        }
        start = end + 1;
    }
    Ok(())
}

pub fn sieve_mobius(lo: u64, hi: u64) -> Result<MobiusTable> {
    sieve_mobius_with_block(lo, hi, DEFAULT_BLOCK)
}

pub fn sieve_mobius_with_block(lo: u64, hi: u64, block: usize) -> Result<MobiusTable> {
    check_range(lo, hi)?;
    let len = usize::try_from(hi - lo + 1)
        .map_err(|_| Error::Overflow("table does not fit in memory".into()))?;
    let mut values = Vec::with_capacity(len);
    sieve_segments(lo, hi, block, |_, seg| values.extend_from_slice(seg))?;
    Ok(MobiusTable { lo, hi, values })
}

/// Mertens function `M(x) = sum_{n <= x} mu(n)` streamed through the segmented sieve.
pub fn mertens(x: u64, block: usize) -> Result<i64> {
    let mut total = 0i64;
    sieve_segments(1, x, block, |_, seg| {
        total += seg.iter().map(|&v| v as i64).sum::<i64>();
    })?;
    Ok(total)
}

/// Normaliser of an average over `n <= N`.
pub fn normaliser(n: u64, kind: AverageKind) -> f64 {
    match kind {
        AverageKind::Cesaro => n as f64,
        AverageKind::Logarithmic => harmonic(n),
    }
}

/// `(1/N) sum a_n` or `(1/M_N) sum a_n / n` over `1 <= n <= N`, ascending order.
pub fn weighted_average<F>(seq: F, n: u64, kind: AverageKind) -> Result<Complex64>
where
    F: Fn(u64) -> Complex64,
{
    if n == 0 {
        return Err(Error::invalid("average over an empty range"));
    }
    let mut acc = ComplexSum::new();
    match kind {
        AverageKind::Cesaro => {
            for k in 1..=n {
                acc.add(seq(k));
            }
        }
        AverageKind::Logarithmic => {
            for k in 1..=n {
                acc.add(seq(k) / k as f64);
            }
        }
    }
    Ok(acc.value() / normaliser(n, kind))
}

/// Average of a slice holding `a_1, ..., a_N` (so `values[0] = a_1`).
pub fn weighted_average_slice(values: &[Complex64], kind: AverageKind) -> Result<Complex64> {
    weighted_average(|k| values[(k - 1) as usize], values.len() as u64, kind)
}

/// Real-valued variant of [`weighted_average`].
pub fn weighted_average_real<F>(seq: F, n: u64, kind: AverageKind) -> Result<f64>
where
    F: Fn(u64) -> f64,
{
    if n == 0 {
        return Err(Error::invalid("average over an empty range"));
    }
    let mut acc = NeumaierSum::new();
    for k in 1..=n {
        let w = match kind {
            AverageKind::Cesaro => 1.0,
            AverageKind::Logarithmic => 1.0 / k as f64,
        };
        acc.add(seq(k) * w);
    }
    Ok(acc.value() / normaliser(n, kind))
}

/// Two-term logarithmic correlation `sum_{n <= N} mu(n + h1) mu(n + h2) / n`,
/// reported with both normalisations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChowlaSum {
    pub h1: u64,
    pub h2: u64,
    pub n: u64,
    pub raw: f64,
    /// `raw / ln N` (undefined at `N = 1`, reported as `raw`).
    pub ln_normalized: f64,
    /// `raw / M_N`.
    pub harmonic_normalized: f64,
}

pub fn chowla_log_sum(table: &MobiusTable, h1: u64, h2: u64, n: u64) -> Result<ChowlaSum> {
    if h1 >= h2 {
        return Err(Error::invalid(format!("need h1 < h2, got h1 = {h1}, h2 = {h2}")));
    }
    if n == 0 {
        return Err(Error::invalid("N must be positive"));
    }
    table.require(1 + h1, n + h2)?;
    let mut acc = NeumaierSum::new();
    for k in 1..=n {
        let p = table.mu(k + h1) as i32 * table.mu(k + h2) as i32;
        if p != 0 {
            acc.add(p as f64 / k as f64);
        }
    }
    let raw = acc.value();
    let ln = (n as f64).ln();
    Ok(ChowlaSum {
        h1,
        h2,
        n,
        raw,
        ln_normalized: if ln > 0.0 { raw / ln } else { raw },
        harmonic_normalized: raw / harmonic(n),
    })
}
