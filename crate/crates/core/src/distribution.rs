//! The column law μ on F_2^m.
//!
//! Symbols are integers in `0 .. 2^m`; bit `i` of a symbol is row `i` of the
//! column (row 0 is the least significant bit). The same encoding is used by
//! the oracle, the construction and the finite-field mapping.

use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{sha256, ByteWriter, Fingerprint};
use crate::matrix::{check_block_length, BitMatrix};
use crate::numeric::{entropy_bits, CompensatedSum};

/// Largest number of rows a distribution may have (the pmf has `2^m` entries).
pub const MAX_ROWS: usize = 24;

/// Tolerance on the pmf sum before renormalization.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SourceDistribution {
    m: usize,
    pmf: Vec<f64>,
    fingerprint: Fingerprint,
}

#[derive(Serialize, Deserialize)]
struct DistributionFile {
    m: usize,
    pmf: Vec<f64>,
}

impl SourceDistribution {
    /// Validates and renormalizes a pmf indexed by symbol.
    ///
    /// `m = 0` is allowed and denotes the single-atom law on the empty product.
    pub fn new(m: usize, pmf: Vec<f64>) -> Result<Self> {
        if m > MAX_ROWS {
            return Err(Error::InvalidDistribution(format!(
                "m = {m} exceeds the supported maximum {MAX_ROWS}"
            )));
        }
        if pmf.len() != 1 << m {
            return Err(Error::InvalidDistribution(format!(
                "pmf has {} entries, expected 2^{m} = {}",
                pmf.len(),
                1usize << m
            )));
        }
        if let Some((s, p)) = pmf.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "probability of symbol {s} is {p}"
            )));
        }
        let total = pmf.iter().copied().collect::<CompensatedSum>().value();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        let pmf: Vec<f64> = pmf.into_iter().map(|p| p / total).collect();
        let fingerprint = Self::hash(m, &pmf);
        Ok(Self { m, pmf, fingerprint })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!("Bernoulli parameter {p}")));
        }
        Self::new(1, vec![1.0 - p, p])
    }

    pub fn uniform(m: usize) -> Result<Self> {
        let q = 1usize
            .checked_shl(m as u32)
            .filter(|_| m <= MAX_ROWS)
            .ok_or_else(|| Error::InvalidDistribution(format!("m = {m}")))?;
        Self::new(m, vec![1.0 / q as f64; q])
    }

    pub fn point_mass(m: usize, symbol: u32) -> Result<Self> {
        if m > MAX_ROWS || symbol as usize >= 1 << m {
            return Err(Error::InvalidDistribution(format!(
                "symbol {symbol} outside F_2^{m}"
            )));
        }
        let mut pmf = vec![0.0; 1 << m];
        pmf[symbol as usize] = 1.0;
        Self::new(m, pmf)
    }

    /// Independent product: `self` occupies the low rows, `high` the rows above.
    pub fn product(&self, high: &SourceDistribution) -> Result<Self> {
        let m = self.m + high.m;
        let mut pmf = vec![0.0; 1 << m];
        for (h, &ph) in high.pmf.iter().enumerate() {
            for (l, &pl) in self.pmf.iter().enumerate() {
                pmf[h << self.m | l] = ph * pl;
            }
        }
        Self::new(m, pmf)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn symbol_count(&self) -> usize {
        self.pmf.len()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, symbol: u32) -> f64 {
        self.pmf.get(symbol as usize).copied().unwrap_or(0.0)
    }

    /// SHA-256 over the canonical serialization: `m` as u16 LE followed by the
    /// normalized pmf as f64 LE.
    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    fn hash(m: usize, pmf: &[f64]) -> Fingerprint {
        let mut w = ByteWriter::new();
        w.u16(m as u16);
        for &p in pmf {
            w.f64(p);
        }
        sha256(&w.finish())
    }

    /// `H(μ)` in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.pmf)
    }

    /// Exact marginal on the rows listed in `rows`; output bit `k` is row `rows[k]`.
    pub fn marginal(&self, rows: &[usize]) -> Result<Self> {
        let mut seen = 0u64;
        for &r in rows {
            if r >= self.m || seen >> r & 1 == 1 {
                return Err(Error::InvalidParameter(format!(
                    "row subset {rows:?} is not a subset of 0..{}",
                    self.m
                )));
            }
            seen |= 1 << r;
        }
        let mut out = vec![0.0; 1 << rows.len()];
        for (s, &p) in self.pmf.iter().enumerate() {
            let proj = rows
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &r)| acc | (s >> r & 1) << k);
            out[proj] += p;
        }
        Self::new(rows.len(), out)
    }

    /// `H(row i | rows 0..i)` for every row, from the exact pmf.
    pub fn row_conditional_entropies(&self) -> Vec<f64> {
        let mut prefix = Vec::with_capacity(self.m + 1);
        prefix.push(0.0);
        for i in 1..=self.m {
            let rows: Vec<usize> = (0..i).collect();
            prefix.push(self.marginal(&rows).expect("valid rows").entropy());
        }
        prefix.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn sampler(&self) -> ColumnSampler {
        ColumnSampler {
            index: WeightedIndex::new(&self.pmf).expect("pmf validated"),
        }
    }

    /// Draws an `m × n` matrix with i.i.d. columns; deterministic in `seed`.
    pub fn sample_columns(&self, n: usize, seed: u64) -> Result<BitMatrix> {
        check_block_length(n)?;
        if self.m == 0 {
            return Err(Error::InvalidDimension("cannot sample a matrix with zero rows".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols = vec![0u32; n];
        self.sampler().fill(&mut rng, &mut cols);
        BitMatrix::from_columns(self.m, &cols)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DistributionFile = serde_json::from_str(text)?;
        Self::new(file.m, file.pmf)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DistributionFile {
            m: self.m,
            pmf: self.pmf.clone(),
        })
        .expect("plain data")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Draws column symbols from μ.
#[derive(Debug, Clone)]
pub struct ColumnSampler {
    index: WeightedIndex<f64>,
}

impl ColumnSampler {
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.index.sample(rng) as u32
    }

    pub fn fill<R: rand::Rng + ?Sized>(&self, rng: &mut R, out: &mut [u32]) {
        for s in out {
            *s = self.sample(rng);
        }
    }
}
