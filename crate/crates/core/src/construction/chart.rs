//! The polar chart: which positions of `Y` are predicted and which are stored.

use bitvec::prelude::*;

use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::format::{narrow, sha256, ByteReader, ByteWriter, Fingerprint};
use crate::matrix::check_block_length;
use crate::numeric::CompensatedSum;

pub const CHART_MAGIC: &[u8; 4] = b"PMXC";
pub const CHART_VERSION: u8 = 1;

/// Per-position classification plus the statistics it was derived from.
///
/// Positions are indexed column-major: `(i, j)` lives at `j · m + i`, which
/// is also the order in which the decoder visits them. Estimates are kept in
/// single precision, exactly as persisted, and the classification is
/// `Deterministic ⇔ z_est ≤ ε_z` on those stored values.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarChart {
    m: usize,
    n: usize,
    mu_fingerprint: Fingerprint,
    epsilon_z: f64,
    mc_samples: u64,
    seed: u64,
    workers: u16,
    deterministic: BitVec<u64, Lsb0>,
    z_est: Vec<f32>,
    h_est: Vec<f32>,
}

impl PolarChart {
    /// Classifies column-major estimates against `epsilon_z`.
    /// `mc_samples = 0` marks a chart computed exactly.
    #[allow(clippy::too_many_arguments)]
    pub fn from_estimates(
        mu: &SourceDistribution,
        n: usize,
        epsilon_z: f64,
        mc_samples: u64,
        seed: u64,
        workers: u16,
        z: &[f64],
        h: &[f64],
    ) -> Result<Self> {
        check_block_length(n)?;
        let m = mu.m();
        if m == 0 || z.len() != m * n || h.len() != m * n {
            return Err(Error::InvalidDimension(format!(
                "{} / {} estimates for a {m}×{n} chart",
                z.len(),
                h.len()
            )));
        }
        if epsilon_z.is_nan() || epsilon_z < 0.0 {
            return Err(Error::InvalidParameter(format!("threshold {epsilon_z}")));
        }
        let z_est: Vec<f32> = z.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect();
        let h_est: Vec<f32> = h.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect();
        let deterministic = z_est.iter().map(|&v| f64::from(v) <= epsilon_z).collect();
        Ok(Self {
            m,
            n,
            mu_fingerprint: *mu.fingerprint(),
            epsilon_z,
            mc_samples,
            seed,
            workers,
            deterministic,
            z_est,
            h_est,
        })
    }

    /// A chart that stores every position.
    pub fn all_stored(mu: &SourceDistribution, n: usize) -> Result<Self> {
        let ones = vec![1.0; mu.m() * n];
        Self::from_estimates(mu, n, 0.0, 0, 0, 0, &ones, &ones)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu_fingerprint(&self) -> &Fingerprint {
        &self.mu_fingerprint
    }

    pub fn epsilon_z(&self) -> f64 {
        self.epsilon_z
    }

    pub fn mc_samples(&self) -> u64 {
        self.mc_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn workers(&self) -> u16 {
        self.workers
    }

    #[inline]
    pub fn is_deterministic(&self, i: usize, j: usize) -> bool {
        self.deterministic[j * self.m + i]
    }

    #[inline]
    pub fn is_stored(&self, i: usize, j: usize) -> bool {
        !self.is_deterministic(i, j)
    }

    pub fn z_est(&self, i: usize, j: usize) -> f64 {
        f64::from(self.z_est[j * self.m + i])
    }

    pub fn h_est(&self, i: usize, j: usize) -> f64 {
        f64::from(self.h_est[j * self.m + i])
    }

    /// Column-major classification bitmap, 1 = Deterministic.
    pub fn deterministic_mask(&self) -> &BitSlice<u64, Lsb0> {
        &self.deterministic
    }

    pub fn stored_count(&self) -> usize {
        self.deterministic.count_zeros()
    }

    /// Stored columns of row `i`, ascending.
    pub fn stored_columns(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.is_stored(i, j)).collect()
    }

    /// Stored bits per column, i.e. the compression rate in bits per symbol.
    pub fn rate(&self) -> f64 {
        self.stored_count() as f64 / self.n as f64
    }

    /// `Σ z_est` over Deterministic positions: a union bound on the
    /// probability that any prediction fails.
    pub fn predicted_failure_bound(&self) -> f64 {
        self.deterministic
            .iter_ones()
            .map(|idx| f64::from(self.z_est[idx]))
            .collect::<CompensatedSum>()
            .value()
    }

    /// `Σ h_est` over Deterministic positions, in bits.
    pub fn predicted_entropy(&self) -> f64 {
        self.deterministic
            .iter_ones()
            .map(|idx| f64::from(self.h_est[idx]))
            .collect::<CompensatedSum>()
            .value()
    }

    /// `Σ h_est` over every position, in bits.
    pub fn total_entropy(&self) -> f64 {
        self.h_est.iter().map(|&h| f64::from(h)).collect::<CompensatedSum>().value()
    }

    pub fn check_source(&self, mu: &SourceDistribution) -> Result<()> {
        if mu.fingerprint() != &self.mu_fingerprint {
            return Err(Error::FingerprintMismatch("distribution does not match the chart"));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> Fingerprint {
        sha256(&self.to_bytes())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(CHART_MAGIC)
            .u8(CHART_VERSION)
            .u16(self.m as u16)
            .u32(self.n as u32)
            .f64(self.epsilon_z)
            .u64(self.mc_samples)
            .u64(self.seed)
            .u16(self.workers)
            .bytes(&self.mu_fingerprint)
            .bits(&self.deterministic);
        for &z in &self.z_est {
            w.f32(z);
        }
        for &h in &self.h_est {
            w.f32(h);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new("chart", bytes);
        r.magic(CHART_MAGIC)?;
        r.version(CHART_VERSION)?;
        let m = r.u16()? as usize;
        let n = r.u32()? as usize;
        if m == 0 || check_block_length(n).is_err() {
            return Err(r.err(format!("invalid shape {m}×{n}")));
        }
        let cells = m
            .checked_mul(n)
            .filter(|c| c.div_ceil(8) + 8 * c <= r.remaining().len())
            .ok_or_else(|| r.err(format!("{m}×{n} chart does not fit in the file")))?;
        let epsilon_z = r.f64()?;
        let mc_samples = r.u64()?;
        let seed = r.u64()?;
        let workers = r.u16()?;
        let mu_fingerprint = r.array::<32>()?;
        let deterministic = r.bits(cells)?;
        let z_est = (0..cells).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        let h_est = (0..cells).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        for (idx, &z) in z_est.iter().enumerate() {
            if deterministic[idx] != (f64::from(z) <= epsilon_z) {
                return Err(Error::format("chart", format!("classification of cell {idx} contradicts z_est")));
            }
        }
        Ok(Self {
            m,
            n,
            mu_fingerprint,
            epsilon_z,
            mc_samples,
            seed,
            workers,
            deterministic,
            z_est,
            h_est,
        })
    }
}

/// How the Bhattacharyya threshold `ε_z` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Total failure budget spread evenly: `ε_z = budget / (m n)`.
    Budget(f64),
    /// `ε_z = 2^{-n^α}`.
    Exponent(f64),
    Explicit(f64),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Budget(1e-3)
    }
}

impl Threshold {
    pub fn epsilon_z(&self, m: usize, n: usize) -> f64 {
        match *self {
            Threshold::Budget(b) => b / (m * n) as f64,
            Threshold::Exponent(alpha) => (-(n as f64).powf(alpha)).exp2(),
            Threshold::Explicit(e) => e,
        }
    }
}

pub(crate) fn workers_field(workers: usize) -> Result<u16> {
    narrow(workers, "worker count")
}
