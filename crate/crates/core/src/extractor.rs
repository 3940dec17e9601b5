//! Deterministic extraction from i.i.d. bits of known entropy floor.
//!
//! For an entropy floor of `k` bits over `n` inputs, take the Bernoulli law
//! `p(k)` with `H_b(p(k)) = k / n`, transform by `G_n`, and keep the
//! positions `R` whose conditional entropy is at least `1 − ε² / 2n`. Any
//! i.i.d. source at least as random yields bits within `ε` of uniform.

use bitvec::prelude::*;
use serde::Serialize;

use crate::construction::estimate_bit_statistics;
use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::format::{narrow, ByteReader, ByteWriter};
use crate::matrix::check_block_length;
use crate::numeric::{binary_entropy, entropy_bits, CompensatedSum};
use crate::oracle::{exact_profile, OracleLimits};
use crate::transform::polar_transform_row;

pub const PEXT_MAGIC: &[u8; 4] = b"PMXR";
pub const PEXT_VERSION: u8 = 1;

/// Block lengths up to this use the exact profile.
pub const ORACLE_MAX_N: usize = 16;

/// `p ∈ [0, 1/2]` with `H_b(p) = h`, by bisection.
pub fn inverse_binary_entropy(h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::InvalidParameter(format!("entropy {h} outside [0, 1]")));
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    if h == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PextSpec {
    pub n: usize,
    pub k: f64,
    pub epsilon: f64,
    pub p: f64,
    /// Selected output positions, ascending.
    pub columns: Vec<u32>,
}

impl PextSpec {
    pub fn output_len(&self) -> usize {
        self.columns.len()
    }

    /// `1 − ε² / 2n`.
    pub fn entropy_threshold(&self) -> f64 {
        pext_threshold(self.n, self.epsilon)
    }

    /// `m_out − k`.
    pub fn slack(&self) -> f64 {
        self.columns.len() as f64 - self.k
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(PEXT_MAGIC)
            .u8(PEXT_VERSION)
            .u32(self.n as u32)
            .f64(self.k)
            .f64(self.epsilon)
            .f64(self.p)
            .u32(self.columns.len() as u32);
        for &c in &self.columns {
            w.u32(c);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new("extractor spec", bytes);
        r.magic(PEXT_MAGIC)?;
        r.version(PEXT_VERSION)?;
        let n = r.u32()? as usize;
        if check_block_length(n).is_err() {
            return Err(r.err(format!("block length {n} is not a power of two")));
        }
        let k = r.f64()?;
        let epsilon = r.f64()?;
        let p = r.f64()?;
        let count = r.u32()? as usize;
        if count > n || count * 4 != r.remaining().len() {
            return Err(r.err(format!("{count} columns do not match the file")));
        }
        let columns = (0..count).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        if columns.windows(2).any(|w| w[0] >= w[1]) || columns.last().is_some_and(|&c| c as usize >= n) {
            return Err(Error::format("extractor spec", "columns must be strictly increasing and below n"));
        }
        Ok(Self {
            n,
            k,
            epsilon,
            p,
            columns,
        })
    }
}

fn pext_threshold(n: usize, epsilon: f64) -> f64 {
    1.0 - epsilon * epsilon / (2.0 * n as f64)
}

/// Monte-Carlo settings used when `n` exceeds [`ORACLE_MAX_N`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PextParams {
    pub mc_samples: u64,
    pub seed: u64,
    pub workers: usize,
    /// Accept positions the standard error cannot settle.
    pub force: bool,
}

impl Default for PextParams {
    fn default() -> Self {
        Self {
            mc_samples: 10_000,
            seed: 0,
            workers: 1,
            force: false,
        }
    }
}

/// How `R` was decided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PextBuildReport {
    pub exact: bool,
    pub threshold: f64,
    /// Per position, `H(Y_j | Y^{j-1})` or its estimate.
    pub entropies: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Positions within two standard errors of the threshold whose
    /// standard error exceeds half the distance `ε² / 2n` from 1.
    pub ambiguous: usize,
}

pub fn pext_build(n: usize, k: f64, epsilon: f64, params: &PextParams) -> Result<(PextSpec, PextBuildReport)> {
    check_block_length(n)?;
    narrow::<u32>(n, "block length")?;
    if !(k > 0.0 && k <= n as f64) {
        return Err(Error::InvalidParameter(format!("entropy floor k = {k} outside (0, {n}]")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon}")));
    }
    let p = inverse_binary_entropy(k / n as f64)?;
    let threshold = pext_threshold(n, epsilon);
    let mu = SourceDistribution::bernoulli(p)?;
    let (entropies, stderr, exact) = if n <= ORACLE_MAX_N {
        let profile = exact_profile(&mu, n, OracleLimits::default())?;
        let h: Vec<f64> = profile.h_bit.iter().map(|col| col[0]).collect();
        (h, vec![0.0; n], true)
    } else {
        let stats = estimate_bit_statistics(&mu, n, params.mc_samples, params.seed, params.workers)?;
        (stats.h_mean, stats.h_stderr, false)
    };
    let margin = 1.0 - threshold;
    let ambiguous = entropies
        .iter()
        .zip(&stderr)
        .filter(|(&h, &se)| se > margin / 2.0 && (h - threshold).abs() < 2.0 * se)
        .count();
    if ambiguous > 0 && !params.force {
        let worst = entropies
            .iter()
            .zip(&stderr)
            .filter(|(&h, &se)| se > margin / 2.0 && (h - threshold).abs() < 2.0 * se)
            .map(|(_, &se)| se)
            .fold(0.0, f64::max);
        return Err(Error::InsufficientSamples {
            ambiguous,
            worst_stderr: worst,
            threshold,
        });
    }
    let columns = (0..n as u32).filter(|&j| entropies[j as usize] >= threshold).collect();
    Ok((
        PextSpec {
            n,
            k,
            epsilon,
            p,
            columns,
        },
        PextBuildReport {
            exact,
            threshold,
            entropies,
            stderr,
            ambiguous,
        },
    ))
}

/// `(x · G_n)[R]`.
pub fn pext_apply(x: &BitSlice<u64, Lsb0>, spec: &PextSpec) -> Result<BitVec<u64, Lsb0>> {
    if x.len() != spec.n {
        return Err(Error::InvalidDimension(format!("{} input bits for n = {}", x.len(), spec.n)));
    }
    let y = polar_transform_row(x)?;
    Ok(spec.columns.iter().map(|&j| y[j as usize]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PextVerification {
    pub p_true: f64,
    pub output_len: usize,
    /// `D(law of Y[R] ‖ uniform)` in bits.
    pub kl_bits: f64,
    /// `Σ |P(r) − 2^{-|R|}|`.
    pub l1: f64,
    /// `Σ_{j∈R} (1 − H(Y_j | Y^{j-1}))` under `p_true`.
    pub entropy_deficit: f64,
    /// `sqrt(2 ln 2 · KL)`.
    pub pinsker_bound: f64,
    /// `ε² / 2`.
    pub kl_target: f64,
    pub l1_target: f64,
    /// Smallest `H(Y_j | Y^{j-1})` over `R` under `p_true`.
    pub min_selected_entropy: f64,
}

impl PextVerification {
    pub fn within_targets(&self) -> bool {
        self.kl_bits <= self.kl_target && self.l1 <= self.l1_target
    }
}

/// Exact distance from uniform of the extracted bits when the input is
/// i.i.d. Bernoulli(`p_true`), by enumerating all `2^n` inputs.
pub fn pext_verify(spec: &PextSpec, p_true: f64, limits: OracleLimits) -> Result<PextVerification> {
    let n = spec.n;
    if n > 64 {
        return Err(Error::ResourceLimit {
            what: "exact extractor verification (n)",
            actual: n,
            cap: 64,
        });
    }
    if n > limits.max_bits {
        return Err(Error::ResourceLimit {
            what: "exact enumeration (m·n bits)",
            actual: n,
            cap: limits.max_bits,
        });
    }
    if !(0.0..=1.0).contains(&p_true) || binary_entropy(p_true) < spec.k / n as f64 - 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "p_true = {p_true} is below the entropy floor {}/{n}",
            spec.k
        )));
    }
    let r = spec.columns.len();
    let mut law = vec![0.0f64; 1 << r];
    let mut x: BitVec<u64, Lsb0> = BitVec::repeat(false, n);
    for idx in 0u64..1 << n {
        let ones = idx.count_ones() as i32;
        let weight = p_true.powi(ones) * (1.0 - p_true).powi(n as i32 - ones);
        if weight == 0.0 {
            continue;
        }
        for t in 0..n {
            x.set(t, idx >> t & 1 == 1);
        }
        let y = polar_transform_row(&x)?;
        let out = spec
            .columns
            .iter()
            .enumerate()
            .fold(0usize, |acc, (b, &j)| acc | usize::from(y[j as usize]) << b);
        law[out] += weight;
    }
    let uniform = 1.0 / law.len() as f64;
    let kl_bits = (r as f64 - entropy_bits(&law)).max(0.0);
    let l1 = law.iter().map(|&p| (p - uniform).abs()).collect::<CompensatedSum>().value();

    let mu = SourceDistribution::bernoulli(p_true)?;
    let profile = exact_profile(&mu, n, limits)?;
    let selected: Vec<f64> = spec.columns.iter().map(|&j| profile.h_bit[j as usize][0]).collect();
    let entropy_deficit = selected.iter().map(|h| 1.0 - h).collect::<CompensatedSum>().value();
    Ok(PextVerification {
        p_true,
        output_len: r,
        kl_bits,
        l1,
        entropy_deficit,
        pinsker_bound: (2.0 * std::f64::consts::LN_2 * kl_bits).sqrt(),
        kl_target: spec.epsilon * spec.epsilon / 2.0,
        l1_target: spec.epsilon,
        min_selected_entropy: selected.iter().copied().fold(1.0, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inverse_entropy_examples() {
        assert_eq!(inverse_binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(inverse_binary_entropy(1.0).unwrap(), 0.5);
        assert!((inverse_binary_entropy(0.5).unwrap() - 0.1100).abs() < 1e-4);
        assert!(inverse_binary_entropy(1.1).is_err());
        assert!(inverse_binary_entropy(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn inverse_entropy_inverts(h in 0.0f64..=1.0) {
            let p = inverse_binary_entropy(h).unwrap();
            prop_assert!((0.0..=0.5).contains(&p));
            prop_assert!((binary_entropy(p) - h).abs() <= 1e-12);
        }
    }

    #[test]
    fn full_entropy_passes_everything_through() {
        let (spec, _) = pext_build(8, 8.0, 0.5, &PextParams::default()).unwrap();
        assert_eq!(spec.p, 0.5);
        assert_eq!(spec.columns, (0..8).collect::<Vec<_>>());
        let x: BitVec<u64, Lsb0> = bits![u64, Lsb0; 1, 0, 1, 1, 0, 0, 1, 0].to_bitvec();
        assert_eq!(pext_apply(&x, &spec).unwrap(), polar_transform_row(&x).unwrap());
        let v = pext_verify(&spec, 0.5, OracleLimits::default()).unwrap();
        assert!(v.kl_bits.abs() < 1e-12 && v.l1.abs() < 1e-12);
    }

    #[test]
    fn tiny_entropy_extracts_nothing() {
        let (spec, _) = pext_build(8, 1e-6, 0.5, &PextParams::default()).unwrap();
        assert!(spec.columns.is_empty());
    }

    #[test]
    fn half_entropy_example() {
        let (spec, report) = pext_build(8, 4.0, 0.5, &PextParams::default()).unwrap();
        assert!(report.exact);
        assert!((spec.p - 0.11).abs() < 1e-4);
        let v = pext_verify(&spec, spec.p, OracleLimits::default()).unwrap();
        assert!(v.within_targets(), "{v:?}");
        assert!(v.l1 <= v.pinsker_bound + 1e-12);
        assert!(v.kl_bits <= v.entropy_deficit + 1e-12);
        assert!(v.min_selected_entropy >= spec.entropy_threshold());

        let stronger = pext_verify(&spec, 0.2, OracleLimits::default()).unwrap();
        assert!(stronger.kl_bits <= v.kl_bits + 1e-9);
        assert!(stronger.min_selected_entropy >= spec.entropy_threshold());
        assert!(pext_verify(&spec, 0.05, OracleLimits::default()).is_err());
    }

    #[test]
    fn apply_is_linear_and_checks_length() {
        let (spec, _) = pext_build(16, 8.0, 0.5, &PextParams::default()).unwrap();
        let zero: BitVec<u64, Lsb0> = BitVec::repeat(false, 16);
        assert!(pext_apply(&zero, &spec).unwrap().not_any());
        assert!(pext_apply(&zero[..8], &spec).is_err());
    }

    #[test]
    fn spec_file_round_trips() {
        let (spec, _) = pext_build(16, 8.0, 0.5, &PextParams::default()).unwrap();
        let bytes = spec.to_bytes();
        assert_eq!(&bytes[..4], b"PMXR");
        assert_eq!(PextSpec::from_bytes(&bytes).unwrap(), spec);
        assert!(PextSpec::from_bytes(&bytes[..bytes.len() - 2]).is_err());
    }

    #[test]
    fn monte_carlo_path_refuses_unresolved_thresholds() {
        let params = PextParams {
            mc_samples: 50,
            ..PextParams::default()
        };
        match pext_build(64, 32.0, 0.5, &params) {
            Err(Error::InsufficientSamples { .. }) => {}
            Ok((_, report)) => assert_eq!(report.ambiguous, 0),
            Err(e) => panic!("{e}"),
        }
        let forced = PextParams { force: true, ..params };
        let (spec, report) = pext_build(64, 32.0, 0.5, &forced).unwrap();
        assert!(!report.exact);
        assert!(spec.output_len() <= 64);
    }
}
