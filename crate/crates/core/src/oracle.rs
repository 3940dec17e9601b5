//! Exact brute-force computations at small `(m, n)`.
//!
//! Everything here is computed from an explicitly enumerated joint pmf, with
//! no sampling. Two independent enumerations are provided:
//!
//! * [`exact_profile`] builds the law of `Y = X · G_n` by enumerating every
//!   outcome `y` and weighting it by `Π_j μ((y · G_n)_j)`.
//! * [`exact_branch_profile`] builds the law of the branch family
//!   `{V^{b_1…b_k}}` from two i.i.d. copies of the level below
//!   (`V^- = V + V'`, `V^+ = V'`), never touching `G_n`.
//!
//! Both produce an [`ExactProfile`] whose column `j` is, respectively, the
//! `j`-th output of the transform and the `j`-th branch sequence in
//! lexicographic order (`-` before `+`, first branch most significant).

use serde::Serialize;

use crate::construction::PolarChart;
use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::matrix::check_block_length;
use crate::numeric::{entropy_bits, CompensatedSum};
use crate::transform::polar_transform_symbols;

/// Default enumeration cap on `m · n` (the joint pmf has `2^{m n}` entries).
pub const DEFAULT_MAX_BITS: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_bits: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_bits: DEFAULT_MAX_BITS,
        }
    }
}

impl OracleLimits {
    fn check(&self, bits: usize) -> Result<()> {
        if bits > self.max_bits {
            return Err(Error::ResourceLimit {
                what: "exact enumeration (m·n bits)",
                actual: bits,
                cap: self.max_bits,
            });
        }
        Ok(())
    }
}

/// Exact conditional entropies and Bhattacharyya values of every column.
///
/// Row subsets are bitmasks over rows (bit `i` = row `i`). All entropies are
/// in bits.
#[derive(Debug, Clone, Serialize)]
pub struct ExactProfile {
    pub m: usize,
    pub n: usize,
    /// `h_subset[j][S] = H(Y_j[S] | Y^{j-1})`.
    pub h_subset: Vec<Vec<f64>>,
    /// `h_bit[j][i] = H(Y_j(i) | Y^{j-1}, Y_j(0..i))`.
    pub h_bit: Vec<Vec<f64>>,
    /// Bhattacharyya value for the same conditioning as `h_bit`.
    pub z_bit: Vec<Vec<f64>>,
    /// `z_parity[j][S] = Z(Σ_{i∈S} Y_j(i) | Y^{j-1})`; entry 0 is 0.
    pub z_parity: Vec<Vec<f64>>,
    /// `h_parity[j][S] = H(Σ_{i∈S} Y_j(i) | Y^{j-1})`; entry 0 is 0.
    pub h_parity: Vec<Vec<f64>>,
}

impl ExactProfile {
    /// `Σ_{i,j} h_bit(i, j)`, which equals `n H(μ)`.
    pub fn total_bit_entropy(&self) -> f64 {
        self.h_bit
            .iter()
            .flatten()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    /// `H(Y_j | Y^{j-1})` for every column (the full-row subset).
    pub fn column_entropies(&self) -> Vec<f64> {
        let full = (1usize << self.m) - 1;
        self.h_subset.iter().map(|col| col[full]).collect()
    }

    /// Column `j` values of subset `mask` across all columns.
    pub fn subset_series(&self, mask: usize) -> Vec<f64> {
        self.h_subset.iter().map(|col| col[mask]).collect()
    }
}

/// Joint pmf over `len` symbols of `m` bits; symbol `t` occupies bits
/// `t m .. (t + 1) m` of the index.
struct JointLaw {
    m: usize,
    len: usize,
    pmf: Vec<f64>,
}

impl JointLaw {
    fn analyze(self) -> ExactProfile {
        let JointLaw { m, len, pmf } = self;
        let total_bits = m * len;
        let q = 1usize << m;
        let mut prefix_h = vec![0.0; total_bits + 1];
        let mut z_flat = vec![0.0; total_bits];
        let mut joint_subset = vec![vec![0.0; q]; len];
        let mut z_parity = vec![vec![0.0; q]; len];
        let mut parity_joint = vec![vec![0.0; q]; len];

        // `cur` holds the marginal of the lowest `l + 1` bits.
        let mut cur = pmf;
        for l in (0..total_bits).rev() {
            if (l + 1) % m == 0 {
                let j = (l + 1) / m - 1;
                column_statistics(&cur, m, j, &mut joint_subset[j], &mut z_parity[j], &mut parity_joint[j]);
            }
            prefix_h[l + 1] = entropy_bits(&cur);
            let half = 1usize << l;
            let (lo, hi) = cur.split_at(half);
            z_flat[l] = 2.0
                * lo.iter()
                    .zip(hi)
                    .map(|(a, b)| (a * b).sqrt())
                    .collect::<CompensatedSum>()
                    .value();
            let folded: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a + b).collect();
            cur = folded;
        }

        let h_bit = (0..len)
            .map(|j| (0..m).map(|i| prefix_h[j * m + i + 1] - prefix_h[j * m + i]).collect())
            .collect();
        let z_bit = (0..len)
            .map(|j| (0..m).map(|i| z_flat[j * m + i].min(1.0)).collect())
            .collect();
        let h_subset = joint_subset
            .iter()
            .enumerate()
            .map(|(j, row)| row.iter().map(|h| h - prefix_h[j * m]).collect())
            .collect();
        let h_parity = parity_joint
            .iter()
            .enumerate()
            .map(|(j, row)| {
                row.iter()
                    .enumerate()
                    .map(|(mask, h)| if mask == 0 { 0.0 } else { h - prefix_h[j * m] })
                    .collect()
            })
            .collect();
        ExactProfile {
            m,
            n: len,
            h_subset,
            h_bit,
            z_bit,
            z_parity,
            h_parity,
        }
    }
}

/// Given the marginal of columns `0..=j`, fills `H(V^{j-1}, V_j[S])` and
/// `Z(parity_S(V_j) | V^{j-1})` and `H(V^{j-1}, parity_S(V_j))` for every
/// subset `S`.
fn column_statistics(
    marginal: &[f64],
    m: usize,
    j: usize,
    joint: &mut [f64],
    z_parity: &mut [f64],
    parity_joint: &mut [f64],
) {
    let low_bits = j * m;
    let low_mask = (1usize << low_bits) - 1;
    for mask in 0..1usize << m {
        let width = mask.count_ones() as usize;
        let mut proj = vec![0.0; 1 << (low_bits + width)];
        let mut parity = vec![[0.0f64; 2]; 1 << low_bits];
        for (idx, &p) in marginal.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let low = idx & low_mask;
            let col = idx >> low_bits;
            proj[low | extract_bits(col, mask) << low_bits] += p;
            parity[low][(col & mask).count_ones() as usize & 1] += p;
        }
        joint[mask] = entropy_bits(&proj);
        parity_joint[mask] = entropy_bits(parity.as_flattened());
        z_parity[mask] = if mask == 0 {
            0.0
        } else {
            (2.0 * parity
                .iter()
                .map(|[a, b]| (a * b).sqrt())
                .collect::<CompensatedSum>()
                .value())
            .min(1.0)
        };
    }
}

/// Packs the bits of `value` selected by `mask` into the low bits.
fn extract_bits(value: usize, mask: usize) -> usize {
    let mut out = 0;
    let mut k = 0;
    let mut rest = mask;
    while rest != 0 {
        let i = rest.trailing_zeros();
        out |= (value >> i & 1) << k;
        k += 1;
        rest &= rest - 1;
    }
    out
}

fn check_source(mu: &SourceDistribution) -> Result<()> {
    if mu.m() == 0 {
        return Err(Error::InvalidDistribution("the oracle needs m >= 1".into()));
    }
    Ok(())
}

/// Exact law of `Y = X · G_n` for i.i.d. columns `X_j ~ μ`.
fn transform_law(mu: &SourceDistribution, n: usize) -> JointLaw {
    let m = mu.m();
    let bits = m * n;
    // P_X as a tensor product.
    let mut px = vec![1.0f64];
    for t in 0..n {
        let mut next = vec![0.0; px.len() << m];
        for (s, &ps) in mu.pmf().iter().enumerate() {
            let offset = s << (t * m);
            for (x, &p) in px.iter().enumerate() {
                next[offset | x] = p * ps;
            }
        }
        px = next;
    }
    // Images of the unit vectors under the (linear, involutive) transform.
    let images: Vec<usize> = (0..bits)
        .map(|b| {
            let mut syms = vec![0u32; n];
            syms[b / m] = 1 << (b % m);
            polar_transform_symbols(&mut syms).expect("power of two");
            syms.iter()
                .enumerate()
                .fold(0usize, |acc, (t, &s)| acc | (s as usize) << (t * m))
        })
        .collect();
    // Gray-code walk: P_Y[y] = P_X[y · G_n].
    let mut py = vec![0.0; 1 << bits];
    let mut x = 0usize;
    py[0] = px[0];
    for g in 1usize..1 << bits {
        x ^= images[g.trailing_zeros() as usize];
        py[g ^ (g >> 1)] = px[x];
    }
    JointLaw {
        m,
        len: n,
        pmf: py,
    }
}

/// Exact profile of `Y = X · G_n`.
pub fn exact_profile(mu: &SourceDistribution, n: usize, limits: OracleLimits) -> Result<ExactProfile> {
    check_source(mu)?;
    check_block_length(n)?;
    limits.check(mu.m() * n)?;
    Ok(transform_law(mu, n).analyze())
}

/// `Z(Y_j(i) | Y^{j-1}, Y_j(0..i))`, exactly.
pub fn exact_bhattacharyya(
    mu: &SourceDistribution,
    n: usize,
    i: usize,
    j: usize,
    limits: OracleLimits,
) -> Result<f64> {
    if i >= mu.m() || j >= n {
        return Err(Error::InvalidParameter(format!("position ({i}, {j}) outside {}×{n}", mu.m())));
    }
    Ok(exact_profile(mu, n, limits)?.z_bit[j][i])
}

/// Exact profile of the branch family at depth `k`, built by the pairwise
/// copy recursion. Column `b` is the branch sequence whose binary expansion
/// (first branch most significant, `- = 0`, `+ = 1`) equals `b`.
pub fn exact_branch_profile(mu: &SourceDistribution, k: u32, limits: OracleLimits) -> Result<ExactProfile> {
    check_source(mu)?;
    let m = mu.m();
    let len = 1usize
        .checked_shl(k)
        .filter(|l| l.checked_mul(m).is_some())
        .ok_or_else(|| Error::InvalidParameter(format!("depth {k}")))?;
    limits.check(m * len)?;
    let mut law = JointLaw {
        m,
        len: 1,
        pmf: mu.pmf().to_vec(),
    };
    while law.len < len {
        law = branch_step(&law);
    }
    Ok(law.analyze())
}

/// One level of `V^- = V + V'`, `V^+ = V'` applied to every member of the
/// family, with the new branch appended as the least significant position.
fn branch_step(law: &JointLaw) -> JointLaw {
    let m = law.m;
    let sym_mask = (1usize << m) - 1;
    let size = law.pmf.len();
    // Both placements are linear in their argument, so tabulate them.
    let spread = |w: usize, both: bool| {
        (0..law.len).fold(0usize, |acc, t| {
            let s = w >> (t * m) & sym_mask;
            let minus = s << (2 * t * m);
            let plus = if both { s << ((2 * t + 1) * m) } else { 0 };
            acc | minus | plus
        })
    };
    let minus_only: Vec<usize> = (0..size).map(|w| spread(w, false)).collect();
    let minus_and_plus: Vec<usize> = (0..size).map(|w| spread(w, true)).collect();
    let mut pmf = vec![0.0; size * size];
    for (w, &pw) in law.pmf.iter().enumerate() {
        if pw == 0.0 {
            continue;
        }
        for (w2, &pw2) in law.pmf.iter().enumerate() {
            pmf[minus_only[w] ^ minus_and_plus[w2]] += pw * pw2;
        }
    }
    JointLaw {
        m,
        len: law.len * 2,
        pmf,
    }
}

/// `η_k[S]` for all `2^k` branch sequences, in lexicographic order.
pub fn exact_eta_process(
    mu: &SourceDistribution,
    k: u32,
    subset: usize,
    limits: OracleLimits,
) -> Result<Vec<f64>> {
    check_subset(mu, subset)?;
    Ok(exact_branch_profile(mu, k, limits)?.subset_series(subset))
}

/// `ζ_k[S]`: Bhattacharyya value of the parity of rows `S` for every branch.
pub fn exact_zeta_process(
    mu: &SourceDistribution,
    k: u32,
    subset: usize,
    limits: OracleLimits,
) -> Result<Vec<f64>> {
    check_subset(mu, subset)?;
    let profile = exact_branch_profile(mu, k, limits)?;
    Ok(profile.z_parity.iter().map(|col| col[subset]).collect())
}

fn check_subset(mu: &SourceDistribution, subset: usize) -> Result<()> {
    if subset >> mu.m() != 0 {
        return Err(Error::InvalidParameter(format!(
            "subset mask {subset:#b} has rows outside 0..{}",
            mu.m()
        )));
    }
    Ok(())
}

/// A chart whose statistics are the exact values (no sampling).
pub fn exact_chart(
    mu: &SourceDistribution,
    n: usize,
    epsilon_z: f64,
    limits: OracleLimits,
) -> Result<PolarChart> {
    let profile = exact_profile(mu, n, limits)?;
    let z: Vec<f64> = profile.z_bit.iter().flatten().copied().collect();
    let h: Vec<f64> = profile.h_bit.iter().flatten().copied().collect();
    PolarChart::from_estimates(mu, n, epsilon_z, 0, 0, 0, &z, &h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::binary_entropy;

    fn bern() -> SourceDistribution {
        SourceDistribution::bernoulli(0.11).unwrap()
    }

    fn correlated() -> SourceDistribution {
        SourceDistribution::new(2, vec![0.7, 0.1, 0.1, 0.1]).unwrap()
    }

    #[test]
    fn two_column_binary_values() {
        let p = exact_profile(&bern(), 2, OracleLimits::default()).unwrap();
        let h1 = binary_entropy(2.0 * 0.11 * 0.89);
        assert!((p.h_bit[0][0] - h1).abs() < 1e-12);
        assert!((p.h_bit[1][0] - (2.0 * binary_entropy(0.11) - h1)).abs() < 1e-12);
        assert!((p.h_bit[0][0] - 0.7135).abs() < 1e-3);
        assert!((p.h_bit[1][0] - 0.2863).abs() < 1e-3);
        assert!(p.z_bit[1][0] >= p.h_bit[1][0]);
    }

    #[test]
    fn single_column_bhattacharyya() {
        let z = exact_bhattacharyya(&bern(), 1, 0, 0, OracleLimits::default()).unwrap();
        assert!((z - 2.0 * (0.11f64 * 0.89).sqrt()).abs() < 1e-12);
        assert!((z - 0.6258).abs() < 1e-4);
    }

    #[test]
    fn degenerate_laws() {
        let p = exact_profile(&SourceDistribution::uniform(2).unwrap(), 4, OracleLimits::default()).unwrap();
        for col in &p.h_bit {
            for &h in col {
                assert!((h - 1.0).abs() < 1e-12);
            }
        }
        for col in &p.z_bit {
            for &z in col {
                assert!((z - 1.0).abs() < 1e-12);
            }
        }
        let p = exact_profile(&SourceDistribution::point_mass(2, 3).unwrap(), 4, OracleLimits::default()).unwrap();
        assert!(p.z_bit.iter().flatten().all(|&z| z == 0.0));
        assert!(p.h_bit.iter().flatten().all(|&h| h.abs() < 1e-15));
    }

    #[test]
    fn empty_subset_is_zero_and_entropies_in_range() {
        let p = exact_profile(&correlated(), 4, OracleLimits::default()).unwrap();
        for (j, col) in p.h_subset.iter().enumerate() {
            assert_eq!(col[0], 0.0, "column {j}");
            for (mask, &h) in col.iter().enumerate() {
                let width = (mask as u32).count_ones() as f64;
                assert!(h >= -1e-12 && h <= width + 1e-12);
            }
        }
    }

    #[test]
    fn conservation_identity() {
        for n in [1, 2, 4, 8] {
            let mu = correlated();
            let p = exact_profile(&mu, n, OracleLimits::default()).unwrap();
            let target = n as f64 * mu.entropy();
            assert!((p.total_bit_entropy() - target).abs() < 1e-9);
            let by_subset: f64 = p.column_entropies().iter().sum();
            assert!((by_subset - target).abs() < 1e-9);
        }
    }

    #[test]
    fn bhattacharyya_dominates_entropy_everywhere() {
        let mu = SourceDistribution::new(3, vec![0.3, 0.05, 0.1, 0.05, 0.02, 0.08, 0.2, 0.2]).unwrap();
        let p = exact_profile(&mu, 4, OracleLimits::default()).unwrap();
        for j in 0..4 {
            for i in 0..3 {
                assert!(p.z_bit[j][i] + 1e-12 >= p.h_bit[j][i], "({i},{j})");
            }
        }
    }

    #[test]
    fn resource_cap() {
        let err = exact_profile(&correlated(), 16, OracleLimits::default()).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
        assert!(exact_profile(&correlated(), 4, OracleLimits { max_bits: 4 }).is_err());
    }

    #[test]
    fn branch_process_matches_transform_columns() {
        let mu = SourceDistribution::new(2, vec![0.6, 0.05, 0.15, 0.2]).unwrap();
        for k in 0..=3u32 {
            let via_transform = exact_profile(&mu, 1 << k, OracleLimits::default()).unwrap();
            let via_branches = exact_branch_profile(&mu, k, OracleLimits::default()).unwrap();
            for j in 0..1usize << k {
                for mask in 0..4 {
                    let a = via_transform.h_subset[j][mask];
                    let b = via_branches.h_subset[j][mask];
                    assert!((a - b).abs() < 1e-12, "k={k} j={j} S={mask}: {a} vs {b}");
                    let za = via_transform.z_parity[j][mask];
                    let zb = via_branches.z_parity[j][mask];
                    assert!((za - zb).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eta_examples() {
        let mu = bern();
        let eta0 = exact_eta_process(&mu, 0, 1, OracleLimits::default()).unwrap();
        assert!((eta0[0] - mu.entropy()).abs() < 1e-12);
        let eta1 = exact_eta_process(&mu, 1, 1, OracleLimits::default()).unwrap();
        assert!((eta1[0] - 0.7135).abs() < 1e-3 && (eta1[1] - 0.2863).abs() < 1e-3);
        assert!(exact_eta_process(&mu, 1, 2, OracleLimits::default()).is_err());
    }

    #[test]
    fn parity_entropy_of_row_zero_is_the_first_bit_entropy() {
        let mu = SourceDistribution::new(2, vec![0.7, 0.1, 0.1, 0.1]).unwrap();
        let profile = exact_profile(&mu, 4, OracleLimits::default()).unwrap();
        for j in 0..4 {
            assert!((profile.h_parity[j][1] - profile.h_bit[j][0]).abs() < 1e-12);
            assert!((profile.h_parity[j][1] - profile.h_subset[j][1]).abs() < 1e-12);
            assert!((profile.h_parity[j][2] - profile.h_subset[j][2]).abs() < 1e-12);
            assert_eq!(profile.h_parity[j][0], 0.0);
            for mask in 1..4 {
                assert!(profile.z_parity[j][mask] >= profile.h_parity[j][mask] - 1e-12);
            }
        }
    }

    #[test]
    fn extract_bits_packs_selected() {
        assert_eq!(extract_bits(0b1011, 0b1010), 0b11);
        assert_eq!(extract_bits(0b0100, 0b0110), 0b10);
        assert_eq!(extract_bits(0b1111, 0), 0);
    }
}
