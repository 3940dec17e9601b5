//! Per-column ranks of the low-entropy linear forms of `Y_j` given the past.

use serde::Serialize;

use super::synthetic::walsh_hadamard;
use super::{run_genie, GenieAccumulator};
use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::numeric::binary_entropy_weights;

/// Largest `m` for which every nonzero form is enumerated.
pub const MAX_RANK_ROWS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankProfile {
    pub m: usize,
    pub n: usize,
    pub epsilon: f64,
    pub mc_samples: u64,
    /// Per column, the selected forms `c` (rows of `A_j`), ascending.
    pub forms: Vec<Vec<u32>>,
    /// Per column, `m − rank(A_j)`.
    pub nullity: Vec<usize>,
    /// `form_entropy[j][c − 1]` estimates `H(c · Y_j | Y^{j-1})`.
    pub form_entropy: Vec<Vec<f64>>,
}

impl RankProfile {
    pub fn total_nullity(&self) -> usize {
        self.nullity.iter().sum()
    }

    /// `Σ_j nullity(A_j) / n`.
    pub fn mean_nullity(&self) -> f64 {
        self.total_nullity() as f64 / self.n as f64
    }
}

/// Greedy F_2 basis: keeps each candidate that is independent of those kept
/// before it. Returns the kept candidates in input order.
pub(crate) fn greedy_basis(candidates: impl IntoIterator<Item = u32>) -> Vec<u32> {
    let mut pivots: Vec<u32> = Vec::new();
    let mut kept = Vec::new();
    for c in candidates {
        let mut r = c;
        for &p in &pivots {
            r = r.min(r ^ p);
        }
        if r != 0 {
            pivots.push(r);
            pivots.sort_unstable_by(|a, b| b.cmp(a));
            kept.push(c);
        }
    }
    kept
}

struct FormAccumulator {
    q: usize,
    sums: Vec<f64>,
    scratch: Vec<f64>,
}

impl GenieAccumulator for FormAccumulator {
    fn observe(&mut self, column: usize, law: &[f64], _truth: u32) {
        // Walsh coefficient W(c) = P(c·Y = 0) − P(c·Y = 1).
        self.scratch.copy_from_slice(law);
        walsh_hadamard(&mut self.scratch);
        let row = &mut self.sums[column * (self.q - 1)..(column + 1) * (self.q - 1)];
        for (c, acc) in row.iter_mut().enumerate() {
            let w = self.scratch[c + 1].clamp(-1.0, 1.0);
            *acc += binary_entropy_weights(1.0 + w, 1.0 - w);
        }
    }

    fn merge(&mut self, other: Self) {
        for (d, s) in self.sums.iter_mut().zip(other.sums) {
            *d += s;
        }
    }
}

/// Estimates `H(c · Y_j | Y^{j-1})` for every nonzero `c` by the genie pass and
/// selects per column a maximal independent set of forms with entropy at most
/// `epsilon`, lowest integer first.
pub fn rank_profile(
    mu: &SourceDistribution,
    n: usize,
    epsilon: f64,
    mc_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<RankProfile> {
    let m = mu.m();
    if m > MAX_RANK_ROWS {
        return Err(Error::ResourceLimit {
            what: "rows for the rank profile",
            actual: m,
            cap: MAX_RANK_ROWS,
        });
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon}")));
    }
    let q = 1usize << m;
    let acc = run_genie(mu, n, mc_samples, seed, workers, || FormAccumulator {
        q,
        sums: vec![0.0; n * (q - 1)],
        scratch: vec![0.0; q],
    })?;
    let count = mc_samples as f64;
    let form_entropy: Vec<Vec<f64>> = acc.sums.chunks_exact(q - 1).map(|row| row.iter().map(|s| s / count).collect()).collect();
    let forms: Vec<Vec<u32>> = form_entropy
        .iter()
        .map(|row| greedy_basis((1..q as u32).filter(|&c| row[c as usize - 1] <= epsilon)))
        .collect();
    let nullity = forms.iter().map(|f| m - f.len()).collect();
    Ok(RankProfile {
        m,
        n,
        epsilon,
        mc_samples,
        forms,
        nullity,
        form_entropy,
    })
}
