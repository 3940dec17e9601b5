//! Successive-cancellation recursion over F_2^m.
//!
//! With `x` split into halves `a` and `b`, `x · G_n = [(a ⊕ b) · G_{n/2}, b · G_{n/2}]`.
//! The left subtree therefore sees the laws of `a_t ⊕ b_t` (minus branch), and
//! once its symbols `u` are fixed the right subtree sees the laws of `b_t`
//! given `u_t` (plus branch). Leaves are visited in column order `0 .. n`.

use crate::construction::synthetic::{minus_kernel, plus_kernel};
use crate::error::{Error, Result};

/// Chooses the symbol of each column from its conditional law.
pub(crate) trait ColumnPolicy {
    /// `law` is the normalized law of column `column` given all earlier
    /// decisions. Returns the symbol to commit.
    fn decide(&mut self, column: usize, law: &[f64]) -> Result<u32>;
}

/// Reusable buffers for one block length.
pub(crate) struct ScEngine {
    q: usize,
    n: usize,
    /// Depth `d` holds `(n >> d) · q` probabilities.
    probs: Vec<Vec<f64>>,
    /// Depth `d` holds `n >> d` symbols.
    syms: Vec<Vec<u32>>,
    column: usize,
}

impl ScEngine {
    pub fn new(m: usize, n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let q = 1usize << m;
        let depth = n.trailing_zeros() as usize;
        Self {
            q,
            n,
            probs: (0..=depth).map(|d| vec![0.0; (n >> d) * q]).collect(),
            syms: (0..=depth).map(|d| vec![0; n >> d]).collect(),
            column: 0,
        }
    }

    /// Runs one pass with i.i.d. prior `prior` on every input column and
    /// returns the input-side symbols implied by the decisions.
    pub fn run<P: ColumnPolicy>(&mut self, prior: &[f64], policy: &mut P) -> Result<&[u32]> {
        debug_assert_eq!(prior.len(), self.q);
        for chunk in self.probs[0].chunks_exact_mut(self.q) {
            chunk.copy_from_slice(prior);
        }
        self.column = 0;
        self.node(0, policy)?;
        Ok(&self.syms[0])
    }

    fn node<P: ColumnPolicy>(&mut self, d: usize, policy: &mut P) -> Result<()> {
        let q = self.q;
        let len = self.n >> d;
        if len == 1 {
            let sym = policy.decide(self.column, &self.probs[d][..q])?;
            self.syms[d][0] = sym;
            self.column += 1;
            return Ok(());
        }
        let h = len / 2;

        {
            let (upper, lower) = self.probs.split_at_mut(d + 1);
            let (a, b) = upper[d].split_at(h * q);
            for ((pa, pb), out) in a
                .chunks_exact(q)
                .zip(b.chunks_exact(q))
                .zip(lower[0].chunks_exact_mut(q))
            {
                minus_kernel(pa, pb, out);
            }
        }
        self.node(d + 1, policy)?;

        {
            let (upper, lower) = self.syms.split_at_mut(d + 1);
            upper[d][..h].copy_from_slice(&lower[0][..h]);
        }
        {
            let (upper, lower) = self.probs.split_at_mut(d + 1);
            let (a, b) = upper[d].split_at(h * q);
            let u = &self.syms[d][..h];
            for (((pa, pb), out), &ut) in a
                .chunks_exact(q)
                .zip(b.chunks_exact(q))
                .zip(lower[0].chunks_exact_mut(q))
                .zip(u)
            {
                if !plus_kernel(pa, pb, ut, out) {
                    return Err(Error::ImpossibleObservation { column: self.column });
                }
            }
        }
        self.node(d + 1, policy)?;

        let (upper, lower) = self.syms.split_at_mut(d + 1);
        let (u, v_slot) = upper[d].split_at_mut(h);
        for ((ut, vt), &v) in u.iter_mut().zip(v_slot.iter_mut()).zip(&lower[0][..h]) {
            *ut ^= v;
            *vt = v;
        }
        Ok(())
    }
}

/// Weights `(w0, w1)` of bit `i` of the column, restricted to symbols that
/// agree with `known` on bits `0 .. i`.
#[inline]
pub(crate) fn bit_weights(law: &[f64], known: u32, i: usize) -> (f64, f64) {
    let prefix = (1u32 << i) - 1;
    let want = known & prefix;
    let (mut w0, mut w1) = (0.0, 0.0);
    for (s, &p) in law.iter().enumerate() {
        let s = s as u32;
        if s & prefix == want {
            if s >> i & 1 == 1 {
                w1 += p;
            } else {
                w0 += p;
            }
        }
    }
    (w0, w1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::SourceDistribution;
    use crate::transform::polar_transform_symbols;

    /// Commits the true output symbols and records each column law.
    struct Replay<'a> {
        truth: &'a [u32],
        laws: Vec<Vec<f64>>,
    }

    impl ColumnPolicy for Replay<'_> {
        fn decide(&mut self, column: usize, law: &[f64]) -> Result<u32> {
            self.laws.push(law.to_vec());
            Ok(self.truth[column])
        }
    }

    #[test]
    fn returns_the_input_symbols() {
        let x = vec![3u32, 1, 0, 2, 2, 1, 3, 0];
        let mut y = x.clone();
        polar_transform_symbols(&mut y).unwrap();
        let mu = SourceDistribution::new(2, vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let mut engine = ScEngine::new(2, 8);
        let mut policy = Replay { truth: &y, laws: vec![] };
        let out = engine.run(mu.pmf(), &mut policy).unwrap().to_vec();
        assert_eq!(out, x);
        assert_eq!(policy.laws.len(), 8);
    }

    /// Column laws must equal the exact conditional law of `Y_j` given the
    /// realized `Y^{j-1}`, computed by brute force over all inputs.
    #[test]
    fn column_laws_match_brute_force_conditionals() {
        let mu = SourceDistribution::new(2, vec![0.5, 0.2, 0.05, 0.25]).unwrap();
        let n = 4;
        let x = vec![1u32, 0, 3, 0];
        let mut y = x.clone();
        polar_transform_symbols(&mut y).unwrap();

        let mut joint = vec![[0.0f64; 4]; n];
        for idx in 0..1usize << (2 * n) {
            let cand: Vec<u32> = (0..n).map(|t| (idx >> (2 * t) & 3) as u32).collect();
            let p: f64 = cand.iter().map(|&s| mu.pmf()[s as usize]).product();
            let mut cy = cand.clone();
            polar_transform_symbols(&mut cy).unwrap();
            for j in 0..n {
                if cy[..j] == y[..j] {
                    joint[j][cy[j] as usize] += p;
                }
            }
        }

        let mut engine = ScEngine::new(2, n);
        let mut policy = Replay { truth: &y, laws: vec![] };
        engine.run(mu.pmf(), &mut policy).unwrap();
        for j in 0..n {
            let total: f64 = joint[j].iter().sum();
            for s in 0..4 {
                assert!((policy.laws[j][s] - joint[j][s] / total).abs() < 1e-12, "column {j} symbol {s}");
            }
        }
    }

    #[test]
    fn bit_weights_condition_on_prefix() {
        let law = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(bit_weights(&law, 0, 0), (0.1 + 0.3, 0.2 + 0.4));
        assert_eq!(bit_weights(&law, 1, 1), (0.2, 0.4));
        assert_eq!(bit_weights(&law, 0, 1), (0.1, 0.3));
    }
}
