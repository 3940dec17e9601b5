//! Conditional laws over F_2^m propagated along the butterfly.
//!
//! The minus branch is the law of `V + V'` (XOR convolution of the two input
//! laws); the plus branch is the law of `V'` given `V + V' = u`.

use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::numeric::entropy_bits;

/// Alphabets up to this size convolve directly; larger ones use the
/// Walsh–Hadamard route.
///
/// The direct sum only adds nonnegative terms, so tiny probabilities keep
/// their relative accuracy. The transform route subtracts, which leaves an
/// absolute error floor of about `1e-16` on every entry.
pub const DIRECT_CONVOLUTION_MAX: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDistribution {
    m: usize,
    probs: Vec<f64>,
}

impl SyntheticDistribution {
    pub fn new(m: usize, probs: Vec<f64>) -> Result<Self> {
        Ok(Self::from_source(&SourceDistribution::new(m, probs)?))
    }

    pub fn from_source(mu: &SourceDistribution) -> Self {
        Self {
            m: mu.m(),
            probs: mu.pmf().to_vec(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }
}

fn check_pair(a: &SyntheticDistribution, b: &SyntheticDistribution) -> Result<()> {
    if a.m != b.m {
        return Err(Error::InvalidDimension(format!(
            "synthetic distributions over F_2^{} and F_2^{}",
            a.m, b.m
        )));
    }
    Ok(())
}

/// Law of `V + V'` for independent `V ~ p`, `V' ~ p_prime`.
pub fn combine_minus(p: &SyntheticDistribution, p_prime: &SyntheticDistribution) -> Result<SyntheticDistribution> {
    check_pair(p, p_prime)?;
    let mut out = vec![0.0; p.probs.len()];
    minus_kernel(&p.probs, &p_prime.probs, &mut out);
    Ok(SyntheticDistribution { m: p.m, probs: out })
}

/// Law of `V'` given `V + V' = u_minus`.
pub fn combine_plus(
    p: &SyntheticDistribution,
    p_prime: &SyntheticDistribution,
    u_minus: u32,
) -> Result<SyntheticDistribution> {
    check_pair(p, p_prime)?;
    if u_minus as usize >= p.probs.len() {
        return Err(Error::InvalidParameter(format!("symbol {u_minus} outside F_2^{}", p.m)));
    }
    let mut out = vec![0.0; p.probs.len()];
    if !plus_kernel(&p.probs, &p_prime.probs, u_minus, &mut out) {
        return Err(Error::ImpossibleObservation { column: 0 });
    }
    Ok(SyntheticDistribution { m: p.m, probs: out })
}

/// Normalized XOR convolution of `a` and `b` into `out`.
#[inline]
pub(crate) fn minus_kernel(a: &[f64], b: &[f64], out: &mut [f64]) {
    let q = a.len();
    match q {
        1 => out[0] = 1.0,
        2 => {
            let lo = a[0] * b[0] + a[1] * b[1];
            let hi = a[0] * b[1] + a[1] * b[0];
            let inv = 1.0 / (lo + hi);
            out[0] = lo * inv;
            out[1] = hi * inv;
        }
        _ if q <= DIRECT_CONVOLUTION_MAX => {
            xor_convolve_direct(a, b, out);
            normalize(out);
        }
        _ => {
            xor_convolve_fast(a, b, out);
            normalize(out);
        }
    }
}

/// `out(v) ∝ a(u ⊕ v) b(v)`; returns false when every term vanishes.
#[inline]
pub(crate) fn plus_kernel(a: &[f64], b: &[f64], u: u32, out: &mut [f64]) -> bool {
    let u = u as usize;
    for (v, o) in out.iter_mut().enumerate() {
        *o = a[u ^ v] * b[v];
    }
    normalize(out)
}

/// Rescales to unit sum; returns false if the sum is zero or not finite.
#[inline]
pub(crate) fn normalize(v: &mut [f64]) -> bool {
    let total: f64 = v.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return false;
    }
    let inv = 1.0 / total;
    for x in v.iter_mut() {
        *x *= inv;
    }
    true
}

pub fn xor_convolve_direct(a: &[f64], b: &[f64], out: &mut [f64]) {
    for (u, o) in out.iter_mut().enumerate() {
        *o = a.iter().enumerate().map(|(v, &av)| av * b[u ^ v]).sum();
    }
}

/// In-place unnormalized Walsh–Hadamard transform.
pub fn walsh_hadamard(buf: &mut [f64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in buf.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*x + *y, *x - *y);
                *x = s;
                *y = d;
            }
        }
        h *= 2;
    }
}

/// XOR convolution via `WHT⁻¹(WHT(a) · WHT(b))`, clamped at zero.
pub fn xor_convolve_fast(a: &[f64], b: &[f64], out: &mut [f64]) {
    let q = a.len();
    let mut fb = b.to_vec();
    out.copy_from_slice(a);
    walsh_hadamard(out);
    walsh_hadamard(&mut fb);
    for (x, y) in out.iter_mut().zip(&fb) {
        *x *= y;
    }
    walsh_hadamard(out);
    let scale = 1.0 / q as f64;
    for x in out.iter_mut() {
        *x = (*x * scale).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::CompensatedSum;
    use proptest::prelude::*;

    fn sd(m: usize, probs: &[f64]) -> SyntheticDistribution {
        SyntheticDistribution::new(m, probs.to_vec()).unwrap()
    }

    fn close(a: &SyntheticDistribution, b: &SyntheticDistribution) {
        assert_eq!(a.m(), b.m());
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn minus_examples() {
        let pp = sd(2, &[0.4, 0.3, 0.2, 0.1]);
        let delta = sd(2, &[1.0, 0.0, 0.0, 0.0]);
        close(&combine_minus(&delta, &pp).unwrap(), &pp);
        let unif = sd(2, &[0.25; 4]);
        close(&combine_minus(&unif, &unif).unwrap(), &unif);
        let b = sd(1, &[0.89, 0.11]);
        let out = combine_minus(&b, &b).unwrap();
        assert!((out.probs()[1] - 0.1958).abs() < 1e-12);
        assert!(combine_minus(&b, &unif).is_err());
    }

    #[test]
    fn plus_examples() {
        let pp = sd(2, &[0.4, 0.3, 0.2, 0.1]);
        let unif = sd(2, &[0.25; 4]);
        let out = combine_plus(&unif, &pp, 3).unwrap();
        for (a, b) in out.probs().iter().zip(pp.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        let point = sd(2, &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(combine_plus(&pp, &point, 1).unwrap(), point);
        let b = sd(1, &[0.89, 0.11]);
        let out = combine_plus(&b, &b, 1).unwrap();
        assert!((out.probs()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plus_rejects_impossible_observation() {
        let a = sd(1, &[1.0, 0.0]);
        let err = combine_plus(&a, &a, 1).unwrap_err();
        assert!(matches!(err, Error::ImpossibleObservation { .. }));
    }

    /// `H(P) + H(P') = H(P ⋆ P') + E_u[H(plus branch | u)]`.
    fn entropy_conservation_gap(a: &SyntheticDistribution, b: &SyntheticDistribution) -> f64 {
        let minus = combine_minus(a, b).unwrap();
        let mut expected_plus = CompensatedSum::new();
        for (u, &pu) in minus.probs().iter().enumerate() {
            if pu > 0.0 {
                expected_plus.add(pu * combine_plus(a, b, u as u32).unwrap().entropy());
            }
        }
        a.entropy() + b.entropy() - minus.entropy() - expected_plus.value()
    }

    fn arb_synthetic(m: usize) -> impl Strategy<Value = SyntheticDistribution> {
        proptest::collection::vec(0.0f64..1.0, 1 << m)
            .prop_filter("nonzero", |w| w.iter().sum::<f64>() > 1e-6)
            .prop_map(move |w| {
                let t: f64 = w.iter().sum();
                SyntheticDistribution::new(m, w.iter().map(|x| x / t).collect()).unwrap()
            })
    }

    proptest! {
        #[test]
        fn combines_conserve_entropy(a in arb_synthetic(3), b in arb_synthetic(3)) {
            prop_assert!(entropy_conservation_gap(&a, &b).abs() < 1e-9);
        }

        #[test]
        fn fast_and_direct_convolution_agree(a in arb_synthetic(6), b in arb_synthetic(6)) {
            let mut direct = vec![0.0; 64];
            let mut fast = vec![0.0; 64];
            xor_convolve_direct(a.probs(), b.probs(), &mut direct);
            xor_convolve_fast(a.probs(), b.probs(), &mut fast);
            for (x, y) in direct.iter().zip(&fast) {
                prop_assert!((x - y).abs() < 1e-14);
            }
        }

        #[test]
        fn kernels_stay_normalized(a in arb_synthetic(5), b in arb_synthetic(5), u in 0u32..32) {
            let mut out = vec![0.0; 32];
            minus_kernel(a.probs(), b.probs(), &mut out);
            prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            if plus_kernel(a.probs(), b.probs(), u, &mut out) {
                prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
