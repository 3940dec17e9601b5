//! Small numerical helpers shared by the exact and Monte-Carlo paths.

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `-p log2 p`, with the convention `0 log 0 = 0`.
#[inline]
pub fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a (not necessarily normalized) weight vector.
pub fn entropy_bits(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
    if total <= 0.0 {
        return 0.0;
    }
    weights
        .iter()
        .map(|&w| entropy_term(w / total))
        .collect::<CompensatedSum>()
        .value()
}

/// Binary entropy `H_b(p)` in bits.
#[inline]
pub fn binary_entropy(p: f64) -> f64 {
    entropy_term(p) + entropy_term(1.0 - p)
}

/// Binary entropy of the bit with unnormalized weights `(w0, w1)`, computed
/// from the smaller weight so tiny probabilities keep their relative accuracy.
#[inline]
pub fn binary_entropy_weights(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    if total <= 0.0 {
        return 0.0;
    }
    let small = w0.min(w1) / total;
    entropy_term(small) + entropy_term(1.0 - small)
}

/// Bhattacharyya value `2 sqrt(p0 p1)` of a bit with unnormalized weights.
#[inline]
pub fn bhattacharyya_weights(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    if total <= 0.0 {
        return 0.0;
    }
    (2.0 * (w0 / total).sqrt() * (w1 / total).sqrt()).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..1_000_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-10)).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy_known_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.11) - 0.499_915_958).abs() < 1e-8);
    }

    #[test]
    fn bhattacharyya_dominates_entropy() {
        for k in 0..=1000 {
            let p = k as f64 / 1000.0;
            let z = bhattacharyya_weights(1.0 - p, p);
            assert!(z + 1e-15 >= binary_entropy(p), "p = {p}");
        }
    }
}
