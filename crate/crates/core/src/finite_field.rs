//! Sources over F_{2^m} through the vector representation.
//!
//! A field element is the polynomial `Σ a_i x^i` modulo an irreducible
//! polynomial, and `V` maps it to the coefficient vector `(a_0, …, a_{m-1})`
//! with the constant term in row 0. On integer labels `V` is the identity:
//! bit `i` of the label is `a_i`. Field addition is XOR of coefficient
//! vectors and `G_n` has only 0/1 entries, so transforming over the field and
//! transforming `V(X)` over F_2 agree.

use crate::codec::{compress, CompressedBlock};
use crate::construction::PolarChart;
use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::matrix::{check_block_length, BitMatrix};
use crate::oracle::{exact_profile, OracleLimits};

/// Largest field degree supported.
pub const MAX_FIELD_DEGREE: usize = 16;

/// Default irreducible polynomials for `m = 1 ..= 8`, bit `k` = coefficient of `x^k`.
pub const DEFAULT_POLYNOMIALS: [u32; 8] = [0b11, 0b111, 0b1011, 0b10011, 0b100101, 0b1000011, 0b10000011, 0x11B];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GFSpec {
    m: usize,
    polynomial: u32,
}

impl GFSpec {
    /// The field with the default polynomial of degree `m`.
    pub fn new(m: usize) -> Result<Self> {
        let polynomial = m
            .checked_sub(1)
            .and_then(|k| DEFAULT_POLYNOMIALS.get(k))
            .copied()
            .ok_or_else(|| {
                Error::InvalidParameter(format!("no default polynomial for m = {m}; supply one explicitly"))
            })?;
        Self::with_polynomial(m, polynomial)
    }

    /// Checks that `polynomial` has degree `m` and is irreducible.
    pub fn with_polynomial(m: usize, polynomial: u32) -> Result<Self> {
        if m == 0 || m > MAX_FIELD_DEGREE {
            return Err(Error::InvalidParameter(format!("field degree {m} outside 1..={MAX_FIELD_DEGREE}")));
        }
        if degree(polynomial) != Some(m) {
            return Err(Error::InvalidParameter(format!("polynomial {polynomial:#b} does not have degree {m}")));
        }
        if !is_irreducible(polynomial) {
            return Err(Error::InvalidParameter(format!("polynomial {polynomial:#b} is reducible")));
        }
        Ok(Self { m, polynomial })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn polynomial(&self) -> u32 {
        self.polynomial
    }

    pub fn order(&self) -> usize {
        1 << self.m
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        a ^ b
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        poly_mod(clmul(a, b), self.polynomial)
    }

    /// Full multiplication table, row-major. Meant for validation at small `m`.
    pub fn mul_table(&self) -> Vec<u32> {
        let q = self.order() as u32;
        (0..q).flat_map(|a| (0..q).map(move |b| (a, b))).map(|(a, b)| self.mul(a, b)).collect()
    }

    /// Coefficient vector of `s`, constant term first.
    pub fn to_vector(&self, s: u32) -> Result<Vec<bool>> {
        self.check_symbol(s)?;
        Ok((0..self.m).map(|i| s >> i & 1 == 1).collect())
    }

    pub fn from_vector(&self, v: &[bool]) -> Result<u32> {
        if v.len() != self.m {
            return Err(Error::InvalidDimension(format!("vector of length {} for m = {}", v.len(), self.m)));
        }
        Ok(v.iter().enumerate().fold(0, |acc, (i, &b)| acc | u32::from(b) << i))
    }

    fn check_symbol(&self, s: u32) -> Result<()> {
        if (s as usize) >= self.order() {
            return Err(Error::InvalidParameter(format!("symbol {s} outside F_{}", self.order())));
        }
        Ok(())
    }
}

fn degree(p: u32) -> Option<usize> {
    (p != 0).then(|| 31 - p.leading_zeros() as usize)
}

/// Carry-less product of two polynomials of degree < 16.
fn clmul(a: u32, b: u32) -> u32 {
    let mut out = 0;
    let mut rest = b;
    while rest != 0 {
        out ^= a << rest.trailing_zeros();
        rest &= rest - 1;
    }
    out
}

fn poly_mod(mut a: u32, p: u32) -> u32 {
    let dp = degree(p).expect("nonzero modulus");
    while let Some(da) = degree(a).filter(|&d| d >= dp) {
        a ^= p << (da - dp);
    }
    a
}

/// Trial division by every polynomial of degree `1 ..= deg/2`.
fn is_irreducible(p: u32) -> bool {
    let Some(d) = degree(p) else { return false };
    if d == 0 {
        return false;
    }
    (2u32..1 << (d / 2 + 1)).all(|f| poly_mod(p, f) != 0)
}

/// `m × n` matrix whose column `j` is `V(s_j)`.
pub fn symbols_to_matrix(symbols: &[u32], spec: &GFSpec) -> Result<BitMatrix> {
    check_block_length(symbols.len())?;
    for &s in symbols {
        spec.check_symbol(s)?;
    }
    BitMatrix::from_columns(spec.m, symbols)
}

pub fn matrix_to_symbols(x: &BitMatrix, spec: &GFSpec) -> Result<Vec<u32>> {
    if x.rows() != spec.m {
        return Err(Error::InvalidDimension(format!("{} rows for a field of degree {}", x.rows(), spec.m)));
    }
    Ok(x.columns())
}

/// The law on F_2^m of `V(S)` for `S ~ μ_q`. With `V` the identity on labels
/// this is the same pmf read as a distribution over bit vectors.
pub fn induced_distribution(mu_q: &[f64], spec: &GFSpec) -> Result<SourceDistribution> {
    if mu_q.len() != spec.order() {
        return Err(Error::InvalidDistribution(format!(
            "{} probabilities for F_{}",
            mu_q.len(),
            spec.order()
        )));
    }
    let mut pmf = vec![0.0; spec.order()];
    for (s, &p) in mu_q.iter().enumerate() {
        let v = spec.to_vector(s as u32)?;
        pmf[spec.from_vector(&v)? as usize] += p;
    }
    SourceDistribution::new(spec.m, pmf)
}

/// Compresses a symbol sequence with a chart built for the induced law.
pub fn compress_q_ary(symbols: &[u32], spec: &GFSpec, chart: &PolarChart) -> Result<CompressedBlock> {
    if chart.m() != spec.m {
        return Err(Error::InvalidDimension(format!(
            "chart has m = {} but the field has degree {}",
            chart.m(),
            spec.m
        )));
    }
    compress(&symbols_to_matrix(symbols, spec)?, chart)
}

/// `X · G_n` with entries in F_{2^m}, evaluated with the field operations
/// from the Kronecker definition of `G_n`. Quadratic in `n`; for checks only.
pub fn field_transform(symbols: &[u32], spec: &GFSpec) -> Result<Vec<u32>> {
    let n = symbols.len();
    check_block_length(n)?;
    for &s in symbols {
        spec.check_symbol(s)?;
    }
    // G_n[k][j] = 1 iff the bits of j are a subset of the bits of k.
    Ok((0..n)
        .map(|j| {
            (0..n).fold(0, |acc, k| {
                let g = u32::from(k & j == j);
                spec.add(acc, spec.mul(symbols[k], g))
            })
        })
        .collect())
}

/// Exact symbol-level `H(Y_j | Y^{j-1})` in bits for every column.
pub fn symbol_entropy_report(mu_q: &[f64], spec: &GFSpec, n: usize, limits: OracleLimits) -> Result<Vec<f64>> {
    let mu = induced_distribution(mu_q, spec)?;
    Ok(exact_profile(&mu, n, limits)?.column_entropies())
}
