//! The polar transform `y = x · G_n` over F_2, `G_n = [[1,0],[1,1]]^{⊗ log2 n}`.
//!
//! `G_n` is used as a plain Kronecker power: no bit-reversal permutation is
//! applied, so output index `j` is the `j`-th column of the Kronecker matrix.
//! The butterfly stage with half-width `h` performs `x[j] ^= x[j + h]` for
//! every `j` with `j & h == 0`. `G_n` is an involution, so the same routine
//! inverts itself.

use bitvec::prelude::*;

use crate::error::Result;
use crate::matrix::{check_block_length, BitMatrix, BitRow};

/// In-word masks selecting bit positions `j` with `j & h == 0`, for `h = 1 .. 32`.
const STAGE_MASKS: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0f0f_0f0f_0f0f_0f0f,
    0x00ff_00ff_00ff_00ff,
    0x0000_ffff_0000_ffff,
    0x0000_0000_ffff_ffff,
];

/// Transforms a packed row of `n` bits (LSB-first words) in place.
///
/// Bits at positions `>= n` must be zero and stay zero.
pub fn polar_transform_words(words: &mut [u64], n: usize) {
    debug_assert!(n.is_power_of_two() && words.len() == n.div_ceil(64));
    let in_word_stages = n.trailing_zeros().min(6) as usize;
    for word in words.iter_mut() {
        let mut w = *word;
        for (s, mask) in STAGE_MASKS.iter().enumerate().take(in_word_stages) {
            w ^= (w >> (1 << s)) & mask;
        }
        *word = w;
    }
    let mut h = 1;
    while h < words.len() {
        for block in words.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        h *= 2;
    }
}

/// Returns `x · G_n` for a row of length `n`.
pub fn polar_transform_row(x: &BitSlice<u64, Lsb0>) -> Result<BitRow> {
    let n = x.len();
    check_block_length(n)?;
    let mut words = vec![0u64; n.div_ceil(64)];
    for j in x.iter_ones() {
        words[j / 64] |= 1 << (j % 64);
    }
    polar_transform_words(&mut words, n);
    let mut out = BitRow::from_vec(words);
    out.truncate(n);
    Ok(out)
}

/// Applies the row transform to every row of `x`.
pub fn polar_transform_matrix(x: &BitMatrix) -> BitMatrix {
    let n = x.cols();
    let mut out = BitMatrix::zeros(x.rows(), n).expect("shape already valid");
    let mut words = vec![0u64; n.div_ceil(64)];
    for i in 0..x.rows() {
        words.fill(0);
        for j in 0..n {
            if x.get(i, j) {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        polar_transform_words(&mut words, n);
        for j in 0..n {
            if words[j / 64] >> (j % 64) & 1 == 1 {
                out.set(i, j, true);
            }
        }
    }
    out
}

/// Transforms a sequence of column symbols in place.
///
/// Every row undergoes the same linear map, so XOR-ing whole columns is the
/// row transform applied to all rows at once.
pub fn polar_transform_symbols(symbols: &mut [u32]) -> Result<()> {
    let n = symbols.len();
    check_block_length(n)?;
    let mut h = 1;
    while h < n {
        for block in symbols.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Unpacked scalar butterfly; returns the number of XOR operations performed.
pub fn polar_transform_scalar(bits: &mut [bool]) -> Result<usize> {
    let n = bits.len();
    check_block_length(n)?;
    let mut xors = 0;
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for j in start..start + h {
                bits[j] ^= bits[j + h];
                xors += 1;
            }
        }
        h *= 2;
    }
    Ok(xors)
}
