//! Packed `m × n` matrices over F_2.
//!
//! Rows are the coordinate streams (users, field coordinates, block offsets)
//! and columns are source symbols. Storage is column-major so that a column,
//! read as an integer with row 0 in the least significant bit, is exactly the
//! symbol encoding used by [`SourceDistribution`](crate::SourceDistribution).

use std::fmt;

use bitvec::prelude::*;

use crate::error::{Error, Result};

/// A packed bit row, bit `j` being column `j`.
pub type BitRow = BitVec<u64, Lsb0>;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bits: BitVec<u64, Lsb0>,
}

pub(crate) fn check_block_length(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidDimension(format!(
            "length {n} is not a power of two"
        )));
    }
    Ok(())
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 {
            return Err(Error::InvalidDimension("matrix needs at least one row".into()));
        }
        check_block_length(cols)?;
        Ok(Self {
            rows,
            cols,
            bits: bitvec![u64, Lsb0; 0; rows * cols],
        })
    }

    /// Builds a matrix whose column `j` is the symbol `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[u32]) -> Result<Self> {
        let mut out = Self::zeros(rows, columns.len())?;
        for (j, &sym) in columns.iter().enumerate() {
            out.set_column(j, sym)?;
        }
        Ok(out)
    }

    /// Builds a matrix from `rows` rows of equal length.
    pub fn from_rows(rows: &[BitRow]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidDimension("no rows".into()))?;
        let mut out = Self::zeros(rows.len(), first.len())?;
        for (i, row) in rows.iter().enumerate() {
            out.set_row(i, row)?;
        }
        Ok(out)
    }

    /// Parses the raw column-major, LSB-first packing produced by
    /// [`to_packed_bytes`](Self::to_packed_bytes).
    pub fn from_packed_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Self> {
        let mut out = Self::zeros(rows, cols)?;
        let len = rows * cols;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::InvalidDimension(format!(
                "{} bytes cannot hold a {rows}×{cols} matrix",
                bytes.len()
            )));
        }
        for idx in 0..len {
            if bytes[idx / 8] >> (idx % 8) & 1 == 1 {
                out.bits.set(idx, true);
            }
        }
        Ok(out)
    }

    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for idx in self.bits.iter_ones() {
            out[idx / 8] |= 1 << (idx % 8);
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols, "({i}, {j}) out of bounds");
        self.bits[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "({i}, {j}) out of bounds");
        self.bits.set(j * self.rows + i, value);
    }

    /// Column `j` as an integer symbol, row 0 in the least significant bit.
    /// Requires `rows <= 32`.
    pub fn column(&self, j: usize) -> u32 {
        assert!(self.rows <= 32, "symbol view needs at most 32 rows");
        self.bits[j * self.rows..(j + 1) * self.rows].load_le::<u32>()
    }

    pub fn set_column(&mut self, j: usize, symbol: u32) -> Result<()> {
        if self.rows < 32 && symbol >> self.rows != 0 {
            return Err(Error::InvalidDimension(format!(
                "symbol {symbol} does not fit {} rows",
                self.rows
            )));
        }
        if self.rows > 32 {
            return Err(Error::InvalidDimension("symbol view needs at most 32 rows".into()));
        }
        self.bits[j * self.rows..(j + 1) * self.rows].store_le(symbol);
        Ok(())
    }

    /// All columns as symbols.
    pub fn columns(&self) -> Vec<u32> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, i: usize) -> BitRow {
        assert!(i < self.rows);
        (0..self.cols).map(|j| self.bits[j * self.rows + i]).collect()
    }

    pub fn set_row(&mut self, i: usize, row: &BitSlice<u64, Lsb0>) -> Result<()> {
        if i >= self.rows || row.len() != self.cols {
            return Err(Error::InvalidDimension(format!(
                "row {i} of length {} does not fit a {}×{} matrix",
                row.len(),
                self.rows,
                self.cols
            )));
        }
        for (j, bit) in row.iter().by_vals().enumerate() {
            self.bits.set(j * self.rows + i, bit);
        }
        Ok(())
    }

    /// Entry-wise XOR of two matrices of equal shape.
    pub fn xor(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::InvalidDimension(format!(
                "{}×{} vs {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        out.bits ^= other.bits.as_bitslice();
        Ok(out)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}×{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: String = (0..self.cols)
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        write!(f, "]")
    }
}
