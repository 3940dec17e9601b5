//! File helpers: atomic writes, symbol files and packed bit files.
//!
//! A symbol file holds one matrix column per little-endian unsigned word of
//! 1, 2 or 4 bytes (for `m ≤ 8`, `m ≤ 16`, otherwise). A bit file holds bits
//! LSB-first within each byte, zero-padded to a whole byte.

use std::io::Write;
use std::path::Path;

use bitvec::prelude::*;
use pmx::{BitMatrix, Error, Result};

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn symbol_width(m: usize) -> usize {
    match m {
        0..=8 => 1,
        9..=16 => 2,
        _ => 4,
    }
}

pub fn decode_symbols(bytes: &[u8], m: usize) -> Result<Vec<u32>> {
    let width = symbol_width(m);
    if !bytes.len().is_multiple_of(width) {
        return Err(Error::InvalidDimension(format!(
            "symbol file of {} bytes is not a multiple of {width}",
            bytes.len()
        )));
    }
    let symbols: Vec<u32> = bytes
        .chunks_exact(width)
        .map(|c| c.iter().rev().fold(0u32, |acc, &b| acc << 8 | u32::from(b)))
        .collect();
    if let Some(&s) = symbols.iter().find(|&&s| u64::from(s) >> m != 0) {
        return Err(Error::InvalidDimension(format!("symbol {s} does not fit in {m} bits")));
    }
    Ok(symbols)
}

pub fn encode_symbols(symbols: &[u32], m: usize) -> Vec<u8> {
    let width = symbol_width(m);
    symbols.iter().flat_map(|s| s.to_le_bytes().into_iter().take(width)).collect()
}

pub fn read_matrix(path: &Path, m: usize) -> Result<BitMatrix> {
    BitMatrix::from_columns(m, &decode_symbols(&read(path)?, m)?)
}

pub fn write_matrix(path: &Path, x: &BitMatrix) -> Result<()> {
    write_atomic(path, &encode_symbols(&x.columns(), x.rows()))
}

/// Reads exactly `len` bits; the file must be `⌈len / 8⌉` bytes with zero padding.
pub fn decode_bits(bytes: &[u8], len: usize) -> Result<BitVec<u64, Lsb0>> {
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::InvalidDimension(format!(
            "bit file of {} bytes, expected {} for {len} bits",
            bytes.len(),
            len.div_ceil(8)
        )));
    }
    let all = BitVec::<u8, Lsb0>::from_slice(bytes);
    if all[len..].any() {
        return Err(Error::InvalidDimension("nonzero padding after the last bit".into()));
    }
    Ok(all[..len].iter().by_vals().collect())
}

pub fn encode_bits(bits: &BitSlice<u64, Lsb0>) -> Vec<u8> {
    let mut out = BitVec::<u8, Lsb0>::with_capacity(bits.len());
    out.extend_from_bitslice(bits);
    out.set_uninitialized(false);
    out.into_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_round_trip_at_each_width() {
        for (m, symbols) in [(3, vec![0, 7, 5]), (12, vec![4095, 1, 256]), (20, vec![1 << 19, 3])] {
            let bytes = encode_symbols(&symbols, m);
            assert_eq!(bytes.len(), symbols.len() * symbol_width(m));
            assert_eq!(decode_symbols(&bytes, m).unwrap(), symbols);
        }
        assert!(decode_symbols(&[8], 3).is_err());
        assert!(decode_symbols(&[1, 2, 3], 12).is_err());
    }

    #[test]
    fn bits_round_trip_and_reject_padding() {
        let bits: BitVec<u64, Lsb0> = (0..11).map(|t| t % 3 == 1).collect();
        let bytes = encode_bits(&bits);
        assert_eq!(bytes.len(), 2);
        assert_eq!(decode_bits(&bytes, 11).unwrap(), bits);
        assert!(decode_bits(&bytes, 16).is_ok());
        assert!(decode_bits(&[0, 0x80], 11).is_err());
        assert!(decode_bits(&bytes, 20).is_err());
    }
}
