//! Little-endian byte writer/reader and hashing shared by the file formats.

use bitvec::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type Fingerprint = [u8; 32];

pub fn sha256(bytes: &[u8]) -> Fingerprint {
    Sha256::digest(bytes).into()
}

/// Lowercase hex rendering, used in reports.
pub fn hex(fp: &Fingerprint) -> String {
    fp.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Default)]
pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(b);
        self
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32(&mut self, v: f32) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    /// Packs bits LSB-first within each byte, zero-padding the last byte.
    pub fn bits<O: BitStore>(&mut self, bits: &BitSlice<O, Lsb0>) -> &mut Self {
        let mut packed = vec![0u8; bits.len().div_ceil(8)];
        for idx in bits.iter_ones() {
            packed[idx / 8] |= 1 << (idx % 8);
        }
        self.bytes(&packed)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct ByteReader<'a> {
    kind: &'static str,
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(kind: &'static str, data: &'a [u8]) -> Self {
        Self { kind, data, pos: 0 }
    }

    pub fn err(&self, reason: impl Into<String>) -> Error {
        Error::format(self.kind, reason)
    }

    pub fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| {
                self.err(format!(
                    "truncated at byte {} (wanted {len} more)",
                    self.pos
                ))
            })?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.array::<4>()?;
        if &got != magic {
            return Err(self.err(format!("bad magic {got:?}")));
        }
        Ok(())
    }

    pub fn version(&mut self, expected: u8) -> Result<()> {
        let v = self.u8()?;
        if v != expected {
            return Err(self.err(format!("unsupported version {v}")));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    /// Reads `count` bits packed LSB-first; padding bits must be zero.
    pub fn bits(&mut self, count: usize) -> Result<BitVec<u64, Lsb0>> {
        let bytes = self.take(count.div_ceil(8))?;
        let mut out = BitVec::with_capacity(count);
        for idx in 0..count {
            out.push(bytes[idx / 8] >> (idx % 8) & 1 == 1);
        }
        if !count.is_multiple_of(8) && bytes[count / 8] >> (count % 8) != 0 {
            return Err(self.err("nonzero padding bits"));
        }
        Ok(out)
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(self.err(format!(
                "{} trailing bytes",
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }

    pub fn remaining(&self) -> &'a [u8] {
        &self.data[self.pos..]
    }
}

/// Checked narrowing for header fields.
pub(crate) fn narrow<T: TryFrom<usize>>(value: usize, what: &'static str) -> Result<T> {
    T::try_from(value).map_err(|_| Error::InvalidDimension(format!("{what} = {value} does not fit the file format")))
}
