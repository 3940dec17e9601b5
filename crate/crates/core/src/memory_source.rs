//! Binary streams with memory: consecutive blocks of length `m` become the
//! columns of an `m × n` matrix, optionally separated by gaps of `g` bits
//! that are stored verbatim.
//!
//! Stream layout: `block_0, gap_0, block_1, gap_1, …, block_{n-1}`. Bit `t`
//! of block `j` is entry `(t, j)` of the matrix.

use bitvec::prelude::*;

use crate::codec::{compress, decompress, CompressedBlock};
use crate::construction::PolarChart;
use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::format::{narrow, ByteReader, ByteWriter};
use crate::matrix::{check_block_length, BitMatrix};

pub const STREAM_MAGIC: &[u8; 4] = b"PMXS";
pub const STREAM_VERSION: u8 = 1;

/// Bytes of a PMXD block before its payload.
const BLOCK_HEADER_LEN: usize = 4 + 1 + 32 + 32 + 2 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamLayout {
    pub m: usize,
    pub n: usize,
    pub g: usize,
}

impl StreamLayout {
    pub fn new(m: usize, n: usize, g: usize) -> Result<Self> {
        check_block_length(n)?;
        if m == 0 {
            return Err(Error::InvalidDimension("block length must be positive".into()));
        }
        let layout = Self { m, n, g };
        layout
            .m
            .checked_mul(n)
            .and_then(|b| g.checked_mul(n - 1).and_then(|gaps| b.checked_add(gaps)))
            .ok_or_else(|| Error::InvalidDimension(format!("layout {m}×{n} with gap {g} overflows")))?;
        Ok(layout)
    }

    pub fn gap_bits(&self) -> usize {
        self.g * (self.n - 1)
    }

    /// `m n + g (n − 1)`.
    pub fn stream_len(&self) -> usize {
        self.m * self.n + self.gap_bits()
    }

    /// Compressed bits per source bit when `stored` matrix bits are kept.
    pub fn rate(&self, stored: usize) -> f64 {
        (stored + self.gap_bits()) as f64 / self.stream_len() as f64
    }

    /// Share of the stream spent on verbatim gaps.
    pub fn gap_overhead(&self) -> f64 {
        self.gap_bits() as f64 / self.stream_len() as f64
    }
}

pub fn blockify(stream: &BitSlice<u64, Lsb0>, layout: &StreamLayout) -> Result<(BitMatrix, BitVec<u64, Lsb0>)> {
    if stream.len() != layout.stream_len() {
        return Err(Error::InvalidDimension(format!(
            "stream of {} bits for a layout consuming {}",
            stream.len(),
            layout.stream_len()
        )));
    }
    let mut x = BitMatrix::zeros(layout.m, layout.n)?;
    let mut gaps = BitVec::with_capacity(layout.gap_bits());
    let stride = layout.m + layout.g;
    for j in 0..layout.n {
        let start = j * stride;
        for t in 0..layout.m {
            x.set(t, j, stream[start + t]);
        }
        if j + 1 < layout.n {
            gaps.extend_from_bitslice(&stream[start + layout.m..start + stride]);
        }
    }
    Ok((x, gaps))
}

pub fn deblockify(x: &BitMatrix, gaps: &BitSlice<u64, Lsb0>, layout: &StreamLayout) -> Result<BitVec<u64, Lsb0>> {
    if x.rows() != layout.m || x.cols() != layout.n || gaps.len() != layout.gap_bits() {
        return Err(Error::InvalidDimension(format!(
            "{}×{} matrix with {} gap bits for layout {layout:?}",
            x.rows(),
            x.cols(),
            gaps.len()
        )));
    }
    let mut out = BitVec::with_capacity(layout.stream_len());
    for j in 0..layout.n {
        for t in 0..layout.m {
            out.push(x.get(t, j));
        }
        if j + 1 < layout.n {
            out.extend_from_bitslice(&gaps[j * layout.g..(j + 1) * layout.g]);
        }
    }
    Ok(out)
}

/// A compressed matrix part plus the verbatim gap bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedStream {
    pub block: CompressedBlock,
    pub layout: StreamLayout,
    pub gaps: BitVec<u64, Lsb0>,
}

impl CompressedStream {
    pub fn rate(&self) -> f64 {
        self.layout.rate(self.block.payload.len())
    }

    /// The PMXD block followed by the stream header and the gap bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.block.to_bytes();
        let mut w = ByteWriter::new();
        w.bytes(STREAM_MAGIC)
            .u8(STREAM_VERSION)
            .u16(self.layout.m as u16)
            .u32(self.layout.n as u32)
            .u32(self.layout.g as u32)
            .u64(self.gaps.len() as u64)
            .bits(&self.gaps);
        out.extend(w.finish());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |reason: &str| Error::format("compressed stream", reason);
        let header = bytes.get(..BLOCK_HEADER_LEN).ok_or_else(|| err("truncated block header"))?;
        let count = u64::from_le_bytes(header[BLOCK_HEADER_LEN - 8..].try_into().expect("8 bytes"));
        let block_len = usize::try_from(count.div_ceil(8))
            .ok()
            .and_then(|p| p.checked_add(BLOCK_HEADER_LEN))
            .filter(|&l| l <= bytes.len())
            .ok_or_else(|| err("block payload runs past the end of the file"))?;
        let block = CompressedBlock::from_bytes(&bytes[..block_len])?;

        let mut r = ByteReader::new("compressed stream", &bytes[block_len..]);
        r.magic(STREAM_MAGIC)?;
        r.version(STREAM_VERSION)?;
        let m = r.u16()? as usize;
        let n = r.u32()? as usize;
        let g = r.u32()? as usize;
        let layout = StreamLayout::new(m, n, g).map_err(|e| r.err(e.to_string()))?;
        if m != block.m || n != block.n {
            return Err(r.err("layout disagrees with the block shape"));
        }
        let count = r.u64()?;
        if count != layout.gap_bits() as u64 {
            return Err(r.err(format!("{count} gap bits, layout needs {}", layout.gap_bits())));
        }
        let gaps = r.bits(layout.gap_bits())?;
        r.finish()?;
        Ok(Self { block, layout, gaps })
    }
}

pub fn compress_stream(
    stream: &BitSlice<u64, Lsb0>,
    chart: &PolarChart,
    layout: &StreamLayout,
) -> Result<CompressedStream> {
    if chart.m() != layout.m || chart.n() != layout.n {
        return Err(Error::InvalidDimension(format!(
            "{}×{} chart for layout {layout:?}",
            chart.m(),
            chart.n()
        )));
    }
    narrow::<u16>(layout.m, "block length")?;
    narrow::<u32>(layout.g, "gap length")?;
    let (x, gaps) = blockify(stream, layout)?;
    Ok(CompressedStream {
        block: compress(&x, chart)?,
        layout: *layout,
        gaps,
    })
}

pub fn decompress_stream(
    compressed: &CompressedStream,
    chart: &PolarChart,
    mu_block: &SourceDistribution,
) -> Result<BitVec<u64, Lsb0>> {
    let x = decompress(&compressed.block, chart, mu_block)?;
    deblockify(&x, &compressed.gaps, &compressed.layout)
}
