//! Compression to the Stored bits of `Y = X · G_n` and successive-cancellation
//! reconstruction.

use bitvec::prelude::*;

use crate::construction::sc::{bit_weights, ColumnPolicy, ScEngine};
use crate::construction::{check_sc_size, PolarChart};
use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::format::{ByteReader, ByteWriter, Fingerprint};
use crate::matrix::{check_block_length, BitMatrix};
use crate::transform::polar_transform_matrix;

pub const BLOCK_MAGIC: &[u8; 4] = b"PMXD";
pub const BLOCK_VERSION: u8 = 1;

/// The Stored bits of one block, in traversal order (`j` ascending, then `i`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBlock {
    pub chart_fingerprint: Fingerprint,
    pub mu_fingerprint: Fingerprint,
    pub m: usize,
    pub n: usize,
    pub payload: BitVec<u64, Lsb0>,
}

impl CompressedBlock {
    pub fn payload_bits(&self) -> usize {
        self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(BLOCK_MAGIC)
            .u8(BLOCK_VERSION)
            .bytes(&self.chart_fingerprint)
            .bytes(&self.mu_fingerprint)
            .u16(self.m as u16)
            .u32(self.n as u32)
            .u64(self.payload.len() as u64)
            .bits(&self.payload);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new("compressed block", bytes);
        r.magic(BLOCK_MAGIC)?;
        r.version(BLOCK_VERSION)?;
        let chart_fingerprint = r.array::<32>()?;
        let mu_fingerprint = r.array::<32>()?;
        let m = r.u16()? as usize;
        let n = r.u32()? as usize;
        if m == 0 || check_block_length(n).is_err() {
            return Err(r.err(format!("invalid shape {m}×{n}")));
        }
        let count = r.u64()?;
        if count > (m * n) as u64 {
            return Err(r.err(format!("{count} payload bits exceed the {m}×{n} block")));
        }
        let payload = r.bits(count as usize)?;
        r.finish()?;
        Ok(Self {
            chart_fingerprint,
            mu_fingerprint,
            m,
            n,
            payload,
        })
    }
}

fn check_pair(chart: &PolarChart, mu: &SourceDistribution) -> Result<()> {
    chart.check_source(mu)?;
    check_sc_size(chart.m(), chart.n())
}

/// Stored bits of `Y` in traversal order.
pub fn stored_bits(y: &BitMatrix, chart: &PolarChart) -> BitVec<u64, Lsb0> {
    let mut out = BitVec::with_capacity(chart.stored_count());
    for j in 0..chart.n() {
        for i in 0..chart.m() {
            if chart.is_stored(i, j) {
                out.push(y.get(i, j));
            }
        }
    }
    out
}

pub fn compress(x: &BitMatrix, chart: &PolarChart) -> Result<CompressedBlock> {
    if x.rows() != chart.m() || x.cols() != chart.n() {
        return Err(Error::InvalidDimension(format!(
            "{}×{} matrix for a {}×{} chart",
            x.rows(),
            x.cols(),
            chart.m(),
            chart.n()
        )));
    }
    let y = polar_transform_matrix(x);
    Ok(CompressedBlock {
        chart_fingerprint: chart.fingerprint(),
        mu_fingerprint: *chart.mu_fingerprint(),
        m: chart.m(),
        n: chart.n(),
        payload: stored_bits(&y, chart),
    })
}

struct Decoder<'a> {
    chart: &'a PolarChart,
    payload: &'a BitSlice<u64, Lsb0>,
    cursor: usize,
    /// When present, Deterministic positions take the true bit instead of
    /// the prediction, and mispredictions are recorded.
    genie: Option<&'a [u32]>,
    mispredicted: Vec<(usize, usize)>,
}

impl ColumnPolicy for Decoder<'_> {
    fn decide(&mut self, column: usize, law: &[f64]) -> Result<u32> {
        let mut symbol = 0u32;
        for i in 0..self.chart.m() {
            let (w0, w1) = bit_weights(law, symbol, i);
            let bit = if self.chart.is_stored(i, column) {
                let bit = *self
                    .payload
                    .get(self.cursor)
                    .ok_or(Error::PayloadExhausted { consumed: self.cursor })?;
                self.cursor += 1;
                if (if bit { w1 } else { w0 }) <= 0.0 {
                    return Err(Error::ImpossibleObservation { column });
                }
                bit
            } else {
                if w0 + w1 <= 0.0 || (w0 + w1).is_nan() {
                    return Err(Error::ImpossibleObservation { column });
                }
                let predicted = w1 > w0;
                match self.genie {
                    Some(truth) => {
                        let actual = truth[column] >> i & 1 == 1;
                        if actual != predicted {
                            self.mispredicted.push((i, column));
                        }
                        actual
                    }
                    None => predicted,
                }
            };
            symbol |= u32::from(bit) << i;
        }
        Ok(symbol)
    }
}

fn run_decoder(
    block: &CompressedBlock,
    chart: &PolarChart,
    mu: &SourceDistribution,
    genie: Option<&[u32]>,
) -> Result<(BitMatrix, Vec<(usize, usize)>)> {
    check_pair(chart, mu)?;
    if block.chart_fingerprint != chart.fingerprint() {
        return Err(Error::FingerprintMismatch("block was compressed with a different chart"));
    }
    if &block.mu_fingerprint != chart.mu_fingerprint() {
        return Err(Error::FingerprintMismatch("block and chart disagree on the distribution"));
    }
    if block.m != chart.m() || block.n != chart.n() {
        return Err(Error::InvalidDimension(format!(
            "{}×{} block for a {}×{} chart",
            block.m,
            block.n,
            chart.m(),
            chart.n()
        )));
    }
    if block.payload.len() != chart.stored_count() {
        return Err(Error::PayloadLength {
            expected: chart.stored_count(),
            actual: block.payload.len(),
        });
    }
    let mut decoder = Decoder {
        chart,
        payload: &block.payload,
        cursor: 0,
        genie,
        mispredicted: Vec::new(),
    };
    let mut engine = ScEngine::new(chart.m(), chart.n());
    let x = engine.run(mu.pmf(), &mut decoder)?;
    if decoder.cursor != block.payload.len() {
        return Err(Error::PayloadLength {
            expected: decoder.cursor,
            actual: block.payload.len(),
        });
    }
    Ok((BitMatrix::from_columns(chart.m(), x)?, decoder.mispredicted))
}

/// Reconstructs `X` from a block. Deterministic positions take the more
/// likely bit given everything decided before them, ties going to 0.
pub fn decompress(block: &CompressedBlock, chart: &PolarChart, mu: &SourceDistribution) -> Result<BitMatrix> {
    run_decoder(block, chart, mu, None).map(|(x, _)| x)
}

/// Decodes with the true `Y` supplied at Deterministic positions and reports
/// where the plain decoder's prediction would have disagreed with it. Plain
/// decoding succeeds exactly when the returned list is empty.
#[doc(hidden)]
pub fn decompress_with_genie(
    block: &CompressedBlock,
    chart: &PolarChart,
    mu: &SourceDistribution,
    y: &BitMatrix,
) -> Result<(BitMatrix, Vec<(usize, usize)>)> {
    if y.rows() != chart.m() || y.cols() != chart.n() {
        return Err(Error::InvalidDimension("genie matrix does not match the chart".into()));
    }
    run_decoder(block, chart, mu, Some(&y.columns()))
}

/// Union bound `Σ_{Deterministic} z_est` on the block failure probability.
pub fn predicted_failure_bound(chart: &PolarChart) -> f64 {
    chart.predicted_failure_bound()
}
