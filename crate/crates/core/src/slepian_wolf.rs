//! Distributed compression: each row of `X` is encoded by its own user from
//! that row alone, and one decoder reconstructs the whole matrix.

use bitvec::prelude::*;

use crate::codec::{decompress, CompressedBlock};
use crate::construction::PolarChart;
use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::format::{narrow, ByteReader, ByteWriter, Fingerprint};
use crate::matrix::BitMatrix;
use crate::transform::polar_transform_row;

pub const USER_MAGIC: &[u8; 4] = b"PMXU";
pub const USER_VERSION: u8 = 1;

/// Row `user` of `Y` at that row's Stored positions, `j` ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserPayload {
    pub user: usize,
    pub chart_fingerprint: Fingerprint,
    pub bits: BitVec<u64, Lsb0>,
}

impl UserPayload {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(USER_MAGIC)
            .u8(USER_VERSION)
            .u16(self.user as u16)
            .bytes(&self.chart_fingerprint)
            .u64(self.bits.len() as u64)
            .bits(&self.bits);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new("user payload", bytes);
        r.magic(USER_MAGIC)?;
        r.version(USER_VERSION)?;
        let user = r.u16()? as usize;
        let chart_fingerprint = r.array::<32>()?;
        let count = r.u64()?;
        if count.div_ceil(8) > r.remaining().len() as u64 {
            return Err(r.err(format!("{count} bits do not fit in the file")));
        }
        let bits = r.bits(count as usize)?;
        r.finish()?;
        Ok(Self {
            user,
            chart_fingerprint,
            bits,
        })
    }
}

/// Encodes one user's row. Sees nothing but that row and the shared chart.
pub fn sw_encode_user(x_row: &BitSlice<u64, Lsb0>, chart: &PolarChart, user: usize) -> Result<UserPayload> {
    if user >= chart.m() {
        return Err(Error::InvalidParameter(format!("user {user} of {}", chart.m())));
    }
    narrow::<u16>(user, "user index")?;
    if x_row.len() != chart.n() {
        return Err(Error::InvalidDimension(format!(
            "row of length {} for a chart with n = {}",
            x_row.len(),
            chart.n()
        )));
    }
    let y_row = polar_transform_row(x_row)?;
    let bits = (0..chart.n()).filter(|&j| chart.is_stored(user, j)).map(|j| y_row[j]).collect();
    Ok(UserPayload {
        user,
        chart_fingerprint: chart.fingerprint(),
        bits,
    })
}

/// Encodes every row of `x` independently.
pub fn sw_encode_all(x: &BitMatrix, chart: &PolarChart) -> Result<Vec<UserPayload>> {
    if x.rows() != chart.m() {
        return Err(Error::InvalidDimension(format!("{} rows for a chart with m = {}", x.rows(), chart.m())));
    }
    (0..chart.m()).map(|i| sw_encode_user(&x.row(i), chart, i)).collect()
}

/// Interleaves the user payloads into the centralized traversal order.
pub fn assemble_payload(payloads: &[UserPayload], chart: &PolarChart) -> Result<BitVec<u64, Lsb0>> {
    let fingerprint = chart.fingerprint();
    let mut by_user: Vec<Option<&UserPayload>> = vec![None; chart.m()];
    for p in payloads {
        if p.chart_fingerprint != fingerprint {
            return Err(Error::FingerprintMismatch("user payload was encoded with a different chart"));
        }
        let slot = by_user
            .get_mut(p.user)
            .ok_or_else(|| Error::InvalidParameter(format!("user {} of {}", p.user, chart.m())))?;
        if slot.replace(p).is_some() {
            return Err(Error::DuplicateUser(p.user));
        }
    }
    let mut rows = Vec::with_capacity(chart.m());
    for (i, slot) in by_user.into_iter().enumerate() {
        let p = slot.ok_or(Error::MissingUser(i))?;
        let expected = chart.stored_columns(i).len();
        if p.bits.len() != expected {
            return Err(Error::PayloadLength {
                expected,
                actual: p.bits.len(),
            });
        }
        rows.push(p.bits.iter().by_vals());
    }
    let mut out = BitVec::with_capacity(chart.stored_count());
    for j in 0..chart.n() {
        for (i, row) in rows.iter_mut().enumerate() {
            if chart.is_stored(i, j) {
                out.push(row.next().expect("length checked"));
            }
        }
    }
    Ok(out)
}

/// Splits a centralized payload into per-user payloads.
pub fn split_block(block: &CompressedBlock, chart: &PolarChart) -> Result<Vec<UserPayload>> {
    if block.payload.len() != chart.stored_count() {
        return Err(Error::PayloadLength {
            expected: chart.stored_count(),
            actual: block.payload.len(),
        });
    }
    let mut rows: Vec<BitVec<u64, Lsb0>> = vec![BitVec::new(); chart.m()];
    let mut bits = block.payload.iter().by_vals();
    for j in 0..chart.n() {
        for (i, row) in rows.iter_mut().enumerate() {
            if chart.is_stored(i, j) {
                row.push(bits.next().expect("length checked"));
            }
        }
    }
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(user, bits)| UserPayload {
            user,
            chart_fingerprint: block.chart_fingerprint,
            bits,
        })
        .collect())
}

/// Joint decoder: reassembles the stored-bit stream and runs the codec.
pub fn sw_decode(payloads: &[UserPayload], chart: &PolarChart, mu: &SourceDistribution) -> Result<BitMatrix> {
    chart.check_source(mu)?;
    let block = CompressedBlock {
        chart_fingerprint: chart.fingerprint(),
        mu_fingerprint: *chart.mu_fingerprint(),
        m: chart.m(),
        n: chart.n(),
        payload: assemble_payload(payloads, chart)?,
    };
    decompress(&block, chart, mu)
}
