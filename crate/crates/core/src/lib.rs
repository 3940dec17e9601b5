//! Matrix polarization for source coding over F_2^m.
//!
//! An `m × n` matrix `X` with i.i.d. columns drawn from a distribution μ on
//! F_2^m is multiplied on the right by the polar matrix `G_n`. The bits of
//! `Y = X · G_n` polarize: given the bits before them in column-major order,
//! almost all are either nearly deterministic or nearly uniform. Storing only
//! the uniform ones compresses `X` to about `n · H(μ)` bits.

pub mod codec;
pub mod construction;
pub mod distribution;
pub mod error;
pub mod extractor;
pub mod finite_field;
pub mod format;
pub mod matrix;
pub mod memory_source;
pub mod numeric;
pub mod slepian_wolf;
pub mod oracle;
pub mod transform;

pub use construction::{build_chart, rank_profile, ChartDiagnostics, ChartParams, PolarChart, RankProfile, Threshold};
pub use distribution::SourceDistribution;
pub use error::{Error, Result};
pub use matrix::BitMatrix;
