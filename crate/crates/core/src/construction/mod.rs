//! Chart construction by genie-aided Monte-Carlo successive cancellation.
//!
//! Each sample draws `X ~ μ^{⊗n}`, computes `Y = X · G_n`, and runs the
//! successive-cancellation recursion while committing the true `Y_j` at every
//! column. The column laws it produces are the exact conditional laws of `Y_j`
//! given the realized past, so per-bit Bhattacharyya and entropy values
//! averaged over samples are unbiased estimates of `Z(Y_j[i] | Y^{j-1}, Y_j[<i])`
//! and `H(Y_j[i] | Y^{j-1}, Y_j[<i])`.

mod chart;
mod rank;
pub(crate) mod sc;
mod synthetic;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use chart::{PolarChart, Threshold, CHART_MAGIC, CHART_VERSION};
pub use rank::{rank_profile, RankProfile, MAX_RANK_ROWS};
pub use synthetic::{
    combine_minus, combine_plus, walsh_hadamard, xor_convolve_direct, xor_convolve_fast, SyntheticDistribution,
    DIRECT_CONVOLUTION_MAX,
};

use crate::distribution::SourceDistribution;
use crate::error::{Error, Result};
use crate::matrix::check_block_length;
use crate::numeric::{bhattacharyya_weights, binary_entropy_weights};
use crate::transform::polar_transform_symbols;
use sc::{bit_weights, ColumnPolicy, ScEngine};

/// Cap on `n · 2^m`, the number of probabilities held at the top level of the
/// recursion.
pub const MAX_SC_CELLS: usize = 1 << 26;

pub(crate) fn check_sc_size(m: usize, n: usize) -> Result<()> {
    check_block_length(n)?;
    let cells = 1usize.checked_shl(m as u32).and_then(|q| q.checked_mul(n)).unwrap_or(usize::MAX);
    if m == 0 || m > 30 {
        return Err(Error::InvalidDimension(format!("m = {m} rows")));
    }
    if cells > MAX_SC_CELLS {
        return Err(Error::ResourceLimit {
            what: "successive-cancellation state",
            actual: cells,
            cap: MAX_SC_CELLS,
        });
    }
    Ok(())
}

/// RNG of Monte-Carlo sample `index`. Each sample owns a ChaCha stream, so
/// estimates do not depend on how samples are split between workers.
pub(crate) fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-sample observer of the genie pass.
pub(crate) trait GenieAccumulator: Send {
    /// Column `column` has conditional law `law` and true symbol `truth`.
    fn observe(&mut self, column: usize, law: &[f64], truth: u32);
    fn end_sample(&mut self) {}
    /// Folds in the totals of a later worker.
    fn merge(&mut self, other: Self);
}

struct GeniePolicy<'a, A> {
    truth: &'a [u32],
    acc: &'a mut A,
}

impl<A: GenieAccumulator> ColumnPolicy for GeniePolicy<'_, A> {
    fn decide(&mut self, column: usize, law: &[f64]) -> Result<u32> {
        let truth = self.truth[column];
        self.acc.observe(column, law, truth);
        Ok(truth)
    }
}

/// Runs `samples` genie passes split over `workers` threads in contiguous
/// chunks and merges the accumulators in worker order.
pub(crate) fn run_genie<A, F>(
    mu: &SourceDistribution,
    n: usize,
    samples: u64,
    seed: u64,
    workers: usize,
    make: F,
) -> Result<A>
where
    A: GenieAccumulator,
    F: Fn() -> A + Sync,
{
    check_sc_size(mu.m(), n)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one Monte-Carlo sample is required".into()));
    }
    let workers = workers.clamp(1, samples.min(u16::MAX as u64) as usize) as u64;
    let chunk = samples.div_ceil(workers);
    let work = |start: u64, end: u64| -> Result<A> {
        let mut acc = make();
        let mut engine = ScEngine::new(mu.m(), n);
        let sampler = mu.sampler();
        let mut y = vec![0u32; n];
        for index in start..end {
            let mut rng = sample_rng(seed, index);
            sampler.fill(&mut rng, &mut y);
            polar_transform_symbols(&mut y)?;
            let mut policy = GeniePolicy { truth: &y, acc: &mut acc };
            engine.run(mu.pmf(), &mut policy)?;
            acc.end_sample();
        }
        Ok(acc)
    };
    if workers == 1 {
        return work(0, samples);
    }
    let results: Vec<Result<A>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (start, end) = ((w * chunk).min(samples), ((w + 1) * chunk).min(samples));
                let work = &work;
                scope.spawn(move || work(start, end))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("Monte-Carlo worker panicked"))
            .collect()
    });
    let mut iter = results.into_iter();
    let mut total = iter.next().expect("at least one worker")?;
    for part in iter {
        total.merge(part?);
    }
    Ok(total)
}

/// Running sums of the per-sample bit statistics.
struct BitAccumulator {
    m: usize,
    z: Vec<f64>,
    zz: Vec<f64>,
    h: Vec<f64>,
    hh: Vec<f64>,
    sample_h: f64,
    total_h: f64,
    total_hh: f64,
}

impl BitAccumulator {
    fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            z: vec![0.0; m * n],
            zz: vec![0.0; m * n],
            h: vec![0.0; m * n],
            hh: vec![0.0; m * n],
            sample_h: 0.0,
            total_h: 0.0,
            total_hh: 0.0,
        }
    }
}

impl GenieAccumulator for BitAccumulator {
    fn observe(&mut self, column: usize, law: &[f64], truth: u32) {
        for i in 0..self.m {
            let (w0, w1) = bit_weights(law, truth, i);
            let z = bhattacharyya_weights(w0, w1);
            let h = binary_entropy_weights(w0, w1);
            let idx = column * self.m + i;
            self.z[idx] += z;
            self.zz[idx] += z * z;
            self.h[idx] += h;
            self.hh[idx] += h * h;
            self.sample_h += h;
        }
    }

    fn end_sample(&mut self) {
        self.total_h += self.sample_h;
        self.total_hh += self.sample_h * self.sample_h;
        self.sample_h = 0.0;
    }

    fn merge(&mut self, other: Self) {
        for (dst, src) in [
            (&mut self.z, other.z),
            (&mut self.zz, other.zz),
            (&mut self.h, other.h),
            (&mut self.hh, other.hh),
        ] {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        self.total_h += other.total_h;
        self.total_hh += other.total_hh;
    }
}

fn mean_and_stderr(sum: f64, sum_sq: f64, count: f64) -> (f64, f64) {
    let mean = sum / count;
    if count < 2.0 {
        return (mean, f64::INFINITY);
    }
    let var = ((sum_sq - sum * mean) / (count - 1.0)).max(0.0);
    (mean, (var / count).sqrt())
}

/// Monte-Carlo means and standard errors per position, column-major.
#[derive(Debug, Clone)]
pub struct BitStatistics {
    pub m: usize,
    pub n: usize,
    pub samples: u64,
    pub z_mean: Vec<f64>,
    pub z_stderr: Vec<f64>,
    pub h_mean: Vec<f64>,
    pub h_stderr: Vec<f64>,
    /// Mean and standard error of `Σ_{i,j}` of the per-sample bit entropies.
    pub total_h_mean: f64,
    pub total_h_stderr: f64,
}

impl BitStatistics {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.m + i
    }
}

/// Genie-aided Monte-Carlo estimates of the per-bit statistics.
pub fn estimate_bit_statistics(
    mu: &SourceDistribution,
    n: usize,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<BitStatistics> {
    let m = mu.m();
    let acc = run_genie(mu, n, samples, seed, workers, || BitAccumulator::new(m, n))?;
    let count = samples as f64;
    let (z_mean, z_stderr) = acc
        .z
        .iter()
        .zip(&acc.zz)
        .map(|(&s, &ss)| mean_and_stderr(s, ss, count))
        .unzip();
    let (h_mean, h_stderr) = acc
        .h
        .iter()
        .zip(&acc.hh)
        .map(|(&s, &ss)| mean_and_stderr(s, ss, count))
        .unzip();
    let (total_h_mean, total_h_stderr) = mean_and_stderr(acc.total_h, acc.total_hh, count);
    Ok(BitStatistics {
        m,
        n,
        samples,
        z_mean,
        z_stderr,
        h_mean,
        h_stderr,
        total_h_mean,
        total_h_stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartParams {
    pub n: usize,
    pub threshold: Threshold,
    pub mc_samples: u64,
    pub seed: u64,
    pub workers: usize,
    /// Finalize even when Monte-Carlo resolution cannot settle every
    /// position near the threshold.
    pub force: bool,
}

impl ChartParams {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            threshold: Threshold::default(),
            mc_samples: 10_000,
            seed: 0,
            workers: 1,
            force: false,
        }
    }
}

/// What a chart build measured besides the chart itself.
#[derive(Debug, Clone)]
pub struct ChartDiagnostics {
    pub epsilon_z: f64,
    /// `|Stored| / n` in bits per column.
    pub rate: f64,
    pub source_entropy: f64,
    pub rate_gap: f64,
    /// Estimated `Σ h / n`; equals `H(μ)` up to Monte-Carlo error.
    pub entropy_per_column: f64,
    pub entropy_per_column_stderr: f64,
    /// Fraction (per column) of positions with `h_est ≤ ε_z < z_est`: entropy
    /// that is nearly resolved but still stored.
    pub slack: f64,
    /// `H(μ) − Σ_{Deterministic} h_est / n`, the rate the estimates say is
    /// needed; `rate` should not fall below it.
    pub rate_lower_bound: f64,
    pub predicted_failure_bound: f64,
    /// Positions whose classification the standard error cannot settle.
    pub ambiguous: usize,
    pub worst_stderr: f64,
    pub statistics: BitStatistics,
}

fn is_ambiguous(z: f64, se: f64, epsilon_z: f64) -> bool {
    se > epsilon_z / 2.0 && (z - epsilon_z).abs() < 2.0 * se
}

/// Builds a chart from Monte-Carlo estimates.
///
/// Fails with [`Error::InsufficientSamples`] when some position has a standard
/// error above `ε_z / 2` and an estimate within two standard errors of `ε_z`,
/// unless `params.force` is set.
pub fn build_chart(mu: &SourceDistribution, params: &ChartParams) -> Result<(PolarChart, ChartDiagnostics)> {
    let m = mu.m();
    let n = params.n;
    check_sc_size(m, n)?;
    let epsilon_z = params.threshold.epsilon_z(m, n);
    if !(epsilon_z.is_finite() && epsilon_z >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold ε_z = {epsilon_z}")));
    }
    let workers = chart::workers_field(params.workers.max(1))?;
    let stats = estimate_bit_statistics(mu, n, params.mc_samples, params.seed, params.workers)?;

    let mut ambiguous = 0;
    let mut worst_stderr: f64 = 0.0;
    for (&z, &se) in stats.z_mean.iter().zip(&stats.z_stderr) {
        if is_ambiguous(z, se, epsilon_z) {
            ambiguous += 1;
            worst_stderr = worst_stderr.max(se);
        }
    }
    if ambiguous > 0 && !params.force {
        return Err(Error::InsufficientSamples {
            ambiguous,
            worst_stderr,
            threshold: epsilon_z,
        });
    }

    let chart = PolarChart::from_estimates(
        mu,
        n,
        epsilon_z,
        params.mc_samples,
        params.seed,
        workers,
        &stats.z_mean,
        &stats.h_mean,
    )?;
    let slack_positions = (0..m * n)
        .filter(|&idx| {
            let (i, j) = (idx % m, idx / m);
            chart.is_stored(i, j) && chart.h_est(i, j) <= epsilon_z
        })
        .count();
    let source_entropy = mu.entropy();
    let rate = chart.rate();
    let diagnostics = ChartDiagnostics {
        epsilon_z,
        rate,
        source_entropy,
        rate_gap: rate - source_entropy,
        entropy_per_column: stats.total_h_mean / n as f64,
        entropy_per_column_stderr: stats.total_h_stderr / n as f64,
        slack: slack_positions as f64 / n as f64,
        rate_lower_bound: source_entropy - chart.predicted_entropy() / n as f64,
        predicted_failure_bound: chart.predicted_failure_bound(),
        ambiguous,
        worst_stderr,
        statistics: stats,
    };
    Ok((chart, diagnostics))
}
