//! `pmx`: construct polarization charts and compress, decompress, split and
//! extract with them.
//!
//! Every command prints one line of JSON on success. Exit status: 0 success,
//! 1 usage or input error, 2 fingerprint mismatch, 3 decode failure, 4 resource
//! cap or unresolved Monte-Carlo estimate.

mod io;

use std::path::{Path, PathBuf};
use std::sync::LazyLock;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pmx::codec::{compress, decompress, CompressedBlock, BLOCK_VERSION};
use pmx::construction::{CHART_VERSION, MAX_SC_CELLS};
use pmx::extractor::{pext_apply, pext_build, pext_verify, PextParams, ORACLE_MAX_N, PEXT_VERSION};
use pmx::finite_field::{compress_q_ary, GFSpec};
use pmx::format::hex;
use pmx::memory_source::{compress_stream, decompress_stream, CompressedStream, StreamLayout, STREAM_VERSION};
use pmx::oracle::{exact_profile, OracleLimits};
use pmx::slepian_wolf::{sw_decode, sw_encode_all, UserPayload, USER_VERSION};
use pmx::{build_chart, ChartParams, Error, PolarChart, Result, SourceDistribution, Threshold};

static VERSION: LazyLock<String> = LazyLock::new(|| {
    format!(
        "{} (PMXC v{CHART_VERSION}, PMXD v{BLOCK_VERSION}, PMXU v{USER_VERSION}, PMXR v{PEXT_VERSION}, PMXS v{STREAM_VERSION})",
        env!("CARGO_PKG_VERSION")
    )
});

#[derive(Parser)]
#[command(name = "pmx", version = VERSION.as_str(), about = "Lossless compression by matrix polarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate bit statistics and write a chart.
    Construct(ConstructArgs),
    /// Compress a symbol file with a chart.
    Compress(CompressArgs),
    /// Restore a symbol file from a compressed block.
    Decompress(DecompressArgs),
    /// Encode each row of a symbol file as a separate user payload.
    SwEncode(SwEncodeArgs),
    /// Jointly decode user payloads.
    SwDecode(SwDecodeArgs),
    /// Compress a bit stream cut into blocks of `block_m` bits with gaps.
    CompressStream(CompressStreamArgs),
    /// Restore a bit stream.
    DecompressStream(DecompressArgs),
    /// Build (and optionally apply) a randomness extractor for Bernoulli bits.
    Extract(ExtractArgs),
    /// Exact conditional entropies and Bhattacharyya values as JSON.
    Oracle(OracleArgs),
    /// Summarize a chart as JSON.
    Report(ReportArgs),
    /// Draw i.i.d. columns from a distribution into a symbol file.
    Sample(SampleArgs),
}

#[derive(Args)]
#[group(multiple = false)]
struct ThresholdArgs {
    /// Failure budget b; the threshold is b / (m n).
    #[arg(long)]
    budget: Option<f64>,
    /// Exponent α; the threshold is 2^(-n^α).
    #[arg(long)]
    exponent: Option<f64>,
    /// Explicit threshold on the Bhattacharyya estimate.
    #[arg(long)]
    eps_z: Option<f64>,
}

impl ThresholdArgs {
    fn threshold(&self) -> Threshold {
        match (self.budget, self.exponent, self.eps_z) {
            (_, Some(a), _) => Threshold::Exponent(a),
            (_, _, Some(e)) => Threshold::Explicit(e),
            (Some(b), _, _) => Threshold::Budget(b),
            _ => Threshold::default(),
        }
    }
}

#[derive(Args)]
struct ConstructArgs {
    /// Source distribution (JSON: {"m": .., "pmf": [..]}).
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    threshold: ThresholdArgs,
    /// Monte-Carlo samples.
    #[arg(long, default_value_t = 10_000)]
    mc: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write the chart even if some positions are too close to the threshold to call.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long)]
    chart: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Treat the input as GF(2^m) symbols, optionally with a modulus polynomial: `m[:poly]`.
    #[arg(long)]
    gf: Option<String>,
}

#[derive(Args)]
struct DecompressArgs {
    #[arg(long)]
    chart: PathBuf,
    /// Distribution the chart was built for.
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SwEncodeArgs {
    #[arg(long)]
    chart: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving `user-<i>.pmxu` files.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SwDecodeArgs {
    #[arg(long)]
    chart: PathBuf,
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// One payload file per user, in any order.
    #[arg(required = true)]
    payloads: Vec<PathBuf>,
}

#[derive(Args)]
struct CompressStreamArgs {
    #[arg(long)]
    chart: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Bits per block; must equal the chart's m.
    #[arg(long)]
    block_m: usize,
    /// Bits between consecutive blocks, stored verbatim.
    #[arg(long, default_value_t = 0)]
    gap: usize,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    n: usize,
    /// Entropy of the n input bits, in bits.
    #[arg(long)]
    k: f64,
    /// Target distance from uniform.
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 10_000)]
    mc: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    force: bool,
    /// Where to write the extractor spec.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Apply to a bit file of n bits and write the extracted bits.
    #[arg(long, num_args = 2, value_names = ["INPUT", "OUTPUT"])]
    apply: Option<Vec<PathBuf>>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    n: usize,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    chart: PathBuf,
    /// Also compare against this distribution's entropy.
    #[arg(long)]
    dist: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::FingerprintMismatch(_) => 2,
        Error::ImpossibleObservation { .. }
        | Error::PayloadExhausted { .. }
        | Error::PayloadLength { .. }
        | Error::MissingUser(_)
        | Error::DuplicateUser(_) => 3,
        Error::ResourceLimit { .. } | Error::InsufficientSamples { .. } => 4,
        _ => 1,
    }
}

fn load_chart(path: &Path) -> Result<PolarChart> {
    PolarChart::from_bytes(&io::read(path)?)
}

fn load_dist(path: &Path) -> Result<SourceDistribution> {
    SourceDistribution::from_json(&String::from_utf8_lossy(&io::read(path)?))
}

fn parse_gf(text: &str) -> Result<GFSpec> {
    let bad = || Error::InvalidParameter(format!("--gf expects m or m:poly, got {text:?}"));
    let (m, poly) = match text.split_once(':') {
        Some((m, p)) => (m, Some(p)),
        None => (text, None),
    };
    let m: usize = m.parse().map_err(|_| bad())?;
    match poly {
        None => GFSpec::new(m),
        Some(p) => {
            let value = match p.strip_prefix("0x").or_else(|| p.strip_prefix("0X")) {
                Some(h) => u32::from_str_radix(h, 16),
                None => match p.strip_prefix("0b") {
                    Some(b) => u32::from_str_radix(b, 2),
                    None => p.parse(),
                },
            }
            .map_err(|_| bad())?;
            GFSpec::with_polynomial(m, value)
        }
    }
}

fn construct(a: &ConstructArgs) -> Result<Value> {
    let mu = load_dist(&a.dist)?;
    let params = ChartParams {
        n: a.n,
        threshold: a.threshold.threshold(),
        mc_samples: a.mc,
        seed: a.seed,
        workers: a.workers,
        force: a.force,
    };
    let (chart, diag) = build_chart(&mu, &params)?;
    io::write_atomic(&a.out, &chart.to_bytes())?;
    Ok(json!({
        "m": chart.m(),
        "n": chart.n(),
        "epsilon_z": diag.epsilon_z,
        "stored": chart.stored_count(),
        "rate": diag.rate,
        "source_entropy": diag.source_entropy,
        "rate_gap": diag.rate_gap,
        "rate_lower_bound": diag.rate_lower_bound,
        "entropy_per_column": diag.entropy_per_column,
        "entropy_per_column_stderr": diag.entropy_per_column_stderr,
        "bound": diag.predicted_failure_bound,
        "ambiguous": diag.ambiguous,
        "worst_stderr": diag.worst_stderr,
        "chart_fingerprint": hex(&chart.fingerprint()),
    }))
}

fn compress_cmd(a: &CompressArgs) -> Result<Value> {
    let chart = load_chart(&a.chart)?;
    let bytes = io::read(&a.input)?;
    let block = match &a.gf {
        Some(text) => {
            let field = parse_gf(text)?;
            compress_q_ary(&io::decode_symbols(&bytes, field.m())?, &field, &chart)?
        }
        None => compress(&pmx::BitMatrix::from_columns(chart.m(), &io::decode_symbols(&bytes, chart.m())?)?, &chart)?,
    };
    io::write_atomic(&a.out, &block.to_bytes())?;
    Ok(json!({
        "payload_bits": block.payload_bits(),
        "rate": block.payload_bits() as f64 / chart.n() as f64,
        "bound": chart.predicted_failure_bound(),
    }))
}

fn decompress_cmd(a: &DecompressArgs) -> Result<Value> {
    let chart = load_chart(&a.chart)?;
    let mu = load_dist(&a.dist)?;
    let block = CompressedBlock::from_bytes(&io::read(&a.input)?)?;
    let x = decompress(&block, &chart, &mu)?;
    io::write_matrix(&a.out, &x)?;
    Ok(json!({ "m": x.rows(), "n": x.cols(), "payload_bits": block.payload_bits() }))
}

fn sw_encode_cmd(a: &SwEncodeArgs) -> Result<Value> {
    let chart = load_chart(&a.chart)?;
    let x = io::read_matrix(&a.input, chart.m())?;
    let payloads = sw_encode_all(&x, &chart)?;
    std::fs::create_dir_all(&a.out_dir)?;
    for p in &payloads {
        io::write_atomic(&a.out_dir.join(format!("user-{}.pmxu", p.user)), &p.to_bytes())?;
    }
    let bits: Vec<usize> = payloads.iter().map(|p| p.bits.len()).collect();
    let total: usize = bits.iter().sum();
    Ok(json!({ "users": payloads.len(), "user_bits": bits, "sum_rate": total as f64 / chart.n() as f64 }))
}

fn sw_decode_cmd(a: &SwDecodeArgs) -> Result<Value> {
    let chart = load_chart(&a.chart)?;
    let mu = load_dist(&a.dist)?;
    let payloads = a
        .payloads
        .iter()
        .map(|p| UserPayload::from_bytes(&io::read(p)?))
        .collect::<Result<Vec<_>>>()?;
    let x = sw_decode(&payloads, &chart, &mu)?;
    io::write_matrix(&a.out, &x)?;
    Ok(json!({ "m": x.rows(), "n": x.cols(), "users": payloads.len() }))
}

fn compress_stream_cmd(a: &CompressStreamArgs) -> Result<Value> {
    let chart = load_chart(&a.chart)?;
    let layout = StreamLayout::new(a.block_m, chart.n(), a.gap)?;
    let stream = io::decode_bits(&io::read(&a.input)?, layout.stream_len())?;
    let c = compress_stream(&stream, &chart, &layout)?;
    io::write_atomic(&a.out, &c.to_bytes())?;
    Ok(json!({
        "stream_bits": layout.stream_len(),
        "payload_bits": c.block.payload_bits(),
        "gap_bits": layout.gap_bits(),
        "rate": c.rate(),
        "gap_overhead": layout.gap_overhead(),
        "bound": chart.predicted_failure_bound(),
    }))
}

fn decompress_stream_cmd(a: &DecompressArgs) -> Result<Value> {
    let chart = load_chart(&a.chart)?;
    let mu = load_dist(&a.dist)?;
    let c = CompressedStream::from_bytes(&io::read(&a.input)?)?;
    let stream = decompress_stream(&c, &chart, &mu)?;
    io::write_atomic(&a.out, &io::encode_bits(&stream))?;
    Ok(json!({ "stream_bits": stream.len(), "rate": c.rate() }))
}

fn extract_cmd(a: &ExtractArgs) -> Result<Value> {
    let params = PextParams {
        mc_samples: a.mc,
        seed: a.seed,
        workers: a.workers,
        force: a.force,
    };
    let (spec, report) = pext_build(a.n, a.k, a.eps, &params)?;
    if let Some(out) = &a.out {
        io::write_atomic(out, &spec.to_bytes())?;
    }
    let mut summary = json!({
        "n": spec.n,
        "p": spec.p,
        "output_len": spec.output_len(),
        "entropy_threshold": spec.entropy_threshold(),
        "exact": report.exact,
        "ambiguous": report.ambiguous,
    });
    if spec.n <= ORACLE_MAX_N {
        let v = pext_verify(&spec, spec.p, OracleLimits::default())?;
        summary["kl_bits"] = json!(v.kl_bits);
        summary["l1"] = json!(v.l1);
    }
    if let Some([input, output]) = a.apply.as_deref() {
        let x = io::decode_bits(&io::read(input)?, spec.n)?;
        let r = pext_apply(&x, &spec)?;
        io::write_atomic(output, &io::encode_bits(&r))?;
        summary["applied_bits"] = json!(r.len());
    }
    Ok(summary)
}

fn oracle_cmd(a: &OracleArgs) -> Result<Option<Value>> {
    let mu = load_dist(&a.dist)?;
    let profile = exact_profile(&mu, a.n, OracleLimits::default())?;
    let mut report = serde_json::to_value(&profile)?;
    report["total_bit_entropy"] = json!(profile.total_bit_entropy());
    report["source_entropy"] = json!(mu.entropy());
    match &a.out {
        Some(path) => {
            io::write_atomic(path, report.to_string().as_bytes())?;
            Ok(Some(json!({ "total_bit_entropy": profile.total_bit_entropy(), "n_entropy": a.n as f64 * mu.entropy() })))
        }
        None => {
            println!("{report}");
            Ok(None)
        }
    }
}

fn report_cmd(a: &ReportArgs) -> Result<Value> {
    let chart = load_chart(&a.chart)?;
    let mut summary = json!({
        "m": chart.m(),
        "n": chart.n(),
        "epsilon_z": chart.epsilon_z(),
        "mc_samples": chart.mc_samples(),
        "seed": chart.seed(),
        "workers": chart.workers(),
        "stored": chart.stored_count(),
        "rate": chart.rate(),
        "bound": chart.predicted_failure_bound(),
        "predicted_entropy": chart.predicted_entropy(),
        "stored_per_row": (0..chart.m()).map(|i| chart.stored_columns(i).len()).collect::<Vec<_>>(),
        "chart_fingerprint": hex(&chart.fingerprint()),
        "mu_fingerprint": hex(chart.mu_fingerprint()),
        "sc_cells_cap": MAX_SC_CELLS,
    });
    if let Some(path) = &a.dist {
        let mu = load_dist(path)?;
        chart.check_source(&mu)?;
        summary["source_entropy"] = json!(mu.entropy());
        summary["rate_gap"] = json!(chart.rate() - mu.entropy());
    }
    Ok(summary)
}

fn sample_cmd(a: &SampleArgs) -> Result<Value> {
    let mu = load_dist(&a.dist)?;
    let x = mu.sample_columns(a.n, a.seed)?;
    io::write_matrix(&a.out, &x)?;
    Ok(json!({ "m": x.rows(), "n": x.cols() }))
}

fn run(cli: &Cli) -> Result<Option<Value>> {
    let (name, summary) = match &cli.command {
        Command::Construct(a) => ("construct", construct(a)?),
        Command::Compress(a) => ("compress", compress_cmd(a)?),
        Command::Decompress(a) => ("decompress", decompress_cmd(a)?),
        Command::SwEncode(a) => ("sw-encode", sw_encode_cmd(a)?),
        Command::SwDecode(a) => ("sw-decode", sw_decode_cmd(a)?),
        Command::CompressStream(a) => ("compress-stream", compress_stream_cmd(a)?),
        Command::DecompressStream(a) => ("decompress-stream", decompress_stream_cmd(a)?),
        Command::Extract(a) => ("extract", extract_cmd(a)?),
        Command::Oracle(a) => match oracle_cmd(a)? {
            Some(s) => ("oracle", s),
            None => return Ok(None),
        },
        Command::Report(a) => ("report", report_cmd(a)?),
        Command::Sample(a) => ("sample", sample_cmd(a)?),
    };
    let mut summary = summary;
    summary["command"] = json!(name);
    Ok(Some(summary))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let start = Instant::now();
    match run(&cli) {
        Ok(Some(mut summary)) => {
            summary["seconds"] = json!(start.elapsed().as_secs_f64());
            println!("{summary}");
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("pmx: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
