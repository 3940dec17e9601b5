use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pmx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmx")).args(args).output().expect("run pmx")
}

fn ok(args: &[&str]) -> Value {
    let out = pmx(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1, "summary is one line: {text}");
    serde_json::from_str(&text).unwrap()
}

fn code(args: &[&str]) -> i32 {
    pmx(args).status.code().expect("exit code")
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_owned()
    }

    fn write(&self, name: &str, contents: &[u8]) -> String {
        std::fs::write(self.path(name), contents).unwrap();
        self.s(name)
    }

    fn dist(&self, name: &str, m: usize, pmf: &[f64]) -> String {
        self.write(name, serde_json::json!({ "m": m, "pmf": pmf }).to_string().as_bytes())
    }
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn construct(ws: &Workspace, dist: &str, n: &str, out: &str, extra: &[&str]) -> Value {
    let chart = ws.s(out);
    let mut args = vec!["construct", "--dist", dist, "--n", n, "--mc", "2000", "--seed", "7", "--out", &chart];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn version_lists_file_formats() {
    let out = pmx(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for magic in ["PMXC", "PMXD", "PMXU", "PMXR"] {
        assert!(text.contains(magic), "{text}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["construct", "--n", "8"]), 1);
    assert_eq!(code(&["construct", "--dist", "x", "--n", "8", "--budget", "1", "--eps-z", "1", "--out", "y"]), 1);
    assert_eq!(code(&["report", "--chart", "/nonexistent/chart"]), 1);
}

#[test]
fn oracle_report_conserves_entropy() {
    let ws = Workspace::new();
    let dist = ws.dist("mu.json", 2, &[0.7, 0.1, 0.1, 0.1]);
    let out = pmx(&["oracle", "--dist", &dist, "--n", "8"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let total: f64 = report["h_bit"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|col| col.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()))
        .sum();
    let h: f64 = [0.7f64, 0.1, 0.1, 0.1].iter().map(|p| -p * p.log2()).sum();
    assert!((total - 8.0 * h).abs() < 1e-9);
    assert_eq!(code(&["oracle", "--dist", &dist, "--n", "4096"]), 4);
}

#[test]
fn construct_is_deterministic() {
    let ws = Workspace::new();
    let dist = ws.dist("mu.json", 1, &[0.89, 0.11]);
    construct(&ws, &dist, "256", "a.pmxc", &["--budget", "0.01", "--force"]);
    construct(&ws, &dist, "256", "b.pmxc", &["--budget", "0.01", "--force"]);
    assert_eq!(read(ws.path("a.pmxc")), read(ws.path("b.pmxc")));
    let report = ok(&["report", "--chart", &ws.s("a.pmxc"), "--dist", &dist]);
    assert_eq!(report["n"], 256);
    assert!(report["rate"].as_f64().unwrap() < 1.0);
}

#[test]
fn unsettled_estimates_refuse_without_force() {
    let ws = Workspace::new();
    let dist = ws.dist("mu.json", 1, &[0.89, 0.11]);
    let chart = ws.s("c.pmxc");
    let args = ["construct", "--dist", &dist, "--n", "1024", "--mc", "50", "--eps-z", "0.01", "--out", &chart];
    assert_eq!(code(&args), 4);
    assert!(!ws.path("c.pmxc").exists());
}

#[test]
fn compress_decompress_round_trip_and_fingerprints() {
    let ws = Workspace::new();
    let dist = ws.dist("mu.json", 2, &[0.7, 0.1, 0.1, 0.1]);
    construct(&ws, &dist, "64", "chart", &["--budget", "1e-3", "--force"]);
    let chart = ws.s("chart");
    ok(&["sample", "--dist", &dist, "--n", "64", "--seed", "3", "--out", &ws.s("x")]);
    let summary = ok(&["compress", "--chart", &chart, "--input", &ws.s("x"), "--out", &ws.s("x.pmxd")]);
    assert!(summary["payload_bits"].as_u64().unwrap() < 128);
    ok(&["decompress", "--chart", &chart, "--dist", &dist, "--input", &ws.s("x.pmxd"), "--out", &ws.s("y")]);
    assert_eq!(read(ws.path("x")), read(ws.path("y")));

    let other = ws.dist("other.json", 2, &[0.4, 0.2, 0.2, 0.2]);
    assert_eq!(
        code(&["decompress", "--chart", &chart, "--dist", &other, "--input", &ws.s("x.pmxd"), "--out", &ws.s("z")]),
        2
    );
    construct(&ws, &dist, "64", "chart2", &["--budget", "0.5", "--force"]);
    assert_eq!(
        code(&["decompress", "--chart", &ws.s("chart2"), "--dist", &dist, "--input", &ws.s("x.pmxd"), "--out", &ws.s("z")]),
        2
    );
    let mut block = read(ws.path("x.pmxd"));
    block.pop();
    let truncated = ws.write("t.pmxd", &block);
    assert_eq!(code(&["decompress", "--chart", &chart, "--dist", &dist, "--input", &truncated, "--out", &ws.s("z")]), 1);
}

#[test]
fn impossible_payload_is_a_decode_failure() {
    let ws = Workspace::new();
    // Symbol 3 never occurs, so a block holding it reaches a zero-weight stored bit.
    let dist = ws.dist("mu.json", 2, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]);
    construct(&ws, &dist, "2", "chart", &["--force"]);
    let chart = ws.s("chart");
    let input = ws.write("x", &[3, 3]);
    ok(&["compress", "--chart", &chart, "--input", &input, "--out", &ws.s("x.pmxd")]);
    let args = ["decompress", "--chart", &chart, "--dist", &dist, "--input", &ws.s("x.pmxd"), "--out", &ws.s("y")];
    assert_eq!(code(&args), 3);
    assert!(!ws.path("y").exists());
}

#[test]
fn slepian_wolf_matches_centralized() {
    let ws = Workspace::new();
    let dist = ws.dist("mu.json", 2, &[0.7, 0.1, 0.1, 0.1]);
    construct(&ws, &dist, "128", "chart", &["--budget", "1e-2", "--force"]);
    let chart = ws.s("chart");
    ok(&["sample", "--dist", &dist, "--n", "128", "--seed", "9", "--out", &ws.s("x")]);
    let enc = ok(&["sw-encode", "--chart", &chart, "--input", &ws.s("x"), "--out-dir", &ws.s("users")]);
    assert_eq!(enc["users"], 2);
    let central = ok(&["compress", "--chart", &chart, "--input", &ws.s("x"), "--out", &ws.s("x.pmxd")]);
    let sum: u64 = enc["user_bits"].as_array().unwrap().iter().map(|b| b.as_u64().unwrap()).sum();
    assert_eq!(sum, central["payload_bits"].as_u64().unwrap());

    let u0 = ws.s("users/user-0.pmxu");
    let u1 = ws.s("users/user-1.pmxu");
    ok(&["sw-decode", "--chart", &chart, "--dist", &dist, "--out", &ws.s("y"), &u1, &u0]);
    ok(&["decompress", "--chart", &chart, "--dist", &dist, "--input", &ws.s("x.pmxd"), "--out", &ws.s("z")]);
    assert_eq!(read(ws.path("y")), read(ws.path("z")));
    assert_eq!(code(&["sw-decode", "--chart", &chart, "--dist", &dist, "--out", &ws.s("w"), &u0]), 3);
}

#[test]
fn gf_symbols_round_trip() {
    let ws = Workspace::new();
    let dist = ws.dist("mu.json", 2, &[0.5, 0.5, 0.0, 0.0]);
    construct(&ws, &dist, "16", "chart", &["--budget", "1e-3"]);
    let chart = ws.s("chart");
    let symbols: Vec<u8> = (0..16).map(|t| (t * 7 % 5 % 2) as u8).collect();
    let input = ws.write("s", &symbols);
    let summary = ok(&["compress", "--gf", "2:0b111", "--chart", &chart, "--input", &input, "--out", &ws.s("s.pmxd")]);
    assert_eq!(summary["payload_bits"], 16);
    ok(&["decompress", "--chart", &chart, "--dist", &dist, "--input", &ws.s("s.pmxd"), "--out", &ws.s("t")]);
    assert_eq!(read(ws.path("t")), symbols);
    assert_eq!(code(&["compress", "--gf", "2:0b101", "--chart", &chart, "--input", &input, "--out", &ws.s("u")]), 1);
}

#[test]
fn stream_round_trip_with_gap() {
    let ws = Workspace::new();
    let dist = ws.dist("mu.json", 2, &[0.7, 0.1, 0.1, 0.1]);
    construct(&ws, &dist, "32", "chart", &["--budget", "1e-2", "--force"]);
    let chart = ws.s("chart");
    // Sampled 2-bit blocks with 3 arbitrary gap bits between them: 2 · 32 + 3 · 31 = 157 bits.
    ok(&["sample", "--dist", &dist, "--n", "32", "--seed", "5", "--out", &ws.s("cols")]);
    let cols = read(ws.path("cols"));
    let mut bits = Vec::new();
    for (j, &c) in cols.iter().enumerate() {
        bits.extend([c & 1, c >> 1 & 1]);
        if j + 1 < cols.len() {
            bits.extend([(j % 2) as u8, 1, (j % 3 == 0) as u8]);
        }
    }
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (t, &b) in bits.iter().enumerate() {
        bytes[t / 8] |= b << (t % 8);
    }
    let input = ws.write("stream", &bytes);
    let summary = ok(&[
        "compress-stream", "--chart", &chart, "--input", &input, "--out", &ws.s("stream.pmxd"), "--block-m", "2", "--gap", "3",
    ]);
    assert_eq!(summary["gap_bits"], 93);
    let out = ws.s("back");
    ok(&["decompress-stream", "--chart", &chart, "--dist", &dist, "--input", &ws.s("stream.pmxd"), "--out", &out]);
    assert_eq!(read(ws.path("back")), bytes);

    let stored = ws.s("stored");
    ok(&["construct", "--dist", &dist, "--n", "32", "--eps-z", "0", "--mc", "10", "--force", "--out", &stored]);
    ok(&["compress-stream", "--chart", &stored, "--input", &input, "--out", &ws.s("s2"), "--block-m", "2", "--gap", "3"]);
    ok(&["decompress-stream", "--chart", &stored, "--dist", &dist, "--input", &ws.s("s2"), "--out", &out]);
    assert_eq!(read(ws.path("back")), bytes);
    assert_eq!(
        code(&["compress-stream", "--chart", &stored, "--input", &input, "--out", &ws.s("s3"), "--block-m", "2", "--gap", "4"]),
        1
    );
}

#[test]
fn extractor_build_and_apply() {
    let ws = Workspace::new();
    let spec = ws.s("spec.pmxr");
    let input = ws.write("bits", &[0b1010_0110]);
    let out = ws.s("out");
    let summary = ok(&["extract", "--n", "8", "--k", "4", "--eps", "0.5", "--out", &spec, "--apply", &input, &out]);
    assert!((summary["p"].as_f64().unwrap() - 0.11).abs() < 1e-3);
    assert!(summary["kl_bits"].as_f64().unwrap() <= 0.125);
    let len = summary["output_len"].as_u64().unwrap();
    assert_eq!(summary["applied_bits"].as_u64().unwrap(), len);
    assert_eq!(read(&out).len() as u64, len.div_ceil(8));
    assert_eq!(&read(&spec)[..4], b"PMXR");
}
