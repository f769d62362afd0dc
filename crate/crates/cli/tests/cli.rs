//! End-to-end command-line tests against the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn llrq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llrq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("llrq-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("missing {name}"))
}

#[test]
fn memory_preset_reproduces_expected_rows() {
    let out = tmp_dir("mem");
    let r = llrq(&["memory", "--preset", "table6", "--out", out.to_str().unwrap()]);
    assert!(r.status.success());
    let csv = read(&out, "memory.csv");
    assert!(csv.contains("0.1dB conv,2278144,324000,2602144,2.27,0.32,2.60,"));
    assert!(csv.contains("0.1dB quant+comp,1656832,226800,1883632,1.65,0.22,1.88,27.6"));
    assert!(csv.contains("0.2dB quant+comp,1501504,194400,1695904,1.50,0.19,1.69,30.6"));
    let manifest = read(&out, "manifest.json");
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(parsed["command"], "memory");
    assert!(parsed["config_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn unknown_preset_is_a_config_error() {
    let r = llrq(&["memory", "--preset", "bogus"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn unsupported_constellation_is_a_config_error() {
    let out = tmp_dir("bad-m");
    let r = llrq(&[
        "design",
        "--m",
        "8",
        "--cn",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn infeasible_budget_exits_with_code_3() {
    let out = tmp_dir("infeasible");
    let r = llrq(&[
        "design",
        "--m",
        "16",
        "--cn",
        "12",
        "--w-range",
        "1..3",
        "--alloc",
        "--W",
        "200..202",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn design_writes_tables_and_uses_the_cache() {
    let out = tmp_dir("design");
    let cache = out.join("cache");
    let args = [
        "design",
        "--m",
        "16",
        "--cn",
        "12",
        "--w-range",
        "1..3",
        "--alloc",
        "--W",
        "4..10",
        "--verify-exhaustive",
        "--out",
        out.to_str().unwrap(),
        "--cache",
        cache.to_str().unwrap(),
    ];
    let r = llrq(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let steps = read(&out, "steps.csv");
    assert!(steps.starts_with("w,k1_2,k3_4"));
    let alloc = read(&out, "alloc.csv");
    assert!(alloc.lines().count() >= 4);
    let check = read(&out, "exhaustive_check.csv");
    assert!(check.contains("true"));
    assert!(cache.read_dir().unwrap().count() >= 1, "design table cached");

    // A second run hits the cache and reproduces the outputs byte for byte.
    let t0 = std::time::Instant::now();
    let r2 = llrq(&args);
    assert!(r2.status.success());
    let fast = t0.elapsed();
    assert_eq!(steps, read(&out, "steps.csv"));
    assert!(fast.as_secs() < 30);
}

#[test]
fn simulate_is_reproducible_for_a_seed() {
    let out1 = tmp_dir("sim1");
    let out2 = tmp_dir("sim2");
    let cache = tmp_dir("sim-cache");
    for out in [&out1, &out2] {
        let r = llrq(&[
            "simulate",
            "--m",
            "16",
            "--cn",
            "12",
            "--W",
            "8",
            "--nbar",
            "7",
            "--trials",
            "20000",
            "--seed",
            "7",
            "--rows",
            "4",
            "--cols",
            "25",
            "--out",
            out.to_str().unwrap(),
            "--cache",
            cache.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(read(&out1, "report.csv"), read(&out2, "report.csv"));
    assert_eq!(read(&out1, "ccdf.csv"), read(&out2, "ccdf.csv"));
}

#[test]
fn compress_stats_emits_ccdf_and_delta_tables() {
    let out = tmp_dir("cstats");
    let r = llrq(&[
        "compress-stats",
        "--m",
        "16",
        "--cn",
        "12",
        "--W",
        "10",
        "--nbar",
        "9",
        "--trials",
        "20000",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--cache",
        out.join("cache").to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let ccdf = read(&out, "ccdf.csv");
    assert!(ccdf.starts_with("n,p_length_gt_n"));
    let delta = read(&out, "delta.csv");
    // Diagonal entries are exactly zero.
    for line in delta.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[1] == f[2] {
            assert_eq!(f[3], "0.000000e0", "diagonal delta must be zero: {line}");
        }
    }
    let bank = read(&out, "bank.json");
    assert!(serde_json::from_str::<serde_json::Value>(&bank).is_ok());
}

#[test]
fn gap_reports_quant_and_unopt_schemes() {
    let out = tmp_dir("gap");
    let r = llrq(&[
        "gap",
        "--m",
        "16",
        "--channel",
        "awgn",
        "--cn",
        "12",
        "--quant",
        "--unopt",
        "--nbar",
        "8",
        "--out",
        out.to_str().unwrap(),
        "--cache",
        out.join("cache").to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let gaps = read(&out, "gaps.csv");
    assert!(gaps.contains("quant,8,8,"));
    assert!(gaps.contains("unopt,8,8,"));
}
