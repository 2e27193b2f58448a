//! End-to-end checks of the `netcom` binary: output schemas, round trips,
//! and exit codes.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;

fn netcom() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netcom"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("netcom-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn detect_json_covers_every_node_exactly_once() {
    let out = netcom()
        .args(["detect", "--input"])
        .arg(fixture("karate.txt"))
        .args(["--k", "3", "--seed", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let nodes = doc["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 34);
    let ids: HashSet<i64> = nodes.iter().map(|n| n["id"].as_i64().unwrap()).collect();
    assert_eq!(ids.len(), 34, "every input node exactly once");
    assert_eq!(
        ids,
        (1..=34).collect::<HashSet<i64>>(),
        "original labels preserved"
    );
    assert_eq!(doc["report"]["k"], 3);
    assert_eq!(doc["config"]["k_resolved"], 3);
    assert_eq!(doc["config"]["backend"], "exact");
}

#[test]
fn detect_csv_writes_rows_and_sidecar() {
    let dir = temp_dir("csv");
    let out_path = dir.join("karate.csv");
    let status = netcom()
        .args(["detect", "--input"])
        .arg(fixture("karate.txt"))
        .args(["--k", "2", "--seed", "9", "--format", "csv", "--output"])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());

    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("node,community"));
    let rows: Vec<(i64, u32)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 34);
    let ids: HashSet<i64> = rows.iter().map(|r| r.0).collect();
    assert_eq!(ids.len(), 34);

    let sidecar = std::fs::read_to_string(dir.join("karate.csv.report.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
    assert!(doc["report"]["modularity"].is_f64());
    assert_eq!(doc["config"]["format"], "csv");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn identical_seeds_are_byte_identical_apart_from_runtime() {
    let run = || {
        let out = netcom()
            .args(["detect", "--input"])
            .arg(fixture("barbell.txt"))
            .args(["--k", "2", "--seed", "42"])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let (a, b) = (run(), run());
    let strip = |s: &str| {
        s.lines()
            .filter(|l| !l.contains("\"runtime_ms\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn missing_input_exits_2() {
    let status = netcom()
        .args(["detect", "--input", "/definitely/not/here.txt"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn invalid_flags_exit_64() {
    let cases: &[&[&str]] = &[
        &["detect", "--input", "x", "--lambda", "-1"],
        &["detect", "--input", "x", "--k", "0"],
        &["detect", "--input", "x", "--lsh-bits", "0"],
        &["detect", "--input", "x", "--format", "csv"],
        &["bench", "--input", "x", "--backends", "warp"],
        &["detect", "--input", "x", "--no-such-flag"],
    ];
    for args in cases {
        let mut cmd = netcom();
        // flag validation must fire before the input file is touched, except
        // for values that need the graph; use a real file for those
        let args: Vec<String> = args
            .iter()
            .map(|a| {
                if *a == "x" {
                    fixture("barbell.txt").display().to_string()
                } else {
                    a.to_string()
                }
            })
            .collect();
        let status = cmd.args(&args).output().unwrap();
        assert_eq!(
            status.status.code(),
            Some(64),
            "args {args:?} should exit 64, stderr: {}",
            String::from_utf8_lossy(&status.stderr)
        );
    }
}

#[test]
fn bench_single_backend_emits_one_row() {
    let out = netcom()
        .args(["bench", "--input"])
        .arg(fixture("karate.txt"))
        .args([
            "--backends",
            "mtree",
            "--queries",
            "8",
            "--k",
            "3",
            "--seed",
            "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["backend"], "mtree");
    assert!(rows[0]["error"].is_null());
}

#[test]
fn bench_backends_share_partitions_below_crossover() {
    // k below the index crossover: every backend must report the same quality
    let out = netcom()
        .args(["bench", "--input"])
        .arg(fixture("karate.txt"))
        .args([
            "--backends",
            "exact,mtree,lsh",
            "--queries",
            "8",
            "--k",
            "4",
            "--seed",
            "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let q: Vec<f64> = rows
        .iter()
        .map(|r| r["modularity"].as_f64().unwrap())
        .collect();
    assert_eq!(q[0], q[1]);
    assert_eq!(q[1], q[2]);
}

#[test]
fn auto_lambda_and_auto_k_resolve() {
    let out = netcom()
        .args(["detect", "--input"])
        .arg(fixture("barbell.txt"))
        .args(["--lambda", "auto", "--k", "auto", "--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // barbell mean degree is 14/6 < 4: sparse heuristic picks lambda 2
    assert_eq!(doc["config"]["lambda_resolved"], 2.0);
    // the farthest-first radius sequence drops after the two triangles
    assert_eq!(doc["config"]["k_resolved"], 2);
    assert_eq!(doc["report"]["k"], 2);
}
