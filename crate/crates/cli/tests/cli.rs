use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn splitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = splitlab(&[args, &["--json"]].concat());
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn torus_file() -> PathBuf {
    let path = scratch("torus.iex");
    std::fs::write(&path, "top: 2 1\nbottom: 1 2\n").unwrap();
    path
}

#[test]
fn first_coefficient_law() {
    assert_eq!(
        json(&["torus", "xmn", "--m", "1", "--n", "3"]),
        serde_json::json!({"lower": "1/4", "upper": "1/4"})
    );
}

#[test]
fn torus_words() {
    let c = json(&["torus", "cylinder", "--word", "RL"]);
    assert_eq!(
        (c["lo"].as_str(), c["hi"].as_str(), c["length"].as_str()),
        (Some("1/2"), Some("1/1"), Some("1/2"))
    );
    assert_eq!(json(&["torus", "expand", "--x", "2/5"])["word"], "R2L2");
}

#[test]
fn torus_rauzy_graph_is_a_single_node() {
    let path = torus_file();
    let out = splitlab(&[
        "rauzy",
        "explore",
        "--in",
        path.to_str().unwrap(),
        "--limit",
        "10",
        "--dot",
    ]);
    assert!(out.status.success());
    let dot = String::from_utf8(out.stdout).unwrap();
    assert_eq!(dot.matches("->").count(), 2);
    assert_eq!(dot.matches("\"2 1 | 1 2\" -> \"2 1 | 1 2\"").count(), 2);
}

#[test]
fn twist_ratio_for_genus_four() {
    // φ₀(4,0) has 19 bands, so the ratio at n = 1 is 2^-17.
    assert_eq!(
        json(&["surface", "twist", "--g", "4", "--m", "0", "--n", "1"])["ratio"],
        "1/131072"
    );
}

#[test]
fn distortion_example() {
    let v = json(&["measure", "distortion", "--matrix", "[[1,0],[3,1]]", "--C", "2"]);
    assert_eq!(v["distortion"], "16/1");
    assert_eq!(v["uniformly_distorted"], false);
}

#[test]
fn built_surfaces_round_trip_through_files() {
    let path = scratch("phi0_0_5.iex");
    let out = splitlab(&[
        "surface",
        "build",
        "--g",
        "0",
        "--m",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let regions = json(&["surface", "regions", "--in", path.to_str().unwrap()]);
    assert_eq!(
        (regions["genus"].as_u64(), regions["punctures"].as_u64()),
        (Some(0), Some(5))
    );
}

#[test]
fn identical_runs_give_identical_json() {
    let args = [
        "walk",
        "estimate",
        "--mu",
        "uniform4",
        "--diagonal",
        "2:4",
        "--steps",
        "100",
        "--trials",
        "500",
        "--seed",
        "5",
        "--json",
    ];
    let a = splitlab(&args);
    let b = splitlab(&[&args[..], &["--threads", "3"]].concat());
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(splitlab(&args).stdout, a.stdout);
}

#[test]
fn errors_exit_with_one() {
    let missing = scratch("missing.iex");
    for args in [
        vec!["bogus"],
        vec!["surface", "build", "--g", "0", "--m", "2"],
        vec!["torus", "xmn", "--m", "0", "--n", "3"],
        vec!["torus", "cylinder", "--word", "LR"],
        vec!["iet", "expand", "--in", missing.to_str().unwrap()],
        vec!["surface", "cdist", "--g", "0", "--m", "5", "--C", "1"],
    ] {
        let out = splitlab(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn version_is_printed() {
    let out = splitlab(&["--version"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        format!("splitlab {}", env!("CARGO_PKG_VERSION"))
    );
}
