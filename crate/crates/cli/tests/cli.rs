use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landscape-lab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn error_of(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim_end()).unwrap()
}

fn provenance(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("provenance.json")).unwrap()).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let steps: [&[&str]; 4] = [
        &["gen-potential", "--units", "48", "--seed", "2"],
        &["landscape", "--seed", "2", "--r", "6"],
        &["analyze", "--seed", "2"],
        &["eigs", "--seed", "2", "--r", "6", "--k", "4"],
    ];
    steps.iter().for_each(|s| ok(d, s));
    let names = ["potential-s2.json", "w-s2.json", "wells-s2.csv", "regions-s2.csv", "eigs-s2.csv", "provenance.json"];
    let first: Vec<Vec<u8>> = names.iter().map(|n| fs::read(d.join(n)).unwrap()).collect();
    steps.iter().for_each(|s| ok(d, s));
    let second: Vec<Vec<u8>> = names.iter().map(|n| fs::read(d.join(n)).unwrap()).collect();
    assert_eq!(first, second);

    let p = provenance(d);
    assert_eq!(p["eigs-s2"]["config"]["k"], 4);
    assert!(p["landscape-s2"]["results"]["solve_report"].is_object());
    assert_eq!(p["eigs-s2"]["tool_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn seeds_separate_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-potential", "--units", "16", "--seed", "1"]);
    ok(dir.path(), &["gen-potential", "--units", "16", "--seed", "4"]);
    let a = fs::read(dir.path().join("potential-s1.json")).unwrap();
    let b = fs::read(dir.path().join("potential-s4.json")).unwrap();
    assert_ne!(a, b);
    let p = provenance(dir.path());
    assert!(p.get("gen-potential-s1").is_some() && p.get("gen-potential-s4").is_some());
}

#[test]
fn errors_are_single_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = error_of(&run(d, &["landscape", "--seed", "9"]));
    assert_eq!(missing["error"], "io");
    assert!(missing["message"].as_str().unwrap().contains("potential-s9.json"));

    ok(d, &["gen-potential", "--units", "16"]);
    assert_eq!(error_of(&run(d, &["landscape", "--r", "1"]))["error"], "invalid_parameter");
    assert_eq!(error_of(&run(d, &["eigs", "--tol", "2"]))["error"], "invalid_parameter");
    assert_eq!(error_of(&run(d, &["gen-potential", "--dim", "3"]))["error"], "invalid_parameter");
    assert_eq!(error_of(&run(d, &["weyl", "--range", "4:1"]))["error"], "usage");
    assert_eq!(error_of(&run(d, &["nonsense"]))["error"], "usage");
    // Validation happens before any output is written.
    assert!(!d.join("u-s0.json").exists());
}

#[test]
fn predict_and_compare_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for s in [
        &["gen-potential", "--units", "64"][..],
        &["landscape"],
        &["eigs", "--k", "5"],
        &["predict", "--k", "3"],
        &["compare", "--k", "5"],
    ] {
        ok(d, s);
    }
    let preds = fs::read_to_string(d.join("predictions-s0.csv")).unwrap();
    assert_eq!(preds.lines().next().unwrap(), "rank,index,x,w_min,lambda_hat,support_size");
    assert_eq!(preds.lines().count(), 4);
    assert_eq!(provenance(d)["predict-s0"]["results"]["truncated"], false);
    let ratio = fs::read_to_string(d.join("ratio-s0.csv")).unwrap();
    assert_eq!(ratio.lines().count(), 6);
    let last: Vec<f64> = ratio.lines().last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[0], 5.0);
    assert!(last[1] > 1.0 && last[1] < 1.6);
    assert_eq!(fs::read_to_string(d.join("match-s0.csv")).unwrap().lines().count(), 6);

    // Asking for more wells than exist flags the shortfall.
    ok(d, &["predict", "--k", "100000"]);
    assert_eq!(provenance(d)["predict-s0"]["results"]["truncated"], true);
}

#[test]
fn weyl_and_dos_in_one_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for s in [&["gen-potential", "--units", "64"][..], &["landscape", "--r", "5"]] {
        ok(d, s);
    }
    ok(d, &["weyl", "--range", "0:3", "--points", "4"]);
    let weyl = fs::read_to_string(d.join("weyl-s0.csv")).unwrap();
    let counts: Vec<usize> = weyl.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(counts.len(), 4);
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));

    ok(d, &["dos", "--range", "0:2", "--bins", "8"]);
    let p = provenance(d);
    let tv = p["dos-s0"]["results"]["total_variation"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&tv));
    let total: usize = fs::read_to_string(d.join("dos-s0.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total as u64, p["dos-s0"]["results"]["eigenvalues_in_range"].as_u64().unwrap());
}

#[test]
fn two_dimensional_rasters_and_dos_prerequisite() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for s in [&["gen-potential", "--dim", "2", "--units", "8,6"][..], &["landscape", "--r", "4"], &["analyze"]] {
        ok(d, s);
    }
    let pgm = fs::read(d.join("w-s0.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
    assert!(d.join("basins-s0.pgm").exists());
    assert_eq!(error_of(&run(d, &["dos"]))["error"], "invalid_parameter");
}

#[test]
fn batch_is_independent_of_thread_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["compare", "--batch", "3", "--seed", "7", "--units", "48", "--r", "6", "--k", "4"];
    ok(a.path(), &[&args[..], &["--jobs", "1"]].concat());
    ok(b.path(), &[&args[..], &["--jobs", "3"]].concat());
    let name = "compare-summary-s7-s9.csv";
    let summary = fs::read_to_string(a.path().join(name)).unwrap();
    assert_eq!(summary, fs::read_to_string(b.path().join(name)).unwrap());
    let seeds: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["7", "8", "9"]);
    for seed in 7..=9 {
        let f = format!("eigs-s{seed}.csv");
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap());
    }
    assert_eq!(provenance(a.path()).as_object().unwrap().len(), 12);
}
