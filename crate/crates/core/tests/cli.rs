mod common;

use std::process::{Command, Output};

use serde_json::Value;

fn thermo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermo")).args(args).output().unwrap()
}

fn fx(name: &str) -> String {
    common::fixture_path(name).display().to_string()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn pressure_reports_exact_base() {
    let v = json(&thermo(&["pressure", "--factor", &fx("collapse.json"), "--depth", "6"]));
    assert_eq!(v["command"], "pressure");
    assert_eq!(v["depth"], 6);
    let text = v.to_string();
    assert!(text.contains("\"exact_base\":3"), "{text}");
}

#[test]
fn verdicts_from_the_command_line() {
    let v = json(&thermo(&["verdict", "--factor", &fx("collapse.json"), "--depth", "8"]));
    assert_eq!(v["result"]["verdict"], "CERTIFIED");
    let v = json(&thermo(&[
        "verdict",
        "--factor",
        &fx("collapse.json"),
        "--h",
        &fx("h_zero_ab.json"),
        "--depth",
        "8",
    ]));
    assert_eq!(v["result"]["verdict"], "REFUTED");
    assert_eq!(v["result"]["scope"], "candidate");
    let v = json(&thermo(&["verdict", "--factor", &fx("trap.json"), "--depth", "10"]));
    assert_eq!(v["result"]["verdict"], "REFUTED");
    assert_eq!(v["result"]["scope"], "all_continuous");
    assert!(v["result"]["witness"].is_array());
}

#[test]
fn fit_h_emits_exact_expressions() {
    let v = json(&thermo(&["fit-h", "--factor", &fx("collapse.json"), "--depth", "8"]));
    let text = v.to_string();
    assert!(text.contains("\"a\":\"ln(2)\""), "{text}");
    assert!(text.contains("\"b\":\"0\""), "{text}");
}

#[test]
fn profile_csv_has_a_header_row() {
    let out = thermo(&["profile-cnm", "--factor", &fx("trap.json"), "--depth", "6", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,m,logC,D"));
    // pairs (n, m) with 2 <= n + m <= 6
    assert_eq!(lines.count(), 15);
}

#[test]
fn out_flag_writes_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["weak-gibbs", "--sft", &fx("golden.json"), "--depth", "8"];
    let stdout = thermo(&args).stdout;
    let out = thermo(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
}

#[test]
fn thread_count_does_not_change_reports() {
    let args = ["verdict", "--factor", &fx("amalgam.json"), "--depth", "8"];
    let one = Command::new(env!("CARGO_BIN_EXE_thermo"))
        .args(args)
        .env("THERMO_THREADS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_thermo"))
        .args(args)
        .env("THERMO_THREADS", "4")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn exit_codes() {
    // missing input
    assert_eq!(thermo(&["pressure", "--sft", "/nonexistent.json"]).status.code(), Some(2));
    // unknown flag
    assert_eq!(thermo(&["pressure", "--bogus"]).status.code(), Some(2));
    // no source
    assert_eq!(thermo(&["pressure"]).status.code(), Some(2));
    // depth beyond the word cap
    assert_eq!(thermo(&["pressure", "--sft", &fx("full2.json"), "--depth", "80"]).status.code(), Some(3));
    // depth beyond a stored table
    assert_eq!(
        thermo(&["fit-h", "--table", &fx("corrupted_table.json"), "--n-fit", "12"]).status.code(),
        Some(3)
    );
    // exact arithmetic requested for a real-valued potential
    let out = thermo(&[
        "pressure",
        "--sft",
        &fx("golden.json"),
        "--potential",
        &fx("golden_potential.json"),
        "--mode",
        "exact",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    // word outside the image language
    let out = thermo(&["certificate", "--sft", &fx("golden.json"), "--word", "bb", "--depth", "8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}
