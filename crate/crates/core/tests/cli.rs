mod common;

use std::process::{Command, Output};

use noarb::report::ClassificationReport;
use noarb::report::SimulationSection;

use common::fixture;

fn noarb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noarb")).args(args).output().unwrap()
}

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn determined_report_exits_zero() {
    let out = noarb(&["analyze", &path("gbm.model")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("NGA on [0, inf)"));
    assert!(text.contains("(nga-infinite-horizon)"));
}

#[test]
fn unknown_verdict_exits_two() {
    let out = noarb(&["analyze", &path("fading_vol.model")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_file_exits_one_with_location() {
    let out = noarb(&["analyze", &path("bad.model")]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.model:2:"), "{err}");
    let out = noarb(&["analyze", "/nonexistent/x.model"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(noarb(&["analyze"]).status.code(), Some(1));
    assert_eq!(noarb(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        noarb(&["analyze", &path("gbm.model"), "--tolerance", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(noarb(&["--help"]).status.code(), Some(0));
}

#[test]
fn json_report_parses_back() {
    let out = noarb(&["analyze", &path("quadratic_vol.model"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r: ClassificationReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.arbitrage.unwrap().nra_finite_t.is_fails());
    assert_eq!(r.model.label.as_deref(), Some("quadratic_vol"));
}

#[test]
fn numeric_only_and_anchor_agree_with_default() {
    let get = |extra: &[&str]| {
        let mut args = vec!["analyze", "--format", "json"];
        let p = path("linear_vol.model");
        args.push(&p);
        args.extend_from_slice(extra);
        let out = noarb(&args);
        let r: ClassificationReport = serde_json::from_slice(&out.stdout).unwrap();
        let a = r.arbitrage.unwrap();
        [a.nflvr_finite_t.value, a.nra_finite_t.value, a.nga_finite_t.value]
    };
    let base = get(&[]);
    assert_eq!(get(&["--anchor", "3"]), base);
    assert_eq!(get(&["--numeric-only"]), base);
}

#[test]
fn simulate_cross_checks_and_is_reproducible() {
    let args = [
        "simulate",
        &path("gbm.model"),
        "--paths",
        "4000",
        "--dt",
        "0.01",
        "--seed",
        "5",
        "--format",
        "json",
    ];
    let a = noarb(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = noarb(&args);
    assert_eq!(a.stdout, b.stdout);
    let s: SimulationSection = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(s.report.config.n_paths, 4000);
    assert!(s.crosscheck.iter().all(|c| !c.flagged));
}

#[test]
fn simulate_rejects_bad_configuration() {
    let out = noarb(&[
        "simulate",
        &path("gbm.model"),
        "--paths",
        "0",
        "--dt",
        "0.01",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = noarb(&[
        "simulate",
        &path("gbm.model"),
        "--paths",
        "10",
        "--dt",
        "-1",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cev_grid_matches_closed_form() {
    let out = noarb(&["cev-grid"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("120 of 120 cells match"), "{text}");
}

#[test]
fn in_process_runner_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = noarb::cli::run(["noarb", "analyze", &path("bessel3.model")], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(out, noarb(&["analyze", &path("bessel3.model")]).stdout);
}
