//! Golden-file tests for every CLI path.
//!
//! Set UPDATE_GOLDEN=1 to rewrite the expected files after an intended
//! output change.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn fixture(name: &str) -> PathBuf {
    root().join("fixtures").join(name)
}

fn run(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copula-gof"))
        .args(args)
        .env("COPULA_GOF_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn check_golden(name: &str, actual: &[u8]) {
    let path = root().join("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(
        expected == actual,
        "{name} differs from golden file\n--- expected\n{}\n--- actual\n{}",
        String::from_utf8_lossy(&expected),
        String::from_utf8_lossy(actual)
    );
}

fn golden_stdout(name: &str, args: &[&str]) {
    for threads in ["1", "4"] {
        let out = run(args, threads);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        check_golden(name, &out.stdout);
    }
}

fn data() -> String {
    fixture("clayton40.csv").to_string_lossy().into_owned()
}

#[test]
fn test_report() {
    let d = data();
    golden_stdout("test_clayton.json", &["test", "--data", &d, "--family", "clayton", "--b", "50", "--seed", "7"]);
}

#[test]
fn test_report_common_censoring_white() {
    let d = data();
    golden_stdout(
        "test_gaussian_white_common.json",
        &["test", "--data", &d, "--family", "gaussian", "--statistic", "white", "--b", "40", "--seed", "2", "--common-censoring"],
    );
}

#[test]
fn test_report_pios() {
    let d = data();
    golden_stdout("test_frank_pios.json", &["test", "--data", &d, "--family", "frank", "--statistic", "pios", "--b", "20", "--seed", "9"]);
}

#[test]
fn select_report() {
    let d = data();
    golden_stdout("select.json", &["select", "--data", &d, "--b", "40", "--seed", "3"]);
}

#[test]
fn fit_reports() {
    let d = data();
    for family in ["clayton", "frank", "gumbel", "joe", "gaussian"] {
        golden_stdout(&format!("fit_{family}.json"), &["fit", "--data", &d, "--family", family]);
    }
}

#[test]
fn km_curves() {
    let d = data();
    for margin in ["1", "2", "c1", "c2", "common"] {
        golden_stdout(&format!("km_{margin}.csv"), &["km", "--data", &d, "--margin", margin]);
    }
}

fn simulate_in(dir: &Path, threads: &str) -> Output {
    fs::copy(fixture("sim.cfg"), dir.join("sim.cfg")).unwrap();
    let cfg = dir.join("sim.cfg");
    run(&["simulate", "--config", cfg.to_str().unwrap()], threads)
}

#[test]
fn simulate_outputs() {
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let out = simulate_in(dir.path(), threads);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        for file in ["table.csv", "qq_ir.csv", "qq_white.csv"] {
            let bytes = fs::read(dir.path().join("sim_out").join(file)).unwrap();
            check_golden(&format!("sim_{file}"), &bytes);
        }
    }
}

#[test]
fn exit_codes() {
    let d = data();
    let code = |args: &[&str]| run(args, "1").status.code();
    assert_eq!(code(&["fit", "--data", "/nonexistent/x.csv", "--family", "clayton"]), Some(1));
    assert_eq!(code(&["fit", "--data", &d, "--family", "nope"]), Some(64));
    assert_eq!(code(&["test", "--data", &d, "--family", "clayton", "--b", "0"]), Some(64));
    assert_eq!(code(&["bogus"]), Some(64));
    assert_eq!(code(&["--help"]), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    fs::write(&short, "x1,x2,d1,d2\n1,2,1,1\n").unwrap();
    assert_eq!(code(&["fit", "--data", short.to_str().unwrap(), "--family", "clayton"]), Some(1));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x1,x2,d1,d2\n1,2,1,2\n").unwrap();
    let out = run(&["fit", "--data", bad.to_str().unwrap(), "--family", "clayton"], "1");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    // every row doubly censored at one time: nothing to fit
    let degenerate = dir.path().join("degenerate.csv");
    let rows: String = (0..12).map(|_| "1,1,0,0\n").collect();
    fs::write(&degenerate, format!("x1,x2,d1,d2\n{rows}")).unwrap();
    assert_eq!(code(&["fit", "--data", degenerate.to_str().unwrap(), "--family", "clayton"]), Some(2));
}
