//! Command-line front end: CSV in, JSON or CSV out.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 statistical failure,
//! 64 usage error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bootstrap::{
    critical_value_decision, select_copula, bootstrap_pvalue, BootstrapConfig, CensoringMode, Decision, GofReport,
};
use crate::copulas::Family;
use crate::error::Error;
use crate::inference::{fit_pmle, FitResult, StatisticKind};
use crate::simulation::{fmt_num, round_sig, run_null_distribution, run_rejection_study, CensoringLevel, Scenario};
use crate::survival::{censoring_survival, event_survival, pseudo_observations, CensoredPair, CensoringMargin, StepSurvival};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_STATISTICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "COPULA_GOF_THREADS";

#[derive(Debug, Parser)]
#[command(name = "copula-gof", version, about = "Goodness-of-fit tests for bivariate survival copulas under right censoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bootstrap test of one copula family.
    Test(TestArgs),
    /// Rank several families by bootstrap P-value.
    Select(SelectArgs),
    /// Pseudo maximum likelihood fit.
    Fit(FitArgs),
    /// Kaplan-Meier curve of an event or censoring margin.
    Km(KmArgs),
    /// Run a calibration study described by a key=value config file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct BootArgs {
    #[arg(long, default_value = "ir")]
    pub statistic: String,
    #[arg(long, default_value_t = 500)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Regenerate one shared censoring time per pair.
    #[arg(long)]
    pub common_censoring: bool,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub family: String,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated family names.
    #[arg(long, default_value = "clayton,frank,gumbel,joe,gaussian")]
    pub families: String,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub family: String,
}

#[derive(Debug, Args)]
pub struct KmArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// 1, 2 (event margins), c1, c2 (censoring margins) or common.
    #[arg(long, default_value = "1")]
    pub margin: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: msg.into() }
    }

    fn io(msg: impl Into<String>) -> Self {
        Self { code: EXIT_IO, message: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_USAGE,
            _ => EXIT_STATISTICAL,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

/// Minimum rows accepted by the statistical commands.
pub const MIN_ROWS: usize = 10;

/// Reads a `x1,x2,d1,d2` file; errors name the offending line.
pub fn read_data(path: &Path) -> Result<Vec<CensoredPair>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    parse_data(&text).map_err(|m| Failure::io(format!("{}: {m}", path.display())))
}

pub fn parse_data(text: &str) -> Result<Vec<CensoredPair>, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| format!("line 1: {e}"))?.clone();
    let expected = ["x1", "x2", "d1", "d2"];
    if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(format!("line 1: header must be x1,x2,d1,d2, got {}", headers.iter().collect::<Vec<_>>().join(",")));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| match e.position() {
            Some(p) => format!("line {}: {e}", p.line()),
            None => e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let time = |k: usize| -> Result<f64, String> {
            let v: f64 = rec[k]
                .parse()
                .map_err(|_| format!("line {line}: {} = '{}' is not a number", expected[k], &rec[k]))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("line {line}: {} must be a finite nonnegative time, got {}", expected[k], &rec[k]));
            }
            Ok(v)
        };
        let flag = |k: usize| -> Result<bool, String> {
            match &rec[k] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(format!("line {line}: {} must be 0 or 1, got '{other}'", expected[k])),
            }
        };
        out.push(CensoredPair { x1: time(0)?, x2: time(1)?, d1: flag(2)?, d2: flag(3)? });
    }
    Ok(out)
}

fn read_for_analysis(path: &Path) -> Result<Vec<CensoredPair>, Failure> {
    let data = read_data(path)?;
    if data.len() < MIN_ROWS {
        return Err(Failure::io(format!("{}: need at least {MIN_ROWS} rows, got {}", path.display(), data.len())));
    }
    Ok(data)
}

fn parse_family(s: &str) -> Result<Family, Failure> {
    s.parse().map_err(|e: Error| Failure::usage(e.to_string()))
}

fn boot_config(a: &BootArgs) -> Result<BootstrapConfig, Failure> {
    let statistic: StatisticKind = a.statistic.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::usage(format!("--alpha must lie in (0,1), got {}", a.alpha)));
    }
    let cfg = BootstrapConfig {
        b_replicates: a.b,
        master_seed: a.seed,
        censoring_mode: if a.common_censoring { CensoringMode::Common } else { CensoringMode::PerMargin },
        statistic,
    };
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(cfg)
}

/// Recursively rounds every float to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json!(round_sig(n.as_f64().unwrap_or(f64::NAN))),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    round_json(serde_json::to_value(v).expect("serializable"))
}

pub fn censoring_rates(data: &[CensoredPair]) -> [f64; 2] {
    let n = data.len().max(1) as f64;
    [
        data.iter().filter(|p| !p.d1).count() as f64 / n,
        data.iter().filter(|p| !p.d2).count() as f64 / n,
    ]
}

/// The documented report object.
pub fn report_json(r: &GofReport, data: &[CensoredPair], alpha: f64) -> Result<Value, Failure> {
    let decision = critical_value_decision(r, alpha)?;
    Ok(round_json(json!({
        "family": r.family,
        "theta_hat": r.theta_hat,
        "statistic": {
            "kind": r.statistic.kind,
            "value": r.statistic.value,
            "null_mean": r.statistic.null_mean,
        },
        "sigma_b": r.sigma_b,
        "p_value": r.p_value,
        "b": r.b_used,
        "seed": r.seed,
        "n": r.n,
        "censoring_rates": censoring_rates(data),
        "degenerate": r.degenerate,
        "decision_at": { "alpha": alpha, "reject": decision == Decision::Reject },
    })))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn cmd_test(a: &TestArgs) -> Result<String, Failure> {
    let family = parse_family(&a.family)?;
    let cfg = boot_config(&a.boot)?;
    let data = read_for_analysis(&a.data)?;
    let report = bootstrap_pvalue(&data, family, &cfg)?;
    Ok(pretty(&report_json(&report, &data, a.boot.alpha)?))
}

pub fn cmd_select(a: &SelectArgs, warn: &mut dyn Write) -> Result<String, Failure> {
    let mut families = Vec::new();
    for name in a.families.split(',').filter(|s| !s.trim().is_empty()) {
        let f = parse_family(name)?;
        if families.contains(&f) {
            let _ = writeln!(warn, "warning: duplicate family '{f}' ignored");
        } else {
            families.push(f);
        }
    }
    if families.is_empty() {
        return Err(Failure::usage("--families lists no family"));
    }
    let cfg = boot_config(&a.boot)?;
    let data = read_for_analysis(&a.data)?;
    let ranked = select_copula(&data, &families, &cfg)?;
    let entries = ranked
        .iter()
        .map(|r| match &r.outcome {
            Ok(rep) => report_json(rep, &data, a.boot.alpha),
            Err(msg) => Ok(json!({ "family": r.family, "error": msg })),
        })
        .collect::<Result<Vec<Value>, Failure>>()?;
    Ok(pretty(&Value::Array(entries)))
}

pub fn cmd_fit(a: &FitArgs) -> Result<String, Failure> {
    let family = parse_family(&a.family)?;
    let data = read_for_analysis(&a.data)?;
    let obs = pseudo_observations(&data)?;
    let fit: FitResult = fit_pmle(family, &obs)?;
    Ok(pretty(&to_json(&fit)))
}

pub fn km_csv(curve: &StepSurvival, n: usize) -> String {
    let mut out = String::from("time,survival,n_at_risk\n");
    if curve.jump_times().is_empty() {
        out.push_str(&format!("{},{},{}\n", fmt_num(0.0), fmt_num(1.0), n));
    }
    for ((t, s), r) in curve.jump_times().iter().zip(curve.values()).zip(curve.n_at_risk()) {
        out.push_str(&format!("{},{},{}\n", fmt_num(*t), fmt_num(*s), r));
    }
    out
}

pub fn cmd_km(a: &KmArgs) -> Result<String, Failure> {
    let data = read_data(&a.data)?;
    if data.is_empty() {
        return Err(Failure::io(format!("{}: no data rows", a.data.display())));
    }
    let curve = match a.margin.trim().to_ascii_lowercase().as_str() {
        "1" => event_survival(&data, 1)?,
        "2" => event_survival(&data, 2)?,
        "c1" => censoring_survival(&data, CensoringMargin::First)?,
        "c2" => censoring_survival(&data, CensoringMargin::Second)?,
        "common" => censoring_survival(&data, CensoringMargin::Common)?,
        other => return Err(Failure::usage(format!("--margin must be 1|2|c1|c2|common, got '{other}'"))),
    };
    Ok(km_csv(&curve, data.len()))
}

pub const CONFIG_KEYS: [&str; 11] = [
    "true_family",
    "tau",
    "n",
    "censoring",
    "null_families",
    "replications",
    "b",
    "seed",
    "alpha",
    "tests",
    "output_dir",
];

/// Parsed simulation config.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    pub output_dir: PathBuf,
}

pub fn parse_config(text: &str, base: &Path) -> Result<SimulationConfig, Failure> {
    let mut kv = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim();
        if !CONFIG_KEYS.contains(&k) {
            return Err(Failure::usage(format!(
                "config line {}: unknown key '{k}'; valid keys: {}",
                i + 1,
                CONFIG_KEYS.join(", ")
            )));
        }
        kv.insert(k.to_string(), v.trim().to_string());
    }
    let get = |k: &str| kv.get(k).map(String::as_str);
    let num = |k: &str, v: &str| -> Result<f64, Failure> {
        v.parse().map_err(|_| Failure::usage(format!("config key {k}: '{v}' is not a number")))
    };
    let count = |k: &str, v: &str| -> Result<usize, Failure> {
        v.parse().map_err(|_| Failure::usage(format!("config key {k}: '{v}' is not a nonnegative integer")))
    };
    let true_family = parse_family(get("true_family").ok_or_else(|| Failure::usage("config needs true_family"))?)?;
    let tau = num("tau", get("tau").ok_or_else(|| Failure::usage("config needs tau"))?)?;
    let n = count("n", get("n").ok_or_else(|| Failure::usage("config needs n"))?)?;
    let censoring: CensoringLevel = get("censoring")
        .unwrap_or("none")
        .parse()
        .map_err(|e: Error| Failure::usage(e.to_string()))?;
    let mut s = Scenario::new(true_family, tau, n, censoring);
    if let Some(v) = get("null_families") {
        s.null_families = v.split(',').map(parse_family).collect::<Result<_, _>>()?;
        s.null_families.dedup();
    }
    if let Some(v) = get("replications") {
        s.replications = count("replications", v)?;
    }
    if let Some(v) = get("b") {
        s.b_replicates = count("b", v)?;
    }
    if let Some(v) = get("seed") {
        s.master_seed = v.parse().map_err(|_| Failure::usage(format!("config key seed: '{v}' is not an integer")))?;
    }
    if let Some(v) = get("alpha") {
        s.alpha = num("alpha", v)?;
    }
    if let Some(v) = get("tests") {
        s.tests = v
            .split(',')
            .map(|t| t.parse().map_err(|e: Error| Failure::usage(e.to_string())))
            .collect::<Result<_, _>>()?;
    }
    s.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let out = PathBuf::from(get("output_dir").unwrap_or("."));
    let output_dir = if out.is_absolute() { out } else { base.join(out) };
    Ok(SimulationConfig { scenario: s, output_dir })
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<String, Failure> {
    let text = fs::read_to_string(&a.config).map_err(|e| Failure::io(format!("{}: {e}", a.config.display())))?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let cfg = parse_config(&text, base)?;
    let s = &cfg.scenario;
    fs::create_dir_all(&cfg.output_dir)?;

    let table = run_rejection_study(s)?;
    let table_path = cfg.output_dir.join("table.csv");
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    fs::write(&table_path, &buf)?;

    let mut summary = format!("table: {}\n", table_path.display());
    if s.null_families.contains(&s.true_family) {
        for nd in run_null_distribution(s)? {
            let path = cfg.output_dir.join(format!("qq_{}.csv", nd.test));
            let mut buf = Vec::new();
            nd.write_csv(&mut buf)?;
            fs::write(&path, &buf)?;
            summary.push_str(&format!("qq: {}\n", path.display()));
        }
    }
    for r in &table.rows {
        summary.push_str(&format!(
            "{} vs {} [{}]: rejection {} selection {} over {} replications\n",
            r.true_family,
            r.null_family,
            r.test,
            fmt_num(r.rejection_rate),
            fmt_num(r.selection_rate),
            r.replications
        ));
    }
    if table.failures > 0 {
        summary.push_str(&format!("excluded failures: {}\n", table.failures));
    }
    Ok(summary)
}

/// Applies the thread cap from the environment, if any.
pub fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    // a second initialization in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs a parsed command, writing the result to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write, warn: &mut dyn Write) -> Result<(), Failure> {
    configure_threads()?;
    let text = match &cli.command {
        Command::Test(a) => cmd_test(a)?,
        Command::Select(a) => cmd_select(a, warn)?,
        Command::Fit(a) => cmd_fit(a)?,
        Command::Km(a) => cmd_km(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Entry point shared by the binary: parses `args` and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_crlf_and_reports_bad_lines() {
        let ok = parse_data("x1,x2,d1,d2\r\n1.5,2,1,0\r\n0,3.25,0,1\r\n").unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[0], CensoredPair { x1: 1.5, x2: 2.0, d1: true, d2: false });
        let mut text = String::from("x1,x2,d1,d2\n");
        for _ in 0..5 {
            text.push_str("1,1,1,1\n");
        }
        text.push_str("1,1,2,1\n");
        let err = parse_data(&text).unwrap_err();
        assert!(err.contains("line 7"), "{err}");
        assert!(parse_data("a,b,c,d\n1,1,1,1\n").unwrap_err().contains("line 1"));
        assert!(parse_data("x1,x2,d1,d2\n-1,1,1,1\n").unwrap_err().contains("line 2"));
        assert!(parse_data("x1,x2,d1,d2\n1,1,1\n").unwrap_err().contains("line 2"));
    }

    #[test]
    fn km_toy_curve() {
        let d = parse_data("x1,x2,d1,d2\n1,1,1,1\n2,1,0,1\n3,1,1,1\n").unwrap();
        let csv = km_csv(&event_survival(&d, 1).unwrap(), 3);
        assert_eq!(csv, "time,survival,n_at_risk\n1.0,0.666666666667,3\n3.0,0.0,1\n");
        let none = parse_data("x1,x2,d1,d2\n1,1,0,0\n2,1,0,0\n").unwrap();
        assert_eq!(km_csv(&event_survival(&none, 1).unwrap(), 2), "time,survival,n_at_risk\n0.0,1.0,2\n");
    }

    #[test]
    fn json_rounding() {
        let v = round_json(json!({"a": 2.0/3.0, "b": [0.1 + 0.2], "c": 3}));
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"a":0.666666666667,"b":[0.3],"c":3}"#);
    }

    #[test]
    fn config_parsing() {
        let cfg = parse_config(
            "# study\ntrue_family=clayton\ntau=0.5\nn=100\ncensoring=c40\nnull_families=clayton,frank\nreplications=3\nb=20\nseed=7\nalpha=0.1\ntests=ir,white\noutput_dir=out\n",
            Path::new("/tmp"),
        )
        .unwrap();
        assert_eq!(cfg.scenario.null_families, vec![Family::Clayton, Family::Frank]);
        assert_eq!(cfg.scenario.censoring, CensoringLevel::C40);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/out"));
        let bad = parse_config("true_family=clayton\ncolour=red\n", Path::new(".")).unwrap_err();
        assert_eq!(bad.code, EXIT_USAGE);
        assert!(bad.message.contains("output_dir"));
        let zero = parse_config("true_family=clayton\ntau=0.5\nn=100\nreplications=0\n", Path::new(".")).unwrap_err();
        assert_eq!(zero.code, EXIT_USAGE);
    }

    #[test]
    fn usage_errors_map_to_64() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["copula-gof", "frobnicate"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(
            run(["copula-gof", "test", "--data", "x.csv", "--family", "student"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert_eq!(
            run(["copula-gof", "test", "--data", "x.csv", "--family", "clayton", "--b", "1"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert_eq!(run(["copula-gof", "--help"], &mut out, &mut err), EXIT_OK);
    }

    #[test]
    fn missing_file_is_io_error() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(["copula-gof", "fit", "--data", "/nonexistent/x.csv", "--family", "frank"], &mut out, &mut err);
        assert_eq!(code, EXIT_IO);
    }
}
