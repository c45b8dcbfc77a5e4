//! Calibration study harness: censored data from a known copula with
//! unit-exponential margins and common exponential censoring, swept over
//! candidate null families and test statistics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_reports, critical_value_decision, BootstrapConfig, CensoringMode, Decision};
use crate::copulas::{CopulaModel, Family};
use crate::error::{Error, Result};
use crate::inference::{fit_pmle, statistic, StatisticKind};
use crate::numerics::{derive_seed, norm_quantile, RngStream};
use crate::survival::{pseudo_observations, CensoredPair};

const DATA_LABEL: u64 = 0x6461_7461;
const BOOT_LABEL: u64 = 0x626f_6f74;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CensoringLevel {
    None,
    C20,
    C40,
    C70,
}

impl CensoringLevel {
    /// Mean of the exponential censoring time; P(T > C) = 1/(1 + mean).
    pub fn mean(self) -> f64 {
        match self {
            CensoringLevel::None => f64::INFINITY,
            CensoringLevel::C20 => 4.0,
            CensoringLevel::C40 => 1.5,
            CensoringLevel::C70 => 3.0 / 7.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CensoringLevel::None => "none",
            CensoringLevel::C20 => "c20",
            CensoringLevel::C40 => "c40",
            CensoringLevel::C70 => "c70",
        }
    }
}

impl fmt::Display for CensoringLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CensoringLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(CensoringLevel::None),
            "c20" => Ok(CensoringLevel::C20),
            "c40" => Ok(CensoringLevel::C40),
            "c70" => Ok(CensoringLevel::C70),
            other => Err(Error::Config(format!("unknown censoring level '{other}' (expected none|c20|c40|c70)"))),
        }
    }
}

/// One cell of the calibration design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub true_family: Family,
    pub tau: f64,
    pub n: usize,
    pub censoring: CensoringLevel,
    pub null_families: Vec<Family>,
    pub replications: usize,
    pub b_replicates: usize,
    pub master_seed: u64,
    pub alpha: f64,
    pub tests: Vec<StatisticKind>,
    pub censoring_mode: CensoringMode,
}

impl Scenario {
    pub fn new(true_family: Family, tau: f64, n: usize, censoring: CensoringLevel) -> Self {
        Self {
            true_family,
            tau,
            n,
            censoring,
            null_families: vec![true_family],
            replications: 100,
            b_replicates: 200,
            master_seed: 1,
            alpha: 0.05,
            tests: vec![StatisticKind::Ir, StatisticKind::White, StatisticKind::LogIm],
            censoring_mode: CensoringMode::PerMargin,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.true_family.tau_to_theta(self.tau)?;
        if self.n < 10 {
            return Err(Error::Config("n must be at least 10".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        if self.null_families.is_empty() || self.tests.is_empty() {
            return Err(Error::Config("null_families and tests must be nonempty".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0,1], got {}", self.alpha)));
        }
        self.bootstrap_config(0).validate()
    }

    fn bootstrap_config(&self, replicate: usize) -> BootstrapConfig {
        BootstrapConfig {
            b_replicates: self.b_replicates,
            master_seed: derive_seed(derive_seed(self.master_seed, BOOT_LABEL), replicate as u64),
            censoring_mode: self.censoring_mode,
            statistic: self.tests[0],
        }
    }
}

/// Data for replicate `replicate`: `T_r = −ln U_r`, one common censoring time.
pub fn generate_scenario_dataset(s: &Scenario, replicate: usize) -> Result<Vec<CensoredPair>> {
    let model = CopulaModel::from_tau(s.true_family, s.tau)?;
    let mut rng = RngStream::new(derive_seed(s.master_seed, DATA_LABEL), replicate as u64);
    let mean = s.censoring.mean();
    (0..s.n)
        .map(|_| {
            let (u1, u2) = model.sample_pair(&mut rng)?;
            let (t1, t2) = (-u1.ln(), -u2.ln());
            let c = rng.exponential(mean);
            Ok(CensoredPair { x1: t1.min(c), x2: t2.min(c), d1: t1 <= c, d2: t2 <= c })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub true_family: Family,
    pub null_family: Family,
    pub test: StatisticKind,
    pub tau: f64,
    pub n: usize,
    pub censoring: CensoringLevel,
    pub rejection_rate: f64,
    /// Share of replicates in which this null family had the largest P-value.
    pub selection_rate: f64,
    /// Replicates that produced a P-value for this row.
    pub replications: usize,
    /// P-values in replicate order, for re-thresholding.
    #[serde(skip)]
    pub p_values: Vec<f64>,
}

impl TableRow {
    pub fn rejection_rate_at(&self, alpha: f64) -> f64 {
        if self.p_values.is_empty() {
            return 0.0;
        }
        let rejected = self.p_values.iter().filter(|&&p| alpha >= 1.0 || p < alpha).count();
        rejected as f64 / self.p_values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTable {
    pub rows: Vec<TableRow>,
    /// (replicate, null family) cells excluded after a failure.
    pub failures: usize,
}

pub const TABLE_HEADER: &str = "true_family,null_family,test,tau,n,censoring,rejection_rate,selection_rate,replications";

impl SimulationTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TABLE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.true_family,
                r.null_family,
                r.test,
                fmt_num(r.tau),
                r.n,
                r.censoring,
                fmt_num(r.rejection_rate),
                fmt_num(r.selection_rate),
                r.replications
            )?;
        }
        Ok(())
    }
}

/// Rounds to 12 significant digits and prints the shortest round-tripping form.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn fmt_num(x: f64) -> String {
    serde_json::to_string(&round_sig(x)).unwrap_or_else(|_| x.to_string())
}

type Cell = Option<Vec<(f64, Decision)>>;

/// Rejection and selection rates for every (null family, test) pair.
pub fn run_rejection_study(s: &Scenario) -> Result<SimulationTable> {
    s.validate()?;
    let per_replicate: Vec<Vec<Cell>> = (0..s.replications)
        .into_par_iter()
        .map(|r| {
            let data = match generate_scenario_dataset(s, r) {
                Ok(d) => d,
                Err(_) => return vec![None; s.null_families.len()],
            };
            let cfg = s.bootstrap_config(r);
            s.null_families
                .iter()
                .map(|&fam| {
                    let reports = bootstrap_reports(&data, fam, &cfg, &s.tests).ok()?;
                    reports
                        .iter()
                        .map(|rep| Some((rep.p_value, critical_value_decision(rep, s.alpha).ok()?)))
                        .collect()
                })
                .collect()
        })
        .collect();

    let failures = per_replicate.iter().flatten().filter(|c| c.is_none()).count();
    let mut rows = Vec::new();
    for (t, &test) in s.tests.iter().enumerate() {
        // winners per replicate among families that produced a P-value
        let mut wins = vec![0usize; s.null_families.len()];
        let mut contests = 0usize;
        for cells in &per_replicate {
            let best = cells
                .iter()
                .enumerate()
                .filter_map(|(f, c)| c.as_ref().map(|v| (f, v[t].0)))
                .fold(None::<(usize, f64)>, |acc, (f, p)| match acc {
                    Some((_, bp)) if bp >= p => acc,
                    _ => Some((f, p)),
                });
            if let Some((f, _)) = best {
                wins[f] += 1;
                contests += 1;
            }
        }
        for (f, &fam) in s.null_families.iter().enumerate() {
            let cells: Vec<(f64, Decision)> = per_replicate.iter().filter_map(|c| c[f].as_ref().map(|v| v[t])).collect();
            let reps = cells.len();
            let rejected = cells.iter().filter(|c| c.1 == Decision::Reject).count();
            rows.push(TableRow {
                true_family: s.true_family,
                null_family: fam,
                test,
                tau: s.tau,
                n: s.n,
                censoring: s.censoring,
                rejection_rate: if reps == 0 { 0.0 } else { rejected as f64 / reps as f64 },
                selection_rate: if contests == 0 { 0.0 } else { wins[f] as f64 / contests as f64 },
                replications: reps,
                p_values: cells.iter().map(|c| c.0).collect(),
            });
        }
    }
    Ok(SimulationTable { rows, failures })
}

/// Sorted null-distribution sample of one statistic with normal plotting positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    pub test: StatisticKind,
    pub statistics: Vec<f64>,
    pub normal_quantiles: Vec<f64>,
    pub failures: usize,
}

impl NullDistribution {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "statistic,normal_quantile")?;
        for (s, q) in self.statistics.iter().zip(&self.normal_quantiles) {
            writeln!(w, "{},{}", fmt_num(*s), fmt_num(*q))?;
        }
        Ok(())
    }
}

/// Statistic values under the true family, one per replicate.
pub fn run_null_distribution(s: &Scenario) -> Result<Vec<NullDistribution>> {
    s.validate()?;
    if !s.null_families.contains(&s.true_family) {
        return Err(Error::Config("the true family must be among the null families".into()));
    }
    let per_replicate: Vec<Option<Vec<f64>>> = (0..s.replications)
        .into_par_iter()
        .map(|r| {
            let data = generate_scenario_dataset(s, r).ok()?;
            let obs = pseudo_observations(&data).ok()?;
            let fit = fit_pmle(s.true_family, &obs).ok().filter(|f| f.converged)?;
            s.tests
                .iter()
                .map(|&k| statistic(k, s.true_family, &obs, &fit).ok().map(|v| v.value))
                .collect()
        })
        .collect();
    let failures = per_replicate.iter().filter(|r| r.is_none()).count();
    s.tests
        .iter()
        .enumerate()
        .map(|(t, &test)| {
            let mut stats: Vec<f64> = per_replicate.iter().flatten().map(|v| v[t]).collect();
            stats.sort_by(f64::total_cmp);
            let m = stats.len() as f64;
            let normal_quantiles = (1..=stats.len())
                .map(|k| norm_quantile((k as f64 - 0.5) / m))
                .collect::<Result<Vec<f64>>>()?;
            Ok(NullDistribution { test, statistics: stats, normal_quantiles, failures })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn censored_fraction(data: &[CensoredPair]) -> f64 {
        data.iter().filter(|p| !p.d1).count() as f64 / data.len() as f64
    }

    #[test]
    fn censoring_levels_hit_their_rates() {
        for (level, rate) in [(CensoringLevel::C20, 0.2), (CensoringLevel::C40, 0.4), (CensoringLevel::C70, 0.7)] {
            let s = Scenario::new(Family::Clayton, 0.5, 2000, level);
            let d = generate_scenario_dataset(&s, 0).unwrap();
            assert!((censored_fraction(&d) - rate).abs() < 0.04, "{level}");
            assert!((1.0 / (1.0 + level.mean()) - rate).abs() < 1e-12);
        }
        let s = Scenario::new(Family::Frank, 0.5, 300, CensoringLevel::None);
        assert!(generate_scenario_dataset(&s, 2).unwrap().iter().all(|p| p.d1 && p.d2));
    }

    #[test]
    fn replicates_are_reproducible_and_distinct() {
        let s = Scenario::new(Family::Joe, 0.4, 50, CensoringLevel::C40);
        assert_eq!(generate_scenario_dataset(&s, 1).unwrap(), generate_scenario_dataset(&s, 1).unwrap());
        assert_ne!(generate_scenario_dataset(&s, 1).unwrap(), generate_scenario_dataset(&s, 2).unwrap());
    }

    #[test]
    fn small_study_shapes() {
        let mut s = Scenario::new(Family::Clayton, 0.5, 40, CensoringLevel::None);
        s.replications = 4;
        s.b_replicates = 10;
        s.null_families = vec![Family::Clayton, Family::Frank];
        let table = run_rejection_study(&s).unwrap();
        assert_eq!(table.rows.len(), 6);
        for t in &s.tests {
            let total: f64 = table.rows.iter().filter(|r| r.test == *t).map(|r| r.selection_rate).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        for r in &table.rows {
            assert!((r.rejection_rate_at(s.alpha) - r.rejection_rate).abs() < 1e-12);
            assert!(r.rejection_rate_at(0.01) <= r.rejection_rate_at(0.1));
            assert_eq!(r.rejection_rate_at(1.0), 1.0);
        }
        assert_eq!(table, run_rejection_study(&s).unwrap());
        let mut out = Vec::new();
        table.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with(TABLE_HEADER));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn alpha_one_always_rejects() {
        let mut s = Scenario::new(Family::Gaussian, 0.5, 30, CensoringLevel::None);
        s.replications = 3;
        s.b_replicates = 5;
        s.alpha = 1.0;
        s.tests = vec![StatisticKind::Ir];
        let table = run_rejection_study(&s).unwrap();
        assert_eq!(table.rows[0].rejection_rate, 1.0);
    }

    #[test]
    fn null_distribution_output() {
        let mut s = Scenario::new(Family::Clayton, 0.5, 60, CensoringLevel::C20);
        s.replications = 20;
        let d = run_null_distribution(&s).unwrap();
        assert_eq!(d.len(), 3);
        for nd in &d {
            assert_eq!(nd.statistics.len() + nd.failures, 20);
            assert_eq!(nd.statistics.len(), nd.normal_quantiles.len());
            assert!(nd.statistics.windows(2).all(|w| w[0] <= w[1]));
        }
        s.null_families = vec![Family::Frank];
        assert!(run_null_distribution(&s).is_err());
    }

    #[test]
    fn validation() {
        let mut s = Scenario::new(Family::Clayton, 0.5, 100, CensoringLevel::None);
        s.replications = 0;
        assert!(s.validate().is_err());
        let mut s = Scenario::new(Family::Clayton, 0.5, 100, CensoringLevel::None);
        s.b_replicates = 1;
        assert!(s.validate().is_err());
        assert!(Scenario::new(Family::Clayton, -0.5, 100, CensoringLevel::None).validate().is_err());
        assert_eq!("C40".parse::<CensoringLevel>().unwrap(), CensoringLevel::C40);
    }

    #[test]
    fn significant_digit_rounding() {
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_num(1e-20 / 3.0), "3.33333333333e-21");
        assert_eq!(fmt_num(0.0), "0.0");
        assert_eq!(fmt_num(1.0), "1.0");
    }
}
