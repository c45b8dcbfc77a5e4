//! Parametric bootstrap P-values and copula selection.
//!
//! Replicate `b` for the family at position `f` of [`Family::ALL`] draws from
//! stream `f·2²⁰ + b`; a failed replicate is retried once on stream
//! `f·2²⁰ + 2¹⁹ + b`. Replicates run in parallel and are aggregated in index
//! order, so results do not depend on the thread count.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{CopulaModel, Family};
use crate::error::{Error, Result};
use crate::inference::{fit_pmle, statistic, FitResult, StatisticKind, StatisticValue};
use crate::numerics::{norm_cdf_pair, norm_quantile, RngStream};
use crate::survival::{
    censoring_survival, event_survival, pseudo_observations, CensoredPair, CensoringMargin, StepSurvival,
};

/// Streams reserved per family.
pub const STREAMS_PER_FAMILY: u64 = 1 << 20;
const RETRY_OFFSET: u64 = 1 << 19;
/// Largest admissible B.
pub const MAX_REPLICATES: usize = RETRY_OFFSET as usize;
/// Fraction of replicates that must succeed.
pub const MIN_SURVIVING: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensoringMode {
    /// Each margin's censoring time is drawn from its own KM curve.
    PerMargin,
    /// One censoring time per pair from the curve of pairwise maxima.
    Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub b_replicates: usize,
    pub master_seed: u64,
    pub censoring_mode: CensoringMode,
    pub statistic: StatisticKind,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            b_replicates: 500,
            master_seed: 1,
            censoring_mode: CensoringMode::PerMargin,
            statistic: StatisticKind::Ir,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b_replicates < 2 {
            return Err(Error::Config(format!("B must be at least 2, got {}", self.b_replicates)));
        }
        if self.b_replicates > MAX_REPLICATES {
            return Err(Error::Config(format!("B must not exceed {MAX_REPLICATES}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub family: Family,
    pub theta_hat: f64,
    pub loglik_at_max: f64,
    pub statistic: StatisticValue,
    pub sigma_b: f64,
    pub p_value: f64,
    pub b_requested: usize,
    pub b_used: usize,
    pub degenerate: bool,
    pub seed: u64,
    pub n: usize,
}

impl GofReport {
    /// |stat − null| / σᵇ, infinite when σᵇ = 0 and stat ≠ null.
    pub fn standardized(&self) -> f64 {
        let dev = (self.statistic.value - self.statistic.null_mean).abs();
        if dev == 0.0 { 0.0 } else { dev / self.sigma_b }
    }
}

/// Two-sided normal P-value for a deviation measured in units of `sigma`.
pub fn normal_p_value(stat: f64, null_mean: f64, sigma: f64) -> f64 {
    let dev = (stat - null_mean).abs();
    if sigma == 0.0 {
        return if dev == 0.0 { 1.0 } else { 0.0 };
    }
    let (_, upper) = norm_cdf_pair(dev / sigma);
    (2.0 * upper).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Reject,
    FailToReject,
}

/// Critical-value rule: reject iff |stat − null|/σᵇ > z_{α/2}.
pub fn critical_value_decision(report: &GofReport, alpha: f64) -> Result<Decision> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0,1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(Decision::Reject);
    }
    let reject = if report.degenerate {
        report.p_value < alpha
    } else {
        report.standardized() > norm_quantile(1.0 - 0.5 * alpha)?
    };
    Ok(if reject { Decision::Reject } else { Decision::FailToReject })
}

/// KM curves reused by every replicate.
#[derive(Debug, Clone)]
pub struct BootstrapMargins {
    event: [StepSurvival; 2],
    censoring: Censor,
}

#[derive(Debug, Clone)]
enum Censor {
    PerMargin([StepSurvival; 2]),
    Common(StepSurvival),
}

impl BootstrapMargins {
    pub fn new(data: &[CensoredPair], mode: CensoringMode) -> Result<Self> {
        let event = [event_survival(data, 1)?, event_survival(data, 2)?];
        let censoring = match mode {
            CensoringMode::PerMargin => Censor::PerMargin([
                censoring_survival(data, CensoringMargin::First)?,
                censoring_survival(data, CensoringMargin::Second)?,
            ]),
            CensoringMode::Common => Censor::Common(censoring_survival(data, CensoringMargin::Common)?),
        };
        Ok(Self { event, censoring })
    }

    /// One regenerated dataset of size `n`.
    pub fn generate(&self, model: &CopulaModel<f64>, n: usize, rng: &mut RngStream) -> Result<Vec<CensoredPair>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (u1, u2) = model.sample_pair(rng)?;
            let t1 = self.event[0].inverse(u1);
            let t2 = self.event[1].inverse(u2);
            let (c1, c2) = match &self.censoring {
                Censor::PerMargin([g1, g2]) => (censor_time(g1, rng.uniform()), censor_time(g2, rng.uniform())),
                Censor::Common(g) => {
                    let c = censor_time(g, rng.uniform());
                    (c, c)
                }
            };
            out.push(CensoredPair { x1: t1.min(c1), x2: t2.min(c2), d1: t1 <= c1, d2: t2 <= c2 });
        }
        Ok(out)
    }
}

// Below the final plateau of the censoring curve nothing was ever censored
// that late, so the draw does not censor.
fn censor_time(g: &StepSurvival, v: f64) -> f64 {
    if v < g.final_value() { f64::INFINITY } else { g.inverse(v) }
}

fn family_index(family: Family) -> u64 {
    Family::ALL.iter().position(|&f| f == family).expect("family listed") as u64
}

fn stream_index(family: Family, b: usize, retry: bool) -> u64 {
    family_index(family) * STREAMS_PER_FAMILY + if retry { RETRY_OFFSET } else { 0 } + b as u64
}

/// Step 1 of the bootstrap: a dataset regenerated under the fitted null copula.
pub fn generate_bootstrap_dataset(
    original: &[CensoredPair],
    fit: &FitResult,
    family: Family,
    cfg: &BootstrapConfig,
    b: usize,
) -> Result<Vec<CensoredPair>> {
    let margins = BootstrapMargins::new(original, cfg.censoring_mode)?;
    let model = CopulaModel::new(family, fit.theta_hat)?;
    let mut rng = RngStream::new(cfg.master_seed, stream_index(family, b, false));
    margins.generate(&model, original.len(), &mut rng)
}

fn replicate_statistics(
    margins: &BootstrapMargins,
    model: &CopulaModel<f64>,
    n: usize,
    kinds: &[StatisticKind],
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    let mut rng = RngStream::new(seed, stream);
    let data = margins.generate(model, n, &mut rng)?;
    let obs = pseudo_observations(&data)?;
    let fit = fit_pmle(model.family(), &obs)?;
    if !fit.converged {
        return Err(Error::Fit("bootstrap refit did not converge".into()));
    }
    kinds
        .iter()
        .map(|&k| {
            let v = statistic(k, model.family(), &obs, &fit)?.value;
            if v.is_finite() { Ok(v) } else { Err(Error::Bootstrap(format!("non-finite {k} replicate"))) }
        })
        .collect()
}

/// Sample standard deviation with the (B − 1) denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (b - 1.0)).sqrt()
}

/// Bootstrap reports for several statistics computed on shared replicates.
pub fn bootstrap_reports(
    data: &[CensoredPair],
    family: Family,
    cfg: &BootstrapConfig,
    kinds: &[StatisticKind],
) -> Result<Vec<GofReport>> {
    cfg.validate()?;
    if kinds.is_empty() {
        return Err(Error::Config("no statistic requested".into()));
    }
    let obs = pseudo_observations(data)?;
    let fit = fit_pmle(family, &obs)?;
    if !fit.converged {
        return Err(Error::Fit(format!("{family} fit did not converge (mean score {})", fit.mean_score)));
    }
    let observed: Vec<StatisticValue> = kinds
        .iter()
        .map(|&k| statistic(k, family, &obs, &fit))
        .collect::<Result<_>>()?;
    let margins = BootstrapMargins::new(data, cfg.censoring_mode)?;
    let model = fit.model()?;
    let n = data.len();

    let replicates: Vec<Option<Vec<f64>>> = (0..cfg.b_replicates)
        .into_par_iter()
        .map(|b| {
            let run = |retry| {
                replicate_statistics(&margins, &model, n, kinds, cfg.master_seed, stream_index(family, b, retry))
            };
            run(false).or_else(|_| run(true)).ok()
        })
        .collect();
    let good: Vec<&Vec<f64>> = replicates.iter().flatten().collect();
    let needed = (MIN_SURVIVING * cfg.b_replicates as f64).ceil() as usize;
    if good.len() < needed.max(2) {
        return Err(Error::Bootstrap(format!(
            "only {} of {} replicates succeeded",
            good.len(),
            cfg.b_replicates
        )));
    }

    Ok(observed
        .iter()
        .enumerate()
        .map(|(j, stat)| {
            let values: Vec<f64> = good.iter().map(|r| r[j]).collect();
            let sigma_b = sample_sd(&values);
            GofReport {
                family,
                theta_hat: fit.theta_hat,
                loglik_at_max: fit.loglik_at_max,
                statistic: *stat,
                sigma_b,
                p_value: normal_p_value(stat.value, stat.null_mean, sigma_b),
                b_requested: cfg.b_replicates,
                b_used: values.len(),
                degenerate: sigma_b == 0.0,
                seed: cfg.master_seed,
                n,
            }
        })
        .collect())
}

/// Bootstrap P-value of `cfg.statistic` for `family`.
pub fn bootstrap_pvalue(data: &[CensoredPair], family: Family, cfg: &BootstrapConfig) -> Result<GofReport> {
    Ok(bootstrap_reports(data, family, cfg, &[cfg.statistic])?.remove(0))
}

/// One entry of a selection ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub family: Family,
    pub outcome: std::result::Result<GofReport, String>,
}

fn rank_order(a: &Ranked, b: &Ranked) -> Ordering {
    match (&a.outcome, &b.outcome) {
        (Ok(x), Ok(y)) => y
            .p_value
            .total_cmp(&x.p_value)
            .then(y.loglik_at_max.total_cmp(&x.loglik_at_max))
            .then(a.family.name().cmp(b.family.name())),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.family.name().cmp(b.family.name()),
    }
}

/// Ranks candidate families by bootstrap P-value, largest first.
///
/// Families whose test fails are kept at the bottom with the error message.
pub fn select_copula(data: &[CensoredPair], families: &[Family], cfg: &BootstrapConfig) -> Result<Vec<Ranked>> {
    cfg.validate()?;
    if families.is_empty() {
        return Err(Error::Config("no candidate families".into()));
    }
    let mut ranked: Vec<Ranked> = families
        .iter()
        .map(|&family| Ranked {
            family,
            outcome: bootstrap_pvalue(data, family, cfg).map_err(|e| e.to_string()),
        })
        .collect();
    ranked.sort_by(rank_order);
    Ok(ranked)
}
