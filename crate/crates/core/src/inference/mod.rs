//! Pseudo maximum likelihood and the information-matrix test statistics.
//!
//! All supported families have a scalar parameter, so the sensitivity and
//! variability matrices are scalars and `tr(Ŝ⁻¹V̂)` is the ratio `V̂/Ŝ`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{likelihood_error, CopulaModel, Family, PseudoObservation};
use crate::error::{Error, Result};
use crate::numerics::maximize_1d;
use crate::survival::empirical_kendall_tau;

/// Smallest sample accepted by [`fit_pmle`].
pub const MIN_SAMPLE: usize = 10;

/// Mean-score threshold for declaring a fit converged.
pub const SCORE_TOL: f64 = 1e-6;

const MAX_EXPANSIONS: usize = 60;

type Obs = PseudoObservation<f64>;

/// Outcome of the pseudo-likelihood maximization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub theta_hat: f64,
    pub loglik_at_max: f64,
    /// Ŝₙ = −(1/n) Σ ℓ_θθ at θ̂.
    pub s_hat: f64,
    /// V̂ₙ = (1/n) Σ ℓ_θ² at θ̂.
    pub v_hat: f64,
    pub n: usize,
    pub converged: bool,
    /// Number of full log-likelihood passes over the sample.
    pub evaluations: usize,
    /// Mean score at θ̂.
    pub mean_score: f64,
}

impl FitResult {
    pub fn model(&self) -> Result<CopulaModel<f64>> {
        CopulaModel::new(self.family, self.theta_hat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    Ir,
    Pios,
    White,
    LogIm,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 4] = [
        StatisticKind::Ir,
        StatisticKind::Pios,
        StatisticKind::White,
        StatisticKind::LogIm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::Ir => "ir",
            StatisticKind::Pios => "pios",
            StatisticKind::White => "white",
            StatisticKind::LogIm => "logim",
        }
    }

    /// Asymptotic mean under a correctly specified copula.
    pub fn null_mean(self) -> f64 {
        match self {
            StatisticKind::Ir | StatisticKind::Pios => 1.0,
            StatisticKind::White | StatisticKind::LogIm => 0.0,
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ir" => Ok(StatisticKind::Ir),
            "pios" => Ok(StatisticKind::Pios),
            "white" => Ok(StatisticKind::White),
            "logim" => Ok(StatisticKind::LogIm),
            other => Err(Error::Config(format!(
                "unknown statistic '{other}' (expected ir|pios|white|logim)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub kind: StatisticKind,
    pub value: f64,
    pub null_mean: f64,
}

impl StatisticValue {
    fn new(kind: StatisticKind, value: f64) -> Self {
        Self { kind, value, null_mean: kind.null_mean() }
    }
}

/// ℓₙ(θ) = Σᵢ ℓ(θ; Ûᵢ₁, Ûᵢ₂, δᵢ₁, δᵢ₂).
pub fn pseudo_loglik(m: &CopulaModel<f64>, obs: &[Obs]) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let mut sum = 0.0;
    for (i, p) in obs.iter().enumerate() {
        sum += m.loglik(p).map_err(|e| reindex(e, i, p))?;
    }
    if !sum.is_finite() {
        return Err(Error::Fit(format!("non-finite pseudo log-likelihood at theta = {}", m.theta())));
    }
    Ok(sum)
}

fn reindex(e: Error, index: usize, p: &Obs) -> Error {
    match e {
        Error::Likelihood { .. } => likelihood_error(index, p),
        other => other,
    }
}

// Σ ℓ, Σ ℓ_θ, Σ ℓ_θθ and Σ ℓ_θ² in one pass.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    value: f64,
    score: f64,
    hessian: f64,
    score_sq: f64,
}

fn sums(m: &CopulaModel<f64>, obs: &[Obs], skip: Option<usize>) -> Result<Sums> {
    let mut s = Sums::default();
    for (i, p) in obs.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let d = m.derivatives(p).map_err(|e| reindex(e, i, p))?;
        s.value += d.value;
        s.score += d.first;
        s.hessian += d.second;
        s.score_sq += d.first * d.first;
    }
    Ok(s)
}

/// Ŝₙ = −(1/n) Σ ℓ_θθ.
pub fn estimate_s(m: &CopulaModel<f64>, obs: &[Obs]) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    Ok(-sums(m, obs, None)?.hessian / obs.len() as f64)
}

/// V̂ₙ = (1/n) Σ ℓ_θ².
pub fn estimate_v(m: &CopulaModel<f64>, obs: &[Obs]) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    Ok(sums(m, obs, None)?.score_sq / obs.len() as f64)
}

fn initial_theta(family: Family, obs: &[Obs]) -> f64 {
    let pts: Vec<(f64, f64)> = obs.iter().map(|p| (p.u1, p.u2)).collect();
    let tau = empirical_kendall_tau(&pts).unwrap_or(0.0);
    let tau = match family {
        Family::Gaussian => {
            let t = tau.clamp(-0.9, 0.9);
            if t.abs() < 0.01 { 0.01 } else { t }
        }
        _ => tau.clamp(0.02, 0.9),
    };
    family
        .tau_to_theta(tau)
        .unwrap_or_else(|_| family.from_free(0.0))
}

/// Maximizes `objective` over the free scale starting from `eta0`, widening
/// the bracket geometrically until the maximum is interior.
fn maximize_free<F: FnMut(f64) -> f64>(mut objective: F, eta0: f64, half_width: f64) -> Result<(f64, f64)> {
    let mut lo = eta0 - half_width;
    let mut hi = eta0 + half_width;
    for _ in 0..=MAX_EXPANSIONS {
        let (eta, val) = maximize_1d(&mut objective, lo, hi, 1e-10)?;
        let width = hi - lo;
        let margin = 1e-3 * width;
        let at_lo = eta - lo < margin;
        let at_hi = hi - eta < margin;
        if !at_lo && !at_hi {
            return Ok((eta, val));
        }
        if at_lo {
            lo -= width;
        }
        if at_hi {
            hi += width;
        }
    }
    Err(Error::Fit("bracket expansion exhausted without an interior maximum".into()))
}

/// Safeguarded Newton iterations on θ for the sample with `skip` removed.
/// Returns the refined θ or `None` when a step cannot improve the likelihood.
fn newton_refine(family: Family, obs: &[Obs], skip: Option<usize>, theta0: f64, evals: &mut usize) -> Option<f64> {
    let m = count_without(obs.len(), skip) as f64;
    let mut theta = theta0;
    let mut cur = sums(&CopulaModel::new(family, theta).ok()?, obs, skip).ok()?;
    *evals += 1;
    for _ in 0..50 {
        if cur.hessian >= 0.0 {
            return None;
        }
        if (cur.score / m).abs() <= 1e-13 * (1.0 + cur.hessian.abs() / m) {
            return Some(theta);
        }
        let mut step = -cur.score / cur.hessian;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = theta + step;
            if family.contains(cand) {
                if let Some(next) = CopulaModel::new(family, cand).ok().and_then(|mm| sums(&mm, obs, skip).ok()) {
                    *evals += 1;
                    if next.value >= cur.value - 1e-12 * cur.value.abs().max(1.0) {
                        let small = (cand - theta).abs() <= 1e-14 * theta.abs().max(1.0);
                        theta = cand;
                        cur = next;
                        accepted = true;
                        if small {
                            return Some(theta);
                        }
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return if (cur.score / m).abs() <= SCORE_TOL { Some(theta) } else { None };
        }
    }
    Some(theta)
}

fn count_without(n: usize, skip: Option<usize>) -> usize {
    n - skip.map_or(0, |_| 1)
}

fn check_not_degenerate(obs: &[Obs]) -> Result<()> {
    let all_censored = obs.iter().all(|p| !p.d1 && !p.d2);
    let first = obs[0];
    let identical = obs.iter().all(|p| p.u1 == first.u1 && p.u2 == first.u2);
    if all_censored && identical {
        return Err(Error::DegenerateData(
            "every pair is doubly censored at the same pseudo-observation".into(),
        ));
    }
    let constant_margin = obs.iter().all(|p| p.u1 == first.u1) || obs.iter().all(|p| p.u2 == first.u2);
    if constant_margin {
        return Err(Error::DegenerateData("a margin carries no variation".into()));
    }
    Ok(())
}

/// Pseudo maximum likelihood estimate of θ.
pub fn fit_pmle(family: Family, obs: &[Obs]) -> Result<FitResult> {
    if obs.len() < MIN_SAMPLE {
        return Err(Error::Fit(format!(
            "pseudo-likelihood fit needs at least {MIN_SAMPLE} observations, got {}",
            obs.len()
        )));
    }
    check_not_degenerate(obs)?;
    let mut evals = 0usize;
    let start = initial_theta(family, obs);
    let objective = |eta: f64| {
        let theta = family.from_free(eta);
        match CopulaModel::new(family, theta) {
            Ok(m) => pseudo_loglik(&m, obs).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    };
    let mut counted = |eta: f64| {
        evals += 1;
        objective(eta)
    };
    let (eta, _) = maximize_free(&mut counted, family.to_free(start), 1.0)?;
    let mut theta = family.from_free(eta);
    if !family.contains(theta) {
        return Err(Error::Fit(format!("maximizer {theta} fell on the {family} boundary")));
    }
    if let Some(t) = newton_refine(family, obs, None, theta, &mut evals) {
        theta = t;
    }
    finish_fit(family, obs, theta, evals)
}

fn finish_fit(family: Family, obs: &[Obs], theta: f64, evaluations: usize) -> Result<FitResult> {
    let m = CopulaModel::new(family, theta)?;
    let s = sums(&m, obs, None)?;
    let n = obs.len() as f64;
    let mean_score = s.score / n;
    let s_hat = -s.hessian / n;
    Ok(FitResult {
        family,
        theta_hat: theta,
        loglik_at_max: s.value,
        s_hat,
        v_hat: s.score_sq / n,
        n: obs.len(),
        converged: mean_score.abs() <= SCORE_TOL && s_hat > 0.0,
        evaluations: evaluations + 1,
        mean_score,
    })
}

/// Rₙ = tr(Ŝₙ⁻¹V̂ₙ).
pub fn ir_statistic(fit: &FitResult) -> Result<StatisticValue> {
    if fit.s_hat == 0.0 || !fit.s_hat.is_finite() {
        return Err(Error::Singular);
    }
    Ok(StatisticValue::new(StatisticKind::Ir, fit.v_hat / fit.s_hat))
}

/// V̂ₙ − Ŝₙ.
pub fn white_statistic(fit: &FitResult) -> Result<StatisticValue> {
    Ok(StatisticValue::new(StatisticKind::White, fit.v_hat - fit.s_hat))
}

/// ln Ŝₙ − ln V̂ₙ.
pub fn logim_statistic(fit: &FitResult) -> Result<StatisticValue> {
    if !(fit.s_hat > 0.0 && fit.v_hat > 0.0) {
        return Err(Error::Domain(format!(
            "log-IM statistic needs positive S and V, got S = {}, V = {}",
            fit.s_hat, fit.v_hat
        )));
    }
    Ok(StatisticValue::new(StatisticKind::LogIm, fit.s_hat.ln() - fit.v_hat.ln()))
}

/// θ̂ with observation `i` removed, warm-started at the full-sample estimate.
pub fn leave_one_out_theta(family: Family, obs: &[Obs], fit: &FitResult, i: usize) -> Result<f64> {
    let fail = |reason: String| Error::LeaveOneOut { index: i, reason };
    if i >= obs.len() {
        return Err(fail("index out of range".into()));
    }
    let mut evals = 0;
    if let Some(t) = newton_refine(family, obs, Some(i), fit.theta_hat, &mut evals) {
        return Ok(t);
    }
    let objective = |eta: f64| {
        let theta = family.from_free(eta);
        match CopulaModel::new(family, theta) {
            Ok(m) => loo_loglik(&m, obs, i).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    };
    let (eta, _) = maximize_free(objective, family.to_free(fit.theta_hat), 0.05).map_err(|e| fail(e.to_string()))?;
    Ok(family.from_free(eta))
}

fn loo_loglik(m: &CopulaModel<f64>, obs: &[Obs], skip: usize) -> Result<f64> {
    let mut sum = 0.0;
    for (j, p) in obs.iter().enumerate() {
        if j != skip {
            sum += m.loglik(p)?;
        }
    }
    Ok(sum)
}

/// Tₙ = Σᵢ ℓ(θ̂; Ûᵢ) − Σᵢ ℓ(θ̂₍₋ᵢ₎; Ûᵢ).
///
/// Leave-one-out fits run in parallel; the sum is taken in index order.
pub fn pios_statistic(family: Family, obs: &[Obs], fit: &FitResult) -> Result<StatisticValue> {
    if !fit.converged {
        return Err(Error::Fit("PIOS needs a converged full-sample fit".into()));
    }
    let full = fit.model()?;
    let terms: Vec<f64> = (0..obs.len())
        .into_par_iter()
        .map(|i| {
            let theta = leave_one_out_theta(family, obs, fit, i)?;
            let m = CopulaModel::new(family, theta).map_err(|e| Error::LeaveOneOut { index: i, reason: e.to_string() })?;
            let inside = full.loglik(&obs[i])?;
            let outside = m.loglik(&obs[i]).map_err(|e| Error::LeaveOneOut { index: i, reason: e.to_string() })?;
            Ok(inside - outside)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(StatisticValue::new(StatisticKind::Pios, terms.iter().sum()))
}

/// Any of the four statistics for a fitted sample.
pub fn statistic(kind: StatisticKind, family: Family, obs: &[Obs], fit: &FitResult) -> Result<StatisticValue> {
    match kind {
        StatisticKind::Ir => ir_statistic(fit),
        StatisticKind::White => white_statistic(fit),
        StatisticKind::LogIm => logim_statistic(fit),
        StatisticKind::Pios => pios_statistic(family, obs, fit),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::survival::{pseudo_observations, CensoredPair};

    fn fit_stub(s_hat: f64, v_hat: f64) -> FitResult {
        FitResult {
            family: Family::Clayton,
            theta_hat: 2.0,
            loglik_at_max: 0.0,
            s_hat,
            v_hat,
            n: 10,
            converged: true,
            evaluations: 1,
            mean_score: 0.0,
        }
    }

    fn clayton_sample(n: usize, theta: f64, seed: u64) -> Vec<Obs> {
        let m = CopulaModel::new(Family::Clayton, theta).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let data: Vec<CensoredPair> = (0..n)
            .map(|_| {
                let (u1, u2): (f64, f64) = m.sample_pair(&mut rng).unwrap();
                CensoredPair::new(-u1.ln(), -u2.ln(), true, true).unwrap()
            })
            .collect();
        pseudo_observations(&data).unwrap()
    }

    #[test]
    fn statistic_arithmetic() {
        let f = fit_stub(2.0, 3.0);
        assert_eq!(ir_statistic(&f).unwrap().value, 1.5);
        assert_eq!(white_statistic(&f).unwrap().value, 1.0);
        assert!((logim_statistic(&f).unwrap().value - (2.0f64 / 3.0).ln()).abs() < 1e-15);
        let eq = fit_stub(1.7, 1.7);
        assert_eq!(ir_statistic(&eq).unwrap().value, 1.0);
        assert_eq!(white_statistic(&eq).unwrap().value, 0.0);
        assert_eq!(logim_statistic(&eq).unwrap().value, 0.0);
        assert!(matches!(ir_statistic(&fit_stub(0.0, 1.0)), Err(Error::Singular)));
        assert!(logim_statistic(&fit_stub(-1.0, 1.0)).is_err());
        assert_eq!(ir_statistic(&f).unwrap().null_mean, 1.0);
        assert_eq!(white_statistic(&f).unwrap().null_mean, 0.0);
    }

    #[test]
    fn loglik_is_additive() {
        let m = CopulaModel::new(Family::Clayton, 2.0).unwrap();
        let p = PseudoObservation::new(0.5, 0.5, true, true).unwrap();
        let one = pseudo_loglik(&m, &[p]).unwrap();
        assert!((one - 0.392_719_999_389_498).abs() < 1e-12);
        assert_eq!(pseudo_loglik(&m, &[p, p]).unwrap(), 2.0 * one);
        let g = CopulaModel::new(Family::Gaussian, 0.0).unwrap();
        assert!(pseudo_loglik(&g, &[p, p]).unwrap().abs() < 1e-14);
        assert!(pseudo_loglik(&m, &[]).is_err());
    }

    #[test]
    fn single_observation_information() {
        let m = CopulaModel::new(Family::Frank, 3.0).unwrap();
        let p = PseudoObservation::new(0.3, 0.6, true, false).unwrap();
        let d = m.derivatives(&p).unwrap();
        assert_eq!(estimate_v(&m, &[p]).unwrap(), d.first * d.first);
        assert_eq!(estimate_s(&m, &[p]).unwrap(), -d.second);
    }

    #[test]
    fn clayton_fit_is_consistent_and_stationary() {
        let obs = clayton_sample(2000, 2.0, 3);
        let fit = fit_pmle(Family::Clayton, &obs).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!((1.8..=2.2).contains(&fit.theta_hat), "{}", fit.theta_hat);
        assert!(fit.mean_score.abs() <= 1e-6);
        // grid oracle
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 0..=4000 {
            let t = fit.theta_hat - 0.02 + k as f64 * 1e-5;
            let v = pseudo_loglik(&CopulaModel::new(Family::Clayton, t).unwrap(), &obs).unwrap();
            if v > best.1 {
                best = (t, v);
            }
        }
        assert!((best.0 - fit.theta_hat).abs() < 1e-4);
    }

    #[test]
    fn duplicated_sample_has_same_estimate() {
        let obs = clayton_sample(200, 2.0, 4);
        let twice: Vec<Obs> = obs.iter().chain(obs.iter()).copied().collect();
        let a = fit_pmle(Family::Clayton, &obs).unwrap();
        let b = fit_pmle(Family::Clayton, &twice).unwrap();
        assert!((a.theta_hat - b.theta_hat).abs() < 1e-8);
    }

    #[test]
    fn every_family_fits() {
        let obs = clayton_sample(300, 2.0, 5);
        for fam in Family::ALL {
            let fit = fit_pmle(fam, &obs).unwrap();
            assert!(fam.contains(fit.theta_hat));
            assert!(fit.converged, "{fam}: {fit:?}");
            let ir = ir_statistic(&fit).unwrap().value;
            let lim = logim_statistic(&fit).unwrap().value;
            assert!((lim + ir.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn near_independent_gaussian() {
        let m = CopulaModel::new(Family::Gaussian, 0.05).unwrap();
        let mut rng = RngStream::new(9, 0);
        let data: Vec<CensoredPair> = (0..500)
            .map(|_| {
                let (u1, u2): (f64, f64) = m.sample_pair(&mut rng).unwrap();
                CensoredPair::new(-u1.ln(), -u2.ln(), true, true).unwrap()
            })
            .collect();
        let fit = fit_pmle(Family::Gaussian, &pseudo_observations(&data).unwrap()).unwrap();
        assert!(fit.theta_hat.abs() < 0.2);
    }

    #[test]
    fn rejects_small_and_degenerate_samples() {
        let obs = clayton_sample(9, 2.0, 1);
        assert!(matches!(fit_pmle(Family::Clayton, &obs), Err(Error::Fit(_))));
        let p = PseudoObservation::new(0.5, 0.5, false, false).unwrap();
        assert!(matches!(fit_pmle(Family::Clayton, &[p; 12]), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn pios_tracks_ir() {
        let obs = clayton_sample(300, 2.0, 7);
        let fit = fit_pmle(Family::Clayton, &obs).unwrap();
        let t = pios_statistic(Family::Clayton, &obs, &fit).unwrap().value;
        let r = ir_statistic(&fit).unwrap().value;
        assert!((r - t).abs() < 0.3, "R = {r}, T = {t}");
        // each leave-one-out estimate maximizes its own likelihood
        let loo = leave_one_out_theta(Family::Clayton, &obs, &fit, 11).unwrap();
        let m = CopulaModel::new(Family::Clayton, loo).unwrap();
        assert!(sums(&m, &obs, Some(11)).unwrap().score.abs() < 1e-8);
    }

    #[test]
    fn gumbel_leave_one_out() {
        let obs = clayton_sample(60, 2.0, 8);
        let fit = fit_pmle(Family::Gumbel, &obs).unwrap();
        let loo = leave_one_out_theta(Family::Gumbel, &obs, &fit, 0).unwrap();
        assert!((loo - fit.theta_hat).abs() < 0.1);
        assert!(pios_statistic(Family::Gumbel, &obs, &fit).unwrap().value.is_finite());
    }

    #[test]
    fn statistic_names_round_trip() {
        for k in StatisticKind::ALL {
            assert_eq!(k.name().parse::<StatisticKind>().unwrap(), k);
        }
        assert!("aic".parse::<StatisticKind>().is_err());
    }
}
