//! Kaplan–Meier margins, generalized inverses and pseudo-observations.

use serde::{Deserialize, Serialize};

use crate::copulas::PseudoObservation;
use crate::error::{Error, Result};

/// One subject's observed pair `(x₁, x₂, δ₁, δ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredPair {
    pub x1: f64,
    pub x2: f64,
    pub d1: bool,
    pub d2: bool,
}

impl CensoredPair {
    pub fn new(x1: f64, x2: f64, d1: bool, d2: bool) -> Result<Self> {
        for x in [x1, x2] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::Domain(format!("observed times must be finite and nonnegative, got {x}")));
            }
        }
        Ok(Self { x1, x2, d1, d2 })
    }

    pub fn time(&self, margin: usize) -> f64 {
        if margin == 1 { self.x1 } else { self.x2 }
    }

    pub fn event(&self, margin: usize) -> bool {
        if margin == 1 { self.d1 } else { self.d2 }
    }
}

/// Which censoring distribution to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensoringMargin {
    First,
    Second,
    /// One censoring time shared by both members of a pair.
    Common,
}

/// Right-continuous nonincreasing step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSurvival {
    jump_times: Vec<f64>,
    values: Vec<f64>,
    n_at_risk: Vec<usize>,
}

impl StepSurvival {
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// Survival value just after each jump.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_at_risk(&self) -> &[usize] {
        &self.n_at_risk
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        // number of jumps at or before t
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 { 1.0 } else { self.values[k - 1] }
    }

    /// Smallest value attained by the curve.
    pub fn final_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(1.0)
    }

    pub fn largest_jump(&self) -> f64 {
        self.jump_times.last().copied().unwrap_or(0.0)
    }

    /// `inf{t ≥ 0 : Ĥ(t) ≤ u}`; below the final plateau the largest jump time.
    pub fn inverse(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        let k = self.values.partition_point(|&v| v > u);
        if k < self.values.len() {
            self.jump_times[k]
        } else {
            self.largest_jump()
        }
    }
}

/// Product-limit estimate. Deaths precede censorings at tied times.
pub fn kaplan_meier(times: &[f64], events: &[bool]) -> Result<StepSurvival> {
    if times.is_empty() {
        return Err(Error::Domain("Kaplan-Meier needs at least one observation".into()));
    }
    if times.len() != events.len() {
        return Err(Error::Domain(format!(
            "{} times but {} event indicators",
            times.len(),
            events.len()
        )));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::Domain(format!("non-finite time {t}")));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut curve = StepSurvival { jump_times: Vec::new(), values: Vec::new(), n_at_risk: Vec::new() };
    let mut surv = 1.0;
    let mut at_risk = times.len();
    let mut i = 0;
    while i < order.len() {
        let t = times[order[i]];
        let mut deaths = 0;
        let mut j = i;
        while j < order.len() && times[order[j]] == t {
            deaths += events[order[j]] as usize;
            j += 1;
        }
        if deaths > 0 {
            surv *= 1.0 - deaths as f64 / at_risk as f64;
            curve.jump_times.push(t);
            curve.values.push(surv);
            curve.n_at_risk.push(at_risk);
        }
        at_risk -= j - i;
        i = j;
    }
    Ok(curve)
}

/// Generalized inverse of a KM curve.
pub fn km_inverse(s: &StepSurvival, u: f64) -> f64 {
    s.inverse(u)
}

/// KM curve of margin `r` event times.
pub fn event_survival(data: &[CensoredPair], margin: usize) -> Result<StepSurvival> {
    let times: Vec<f64> = data.iter().map(|p| p.time(margin)).collect();
    let events: Vec<bool> = data.iter().map(|p| p.event(margin)).collect();
    kaplan_meier(&times, &events)
}

/// KM curve of the censoring times, per margin or common.
pub fn censoring_survival(data: &[CensoredPair], margin: CensoringMargin) -> Result<StepSurvival> {
    let (times, events): (Vec<f64>, Vec<bool>) = match margin {
        CensoringMargin::First => data.iter().map(|p| (p.x1, !p.d1)).unzip(),
        CensoringMargin::Second => data.iter().map(|p| (p.x2, !p.d2)).unzip(),
        CensoringMargin::Common => data.iter().map(|p| (p.x1.max(p.x2), !(p.d1 && p.d2))).unzip(),
    };
    kaplan_meier(&times, &events)
}

/// `Û_ir = Ĥ_r(X_ir)`, clamped into `[1/(2n), 1 − 1/(2n)]`.
pub fn pseudo_observations(data: &[CensoredPair]) -> Result<Vec<PseudoObservation<f64>>> {
    let n = data.len();
    if n == 0 {
        return Err(Error::Domain("no observations".into()));
    }
    let h1 = event_survival(data, 1)?;
    let h2 = event_survival(data, 2)?;
    let lo = 0.5 / n as f64;
    let hi = 1.0 - lo;
    let clamp = |u: f64| u.clamp(lo, hi);
    let out = data
        .iter()
        .map(|p| PseudoObservation {
            u1: clamp(h1.evaluate(p.x1)),
            u2: clamp(h2.evaluate(p.x2)),
            d1: p.d1,
            d2: p.d2,
        })
        .collect();
    Ok(out)
}

/// Kendall's τ by pair counting; ties in either coordinate count zero.
pub fn empirical_kendall_tau(data: &[(f64, f64)]) -> Result<f64> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Domain("Kendall tau needs at least two points".into()));
    }
    if n > 64 {
        return Ok(knight_tau_a(data));
    }
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let a = (data[i].0 - data[j].0) * (data[i].1 - data[j].1);
            s += (a > 0.0) as i64 - (a < 0.0) as i64;
        }
    }
    Ok(s as f64 / (n * (n - 1) / 2) as f64)
}

// O(n log n) count: sort by x (ties by y), then count y-inversions by merge sort.
fn knight_tau_a(data: &[(f64, f64)]) -> f64 {
    let n = data.len();
    let mut pts: Vec<(f64, f64)> = data.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let pairs = (n * (n - 1) / 2) as i64;

    let tied = |key: &dyn Fn(&(f64, f64)) -> (u64, u64), v: &[(f64, f64)]| -> i64 {
        let mut keys: Vec<(u64, u64)> = v.iter().map(key).collect();
        keys.sort_unstable();
        let mut total = 0i64;
        let mut run = 1i64;
        for w in keys.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                total += run * (run - 1) / 2;
                run = 1;
            }
        }
        total + run * (run - 1) / 2
    };
    let tx = tied(&|p| (p.0.to_bits(), 0), &pts);
    let ty = tied(&|p| (p.1.to_bits(), 0), &pts);
    let txy = tied(&|p| (p.0.to_bits(), p.1.to_bits()), &pts);

    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    // pairs untied in both coordinates
    let untied = pairs - tx - ty + txy;
    let discordant = swaps;
    let concordant = untied - discordant;
    (concordant - discordant) as f64 / pairs as f64
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            count += (mid - i) as i64;
            buf[k] = v[j];
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}
