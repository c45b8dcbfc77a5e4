//! Joe: C(u₁,u₂) = 1 − (ū₁^θ + ū₂^θ − ū₁^θ ū₂^θ)^{1/θ}, ū = 1 − u, θ > 1.

use super::{Censoring, LogTerm};
use crate::error::Result;
use crate::numerics::{integrate, QuadratureSpec};
use crate::scalar::Real;

struct Parts<T> {
    lb1: T,
    lb2: T,
    x1: T,
    x2: T,
    omx1: T,
    omx2: T,
    gamma: T,
    log_gamma: T,
    gamma_t: T,
    gamma_tt: T,
}

fn parts<T: Real>(theta: T, u1: T, u2: T) -> Parts<T> {
    let lb1 = (-u1).ln_1p();
    let lb2 = (-u2).ln_1p();
    let omx1 = -(theta * lb1).exp_m1();
    let omx2 = -(theta * lb2).exp_m1();
    let x1 = (theta * lb1).exp();
    let x2 = (theta * lb2).exp();
    // Γ = x₁ + x₂(1 − x₁): no cancellation near the upper corner
    let prod = omx1 * omx2;
    let gamma = x1 + x2 * omx1;
    let log_gamma = if prod < T::lit(0.5) { (-prod).ln_1p() } else { gamma.ln() };
    let ls = lb1 + lb2;
    let gamma_t = x1 * lb1 + x2 * lb2 - x1 * x2 * ls;
    let gamma_tt = x1 * lb1 * lb1 + x2 * lb2 * lb2 - x1 * x2 * ls * ls;
    Parts {
        lb1,
        lb2,
        x1,
        x2,
        omx1,
        omx2,
        gamma,
        log_gamma,
        gamma_t,
        gamma_tt,
    }
}

pub(super) fn log_term<T: Real>(theta: T, u1: T, u2: T, case: Censoring) -> LogTerm<T> {
    let p = parts(theta, u1, u2);
    let one = T::one();
    let two = T::lit(2.0);
    let inv = one / theta;
    let g1 = p.gamma_t / p.gamma;
    let g2 = p.gamma_tt / p.gamma - g1 * g1;
    let lg = p.log_gamma;
    // derivatives of (1/θ)·ln Γ
    let h_t = -lg * inv * inv + g1 * inv;
    let h_tt = two * lg * inv * inv * inv - two * g1 * inv * inv + g2 * inv;
    match case {
        Censoring::Neither => {
            let h = lg * inv;
            let c = -h.exp_m1();
            let eh = h.exp();
            let r = -eh * h_t / c;
            let c_tt = -eh * (h_tt + h_t * h_t);
            LogTerm {
                value: c.ln(),
                first: r,
                second: c_tt / c - r * r,
            }
        }
        Censoring::First | Censoring::Second => {
            let (lb_obs, lb_cens, x_cens, omx_cens) = if case == Censoring::First {
                (p.lb1, p.lb2, p.x2, p.omx2)
            } else {
                (p.lb2, p.lb1, p.x1, p.omx1)
            };
            let a = inv - one;
            LogTerm {
                value: a * lg + omx_cens.ln() + (theta - one) * lb_obs,
                first: h_t - g1 + (-x_cens * lb_cens / omx_cens) + lb_obs,
                second: h_tt - g2 - x_cens * lb_cens * lb_cens / (omx_cens * omx_cens),
            }
        }
        Censoring::Both => {
            let a = inv - two;
            let k = theta - one + p.gamma;
            let k_t = (one + p.gamma_t) / k;
            LogTerm {
                value: a * lg + (theta - one) * (p.lb1 + p.lb2) + k.ln(),
                first: h_t - two * g1 + p.lb1 + p.lb2 + k_t,
                second: h_tt - two * g2 + p.gamma_tt / k - k_t * k_t,
            }
        }
    }
}

pub(super) fn cdf<T: Real>(theta: T, u1: T, u2: T) -> T {
    let p = parts(theta, u1, u2);
    -(p.log_gamma / theta).exp_m1()
}

/// Kendall's τ = 1 + (4/θ²)∫₀¹ x ln x (1−x)^{2/θ−2} dx.
///
/// Substituting 1 − x = s^{θ/2} removes the endpoint singularity at x = 1.
pub(super) fn tau<T: Real>(theta: T) -> Result<T> {
    let k = theta / T::lit(2.0);
    let spec = QuadratureSpec {
        abs_tol: T::lit(1e-14),
        rel_tol: T::lit(1e-13),
        max_subdivisions: 400,
    };
    let integral = integrate(
        |s: T| {
            let sk = s.powf(k);
            let x = T::one() - sk;
            if sk == T::zero() {
                return -k;
            }
            if x <= T::zero() {
                return T::zero();
            }
            // x ln x / s^k, with ln x = ln(1 − s^k)
            k * x * (-sk).ln_1p() / sk
        },
        T::zero(),
        T::one(),
        &spec,
    )?;
    Ok(T::one() + T::lit(4.0) / (theta * theta) * integral)
}
