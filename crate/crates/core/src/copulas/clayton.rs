//! Clayton: C(u₁,u₂) = (u₁^{-θ} + u₂^{-θ} − 1)^{-1/θ}, θ > 0.

use super::{Censoring, LogTerm};
use crate::scalar::Real;

// Returns (ψ, L/A, Q/A) with A = u₁^{-θ}+u₂^{-θ}−1, ψ = ln A,
// L = Σ u^{-θ} ln u and Q = Σ u^{-θ} ln² u; evaluated with a shifted exponent.
fn core<T: Real>(theta: T, u1: T, u2: T) -> (T, T, T) {
    let l1 = u1.ln();
    let l2 = u2.ln();
    let a1 = -theta * l1;
    let a2 = -theta * l2;
    let m = a1.max(a2);
    let e1 = (a1 - m).exp();
    let e2 = (a2 - m).exp();
    let s = e1 + e2 - (-m).exp();
    let psi = m + s.ln();
    let la = (e1 * l1 + e2 * l2) / s;
    let qa = (e1 * l1 * l1 + e2 * l2 * l2) / s;
    (psi, la, qa)
}

pub(super) fn log_term<T: Real>(theta: T, u1: T, u2: T, case: Censoring) -> LogTerm<T> {
    let (psi, la, qa) = core(theta, u1, u2);
    let (d1, d2) = case.indicators::<T>();
    let k = d1 + d2;
    let both = d1 * d2;
    let one = T::one();
    let two = T::lit(2.0);
    let inv = one / theta;
    let log_u = d1 * u1.ln() + d2 * u2.ln();
    let value = both * theta.ln_1p() - (one + theta) * log_u - (inv + k) * psi;
    let first = both / (one + theta) - log_u + psi * inv * inv + (inv + k) * la;
    let second = -both / ((one + theta) * (one + theta)) - two * psi * inv * inv * inv
        - two * la * inv * inv
        - (inv + k) * (qa - la * la);
    LogTerm {
        value,
        first,
        second,
    }
}

pub(super) fn tau<T: Real>(theta: T) -> T {
    theta / (theta + T::lit(2.0))
}

pub(super) fn theta<T: Real>(tau: T) -> T {
    T::lit(2.0) * tau / (T::one() - tau)
}

/// Inverse of u₂ ↦ c₁(u₁, u₂) at level `w`.
pub(super) fn conditional_inverse<T: Real>(theta: T, u1: T, w: T) -> T {
    let one = T::one();
    let t = u1.powf(-theta) * (w.powf(-theta / (one + theta)) - one) + one;
    t.powf(-one / theta)
}
