//! Gumbel: C(u₁,u₂) = exp(−[(−ln u₁)^θ + (−ln u₂)^θ]^{1/θ}), θ > 1.
//! θ-derivatives of the log-likelihood are taken numerically.

use super::Censoring;
use crate::scalar::Real;

// (ln t₁, ln t₂, ln A) with t = −ln u and A = t₁^θ + t₂^θ
fn parts<T: Real>(theta: T, u1: T, u2: T) -> (T, T, T) {
    let lt1 = (-u1.ln()).ln();
    let lt2 = (-u2.ln()).ln();
    let a1 = theta * lt1;
    let a2 = theta * lt2;
    let m = a1.max(a2);
    let log_a = m + ((a1 - m).exp() + (a2 - m).exp()).ln();
    (lt1, lt2, log_a)
}

pub(super) fn log_value<T: Real>(theta: T, u1: T, u2: T, case: Censoring) -> T {
    let (lt1, lt2, log_a) = parts(theta, u1, u2);
    let one = T::one();
    let inv = one / theta;
    let log_c = -(log_a * inv).exp();
    match case {
        Censoring::Neither => log_c,
        Censoring::First => log_c + (inv - one) * log_a + (theta - one) * lt1 - u1.ln(),
        Censoring::Second => log_c + (inv - one) * log_a + (theta - one) * lt2 - u2.ln(),
        Censoring::Both => {
            let two = T::lit(2.0);
            log_c - u1.ln() - u2.ln()
                + (theta - one) * (lt1 + lt2)
                + (two * inv - two) * log_a
                + ((theta - one) * (-log_a * inv).exp()).ln_1p()
        }
    }
}

pub(super) fn tau<T: Real>(theta: T) -> T {
    T::one() - theta.recip()
}

pub(super) fn theta<T: Real>(tau: T) -> T {
    (T::one() - tau).recip()
}
