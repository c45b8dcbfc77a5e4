//! Gaussian: C(u₁,u₂) = Φ₂(Φ⁻¹(u₁), Φ⁻¹(u₂); θ), −1 < θ < 1.

use super::{clamped_ln, Censoring, LogTerm};
use crate::error::Result;
use crate::numerics::{binorm_cdf, binorm_pdf, inv_mills, log_norm_cdf, norm_cdf, norm_quantile};
use crate::scalar::Real;

// ∂ ln φ₂/∂θ and ∂² ln φ₂/∂θ²
fn log_phi2_derivs<T: Real>(theta: T, z1: T, z2: T) -> (T, T) {
    let one = T::one();
    let om = one - theta * theta;
    let ss = z1 * z1 + z2 * z2;
    let p = z1 * z2;
    let first = (theta * om - theta * ss + (one + theta * theta) * p) / (om * om);
    let second = (one + theta * theta) / (om * om)
        + ((T::lit(6.0) * theta + T::lit(2.0) * theta * theta * theta) * p
            - (one + T::lit(3.0) * theta * theta) * ss)
            / (om * om * om);
    (first, second)
}

fn quantiles<T: Real>(u1: T, u2: T) -> Result<(T, T)> {
    Ok((norm_quantile(u1)?, norm_quantile(u2)?))
}

pub(super) fn log_term<T: Real>(theta: T, u1: T, u2: T, case: Censoring) -> Result<(LogTerm<T>, bool)> {
    let (z1, z2) = quantiles(u1, u2)?;
    let one = T::one();
    let om = one - theta * theta;
    let s = om.sqrt();
    let term = match case {
        Censoring::Both => {
            let (first, second) = log_phi2_derivs(theta, z1, z2);
            let quad = (theta * theta * (z1 * z1 + z2 * z2) - T::lit(2.0) * theta * z1 * z2)
                / (T::lit(2.0) * om);
            LogTerm {
                value: -T::lit(0.5) * om.ln() - quad,
                first,
                second,
            }
        }
        Censoring::First | Censoring::Second => {
            // conditional CDF Φ(w) with w = (z_cens − θ z_obs)/√(1−θ²)
            let (zo, zc) = if case == Censoring::First { (z1, z2) } else { (z2, z1) };
            let w = (zc - theta * zo) / s;
            let w_t = (theta * zc - zo) / (s * s * s);
            let w_tt = zc / (s * s * s) + T::lit(3.0) * theta * (theta * zc - zo) / (s * s * s * s * s);
            let lam = inv_mills(w);
            LogTerm {
                value: log_norm_cdf(w),
                first: lam * w_t,
                second: lam * w_tt - lam * (w + lam) * w_t * w_t,
            }
        }
        Censoring::Neither => {
            let big = binorm_cdf(z1, z2, theta)?;
            let (value, clamped) = clamped_ln(big);
            let big = big.max(T::tiny());
            let pdf = binorm_pdf(z1, z2, theta)?;
            let (lf, _) = log_phi2_derivs(theta, z1, z2);
            let r = pdf / big;
            return Ok((
                LogTerm {
                    value,
                    first: r,
                    second: r * lf - r * r,
                },
                clamped,
            ));
        }
    };
    Ok((term, false))
}

pub(super) fn cdf<T: Real>(theta: T, u1: T, u2: T) -> Result<T> {
    let (z1, z2) = quantiles(u1, u2)?;
    binorm_cdf(z1, z2, theta)
}

pub(super) fn partial_u1<T: Real>(theta: T, u1: T, u2: T) -> Result<T> {
    let (z1, z2) = quantiles(u1, u2)?;
    Ok(norm_cdf((z2 - theta * z1) / (T::one() - theta * theta).sqrt()))
}

pub(super) fn tau<T: Real>(theta: T) -> T {
    T::lit(2.0) / T::PI() * theta.asin()
}

pub(super) fn theta<T: Real>(tau: T) -> T {
    (T::PI() * tau / T::lit(2.0)).sin()
}
