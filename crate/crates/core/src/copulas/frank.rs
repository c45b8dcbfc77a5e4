//! Frank: C(u₁,u₂) = −θ⁻¹ ln(1 − ζ), ζ = (1−e^{−θu₁})(1−e^{−θu₂})/(1−e^{−θ}), θ > 0.

use super::{Censoring, LogTerm};
use crate::error::Result;
use crate::numerics::debye1;
use crate::scalar::Real;

struct Parts<T> {
    // 1 − e^{−θu}, e^{−θu}
    om1: T,
    om2: T,
    x1: T,
    x2: T,
    omt: T,
    xt: T,
    #[cfg_attr(not(test), allow(dead_code))]
    one_m_zeta: T,
    g: T,
    g_t: T,
    g_tt: T,
}

fn parts<T: Real>(theta: T, u1: T, u2: T) -> Parts<T> {
    let one = T::one();
    let om1 = -(-theta * u1).exp_m1();
    let om2 = -(-theta * u2).exp_m1();
    let omt = -(-theta).exp_m1();
    let x1 = one - om1;
    let x2 = one - om2;
    let xt = one - omt;
    let zeta = om1 * om2 / omt;
    let one_m_zeta = if zeta < T::lit(0.5) {
        one - zeta
    } else {
        (x1 + x2 - x1 * x2 - xt) / omt
    };
    let g = -one_m_zeta.ln();
    // derivatives of ln ζ
    let lz_t = u1 * x1 / om1 + u2 * x2 / om2 - xt / omt;
    let lz_tt = -u1 * u1 * x1 / (om1 * om1) - u2 * u2 * x2 / (om2 * om2) + xt / (omt * omt);
    let z_t = zeta * lz_t;
    let z_tt = zeta * (lz_tt + lz_t * lz_t);
    let g_t = z_t / one_m_zeta;
    let g_tt = z_tt / one_m_zeta + g_t * g_t;
    Parts {
        om1,
        om2,
        x1,
        x2,
        omt,
        xt,
        one_m_zeta,
        g,
        g_t,
        g_tt,
    }
}

pub(super) fn log_term<T: Real>(theta: T, u1: T, u2: T, case: Censoring) -> LogTerm<T> {
    let p = parts(theta, u1, u2);
    let two = T::lit(2.0);
    let xt_omt = p.xt / p.omt;
    let xt_omt2 = p.xt / (p.omt * p.omt);
    match case {
        Censoring::Neither => {
            let r = p.g_t / p.g;
            LogTerm {
                value: p.g.ln() - theta.ln(),
                first: r - theta.recip(),
                second: p.g_tt / p.g - r * r + (theta * theta).recip(),
            }
        }
        Censoring::First | Censoring::Second => {
            // c₁ involves e^{−θu₁} and (1−e^{−θu₂}); c₂ swaps the roles.
            let (u_obs, u_cens, om_cens, x_cens) = if case == Censoring::First {
                (u1, u2, p.om2, p.x2)
            } else {
                (u2, u1, p.om1, p.x1)
            };
            LogTerm {
                value: p.g - theta * u_obs + om_cens.ln() - p.omt.ln(),
                first: p.g_t - u_obs + u_cens * x_cens / om_cens - xt_omt,
                second: p.g_tt - u_cens * u_cens * x_cens / (om_cens * om_cens) + xt_omt2,
            }
        }
        Censoring::Both => LogTerm {
            value: two * p.g + theta.ln() - theta * (u1 + u2) - p.omt.ln(),
            first: two * p.g_t + theta.recip() - u1 - u2 - xt_omt,
            second: two * p.g_tt - (theta * theta).recip() + xt_omt2,
        },
    }
}

pub(super) fn cdf<T: Real>(theta: T, u1: T, u2: T) -> T {
    parts(theta, u1, u2).g / theta
}

#[cfg(test)]
pub(super) fn one_minus_zeta<T: Real>(theta: T, u1: T, u2: T) -> T {
    parts(theta, u1, u2).one_m_zeta
}

pub(super) fn tau<T: Real>(theta: T) -> Result<T> {
    if theta < T::lit(1e-2) {
        // θ/9 − θ³/900 + θ⁵/52920
        let t2 = theta * theta;
        return Ok(theta / T::lit(9.0) - theta * t2 / T::lit(900.0)
            + theta * t2 * t2 / T::lit(52_920.0));
    }
    Ok(T::one() - T::lit(4.0) / theta * (T::one() - debye1(theta)?))
}

pub(super) fn conditional_inverse<T: Real>(theta: T, u1: T, w: T) -> T {
    let x1 = (-theta * u1).exp();
    let arg = w * (-theta).exp_m1() / (w + (T::one() - w) * x1);
    -arg.ln_1p() / theta
}
