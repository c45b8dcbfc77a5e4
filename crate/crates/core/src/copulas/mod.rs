//! Bivariate copula families and the censored-data log-likelihood.
//!
//! Each family is read as the joint CDF of `(Y₁, Y₂) = (H₁(T₁), H₂(T₂))`,
//! where `H_r` is the marginal survival function. A pair observed with
//! censoring indicators `(δ₁, δ₂)` contributes
//!
//! ```text
//! δ₁δ₂ ln c + δ₁(1−δ₂) ln c₁ + (1−δ₁)δ₂ ln c₂ + (1−δ₁)(1−δ₂) ln C
//! ```
//!
//! with `c₁ = ∂C/∂u₁`, `c₂ = ∂C/∂u₂` and `c = ∂²C/∂u₁∂u₂`.

mod clayton;
mod frank;
mod gaussian;
mod gumbel;
mod joe;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fd_derivative, find_root, RngStream};
use crate::scalar::Real;

/// Supported one-parameter copula families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Clayton,
    Frank,
    Joe,
    Gaussian,
    Gumbel,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Clayton,
        Family::Frank,
        Family::Joe,
        Family::Gaussian,
        Family::Gumbel,
    ];

    /// The four families with closed-form likelihood derivatives.
    pub const ANALYTIC: [Family; 4] = [Family::Clayton, Family::Frank, Family::Joe, Family::Gaussian];

    pub fn name(self) -> &'static str {
        match self {
            Family::Clayton => "clayton",
            Family::Frank => "frank",
            Family::Joe => "joe",
            Family::Gaussian => "gaussian",
            Family::Gumbel => "gumbel",
        }
    }

    pub fn has_analytic_derivatives(self) -> bool {
        !matches!(self, Family::Gumbel)
    }

    /// Whether `theta` lies strictly inside the parameter space.
    pub fn contains<T: Real>(self, theta: T) -> bool {
        if !theta.is_finite() {
            return false;
        }
        match self {
            Family::Clayton | Family::Frank => theta > T::zero(),
            Family::Joe | Family::Gumbel => theta > T::one(),
            Family::Gaussian => theta.abs() < T::one(),
        }
    }

    /// Map from the parameter space onto the real line.
    pub fn to_free<T: Real>(self, theta: T) -> T {
        match self {
            Family::Clayton | Family::Frank => theta.ln(),
            Family::Joe | Family::Gumbel => (theta - T::one()).ln(),
            Family::Gaussian => theta.atanh(),
        }
    }

    pub fn from_free<T: Real>(self, eta: T) -> T {
        match self {
            Family::Clayton | Family::Frank => eta.exp(),
            Family::Joe | Family::Gumbel => T::one() + eta.exp(),
            Family::Gaussian => eta.tanh(),
        }
    }

    fn check_theta<T: Real>(self, theta: T) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::Domain(format!("theta = {theta} outside the {self} parameter space")))
        }
    }

    /// Kendall's τ implied by `theta`.
    pub fn theta_to_tau<T: Real>(self, theta: T) -> Result<T> {
        self.check_theta(theta)?;
        match self {
            Family::Clayton => Ok(clayton::tau(theta)),
            Family::Frank => frank::tau(theta),
            Family::Joe => joe::tau(theta),
            Family::Gaussian => Ok(gaussian::tau(theta)),
            Family::Gumbel => Ok(gumbel::tau(theta)),
        }
    }

    /// Copula parameter with Kendall's τ equal to `tau`.
    pub fn tau_to_theta<T: Real>(self, tau: T) -> Result<T> {
        let ok = match self {
            Family::Gaussian => tau.abs() < T::one() && tau != T::zero(),
            _ => tau > T::zero() && tau < T::one(),
        };
        if !ok {
            return Err(Error::Domain(format!("Kendall tau {tau} outside the {self} range")));
        }
        match self {
            Family::Clayton => Ok(clayton::theta(tau)),
            Family::Gaussian => Ok(gaussian::theta(tau)),
            Family::Gumbel => Ok(gumbel::theta(tau)),
            Family::Frank => self.invert_tau(tau, T::lit(1e-10), T::one()),
            Family::Joe => self.invert_tau(tau, T::one() + T::lit(1e-10), T::lit(2.0)),
        }
    }

    fn invert_tau<T: Real>(self, tau: T, lo: T, start: T) -> Result<T> {
        let tau_at = |theta: T| self.theta_to_tau(theta);
        let mut hi = start;
        let mut expansions = 0;
        while tau_at(hi)? < tau {
            hi = hi * T::lit(2.0);
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Domain(format!("cannot invert Kendall tau {tau} for {self}")));
            }
        }
        let mut failure = None;
        let root = find_root(
            |theta: T| match tau_at(theta) {
                Ok(t) => t - tau,
                Err(e) => {
                    failure = Some(e);
                    T::nan()
                }
            },
            lo,
            hi,
            T::lit(1e-13) * hi.max(T::one()),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        root
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clayton" => Ok(Family::Clayton),
            "frank" => Ok(Family::Frank),
            "joe" => Ok(Family::Joe),
            "gaussian" => Ok(Family::Gaussian),
            "gumbel" => Ok(Family::Gumbel),
            other => Err(Error::Config(format!(
                "unknown copula family '{other}' (expected clayton|frank|joe|gaussian|gumbel)"
            ))),
        }
    }
}

/// Which of the four likelihood pieces an observation contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Censoring {
    /// δ = (1,1): density c.
    Both,
    /// δ = (1,0): c₁.
    First,
    /// δ = (0,1): c₂.
    Second,
    /// δ = (0,0): C.
    Neither,
}

impl Censoring {
    pub fn from_indicators(d1: bool, d2: bool) -> Self {
        match (d1, d2) {
            (true, true) => Censoring::Both,
            (true, false) => Censoring::First,
            (false, true) => Censoring::Second,
            (false, false) => Censoring::Neither,
        }
    }

    fn indicators<T: Real>(self) -> (T, T) {
        match self {
            Censoring::Both => (T::one(), T::one()),
            Censoring::First => (T::one(), T::zero()),
            Censoring::Second => (T::zero(), T::one()),
            Censoring::Neither => (T::zero(), T::zero()),
        }
    }
}

/// A log-likelihood term and its first two θ-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTerm<T> {
    pub value: T,
    pub first: T,
    pub second: T,
}

/// Transformed observation `(Û₁, Û₂, δ₁, δ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoObservation<T> {
    pub u1: T,
    pub u2: T,
    pub d1: bool,
    pub d2: bool,
}

impl<T: Real> PseudoObservation<T> {
    pub fn new(u1: T, u2: T, d1: bool, d2: bool) -> Result<Self> {
        check_unit(u1, u2)?;
        Ok(Self { u1, u2, d1, d2 })
    }

    pub fn censoring(&self) -> Censoring {
        Censoring::from_indicators(self.d1, self.d2)
    }
}

fn check_unit<T: Real>(u1: T, u2: T) -> Result<()> {
    let inside = |u: T| u > T::zero() && u < T::one();
    if inside(u1) && inside(u2) {
        Ok(())
    } else {
        Err(Error::Domain(format!("copula arguments must lie in (0,1), got ({u1}, {u2})")))
    }
}

/// ln(max(x, tiny)) together with a flag telling whether the clamp was hit.
pub(crate) fn clamped_ln<T: Real>(x: T) -> (T, bool) {
    if x > T::tiny() {
        (x.ln(), false)
    } else {
        (T::tiny().ln(), true)
    }
}

/// Log-likelihood of one observation with an underflow diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLik<T> {
    pub value: T,
    /// Set when a likelihood piece underflowed and was clamped.
    pub clamped: bool,
}

/// A copula family together with a parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaModel<T> {
    family: Family,
    theta: T,
}

impl<T: Real> CopulaModel<T> {
    pub fn new(family: Family, theta: T) -> Result<Self> {
        family.check_theta(theta)?;
        Ok(Self { family, theta })
    }

    // Finite-difference stencils may step just outside the open domain.
    fn unchecked(family: Family, theta: T) -> Self {
        Self { family, theta }
    }

    pub fn from_tau(family: Family, tau: T) -> Result<Self> {
        Self::new(family, family.tau_to_theta(tau)?)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn tau(&self) -> Result<T> {
        self.family.theta_to_tau(self.theta)
    }

    /// C(u₁, u₂; θ).
    pub fn cdf(&self, u1: T, u2: T) -> Result<T> {
        check_unit(u1, u2)?;
        let th = self.theta;
        Ok(match self.family {
            Family::Clayton => clayton::log_term(th, u1, u2, Censoring::Neither).value.exp(),
            Family::Frank => frank::cdf(th, u1, u2),
            Family::Joe => joe::cdf(th, u1, u2),
            Family::Gaussian => gaussian::cdf(th, u1, u2)?,
            Family::Gumbel => gumbel::log_value(th, u1, u2, Censoring::Neither).exp(),
        })
    }

    /// ∂C/∂u₁, the conditional CDF of U₂ given U₁ = u₁.
    pub fn partial_u1(&self, u1: T, u2: T) -> Result<T> {
        check_unit(u1, u2)?;
        let v = match self.family {
            Family::Gaussian => gaussian::partial_u1(self.theta, u1, u2)?,
            _ => self.log_value(u1, u2, Censoring::First)?.0.exp(),
        };
        Ok(v.max(T::tiny()).min(T::one()))
    }

    /// ∂C/∂u₂.
    pub fn partial_u2(&self, u1: T, u2: T) -> Result<T> {
        // every supported family is exchangeable
        self.partial_u1(u2, u1)
    }

    /// Copula density ∂²C/∂u₁∂u₂.
    pub fn density(&self, u1: T, u2: T) -> Result<T> {
        check_unit(u1, u2)?;
        Ok(self.log_value(u1, u2, Censoring::Both)?.0.exp().max(T::tiny()))
    }

    fn log_value(&self, u1: T, u2: T, case: Censoring) -> Result<(T, bool)> {
        let th = self.theta;
        Ok(match self.family {
            Family::Clayton => (clayton::log_term(th, u1, u2, case).value, false),
            Family::Frank => (frank::log_term(th, u1, u2, case).value, false),
            Family::Joe => (joe::log_term(th, u1, u2, case).value, false),
            Family::Gaussian => {
                let (t, clamped) = gaussian::log_term(th, u1, u2, case)?;
                (t.value, clamped)
            }
            Family::Gumbel => (gumbel::log_value(th, u1, u2, case), false),
        })
    }

    /// Log-likelihood contribution with the underflow flag.
    pub fn loglik_checked(&self, p: &PseudoObservation<T>) -> Result<LogLik<T>> {
        check_unit(p.u1, p.u2)?;
        let (value, clamped) = self.log_value(p.u1, p.u2, p.censoring())?;
        if !value.is_finite() {
            return Err(likelihood_error(0, p));
        }
        Ok(LogLik { value, clamped })
    }

    pub fn loglik(&self, p: &PseudoObservation<T>) -> Result<T> {
        Ok(self.loglik_checked(p)?.value)
    }

    /// Log-likelihood with its first and second θ-derivatives.
    pub fn derivatives(&self, p: &PseudoObservation<T>) -> Result<LogTerm<T>> {
        check_unit(p.u1, p.u2)?;
        let th = self.theta;
        let case = p.censoring();
        let term = match self.family {
            Family::Clayton => clayton::log_term(th, p.u1, p.u2, case),
            Family::Frank => frank::log_term(th, p.u1, p.u2, case),
            Family::Joe => joe::log_term(th, p.u1, p.u2, case),
            Family::Gaussian => gaussian::log_term(th, p.u1, p.u2, case)?.0,
            Family::Gumbel => {
                let f = |t: T| gumbel::log_value(t, p.u1, p.u2, case);
                LogTerm {
                    value: f(th),
                    first: fd_derivative(f, th, 1)?,
                    second: fd_derivative(f, th, 2)?,
                }
            }
        };
        if !term.value.is_finite() {
            return Err(likelihood_error(0, p));
        }
        if !term.first.is_finite() || !term.second.is_finite() {
            return Err(Error::Derivative(format!(
                "{} at theta = {th}, u = ({}, {})",
                self.family, p.u1, p.u2
            )));
        }
        Ok(term)
    }

    /// ∂ℓ/∂θ.
    pub fn score(&self, p: &PseudoObservation<T>) -> Result<T> {
        Ok(self.derivatives(p)?.first)
    }

    /// ∂²ℓ/∂θ².
    pub fn hessian(&self, p: &PseudoObservation<T>) -> Result<T> {
        Ok(self.derivatives(p)?.second)
    }

    /// Log-likelihood at an arbitrary θ without the domain check; used by
    /// finite-difference oracles near the boundary.
    pub fn loglik_at(family: Family, theta: T, p: &PseudoObservation<T>) -> Result<T> {
        Self::unchecked(family, theta).loglik(p)
    }

    /// Draws `(U₁, U₂)` by the conditional-distribution method.
    pub fn sample_pair(&self, rng: &mut RngStream) -> Result<(T, T)> {
        let th = self.theta;
        if self.family == Family::Gaussian {
            let z1 = rng.standard_normal();
            let z2 = rng.standard_normal();
            let t = th.to_f64_lossy();
            let z2 = t * z1 + (1.0 - t * t).sqrt() * z2;
            let u1 = crate::numerics::norm_cdf(z1);
            let u2 = crate::numerics::norm_cdf(z2);
            return Ok((clamp_open(T::lit(u1)), clamp_open(T::lit(u2))));
        }
        let u1 = T::lit(rng.uniform());
        let w = T::lit(rng.uniform());
        let u2 = match self.family {
            Family::Clayton => clayton::conditional_inverse(th, u1, w),
            Family::Frank => frank::conditional_inverse(th, u1, w),
            _ => self.numeric_conditional_inverse(u1, w)?,
        };
        if !u2.is_finite() {
            return Err(Error::Sampling(format!(
                "{} conditional inverse failed at u1 = {u1}, w = {w}",
                self.family
            )));
        }
        Ok((u1, clamp_open(u2)))
    }

    fn numeric_conditional_inverse(&self, u1: T, w: T) -> Result<T> {
        let edge = T::lit(1e-15);
        let lo = edge;
        let hi = T::one() - edge;
        let c_lo = self.partial_u1(u1, lo)?;
        let c_hi = self.partial_u1(u1, hi)?;
        if w <= c_lo {
            return Ok(lo);
        }
        if w >= c_hi {
            return Ok(hi);
        }
        let mut failure = None;
        let root = find_root(
            |u2: T| match self.partial_u1(u1, u2) {
                Ok(c) => c - w,
                Err(e) => {
                    failure = Some(e);
                    T::nan()
                }
            },
            lo,
            hi,
            T::lit(1e-14),
        )
        .map_err(|e| Error::Sampling(e.to_string()))?;
        if let Some(e) = failure {
            return Err(Error::Sampling(e.to_string()));
        }
        Ok(root)
    }
}

fn clamp_open<T: Real>(u: T) -> T {
    let edge = T::epsilon();
    u.max(edge).min(T::one() - edge)
}

pub(crate) fn likelihood_error<T: Real>(index: usize, p: &PseudoObservation<T>) -> Error {
    Error::Likelihood {
        index,
        u1: p.u1.to_f64_lossy(),
        u2: p.u2.to_f64_lossy(),
        d1: p.d1 as u8,
        d2: p.d2 as u8,
    }
}
