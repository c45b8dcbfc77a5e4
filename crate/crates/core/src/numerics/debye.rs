use super::quadrature::{integrate, QuadratureSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// First Debye function D₁(θ) = (1/θ)∫₀^θ t/(eᵗ − 1) dt.
pub fn debye1<T: Real>(theta: T) -> Result<T> {
    if !(theta > T::zero()) || !theta.is_finite() {
        return Err(Error::Domain(format!("Debye function needs theta > 0, got {theta}")));
    }
    if theta < T::lit(1e-3) {
        // 1 - θ/4 + θ²/36 - θ⁴/3600
        let t2 = theta * theta;
        return Ok(T::one() - theta / T::lit(4.0) + t2 / T::lit(36.0) - t2 * t2 / T::lit(3600.0));
    }
    let spec = QuadratureSpec::with_tol(T::lit(1e-14));
    let integral = integrate(
        |t: T| if t == T::zero() { T::one() } else { t / t.exp_m1() },
        T::zero(),
        theta,
        &spec,
    )?;
    Ok(integral / theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Series ∫₀^θ t/(eᵗ−1)dt = Σ_k B-free form via Σ_{k≥1} e^{-kθ}-expansion:
    // π²/6 − Σ_k e^{−kθ}(θ/k + 1/k²)
    fn series(theta: f64) -> f64 {
        let mut s = std::f64::consts::PI.powi(2) / 6.0;
        for k in 1..200_000 {
            let k = k as f64;
            let term = (-k * theta).exp() * (theta / k + 1.0 / (k * k));
            s -= term;
            if term < 1e-20 {
                break;
            }
        }
        s / theta
    }

    #[test]
    fn examples() {
        assert!((debye1(1e-8_f64).unwrap() - 1.0).abs() < 1e-8);
        assert!((debye1(1.0_f64).unwrap() - 0.777_504_634_112_248).abs() < 1e-10);
        assert!((debye1(1.0_f64).unwrap() - series(1.0)).abs() < 1e-12);
        assert!((debye1(5.736_f64).unwrap() - series(5.736)).abs() < 1e-12);
        assert!((debye1(5.736_f64).unwrap() - 0.28299).abs() < 5e-5);
        assert!(debye1(0.0_f64).is_err());
        assert!(debye1(-1.0_f64).is_err());
    }

    #[test]
    fn small_argument_branch_is_continuous() {
        let a = debye1(0.999e-3_f64).unwrap();
        let b = debye1(1.001e-3_f64).unwrap();
        assert!((a - b).abs() < 1e-6);
        assert!((b - series(1.001e-3)).abs() < 1e-10);
    }
}
