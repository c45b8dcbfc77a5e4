use crate::error::{Error, Result};
use crate::scalar::Real;

/// Central finite-difference derivative of order 1 or 2.
///
/// Steps are `cbrt(eps)·max(1,|x|)` for the first derivative and
/// `eps^(1/4)·max(1,|x|)` for the second.
pub fn fd_derivative<T: Real, F: Fn(T) -> T>(f: F, x: T, order: u8) -> Result<T> {
    let scale = T::one().max(x.abs());
    match order {
        1 => {
            let h = T::epsilon().cbrt() * scale;
            let h = (x + h) - x;
            Ok((f(x + h) - f(x - h)) / (h + h))
        }
        2 => {
            let h = T::epsilon().sqrt().sqrt() * scale;
            let h = (x + h) - x;
            Ok((f(x + h) - T::lit(2.0) * f(x) + f(x - h)) / (h * h))
        }
        _ => Err(Error::Domain(format!("finite-difference order must be 1 or 2, got {order}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!((fd_derivative(|x: f64| x * x, 3.0, 1).unwrap() - 6.0).abs() < 1e-6);
        assert!((fd_derivative(|x: f64| x * x, 3.0, 2).unwrap() - 2.0).abs() < 1e-4);
        assert!((fd_derivative(|x: f64| x.exp(), 0.0, 1).unwrap() - 1.0).abs() < 1e-6);
        assert!(fd_derivative(|x: f64| x, 0.0, 3).is_err());
    }
}
