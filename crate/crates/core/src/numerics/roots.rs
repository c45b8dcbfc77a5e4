use crate::error::{Error, Result};
use crate::scalar::Real;

/// Brent's bracketed root finder (bisection, secant, inverse quadratic).
///
/// Returns once the bracket is narrower than `tol` or an exact zero is hit.
pub fn find_root<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, tol: T) -> Result<T> {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || (fa > T::zero()) == (fb > T::zero()) {
        return Err(Error::Bracket {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + half * tol;
        let m = half * (c - b);
        if m.abs() <= tol1 || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let min1 = T::lit(3.0) * m * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 {
            b + d
        } else if m > T::zero() {
            b + tol1
        } else {
            b - tol1
        };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Optimization(format!("root function returned NaN at {b}")));
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_roots() {
        let r = find_root(|x: f64| x - 2.0, 0.0, 5.0, 1e-12).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let r = find_root(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn no_sign_change() {
        assert!(matches!(
            find_root(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-10),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn endpoint_root() {
        assert_eq!(find_root(|x: f64| x, 0.0, 1.0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn steep_function() {
        let r = find_root(|x: f64| (x - 0.3).powi(3) * 1e6, -5.0, 10.0, 1e-12).unwrap();
        assert!((r - 0.3).abs() < 1e-4);
    }
}
