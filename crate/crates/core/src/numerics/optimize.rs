use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fraction of non-finite probes tolerated by [`maximize_1d`].
const MAX_BAD_FRACTION: f64 = 0.5;

/// Brent's golden-section/parabolic search for a maximum of `f` on `[lo, hi]`.
///
/// `f` is only evaluated strictly inside the interval. Non-finite values are
/// treated as -∞; if more than half of the probes are non-finite the search
/// fails.
pub fn maximize_1d<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, tol: T) -> Result<(T, T)> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Optimization(format!("invalid interval [{lo}, {hi}]")));
    }
    let golden = T::lit(0.381_966_011_250_105_1);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let eps = T::epsilon().sqrt();
    let tol = tol.abs().max(T::lit(4.0) * T::epsilon());

    let mut evals = 0usize;
    let mut bad = 0usize;
    let mut g = |x: T| -> T {
        evals += 1;
        let v = f(x);
        if v.is_finite() {
            -v
        } else {
            bad += 1;
            T::infinity()
        }
    };

    let mut a = lo;
    let mut b = hi;
    let mut x = a + golden * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = g(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d = T::zero();
    let mut e = T::zero();

    for _ in 0..500 {
        let m = half * (a + b);
        let tol1 = eps * x.abs() + tol / T::lit(3.0);
        let tol2 = two * tol1;
        if (x - m).abs() <= tol2 - half * (b - a) {
            break;
        }
        let mut parabolic = false;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = two * (q - r);
            if q > T::zero() {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (half * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                parabolic = true;
            }
        }
        if !parabolic {
            e = if x < m { b - x } else { a - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > T::zero() {
            x + tol1
        } else {
            x - tol1
        };
        let fu = g(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    if bad as f64 > MAX_BAD_FRACTION * evals as f64 || !fx.is_finite() {
        return Err(Error::Optimization(format!(
            "{bad} of {evals} objective evaluations were non-finite"
        )));
    }
    Ok((x, -fx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let (x, fx) = maximize_1d(|x: f64| -(x - 1.0).powi(2), 0.0, 3.0, 1e-10).unwrap();
        assert!((x - 1.0).abs() < 1e-6);
        assert!(fx.abs() < 1e-12);
    }

    #[test]
    fn kink() {
        let (x, fx) = maximize_1d(|x: f64| -x.abs(), -1.0, 2.0, 1e-10).unwrap();
        assert!(x.abs() < 1e-6);
        assert!(fx.abs() < 1e-6);
    }

    #[test]
    fn stays_inside_interval() {
        let (x, _) = maximize_1d(
            |x: f64| {
                assert!(x > 0.0 && x < 1.0);
                x
            },
            0.0,
            1.0,
            1e-10,
        )
        .unwrap();
        assert!(x > 0.999);
    }

    #[test]
    fn mostly_nan_fails() {
        assert!(maximize_1d(|_x: f64| f64::NAN, 0.0, 1.0, 1e-8).is_err());
        assert!(maximize_1d(|x: f64| x, 1.0, 1.0, 1e-8).is_err());
    }
}
