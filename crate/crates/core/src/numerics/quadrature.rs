use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10),
            rel_tol: T::lit(1e-10),
            max_subdivisions: 200,
        }
    }
}

impl<T: Real> QuadratureSpec<T> {
    pub fn new(abs_tol: T, rel_tol: T, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > T::zero()) || !(rel_tol > T::zero()) || max_subdivisions == 0 {
            return Err(Error::Domain(
                "quadrature tolerances must be positive and max_subdivisions >= 1".into(),
            ));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }

    pub fn with_tol(tol: T) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_838_356,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gauss_kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[10]);
    let mut gauss = T::zero();
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod = kronrod + T::lit(WGK[j]) * (f1 + f2);
        abs_sum = abs_sum + T::lit(WGK[j]) * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = kronrod * half;
    let mut asc = T::lit(WGK[10]) * (fc - mean).abs();
    for j in 0..10 {
        asc = asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half_len;
    let abs_sum = abs_sum * half_len.abs();
    let asc = asc * half_len.abs();
    let mut error = ((kronrod - gauss) * half_len).abs();
    if asc > T::zero() && error > T::zero() {
        let scale = (T::lit(200.0) * error / asc).powf(T::lit(1.5));
        error = asc * scale.min(T::one());
    }
    let floor = T::lit(50.0) * T::epsilon() * abs_sum;
    if floor > error {
        error = floor;
    }
    (value, error)
}

fn adaptive<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, spec: &QuadratureSpec<T>) -> Result<T> {
    let (value, error) = gauss_kronrod(&f, a, b);
    let mut segments = vec![Segment { a, b, value, error }];
    let mut total = value;
    let mut total_err = error;
    loop {
        if !total.is_finite() {
            return Err(Error::Integration {
                estimate: total.to_f64_lossy(),
                error_bound: total_err.to_f64_lossy(),
            });
        }
        // Requests tighter than the summed roundoff floor are capped there.
        let roundoff = T::lit(100.0) * T::epsilon() * total.abs();
        let target = spec.abs_tol.max(spec.rel_tol * total.abs()).max(roundoff);
        if total_err <= target {
            return Ok(total);
        }
        if segments.len() >= spec.max_subdivisions {
            return Err(Error::Integration {
                estimate: total.to_f64_lossy(),
                error_bound: total_err.to_f64_lossy(),
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = T::lit(0.5) * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // Interval cannot be split further at this precision.
            return Err(Error::Integration {
                estimate: total.to_f64_lossy(),
                error_bound: total_err.to_f64_lossy(),
            });
        }
        let (v1, e1) = gauss_kronrod(&f, seg.a, mid);
        let (v2, e2) = gauss_kronrod(&f, mid, seg.b);
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        // Re-summing avoids drift from repeated incremental updates.
        total = segments.iter().fold(T::zero(), |s, g| s + g.value);
        total_err = segments.iter().fold(T::zero(), |s, g| s + g.error);
    }
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
///
/// Either limit may be infinite; infinite ranges are mapped onto a finite
/// interval before integration. The integrand is never evaluated at a finite
/// endpoint, so integrable endpoint singularities are tolerated.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, spec: &QuadratureSpec<T>) -> Result<T> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::Domain(format!(
            "integration limits must satisfy a <= b, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(T::zero());
    }
    let one = T::one();
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(f, a, b, spec),
        (true, false) => adaptive(
            |t: T| {
                let w = one - t;
                f(a + t / w) / (w * w)
            },
            T::zero(),
            one,
            spec,
        ),
        (false, true) => adaptive(
            |t: T| {
                let w = one - t;
                f(b - t / w) / (w * w)
            },
            T::zero(),
            one,
            spec,
        ),
        (false, false) => adaptive(
            |t: T| {
                let w = one - t * t;
                f(t / w) * (one + t * t) / (w * w)
            },
            -one,
            one,
            spec,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec<f64> {
        QuadratureSpec::default()
    }

    #[test]
    fn constant_and_linear() {
        assert!((integrate(|_| 1.0, 0.0, 1.0, &spec()).unwrap() - 1.0).abs() < 1e-14);
        assert!((integrate(|x| x, 0.0, 1.0, &spec()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bose_integral_over_half_line() {
        // Oracle: sum of 1/k^2.
        let oracle: f64 = (1..2_000_000u64).map(|k| 1.0 / (k as f64 * k as f64)).sum::<f64>()
            + 1.0 / 2_000_000.0;
        let v = integrate(|x: f64| x / x.exp_m1(), 0.0, f64::INFINITY, &spec()).unwrap();
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &spec()).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn whole_line_gaussian() {
        let v = integrate(|x: f64| (-0.5 * x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, &spec())
            .unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_spec_and_limits() {
        assert!(QuadratureSpec::new(0.0, 1e-10, 10).is_err());
        assert!(QuadratureSpec::new(1e-10, 1e-10, 0).is_err());
        assert!(integrate(|x: f64| x, 1.0, 0.0, &spec()).is_err());
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let tight = QuadratureSpec::new(1e-15, 1e-15, 2).unwrap();
        match integrate(|x: f64| (50.0 * x).sin(), 0.0, 10.0, &tight) {
            Err(Error::Integration { estimate, .. }) => assert!(estimate.is_finite()),
            other => panic!("expected integration error, got {other:?}"),
        }
    }

    #[test]
    fn works_in_single_precision() {
        let s = QuadratureSpec::<f32>::with_tol(1e-5);
        let v = integrate(|x: f32| x * x, 0.0, 3.0, &s).unwrap();
        assert!((v - 9.0).abs() < 1e-4);
    }
}
