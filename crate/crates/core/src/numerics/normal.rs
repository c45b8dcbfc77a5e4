//! Univariate and bivariate standard normal functions.

use super::quadrature::{integrate, QuadratureSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934;

fn poly<T: Real>(coef: &[f64], x: T) -> T {
    coef.iter().rev().fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// Standard normal density.
#[inline]
pub fn norm_pdf<T: Real>(z: T) -> T {
    T::lit(INV_SQRT_2PI) * (-T::lit(0.5) * z * z).exp()
}

// exp(-x^2/2) split so the exponent is exact for the leading part.
fn gauss_tail_factor<T: Real>(x: T) -> T {
    let sixteen = T::lit(16.0);
    let xsq = (x * sixteen).trunc() / sixteen;
    let del = (x - xsq) * (x + xsq);
    (-xsq * xsq * T::lit(0.5)).exp() * (-del * T::lit(0.5)).exp()
}

/// Returns `(Φ(z), 1 − Φ(z))`, each with full relative accuracy in its tail.
///
/// Rational Chebyshev approximations of W. J. Cody.
pub fn norm_cdf_pair<T: Real>(z: T) -> (T, T) {
    const A: [f64; 5] = [
        2.235_252_035_460_683_928_7,
        161.028_231_068_555_878_81,
        1_067.689_485_460_370_958_2,
        18_154.981_253_343_561_249,
        0.065_682_337_918_207_449_113,
    ];
    const B: [f64; 4] = [
        47.202_581_904_688_241_87,
        976.098_551_737_776_693_22,
        10_260.932_208_618_978_205,
        45_507.789_335_026_729_956,
    ];
    const C: [f64; 9] = [
        0.398_941_512_088_134_667_64,
        8.883_149_794_388_375_941_2,
        93.506_656_132_177_855_979,
        597.270_276_394_800_262_26,
        2_494.537_585_290_372_671_1,
        6_848.190_450_536_282_332_6,
        11_602.651_437_647_350_124,
        9_842.714_838_383_978_021_8,
        1.076_557_677_372_019_231_7e-8,
    ];
    const D: [f64; 8] = [
        22.266_688_044_328_115_691,
        235.387_901_782_624_998_61,
        1_519.377_599_407_554_805,
        6_485.558_298_266_760_755,
        18_615.571_640_885_098_091,
        34_900.952_721_145_977_266,
        38_912.003_286_093_271_411,
        19_685.429_676_859_990_727,
    ];
    const P: [f64; 6] = [
        0.215_898_534_057_956_99,
        0.127_401_161_160_247_363_9,
        0.022_235_277_870_649_807,
        0.001_421_619_193_227_893_466,
        2.911_287_495_116_879_2e-5,
        0.023_073_441_764_940_173_03,
    ];
    const Q: [f64; 5] = [
        1.284_260_096_144_911_21,
        0.468_238_212_480_865_118,
        0.065_988_137_868_928_551_5,
        0.003_782_396_332_027_582_44,
        7.297_515_550_839_662_05e-5,
    ];

    if z.is_nan() {
        return (z, z);
    }
    let one = T::one();
    let half = T::lit(0.5);
    let y = z.abs();
    if y <= T::lit(0.66291) {
        let xsq = if y > T::epsilon() * half { z * z } else { T::zero() };
        let mut num = T::lit(A[4]) * xsq;
        let mut den = xsq;
        for i in 0..3 {
            num = (num + T::lit(A[i])) * xsq;
            den = (den + T::lit(B[i])) * xsq;
        }
        let t = z * (num + T::lit(A[3])) / (den + T::lit(B[3]));
        return (half + t, half - t);
    }
    let upper = if y <= T::lit(32.0).sqrt() {
        let mut num = T::lit(C[8]) * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + T::lit(C[i])) * y;
            den = (den + T::lit(D[i])) * y;
        }
        gauss_tail_factor(y) * (num + T::lit(C[7])) / (den + T::lit(D[7]))
    } else if y < T::lit(40.0) {
        let xsq = one / (z * z);
        let mut num = T::lit(P[5]) * xsq;
        let mut den = xsq;
        for i in 0..4 {
            num = (num + T::lit(P[i])) * xsq;
            den = (den + T::lit(Q[i])) * xsq;
        }
        let t = xsq * (num + T::lit(P[4])) / (den + T::lit(Q[4]));
        gauss_tail_factor(y) * (T::lit(INV_SQRT_2PI) - t) / y
    } else {
        T::zero()
    };
    if z > T::zero() {
        (one - upper, upper)
    } else {
        (upper, one - upper)
    }
}

/// Standard normal CDF Φ(z).
#[inline]
pub fn norm_cdf<T: Real>(z: T) -> T {
    norm_cdf_pair(z).0
}

// Φ(-x)/φ(x) for x > 0 by continued fraction (modified Lentz).
fn mills_ratio<T: Real>(x: T) -> T {
    let tiny = T::lit(1e-300).max(T::min_positive_value());
    let mut f = x;
    let mut c = x;
    let mut d = T::zero();
    for k in 1..500 {
        let a = T::from_usize_lossy(k);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    T::one() / f
}

/// log Φ(z), accurate far into the lower tail.
pub fn log_norm_cdf<T: Real>(z: T) -> T {
    if z > T::lit(-5.0) {
        let (lo, hi) = norm_cdf_pair(z);
        if z > T::zero() {
            (-hi).ln_1p()
        } else {
            lo.ln()
        }
    } else {
        let log_pdf = -T::lit(0.5) * z * z - T::lit(0.5) * (T::lit(2.0) * T::PI()).ln();
        log_pdf + mills_ratio(-z).ln()
    }
}

/// Inverse Mills ratio φ(z)/Φ(z).
pub fn inv_mills<T: Real>(z: T) -> T {
    if z > T::lit(-5.0) {
        norm_pdf(z) / norm_cdf(z)
    } else {
        T::one() / mills_ratio(-z)
    }
}

/// Standard normal quantile Φ⁻¹(u), Wichura's AS 241.
pub fn norm_quantile<T: Real>(u: T) -> Result<T> {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        133.141_667_891_784_377_45,
        1_971.590_950_306_551_442_7,
        13_731.693_765_509_461_125,
        45_921.953_931_549_871_457,
        67_265.770_927_008_700_853,
        33_430.575_583_588_128_105,
        2_509.080_928_730_122_672_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911_252,
        687.187_007_492_057_908_3,
        5_394.196_021_424_751_107_7,
        21_213.794_301_586_595_867,
        39_307.895_800_092_710_61,
        28_729.085_735_721_942_674,
        5_226.495_278_852_545_925,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        0.241_780_725_177_450_611_77,
        0.022_723_844_989_269_184_583_3,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        0.689_767_334_985_100_004_55,
        0.148_103_976_427_480_074_59,
        0.015_198_666_563_616_457_196_6,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        0.296_560_571_828_504_891_23,
        0.026_532_189_526_576_123_093,
        0.001_242_660_947_388_078_438_6,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_937_69,
        0.136_929_880_922_735_805_31,
        0.014_875_361_290_850_614_852_5,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    if !(u > T::zero() && u < T::one()) {
        return Err(Error::Domain(format!("normal quantile needs u in (0,1), got {u}")));
    }
    let q = u - T::lit(0.5);
    if q.abs() <= T::lit(0.425) {
        let r = T::lit(0.180625) - q * q;
        return Ok(q * poly(&A, r) / poly(&B, r));
    }
    let tail = if q < T::zero() { u } else { T::one() - u };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= T::lit(5.0) {
        r = r - T::lit(1.6);
        poly(&C, r) / poly(&D, r)
    } else {
        r = r - T::lit(5.0);
        poly(&E, r) / poly(&F, r)
    };
    Ok(if q < T::zero() { -val } else { val })
}

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if rho.abs() < T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("correlation must satisfy |rho| < 1, got {rho}")))
    }
}

/// Bivariate standard normal density with correlation `rho`.
pub fn binorm_pdf<T: Real>(z1: T, z2: T, rho: T) -> Result<T> {
    check_rho(rho)?;
    let one_m = T::one() - rho * rho;
    let quad = (z1 * z1 + z2 * z2 - T::lit(2.0) * rho * z1 * z2) / (T::lit(2.0) * one_m);
    Ok((-quad).exp() / (T::lit(2.0) * T::PI() * one_m.sqrt()))
}

/// Bivariate standard normal CDF P(Z₁ ≤ z1, Z₂ ≤ z2).
///
/// Integrates φ(x)·Φ((z2 − ρx)/√(1−ρ²)) over x ≤ z1 with adaptive quadrature.
pub fn binorm_cdf<T: Real>(z1: T, z2: T, rho: T) -> Result<T> {
    check_rho(rho)?;
    if z1.is_nan() || z2.is_nan() {
        return Err(Error::Domain("binorm_cdf argument is NaN".into()));
    }
    if z1 == T::neg_infinity() || z2 == T::neg_infinity() {
        return Ok(T::zero());
    }
    if z1 == T::infinity() {
        return Ok(norm_cdf(z2));
    }
    if z2 == T::infinity() {
        return Ok(norm_cdf(z1));
    }
    if rho == T::zero() {
        return Ok(norm_cdf(z1) * norm_cdf(z2));
    }
    // Integrate along the smaller limit so the mass sits near the upper end.
    let (h, k) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
    let s = (T::one() - rho * rho).sqrt();
    let ten = T::lit(10.0);
    let lo = h.min(T::zero()) - ten;
    let hi = h.min(ten);
    let spec = QuadratureSpec {
        abs_tol: T::lit(1e-15),
        rel_tol: T::lit(1e-12),
        max_subdivisions: 400,
    };
    let v = integrate(|x: T| norm_pdf(x) * norm_cdf((k - rho * x) / s), lo, hi, &spec)?;
    Ok(v.max(T::zero()).min(norm_cdf(h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    // erf by its Maclaurin series; only used where it converges well.
    fn erf_series(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = x;
        let mut n = 0.0;
        while term.abs() > 1e-18 {
            sum += term / (2.0 * n + 1.0);
            n += 1.0;
            term *= -x * x / n;
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(norm_cdf(0.0_f64), 0.5);
        let oracle = 0.5 * (1.0 + erf_series(1.959964 / std::f64::consts::SQRT_2));
        assert!((norm_cdf(1.959964_f64) - oracle).abs() < 1e-13);
        assert!((oracle - 0.975).abs() < 1e-6);
        for &x in &[-3.0, -1.2, -0.4, 0.2, 0.9, 2.5] {
            let o = 0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2));
            assert!((norm_cdf(x) - o).abs() < 1e-14, "{x}");
        }
    }

    #[test]
    fn quantile_examples_and_domain() {
        assert_eq!(norm_quantile(0.5_f64).unwrap(), 0.0);
        assert!(norm_quantile(0.0_f64).is_err());
        assert!(norm_quantile(1.0_f64).is_err());
        assert!((norm_quantile(0.975_f64).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let mut u = 1e-10_f64;
        while u < 1.0 - 1e-10 {
            let back = norm_cdf(norm_quantile(u).unwrap());
            assert!((back - u).abs() <= 1e-12 * u.max(1e-4).min(1.0) + 1e-16, "u={u}");
            u = if u < 0.01 { u * 3.0 } else { u + 0.0137 };
        }
        for i in 0..=1200 {
            let z = -6.0 + i as f64 * 0.01;
            // Above z ≈ 5 the spacing of doubles near 1 dominates: allow
            // half an ulp of Φ(z) propagated through 1/φ(z).
            let slack = 0.5 * f64::EPSILON / norm_pdf(z);
            assert!((norm_quantile(norm_cdf(z)).unwrap() - z).abs() < 1e-9 + slack, "z={z}");
        }
    }

    #[test]
    fn log_cdf_deep_tail() {
        // log Φ(z) ≈ log φ(z) − log|z| − 1/z² for large |z|
        let z = -40.0_f64;
        let approx = -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() - (-z).ln() - 1.0 / (z * z);
        assert!((log_norm_cdf(z) - approx).abs() < 1e-5);
        assert!((log_norm_cdf(-4.0_f64) - norm_cdf(-4.0_f64).ln()).abs() < 1e-12);
        assert!((log_norm_cdf(-6.0_f64) - norm_cdf(-6.0_f64).ln()).abs() < 1e-10);
        assert!((inv_mills(-6.0_f64) - norm_pdf(-6.0) / norm_cdf(-6.0)).abs() < 1e-9);
    }

    #[test]
    fn bivariate_examples() {
        assert!((binorm_cdf(0.0, 0.0, 0.0_f64).unwrap() - 0.25).abs() < 1e-15);
        assert!((binorm_pdf(0.0, 0.0, 0.0_f64).unwrap() - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        // Sheppard: 1/4 + asin(rho)/(2 pi)
        for &r in &[-0.9, -0.5, 0.3, 0.5, 0.95] {
            let o = 0.25 + (r as f64).asin() / (2.0 * std::f64::consts::PI);
            assert!((binorm_cdf(0.0, 0.0, r).unwrap() - o).abs() < 1e-10, "rho={r}");
        }
        assert!((binorm_cdf(f64::INFINITY, f64::INFINITY, 0.4).unwrap() - 1.0).abs() < 1e-15);
        assert!(binorm_cdf(0.0, 0.0, 1.0_f64).is_err());
        assert!(binorm_pdf(0.0, 0.0, -1.0_f64).is_err());
    }

    #[test]
    fn bivariate_independence_grid() {
        for i in 0..13 {
            for j in 0..13 {
                let a = -3.0 + 0.5 * i as f64;
                let b = -3.0 + 0.5 * j as f64;
                let v = binorm_cdf(a, b, 0.0).unwrap();
                assert!((v - norm_cdf(a) * norm_cdf(b)).abs() < 1e-10);
                // near-zero correlation goes through the quadrature path
                let w = binorm_cdf(a, b, 1e-12).unwrap();
                assert!((w - norm_cdf(a) * norm_cdf(b)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bivariate_monotone() {
        let rhos = [-0.8, -0.3, 0.2, 0.7];
        for &r in &rhos {
            let mut prev = 0.0;
            for i in 0..40 {
                let z = -4.0 + 0.2 * i as f64;
                let v = binorm_cdf(z, 0.3, r).unwrap();
                assert!(v >= prev - 1e-14);
                prev = v;
            }
        }
        let mut prev = 0.0;
        for i in 0..39 {
            let r = -0.95 + 0.05 * i as f64;
            let v = binorm_cdf(0.0, 0.0, r).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }
}
