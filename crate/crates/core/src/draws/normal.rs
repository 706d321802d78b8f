//! Standard normal quantile function.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

// Wichura's AS 241 (PPND16) coefficients, lowest order first.
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn horner<T: Scalar>(coeffs: &[f64; 8], x: T) -> T {
    coeffs
        .iter()
        .rev()
        .fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// Inverse of the standard normal CDF.
pub fn inv_normal_cdf<T: Scalar>(u: T) -> Result<T> {
    if !(u > T::zero() && u < T::one()) {
        return Err(Error::Domain(format!(
            "normal quantile needs 0 < u < 1, got {u}"
        )));
    }
    let q = u - T::lit(0.5);
    if q.abs() <= T::lit(0.425) {
        let r = T::lit(0.180625) - q * q;
        return Ok(q * horner(&A, r) / horner(&B, r));
    }
    let tail = if q < T::zero() { u } else { T::one() - u };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= T::lit(5.0) {
        r -= T::lit(1.6);
        horner(&C, r) / horner(&D, r)
    } else {
        r -= T::lit(5.0);
        horner(&E, r) / horner(&F, r)
    };
    Ok(if q < T::zero() { -x } else { x })
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent route: bisection on an erfc-based CDF.
    fn bisect_quantile(u: f64) -> f64 {
        let cdf = |x: f64| 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
        let ccdf = |x: f64| 0.5 * libm::erfc(x / std::f64::consts::SQRT_2);
        let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let below = if u < 0.5 { cdf(mid) < u } else { ccdf(mid) > 1.0 - u };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn median_is_zero() {
        assert_eq!(inv_normal_cdf(0.5_f64).unwrap(), 0.0);
    }

    #[test]
    fn known_quantiles() {
        let z = inv_normal_cdf(0.975_f64).unwrap();
        assert!((z - 1.959964).abs() < 1e-6, "{z}");
        assert!((z - bisect_quantile(0.975)).abs() < 1e-9);
        let z = inv_normal_cdf(0.0013499_f64).unwrap();
        assert!((z + 3.0).abs() < 1e-4, "{z}");
    }

    #[test]
    fn matches_bisection_oracle_across_range() {
        let mut worst = 0.0_f64;
        let mut probes: Vec<f64> = (1..=999).map(|i| i as f64 / 1000.0).collect();
        for e in 1..=12 {
            let t = 10f64.powi(-e);
            probes.extend([t, 2.5 * t]);
            // 1 - t loses digits for tiny t, so only the moderate upper tail
            if e <= 8 {
                probes.push(1.0 - t);
            }
        }
        for u in probes {
            if u <= 1e-12 - 1e-24 || u >= 1.0 - 1e-12 + 1e-24 {
                continue;
            }
            let err = (inv_normal_cdf(u).unwrap() - bisect_quantile(u)).abs();
            worst = worst.max(err);
        }
        assert!(worst < 1e-9, "worst abs error {worst}");
    }

    #[test]
    fn domain_errors() {
        assert!(inv_normal_cdf(0.0_f64).is_err());
        assert!(inv_normal_cdf(1.0_f64).is_err());
        assert!(inv_normal_cdf(f64::NAN).is_err());
    }

    #[test]
    fn single_precision() {
        let z = inv_normal_cdf(0.975_f32).unwrap();
        assert!((z - 1.959964).abs() < 1e-5);
    }
}
