//! Standard-normal special functions and the quantile partial moments used by
//! the closed-form empirical-to-Gaussian transport cost.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A closed sub-interval `[lo, hi]` of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval01 {
    lo: f64,
    hi: f64,
}

impl Interval01 {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::domain(format!(
                "interval [{lo}, {hi}] is not inside [0, 1]"
            )));
        }
        Ok(Interval01 { lo, hi })
    }

    /// The `i`-th (zero-based) of `n` equal-width bins.
    pub fn equal_bin(i: usize, n: usize) -> Self {
        debug_assert!(i < n);
        let lo = i as f64 / n as f64;
        let hi = if i + 1 == n { 1.0 } else { (i + 1) as f64 / n as f64 };
        Interval01 { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Φ(z), accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// 1 − Φ(z) without cancellation in the upper tail.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// Φ⁻¹(t) for `0 < t < 1`.
///
/// Wichura's AS 241 rational approximation followed by one Halley step
/// against [`std_normal_cdf`], so the pair agrees to a few ulps.
pub fn std_normal_quantile(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!(
            "quantile argument {t} outside the open interval (0, 1)"
        )));
    }
    // Reduce to the lower half; 1 - t is exact for t >= 0.5.
    if t > 0.5 {
        return Ok(-lower_quantile(1.0 - t));
    }
    Ok(lower_quantile(t))
}

fn lower_quantile(t: f64) -> f64 {
    let z = as241(t);
    if z == 0.0 {
        return z;
    }
    let e = std_normal_cdf(z) - t;
    let u = e * (2.0 * PI).sqrt() * (0.5 * z * z).exp();
    z - u / (1.0 + 0.5 * z * u)
}

fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let r0 = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r0.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// φ(Φ⁻¹(t)) with the limits φ(Φ⁻¹(0)) = φ(Φ⁻¹(1)) = 0.
pub fn density_at_quantile(t: f64) -> f64 {
    match std_normal_quantile(t) {
        Ok(z) => std_normal_pdf(z),
        Err(_) => 0.0,
    }
}

/// Φ⁻¹(t)·φ(Φ⁻¹(t)), zero at both endpoints.
fn z_density_at_quantile(t: f64) -> f64 {
    match std_normal_quantile(t) {
        Ok(z) => z * std_normal_pdf(z),
        Err(_) => 0.0,
    }
}

/// ∫ Φ⁻¹(t) dt over the bin.
pub fn quantile_partial_moment_1(bin: Interval01) -> f64 {
    density_at_quantile(bin.lo) - density_at_quantile(bin.hi)
}

/// ∫ Φ⁻¹(t)² dt over the bin.
///
/// Uses Φ(Φ⁻¹(t)) = t so only the z·φ(z) boundary term is evaluated.
pub fn quantile_partial_moment_2(bin: Interval01) -> f64 {
    let m = bin.width() - (z_density_at_quantile(bin.hi) - z_density_at_quantile(bin.lo));
    m.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Composite Simpson quadrature of φ over [a, b], used as an independent
    // oracle for the CDF and the partial moments.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(8.0) - 1.0).abs() < 1e-12);
        let oracle = simpson(std_normal_pdf, -40.0, 1.0, 200_000);
        assert!((oracle - 0.841_344_746_068_542_9).abs() < 1e-12);
        assert!((std_normal_cdf(1.0) - oracle).abs() < 1e-12);
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_quantile(0.841_344_746).unwrap() - 1.0).abs() < 1e-6);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(-0.1).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_round_trip_grid() {
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let z = std_normal_quantile(t).unwrap();
            assert!((std_normal_cdf(z) - t).abs() < 1e-9, "t = {t}");
        }
        for t in [1e-300, 1e-100, 1e-20, 1e-10, 1e-5] {
            let z = std_normal_quantile(t).unwrap();
            assert!(((std_normal_cdf(z) - t) / t).abs() < 1e-12, "t = {t}");
            let zu = std_normal_quantile(1.0 - t.max(1e-16)).unwrap();
            assert!(zu > 0.0);
        }
    }

    #[test]
    fn partial_moment_reference_values() {
        let full = Interval01::new(0.0, 1.0).unwrap();
        let upper = Interval01::new(0.5, 1.0).unwrap();
        let lower = Interval01::new(0.0, 0.5).unwrap();
        assert!(quantile_partial_moment_1(full).abs() < 1e-15);
        assert!((quantile_partial_moment_1(upper) - 0.398_942_28).abs() < 1e-8);
        assert!((quantile_partial_moment_1(lower) + 0.398_942_28).abs() < 1e-8);

        // Oracle: substitute z = Φ⁻¹(t), integrate z φ(z) over (0, ∞).
        let oracle = simpson(|z| z * std_normal_pdf(z), 0.0, 40.0, 200_000);
        assert!((quantile_partial_moment_1(upper) - oracle).abs() < 1e-12);

        assert!((quantile_partial_moment_2(full) - 1.0).abs() < 1e-15);
        assert!((quantile_partial_moment_2(lower) - 0.5).abs() < 1e-15);
        let mid = Interval01::new(0.25, 0.75).unwrap();
        let z = std_normal_quantile(0.75).unwrap();
        let oracle = simpson(|x| x * x * std_normal_pdf(x), -z, z, 200_000);
        assert!((oracle - 0.071_325_917_7).abs() < 1e-9);
        assert!((quantile_partial_moment_2(mid) - oracle).abs() < 1e-12);
    }

    #[test]
    fn interval_validation() {
        assert!(Interval01::new(0.6, 0.4).is_err());
        assert!(Interval01::new(-0.1, 0.4).is_err());
        assert!(Interval01::new(0.1, 1.1).is_err());
        let b = Interval01::equal_bin(2, 3);
        assert_eq!((b.lo(), b.hi()), (2.0 / 3.0, 1.0));
    }

    fn partition() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1e-6..1.0f64, 1..64).prop_map(|w| {
            let total: f64 = w.iter().sum();
            let mut acc = 0.0;
            let mut cuts = vec![0.0];
            for x in &w[..w.len() - 1] {
                acc += x / total;
                cuts.push(acc.min(1.0));
            }
            cuts.push(1.0);
            cuts
        })
    }

    proptest! {
        #[test]
        fn partition_additivity(cuts in partition()) {
            let (mut s1, mut s2) = (0.0, 0.0);
            for w in cuts.windows(2) {
                let bin = Interval01::new(w[0], w[1]).unwrap();
                s1 += quantile_partial_moment_1(bin);
                let m2 = quantile_partial_moment_2(bin);
                prop_assert!(m2 >= 0.0);
                s2 += m2;
            }
            prop_assert!(s1.abs() < 1e-9);
            prop_assert!((s2 - 1.0).abs() < 1e-9);
        }

        #[test]
        fn first_moment_antisymmetry(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let m = quantile_partial_moment_1(Interval01::new(lo, hi).unwrap());
            let mirror = quantile_partial_moment_1(Interval01::new(1.0 - hi, 1.0 - lo).unwrap());
            prop_assert!((m + mirror).abs() < 1e-12);
        }

        #[test]
        fn quantile_is_monotone(a in 1e-12..1.0f64, b in 1e-12..1.0f64) {
            prop_assume!(a < b && b < 1.0);
            prop_assert!(std_normal_quantile(a).unwrap() < std_normal_quantile(b).unwrap());
        }
    }
}
