//! Exact one-dimensional 2-Wasserstein distances.
//!
//! In one dimension the optimal coupling is the monotone (quantile) coupling,
//! so every distance here reduces to integrating squared differences of
//! quantile functions. Empirical measures enter as [`SortedProjection`]s so a
//! caller evaluating many costs can sort once.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::gaussmath::{quantile_partial_moment_1, quantile_partial_moment_2, Interval01};

/// Largest sample size accepted by [`w2_coupling_oracle`].
pub const ORACLE_MAX_N: usize = 8;

/// A one-dimensional empirical measure `(1/n) Σ δ_{xᵢ}` stored in
/// nondecreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedProjection {
    values: Vec<f64>,
}

impl SortedProjection {
    /// Wraps already-sorted values. Fails on empty, non-finite or unsorted
    /// input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sample contains a non-finite value"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::domain("sample values are not in nondecreasing order"));
        }
        Ok(SortedProjection { values })
    }

    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sample contains a non-finite value"));
        }
        values.sort_by(f64::total_cmp);
        Self::new(values)
    }

    pub(crate) fn from_sorted_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        SortedProjection { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W2Result {
    pub distance: f64,
    pub squared: f64,
}

impl W2Result {
    /// Clamps tiny negative round-off to zero.
    pub fn from_squared(squared: f64) -> Self {
        let squared = squared.max(0.0);
        W2Result {
            distance: squared.sqrt(),
            squared,
        }
    }
}

/// First and second quantile partial moments of Φ over the `n` equal bins
/// `((i-1)/n, i/n)`.
///
/// Shared by every evaluation at a fixed sample size, which is what makes the
/// pursuit objective cheap to re-evaluate.
#[derive(Debug, Clone)]
pub struct EqualBinMoments {
    first: Vec<f64>,
    second_total: f64,
}

impl EqualBinMoments {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "bin count must be positive");
        // density_at_quantile(i/n) for i = 0..=n, then differences.
        let dens: Vec<f64> = (0..=n)
            .map(|i| {
                if i == 0 || i == n {
                    0.0
                } else {
                    crate::gaussmath::density_at_quantile(i as f64 / n as f64)
                }
            })
            .collect();
        let first = dens.windows(2).map(|w| w[0] - w[1]).collect();
        let second_total = (0..n)
            .map(|i| quantile_partial_moment_2(Interval01::equal_bin(i, n)))
            .sum();
        EqualBinMoments {
            first,
            second_total,
        }
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    /// `∫ Φ⁻¹` over each bin.
    pub fn first(&self) -> &[f64] {
        &self.first
    }

    /// `Σᵢ ∫ (Φ⁻¹)²` over all bins; equal to 1 up to round-off.
    pub fn second_total(&self) -> f64 {
        self.second_total
    }

    /// Bin barycenters `n·∫ Φ⁻¹`, the quantile targets of the midpoint-style
    /// surrogate `(1/n) Σ (xᵢ − q̄ᵢ)²`.
    pub fn barycenters(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.first.iter().map(|m| n * m).collect()
    }

    /// Squared W2 between the sorted sample and Φ.
    pub fn squared_distance(&self, sorted: &[f64]) -> f64 {
        debug_assert_eq!(sorted.len(), self.n());
        let inv_n = 1.0 / self.n() as f64;
        let (sq, cross) = sorted
            .iter()
            .zip(&self.first)
            .fold((0.0, 0.0), |(sq, cross), (x, m)| (sq + x * x, cross + x * m));
        (sq * inv_n - 2.0 * cross + self.second_total).max(0.0)
    }
}

/// W2 between the empirical measure and the standard Gaussian, integrated
/// exactly bin by bin.
pub fn w2_empirical_to_std_normal(proj: &SortedProjection) -> W2Result {
    let n = proj.len();
    let inv_n = 1.0 / n as f64;
    let squared: f64 = proj
        .values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let bin = Interval01::equal_bin(i, n);
            x * x * inv_n - 2.0 * x * quantile_partial_moment_1(bin)
                + quantile_partial_moment_2(bin)
        })
        .sum();
    W2Result::from_squared(squared)
}

/// W2 between two empirical measures.
///
/// Equal sizes use the sorted matching; otherwise the two quantile step
/// functions are integrated over the common refinement of their bins.
pub fn w2_empirical_to_empirical(a: &SortedProjection, b: &SortedProjection) -> W2Result {
    let (n, m) = (a.len(), b.len());
    if n == m {
        let squared = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / n as f64;
        return W2Result::from_squared(squared);
    }
    // Breakpoints i/n and j/m are compared as integers i*m and j*n on the
    // common grid of n*m cells.
    let (nu, mu) = (n as u128, m as u128);
    let total = (nu * mu) as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0u128;
    let mut squared = 0.0;
    while i < n && j < m {
        let end_a = (i as u128 + 1) * mu;
        let end_b = (j as u128 + 1) * nu;
        let end = end_a.min(end_b);
        let d = a.values[i] - b.values[j];
        squared += d * d * (end - prev) as f64 / total;
        prev = end;
        if end_a == end {
            i += 1;
        }
        if end_b == end {
            j += 1;
        }
    }
    W2Result::from_squared(squared)
}

/// Brute-force W2 between equal-size samples by enumerating every
/// assignment. Independent of the monotone-coupling shortcut.
pub fn w2_coupling_oracle(a: &SortedProjection, b: &SortedProjection) -> Result<W2Result> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if n > ORACLE_MAX_N {
        return Err(Error::Unsupported(format!(
            "coupling oracle enumerates n! assignments; n = {n} exceeds {ORACLE_MAX_N}"
        )));
    }
    let best = (0..n)
        .permutations(n)
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| {
                    let d = a.values[i] - b.values[j];
                    d * d
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(W2Result::from_squared(best / n as f64))
}

/// Closed-form W2 between `N(mean1, sd1²)` and `N(mean2, sd2²)`.
pub fn w2_gaussian_to_gaussian(mean1: f64, sd1: f64, mean2: f64, sd2: f64) -> Result<W2Result> {
    if !(sd1 > 0.0 && sd2 > 0.0) {
        return Err(Error::domain(format!(
            "standard deviations must be positive, got {sd1} and {sd2}"
        )));
    }
    let dm = mean1 - mean2;
    let ds = sd1 - sd2;
    Ok(W2Result::from_squared(dm * dm + ds * ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmath::{std_normal_pdf, std_normal_quantile};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn sp(v: &[f64]) -> SortedProjection {
        SortedProjection::from_unsorted(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(matches!(SortedProjection::new(vec![]), Err(Error::EmptySample)));
        assert!(SortedProjection::new(vec![1.0, 0.0]).is_err());
        assert!(SortedProjection::from_unsorted(vec![f64::NAN]).is_err());
    }

    #[test]
    fn point_mass_at_zero_is_unit_distance() {
        for n in [1, 2, 10, 1000] {
            let r = w2_empirical_to_std_normal(&sp(&vec![0.0; n]));
            assert!((r.distance - 1.0).abs() < 1e-9, "n = {n}");
            assert!((r.squared - r.distance * r.distance).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_two_point_sample() {
        let r = w2_empirical_to_std_normal(&sp(&[-1.0, 1.0]));
        assert!((r.squared - 0.404_230_4).abs() < 1e-6);
        assert!((r.distance - 0.635_791).abs() < 1e-5);

        // Oracle: midpoint quadrature of (Q_emp(t) - Φ⁻¹(t))² on a fine grid.
        let m = 2_000_000;
        let oracle: f64 = (0..m)
            .map(|i| {
                let t = (i as f64 + 0.5) / m as f64;
                let q = if t < 0.5 { -1.0 } else { 1.0 };
                let d = q - std_normal_quantile(t).unwrap();
                d * d
            })
            .sum::<f64>()
            / m as f64;
        assert!((r.squared - oracle).abs() < 1e-5);
    }

    #[test]
    fn large_gaussian_sample_is_close_to_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(w2_empirical_to_std_normal(&sp(&v)).distance < 0.05);
    }

    #[test]
    fn equal_bin_moments_agree_with_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..257).map(|_| rng.sample::<f64, _>(StandardNormal) * 1.3).collect();
        let s = sp(&v);
        let bins = EqualBinMoments::new(s.len());
        let direct = w2_empirical_to_std_normal(&s).squared;
        assert!((bins.squared_distance(s.values()) - direct).abs() < 1e-12);
        assert!((bins.second_total() - 1.0).abs() < 1e-12);
        // Barycenter surrogate differs from the exact cost by a constant.
        let q = bins.barycenters();
        let bary = |x: &[f64]| {
            x.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
        };
        let shifted: Vec<f64> = s.values().iter().map(|x| 2.0 * x + 0.1).collect();
        let c1 = direct - bary(s.values());
        let c2 = bins.squared_distance(&shifted) - bary(&shifted);
        assert!((c1 - c2).abs() < 1e-12);
    }

    #[test]
    fn two_sample_examples() {
        assert!((w2_empirical_to_empirical(&sp(&[0.0, 1.0]), &sp(&[1.0, 2.0])).distance - 1.0).abs() < 1e-15);
        let a = sp(&[0.3, -2.0, 5.0]);
        assert_eq!(w2_empirical_to_empirical(&a, &a).squared, 0.0);
        let r = w2_empirical_to_empirical(&sp(&[0.0, 0.0, 3.0]), &sp(&[1.0, 1.0, 1.0]));
        assert!((r.squared - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unequal_sizes_use_common_refinement() {
        // {0, 1} vs {0, 0, 1, 1}: same measure.
        let r = w2_empirical_to_empirical(&sp(&[0.0, 1.0]), &sp(&[0.0, 0.0, 1.0, 1.0]));
        assert_eq!(r.squared, 0.0);
        // {0, 1} vs {0, 1, 2}: quantile steps differ on (1/3,1/2) by 1 and (2/3,1) by 1.
        let r = w2_empirical_to_empirical(&sp(&[0.0, 1.0]), &sp(&[0.0, 1.0, 2.0]));
        assert!((r.squared - (1.0 / 6.0 + 1.0 / 3.0)).abs() < 1e-15);
        let s = w2_empirical_to_empirical(&sp(&[0.0, 1.0, 2.0]), &sp(&[0.0, 1.0]));
        assert_eq!(r, s);
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(w2_coupling_oracle(&sp(&[0.0, 1.0]), &sp(&[1.0, 0.0])).unwrap().squared, 0.0);
        let r = w2_coupling_oracle(&sp(&[0.0, 0.0, 3.0]), &sp(&[1.0, 1.0, 1.0])).unwrap();
        assert!((r.squared - 2.0).abs() < 1e-15);
        let nine = sp(&[0.0; 9]);
        assert!(matches!(w2_coupling_oracle(&nine, &nine), Err(Error::Unsupported(_))));
        assert!(w2_coupling_oracle(&sp(&[0.0]), &sp(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn gaussian_closed_form() {
        assert_eq!(w2_gaussian_to_gaussian(0.0, 1.0, 0.0, 1.0).unwrap().distance, 0.0);
        assert_eq!(w2_gaussian_to_gaussian(2.0, 1.0, 0.0, 1.0).unwrap().distance, 2.0);
        assert_eq!(w2_gaussian_to_gaussian(0.0, 3.0, 0.0, 1.0).unwrap().distance, 2.0);
        assert!(w2_gaussian_to_gaussian(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(w2_gaussian_to_gaussian(0.0, 1.0, 0.0, -1.0).is_err());

        // Oracle: quadrature of (3z - z)² φ(z) over z.
        let h = 1e-4;
        let oracle: f64 = (-200_000..=200_000)
            .map(|i| {
                let z = i as f64 * h;
                4.0 * z * z * std_normal_pdf(z) * h
            })
            .sum();
        assert!((oracle.sqrt() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sample_distance_shrinks_with_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut medians = Vec::new();
        for n in [100, 1000, 10_000] {
            let mut d: Vec<f64> = (0..50)
                .map(|_| {
                    let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                    w2_empirical_to_std_normal(&sp(&v)).distance
                })
                .collect();
            d.sort_by(f64::total_cmp);
            medians.push(d[25]);
        }
        assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
    }

    fn sample(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, n)
    }

    proptest! {
        #[test]
        fn sorted_matching_is_optimal(n in 1usize..=6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let (a, b) = (sp(&a), sp(&b));
            let fast = w2_empirical_to_empirical(&a, &b).squared;
            let brute = w2_coupling_oracle(&a, &b).unwrap().squared;
            prop_assert!((fast - brute).abs() < 1e-12);
        }

        #[test]
        fn triangle_inequality((a, b, c) in (1usize..40).prop_flat_map(|n| (sample(n), sample(n), sample(n)))) {
            let (a, b, c) = (sp(&a), sp(&b), sp(&c));
            let ab = w2_empirical_to_empirical(&a, &b).distance;
            let bc = w2_empirical_to_empirical(&b, &c).distance;
            let ac = w2_empirical_to_empirical(&a, &c).distance;
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn scales_linearly((a, b) in (1usize..40).prop_flat_map(|n| (sample(n), sample(n))), c in -4.0..4.0f64) {
            let base = w2_empirical_to_empirical(&sp(&a), &sp(&b)).distance;
            let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
            let cb: Vec<f64> = b.iter().map(|x| c * x).collect();
            let scaled = w2_empirical_to_empirical(&sp(&ca), &sp(&cb)).distance;
            prop_assert!((scaled - c.abs() * base).abs() < 1e-9 * (1.0 + base));
        }

        #[test]
        fn symmetric_in_arguments(a in prop::collection::vec(-5.0..5.0f64, 1..20), b in prop::collection::vec(-5.0..5.0f64, 1..20)) {
            let ab = w2_empirical_to_empirical(&sp(&a), &sp(&b)).squared;
            let ba = w2_empirical_to_empirical(&sp(&b), &sp(&a)).squared;
            prop_assert!((ab - ba).abs() < 1e-12);
        }
    }
}
