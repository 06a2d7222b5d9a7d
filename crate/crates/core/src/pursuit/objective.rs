use nalgebra::{DMatrix, DVector};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::frame::Direction;
use crate::transport::{EqualBinMoments, SortedProjection};

/// Sorted projections of the sample onto `u`.
pub fn project(data: &DataMatrix, u: &Direction) -> Result<SortedProjection> {
    let mut x = data.project_unsorted(u.as_slice())?;
    x.sort_by(f64::total_cmp);
    Ok(SortedProjection::from_sorted_unchecked(x))
}

/// W2 distance between the sample projected onto `u` and Φ.
pub fn objective(data: &DataMatrix, u: &Direction) -> Result<f64> {
    check_dim(data, u)?;
    let ev = Evaluator::new(data.matrix().clone());
    Ok(ev.squared(u.vector()).sqrt())
}

/// Midpoint-style surrogate `sqrt((1/n) Σ (x₍ᵢ₎ − q̄ᵢ)²)` with bin barycenters
/// `q̄ᵢ = n ∫_{bin i} Φ⁻¹`. Its square differs from the exact squared
/// objective by a constant depending only on `n`, so both share maximizers
/// and gradients.
pub fn objective_barycenter(data: &DataMatrix, u: &Direction) -> Result<f64> {
    let proj = project(data, u)?;
    let bins = EqualBinMoments::new(proj.len());
    let q = bins.barycenters();
    let sq = proj
        .values()
        .iter()
        .zip(&q)
        .map(|(x, b)| (x - b) * (x - b))
        .sum::<f64>()
        / proj.len() as f64;
    Ok(sq.sqrt())
}

/// Euclidean gradient of the squared objective with the ranks of the
/// projections held fixed:
/// `(2/n) Σ x₍ᵢ₎ X₍ᵢ₎ − 2 Σ M₁(binᵢ) X₍ᵢ₎`.
///
/// Ties are broken by sample index.
pub fn objective_gradient(data: &DataMatrix, u: &Direction) -> Result<Vec<f64>> {
    check_dim(data, u)?;
    let ev = Evaluator::new(data.matrix().clone());
    let (_, g) = ev.squared_with_gradient(u.vector());
    Ok(g.data.into())
}

fn check_dim(data: &DataMatrix, u: &Direction) -> Result<()> {
    if u.dim() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            found: u.dim(),
        });
    }
    Ok(())
}

/// Evaluates the squared objective and its fixed-rank gradient for a fixed
/// data matrix, reusing the Gaussian bin moments across calls.
///
/// The matrix may be a reduced representation `X B` of the sample, in which
/// case arguments are coordinates in the basis `B`.
#[derive(Debug, Clone)]
pub struct Evaluator {
    y: DMatrix<f64>,
    bins: EqualBinMoments,
}

impl Evaluator {
    pub fn new(y: DMatrix<f64>) -> Self {
        let bins = EqualBinMoments::new(y.nrows());
        Evaluator { y, bins }
    }

    pub fn dim(&self) -> usize {
        self.y.ncols()
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.y
    }

    fn sorted_pairs(&self, w: &DVector<f64>) -> Vec<(f64, u32)> {
        let x = &self.y * w;
        let mut pairs: Vec<(f64, u32)> = x.iter().copied().zip(0u32..).collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        pairs
    }

    /// Squared W2 of the projection onto `w`; `w` need not be unit.
    pub fn squared(&self, w: &DVector<f64>) -> f64 {
        let sorted: Vec<f64> = self.sorted_pairs(w).into_iter().map(|(x, _)| x).collect();
        self.bins.squared_distance(&sorted)
    }

    pub fn squared_with_gradient(&self, w: &DVector<f64>) -> (f64, DVector<f64>) {
        let pairs = self.sorted_pairs(w);
        self.value_and_gradient(&pairs)
    }

    /// As [`Evaluator::squared_with_gradient`], seeding the sort with the
    /// order from a nearby direction; `order` is updated in place. Successive
    /// iterates of an ascent change few ranks, and the adaptive sort then
    /// runs in close to linear time.
    pub(crate) fn squared_with_gradient_ordered(&self, w: &DVector<f64>, order: &mut Vec<u32>) -> (f64, DVector<f64>) {
        let x = &self.y * w;
        if order.len() != x.len() {
            *order = (0..x.len() as u32).collect();
        }
        let mut pairs: Vec<(f64, u32)> = order.iter().map(|&i| (x[i as usize], i)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.clear();
        order.extend(pairs.iter().map(|p| p.1));
        self.value_and_gradient(&pairs)
    }

    fn value_and_gradient(&self, pairs: &[(f64, u32)]) -> (f64, DVector<f64>) {
        let n = pairs.len();
        let inv_n = 1.0 / n as f64;
        let first = self.bins.first();
        let mut coef = DVector::zeros(n);
        let (mut sq, mut cross) = (0.0, 0.0);
        for (rank, &(x, idx)) in pairs.iter().enumerate() {
            sq += x * x;
            cross += x * first[rank];
            coef[idx as usize] = 2.0 * (x * inv_n - first[rank]);
        }
        let value = (sq * inv_n - 2.0 * cross + self.bins.second_total()).max(0.0);
        (value, self.y.tr_mul(&coef))
    }

    /// One step of the kurtosis fixed-point map `w ↦ E[y (wᵀy)³] − 3w`,
    /// normalized.
    pub(crate) fn kurtosis_step(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut x = &self.y * w;
        x.apply(|v| *v = *v * *v * *v);
        let mut next = self.y.tr_mul(&x) / self.n() as f64 - w * 3.0;
        let norm = next.norm();
        if norm > 0.0 && norm.is_finite() {
            next /= norm;
            next
        } else {
            w.clone()
        }
    }
}
