//! Planted non-Gaussian component models with known ground truth.

mod law;
mod model;
mod population;
mod truth;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use law::{SignalKind, SignalLaw, SignalSampler};
pub use model::{random_orthogonal, BasisSpec, ModelSpec, PlantedModel};
pub use population::{OracleRoute, PopulationOracle};
pub use truth::{ground_truth_metrics, snr, GroundTruth, TruthConfig, TruthMethod};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Draws `n` i.i.d. rows `X = U s + W g` (with the first coordinate of
/// `g` replaced by the complement perturbation, if any). The result is not marked as
/// whitened: its covariance is the identity only in population.
pub fn sample(model: &PlantedModel, n: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let (p, k) = (model.p(), model.k());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Latent coordinates, one column per row of X, filled row by row so
    // the stream order does not depend on the matrix layout.
    let mut z = DMatrix::zeros(p, n);
    let sampler = model.signal().map(SignalLaw::sampler);
    let perturbed = model.complement().map(SignalLaw::sampler);
    let gauss_from = k + usize::from(perturbed.is_some());
    for mut col in z.column_iter_mut() {
        let col = col.as_mut_slice();
        if let Some(s) = &sampler {
            s.sample_into(&mut rng, &mut col[..k]);
        }
        if let Some(c) = &perturbed {
            c.sample_into(&mut rng, &mut col[k..k + 1]);
        }
        for g in &mut col[gauss_from..] {
            *g = rng.sample(StandardNormal);
        }
    }
    DataMatrix::new((model.basis() * z).transpose(), false)
}

/// Centres and applies `Σ̂^{-1/2}` (symmetric square root) so that the
/// output has zero sample mean and identity sample covariance.
pub fn whiten(data: &DataMatrix) -> Result<DataMatrix> {
    let (n, p) = (data.n(), data.p());
    if n <= p {
        return Err(Error::Singular(format!("whitening needs n > p, got n = {n}, p = {p}")));
    }
    let eig = data.covariance().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 1e-12 * max) {
        return Err(Error::Singular(format!(
            "sample covariance is rank deficient (eigenvalues in [{min:e}, {max:e}])"
        )));
    }
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let w = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let mean = data.mean();
    let mut centred = data.matrix().clone();
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut out = centred * w;
    // Remove the rounding residue so the mean is zero to machine precision.
    let residue = out.row_mean();
    for mut row in out.row_iter_mut() {
        row -= &residue;
    }
    DataMatrix::new(out, true)
}
