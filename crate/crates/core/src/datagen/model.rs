use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::law::{SignalKind, SignalLaw};
use super::population::{Blocks, PopulationOracle};
use super::truth::{ground_truth_metrics, GroundTruth, TruthConfig};
use crate::error::{Error, Result};
use crate::frame::Frame;

/// How the signal subspace sits in `R^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSpec {
    /// Orthonormalized i.i.d. Gaussian matrix drawn from `seed`.
    Random { seed: u64 },
    /// The first `k` coordinate axes.
    Canonical,
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec::Random { seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub p: usize,
    pub k: usize,
    pub signal: SignalKind,
    #[serde(default)]
    pub basis: BasisSpec,
    /// One-dimensional law for the first complement axis, standardized like
    /// the signal. Absent means the complement is exactly Gaussian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complement: Option<SignalKind>,
}

/// `X = U s + W g` with `s` drawn from the signal law and `g` standard
/// Gaussian in the complement, except that the first complement coordinate
/// follows `spec.complement` when it is set.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    spec: ModelSpec,
    signal: Option<SignalLaw>,
    complement: Option<SignalLaw>,
    basis: DMatrix<f64>,
    basis_u: Frame,
    basis_w: Frame,
    truth: GroundTruth,
}

impl PlantedModel {
    pub fn new(spec: ModelSpec, truth: &TruthConfig) -> Result<Self> {
        let mut model = Self::without_truth(spec)?;
        model.truth = ground_truth_metrics(&model, truth)?;
        Ok(model)
    }

    /// Rebuilds a model whose ground truth was computed earlier.
    pub fn with_truth(spec: ModelSpec, truth: GroundTruth) -> Result<Self> {
        let mut model = Self::without_truth(spec)?;
        model.truth = truth;
        Ok(model)
    }

    /// Builds the model with all ground-truth fields left at zero.
    pub fn without_truth(spec: ModelSpec) -> Result<Self> {
        let (p, k) = (spec.p, spec.k);
        if p == 0 {
            return Err(Error::config("p must be positive"));
        }
        if k > p {
            return Err(Error::config(format!("k = {k} exceeds p = {p}")));
        }
        let signal = if k == 0 {
            None
        } else {
            Some(SignalLaw::new(spec.signal.clone(), k)?)
        };
        let complement = match &spec.complement {
            None => None,
            Some(_) if k == p => {
                return Err(Error::config("a complement perturbation needs k < p"));
            }
            Some(kind) => Some(SignalLaw::new(kind.clone(), 1)?),
        };
        let basis = match spec.basis {
            BasisSpec::Canonical => DMatrix::identity(p, p),
            BasisSpec::Random { seed } => random_orthogonal(p, seed),
        };
        let basis_u = Frame::from_columns(&basis.columns(0, k).into_owned())?;
        let basis_w = Frame::from_columns(&basis.columns(k, p - k).into_owned())?;
        Ok(PlantedModel {
            spec,
            signal,
            complement,
            basis,
            basis_u,
            basis_w,
            truth: GroundTruth::default(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn p(&self) -> usize {
        self.spec.p
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    /// `None` when `k = 0`.
    pub fn signal(&self) -> Option<&SignalLaw> {
        self.signal.as_ref()
    }

    /// Law on the first axis of `basis_w`, if the complement is perturbed.
    pub fn complement(&self) -> Option<&SignalLaw> {
        self.complement.as_ref()
    }

    pub(crate) fn blocks(&self) -> Blocks<'_> {
        Blocks {
            signal: self.signal.as_ref(),
            complement: self.complement.as_ref(),
        }
    }

    /// Population W2 between the marginal along the unit vector `u` and Φ.
    pub fn population_w2(&self, u: &[f64], oracle: &PopulationOracle) -> Result<f64> {
        if u.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: u.len(),
            });
        }
        let u = DVector::from_column_slice(u);
        let mut coeffs: Vec<f64> = self.basis_u.to_matrix().tr_mul(&u).iter().copied().collect();
        if self.complement.is_some() {
            coeffs.push(self.basis.column(self.k()).dot(&u));
        }
        let total = u.norm_squared();
        // round-off residue would otherwise push exact routes onto Monte Carlo
        for c in &mut coeffs {
            if *c * *c <= 1e-24 * total {
                *c = 0.0;
            }
        }
        let rest = total - coeffs.iter().map(|c| c * c).sum::<f64>();
        let gauss_sd = if rest > 1e-12 * total { rest.sqrt() } else { 0.0 };
        self.blocks().population_w2(&coeffs, gauss_sd, oracle)
    }

    pub fn basis_u(&self) -> &Frame {
        &self.basis_u
    }

    pub fn basis_w(&self) -> &Frame {
        &self.basis_w
    }

    /// `[U | W]`, a `p × p` orthogonal matrix.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal moved into `Q`.
pub fn random_orthogonal(p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
