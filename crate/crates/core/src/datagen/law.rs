use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Parametric description of the signal law on `R^k`, before
/// standardization.
///
/// `two_point`, `uniform` and `custom_quantile` describe a one-dimensional
/// law used independently for each of the `k` coordinates.
/// `gaussian_mixture` is a genuine `k`-dimensional mixture of isotropic
/// Gaussian components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    /// Bernoulli(`prob`) on `{0, 1}`; `prob = 0.5` gives Rademacher `±1`.
    TwoPoint {
        #[serde(default = "half")]
        prob: f64,
    },
    GaussianMixture {
        means: Vec<Vec<f64>>,
        weights: Vec<f64>,
        /// Per-component isotropic standard deviations.
        sds: Vec<f64>,
    },
    Uniform,
    /// Quantile function tabulated at `t = j/(m−1)`, `j = 0..m`, linearly
    /// interpolated; must be strictly increasing.
    CustomQuantile { values: Vec<f64> },
}

fn half() -> f64 {
    0.5
}

impl SignalKind {
    pub fn rademacher() -> Self {
        SignalKind::TwoPoint { prob: 0.5 }
    }

    /// A single standard Gaussian component in one dimension.
    pub fn standard_normal() -> Self {
        SignalKind::GaussianMixture {
            means: vec![vec![0.0]],
            weights: vec![1.0],
            sds: vec![1.0],
        }
    }
}

/// A standardized one-dimensional law.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Scalar {
    TwoPoint { lo: f64, hi: f64, prob: f64 },
    Uniform { half_width: f64 },
    Quantile { values: Vec<f64> },
}

impl Scalar {
    fn from_kind(kind: &SignalKind) -> Result<Self> {
        match kind {
            SignalKind::TwoPoint { prob } => {
                let q = *prob;
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::config(format!(
                        "two_point probability {q} gives a point mass, which cannot be standardized"
                    )));
                }
                let sd = (q * (1.0 - q)).sqrt();
                Ok(Scalar::TwoPoint {
                    lo: -q / sd,
                    hi: (1.0 - q) / sd,
                    prob: q,
                })
            }
            SignalKind::Uniform => Ok(Scalar::Uniform {
                half_width: 3f64.sqrt(),
            }),
            SignalKind::CustomQuantile { values } => {
                if values.len() < 2 {
                    return Err(Error::config("custom_quantile needs at least two values"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("custom_quantile values must be finite"));
                }
                if values.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::config("custom_quantile values must be strictly increasing"));
                }
                // Exact moments of the piecewise-linear quantile function.
                let h = 1.0 / (values.len() - 1) as f64;
                let (m1, m2) = values.windows(2).fold((0.0, 0.0), |(m1, m2), w| {
                    let (a, b) = (w[0], w[1]);
                    (m1 + h * (a + b) / 2.0, m2 + h * (a * a + a * b + b * b) / 3.0)
                });
                let var = m2 - m1 * m1;
                if !(var > DEGENERATE_VARIANCE) {
                    return Err(Error::config("custom_quantile law has (near) zero variance"));
                }
                let sd = var.sqrt();
                Ok(Scalar::Quantile {
                    values: values.iter().map(|v| (v - m1) / sd).collect(),
                })
            }
            SignalKind::GaussianMixture { .. } => unreachable!("mixtures are not product laws"),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Scalar::TwoPoint { lo, hi, prob } => {
                if rng.random::<f64>() < *prob {
                    *hi
                } else {
                    *lo
                }
            }
            Scalar::Uniform { half_width } => rng.random_range(-half_width..*half_width),
            Scalar::Quantile { .. } => self.quantile(rng.random::<f64>()),
        }
    }

    /// Quantile function on `[0, 1]`.
    pub(crate) fn quantile(&self, t: f64) -> f64 {
        match self {
            Scalar::TwoPoint { lo, hi, prob } => {
                if t <= 1.0 - prob {
                    *lo
                } else {
                    *hi
                }
            }
            Scalar::Uniform { half_width } => half_width * (2.0 * t - 1.0),
            Scalar::Quantile { values } => {
                let pos = t.clamp(0.0, 1.0) * (values.len() - 1) as f64;
                let j = (pos.floor() as usize).min(values.len() - 2);
                let frac = pos - j as f64;
                values[j] + frac * (values[j + 1] - values[j])
            }
        }
    }
}

/// Standardized Gaussian mixture on `R^k`: component `j` is
/// `N(means[j], sds[j]² T²)` with `T` the symmetric whitening transform.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mixture {
    pub means: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub sds: Vec<f64>,
    pub transform: DMatrix<f64>,
}

impl Mixture {
    fn new(means: &[Vec<f64>], weights: &[f64], sds: &[f64], k: usize) -> Result<Self> {
        let c = means.len();
        if c == 0 {
            return Err(Error::config("gaussian_mixture needs at least one component"));
        }
        if weights.len() != c || sds.len() != c {
            return Err(Error::config(format!(
                "gaussian_mixture has {c} means but {} weights and {} sds",
                weights.len(),
                sds.len()
            )));
        }
        if let Some(m) = means.iter().find(|m| m.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: m.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::config("mixture weights must be positive"));
        }
        if sds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config("mixture component sds must be positive"));
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::config("mixture means must be finite"));
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let raw: Vec<DVector<f64>> = means.iter().map(|m| DVector::from_column_slice(m)).collect();
        let mean = raw
            .iter()
            .zip(&weights)
            .fold(DVector::zeros(k), |acc, (m, w)| acc + m * *w);
        let mut cov = DMatrix::<f64>::zeros(k, k);
        for ((m, w), s) in raw.iter().zip(&weights).zip(sds) {
            let d = m - &mean;
            cov += (&d * d.transpose() + DMatrix::identity(k, k) * (s * s)) * *w;
        }
        let eig = cov.symmetric_eigen();
        let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
        let transform = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
        Ok(Mixture {
            means: raw.iter().map(|m| &transform * (m - &mean)).collect(),
            weights,
            sds: sds.to_vec(),
            transform,
        })
    }

    fn sample_into<R: Rng>(&self, rng: &mut R, picker: &WeightedIndex<f64>, out: &mut [f64]) {
        let j = picker.sample(rng);
        let k = out.len();
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = &self.means[j] + &self.transform * z * self.sds[j];
        out.copy_from_slice(s.as_slice());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Standardized {
    Product(Scalar),
    Mixture(Mixture),
}

/// A standardized (mean zero, identity covariance) signal law on `R^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalLaw {
    kind: SignalKind,
    k: usize,
    pub(crate) standardized: Standardized,
}

impl SignalLaw {
    pub fn new(kind: SignalKind, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("a signal law needs k >= 1"));
        }
        let standardized = match &kind {
            SignalKind::GaussianMixture { means, weights, sds } => {
                Standardized::Mixture(Mixture::new(means, weights, sds, k)?)
            }
            other => Standardized::Product(Scalar::from_kind(other)?),
        };
        Ok(SignalLaw {
            kind,
            k,
            standardized,
        })
    }

    pub fn kind(&self) -> &SignalKind {
        &self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// A reusable sampler; draws `k` coordinates per call.
    pub fn sampler(&self) -> SignalSampler<'_> {
        let picker = match &self.standardized {
            Standardized::Mixture(m) => {
                Some(WeightedIndex::new(&m.weights).expect("weights validated at construction"))
            }
            Standardized::Product(_) => None,
        };
        SignalSampler { law: self, picker }
    }
}

pub struct SignalSampler<'a> {
    law: &'a SignalLaw,
    picker: Option<WeightedIndex<f64>>,
}

impl SignalSampler<'_> {
    pub fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.law.k);
        match &self.law.standardized {
            Standardized::Product(s) => out.iter_mut().for_each(|o| *o = s.sample(rng)),
            Standardized::Mixture(m) => {
                m.sample_into(rng, self.picker.as_ref().expect("mixture picker"), out)
            }
        }
    }
}
