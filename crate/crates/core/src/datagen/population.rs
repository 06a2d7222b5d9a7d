//! Population W2 distance between a one-dimensional marginal of a planted
//! model and Φ.
//!
//! The marginal along a unit vector is `a·s + β g` with `s` the signal,
//! `a` its coefficients in the signal basis and `g` an independent standard
//! Gaussian. Depending on the signal law this is a finite set of atoms
//! (exact partial-moment integration), a Gaussian mixture or a scaled
//! tabulated law (quadrature of the quantile mismatch in `z = Φ⁻¹(t)`), or
//! otherwise a Monte Carlo estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::law::{Scalar, SignalLaw, SignalSampler, Standardized};
use crate::error::{Error, Result};
use crate::gaussmath::{
    quantile_partial_moment_1, quantile_partial_moment_2, std_normal_cdf, std_normal_pdf,
    std_normal_sf, Interval01,
};
use crate::transport::{w2_empirical_to_std_normal, SortedProjection};

const QUAD_HALF_WIDTH: f64 = 10.0;
const MAX_ATOM_COORDS: usize = 16;

/// Resolution of the population-distance oracles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationOracle {
    /// Trapezoid nodes over `z ∈ [−10, 10]` for quantile quadrature.
    pub quad_nodes: usize,
    /// Sample size for the Monte Carlo fallback.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for PopulationOracle {
    fn default() -> Self {
        PopulationOracle {
            quad_nodes: 4001,
            mc_samples: 1_000_000,
            seed: 0x5eed,
        }
    }
}

impl PopulationOracle {
    pub fn scaled(&self, factor: usize) -> Self {
        PopulationOracle {
            quad_nodes: (self.quad_nodes - 1) * factor + 1,
            mc_samples: self.mc_samples * factor,
            seed: self.seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.quad_nodes < 3 || self.mc_samples == 0 {
            return Err(Error::config("population oracle needs >= 3 nodes and >= 1 sample"));
        }
        Ok(())
    }
}

/// How a population distance was (or would be) computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleRoute {
    Exact,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mixture1D {
    means: Vec<f64>,
    sds: Vec<f64>,
    weights: Vec<f64>,
}

impl Mixture1D {
    fn cdf(&self, x: f64) -> f64 {
        self.terms(x, |z| std_normal_cdf(z))
    }

    fn sf(&self, x: f64) -> f64 {
        self.terms(x, |z| std_normal_sf(z))
    }

    fn pdf(&self, x: f64) -> f64 {
        self.means
            .iter()
            .zip(&self.sds)
            .zip(&self.weights)
            .map(|((m, s), w)| w * std_normal_pdf((x - m) / s) / s)
            .sum()
    }

    fn terms(&self, x: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.means
            .iter()
            .zip(&self.sds)
            .zip(&self.weights)
            .map(|((m, s), w)| w * f((x - m) / s))
            .sum()
    }

    /// Solves `F(x) = Φ(z)`, working with the upper tail for `z > 0`.
    fn quantile_at(&self, z: f64, guess: f64) -> f64 {
        let (mut lo, mut hi) = self
            .means
            .iter()
            .zip(&self.sds)
            .map(|(m, s)| m + s * z)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if hi - lo <= 1e-15 * (1.0 + lo.abs()) {
            return lo;
        }
        let g = |x: f64| {
            if z <= 0.0 {
                self.cdf(x) - std_normal_cdf(z)
            } else {
                std_normal_sf(z) - self.sf(x)
            }
        };
        let mut x = guess.clamp(lo, hi);
        for _ in 0..200 {
            let gx = g(x);
            if gx == 0.0 {
                return x;
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.pdf(x);
            let newton = x - gx / d;
            let next = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 1e-14 * (1.0 + x.abs()) || hi - lo <= 1e-14 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// The law of `a·s + β g`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ProjectedLaw {
    Atoms(Vec<(f64, f64)>),
    Gaussian { mean: f64, sd: f64 },
    Mixture(Mixture1D),
    Scaled { scale: f64, law: Scalar },
    Sampled,
}

const MAX_CONVOLVED_ATOMS: usize = 1 << 17;

fn point_at_zero() -> ProjectedLaw {
    ProjectedLaw::Atoms(vec![(0.0, 1.0)])
}

impl ProjectedLaw {
    fn gaussian(sd: f64) -> Self {
        if sd > 0.0 {
            ProjectedLaw::Gaussian { mean: 0.0, sd }
        } else {
            point_at_zero()
        }
    }

    fn is_point_at_zero(&self) -> bool {
        matches!(self, ProjectedLaw::Atoms(a) if a.len() == 1 && a[0].0 == 0.0)
    }

    /// Components as `(mean, sd, weight)`; atoms have `sd = 0`.
    fn components(&self) -> Option<Vec<(f64, f64, f64)>> {
        match self {
            ProjectedLaw::Atoms(a) => Some(a.iter().map(|&(x, p)| (x, 0.0, p)).collect()),
            ProjectedLaw::Gaussian { mean, sd } => Some(vec![(*mean, *sd, 1.0)]),
            ProjectedLaw::Mixture(m) => Some(
                m.means
                    .iter()
                    .zip(&m.sds)
                    .zip(&m.weights)
                    .map(|((a, b), c)| (*a, *b, *c))
                    .collect(),
            ),
            ProjectedLaw::Scaled { .. } | ProjectedLaw::Sampled => None,
        }
    }

    /// Law of the sum of independent variables with laws `self` and `other`.
    pub(crate) fn convolve(self, other: ProjectedLaw) -> ProjectedLaw {
        if other.is_point_at_zero() {
            return self;
        }
        if self.is_point_at_zero() {
            return other;
        }
        let (Some(a), Some(b)) = (self.components(), other.components()) else {
            return ProjectedLaw::Sampled;
        };
        if a.len() * b.len() > MAX_CONVOLVED_ATOMS {
            return ProjectedLaw::Sampled;
        }
        let sum: Vec<(f64, f64, f64)> = a
            .iter()
            .flat_map(|&(m1, s1, w1)| b.iter().map(move |&(m2, s2, w2)| (m1 + m2, s1.hypot(s2), w1 * w2)))
            .collect();
        if sum.iter().all(|c| c.1 == 0.0) {
            ProjectedLaw::Atoms(merge_atoms(sum.into_iter().map(|c| (c.0, c.2)).collect()))
        } else if sum.iter().all(|c| c.1 > 0.0) {
            collapse_mixture(Mixture1D {
                means: sum.iter().map(|c| c.0).collect(),
                sds: sum.iter().map(|c| c.1).collect(),
                weights: sum.iter().map(|c| c.2).collect(),
            })
        } else {
            // atoms mixed with Gaussian components have no quantile routine
            ProjectedLaw::Sampled
        }
    }

    fn route(&self) -> OracleRoute {
        match self {
            ProjectedLaw::Atoms(_) | ProjectedLaw::Gaussian { .. } => OracleRoute::Exact,
            ProjectedLaw::Mixture(_) | ProjectedLaw::Scaled { .. } => OracleRoute::Quadrature,
            ProjectedLaw::Sampled => OracleRoute::MonteCarlo,
        }
    }

    /// Squared W2 to Φ, or `None` when only sampling is available.
    fn w2_squared(&self, oracle: &PopulationOracle) -> Option<f64> {
        Some(match self {
            ProjectedLaw::Atoms(atoms) => atoms_w2_squared(atoms),
            ProjectedLaw::Gaussian { mean, sd } => mean * mean + (sd - 1.0) * (sd - 1.0),
            ProjectedLaw::Mixture(m) => {
                let mut guess = 0.0;
                quadrature(oracle.quad_nodes, |z| {
                    guess = m.quantile_at(z, guess);
                    guess
                })
            }
            ProjectedLaw::Scaled { scale, law } => quadrature(oracle.quad_nodes, |z| {
                if *scale > 0.0 {
                    scale * law.quantile(lower_level(z))
                } else {
                    scale * law.quantile(upper_level(z))
                }
            }),
            ProjectedLaw::Sampled => return None,
        })
    }
}

impl SignalLaw {
    pub(crate) fn projected(&self, coeffs: &[f64], gauss_sd: f64) -> ProjectedLaw {
        self.projected_signal(coeffs).convolve(ProjectedLaw::gaussian(gauss_sd))
    }

    /// Law of `a·s` alone.
    fn projected_signal(&self, coeffs: &[f64]) -> ProjectedLaw {
        debug_assert_eq!(coeffs.len(), self.k());
        match &self.standardized {
            Standardized::Mixture(m) => {
                let a = nalgebra::DVector::from_column_slice(coeffs);
                let spread = (&m.transform * &a).norm_squared().sqrt();
                collapse_mixture(Mixture1D {
                    means: m.means.iter().map(|mu| mu.dot(&a)).collect(),
                    sds: m.sds.iter().map(|s| s * spread).collect(),
                    weights: m.weights.clone(),
                })
            }
            Standardized::Product(scalar) => {
                let active: Vec<f64> = coeffs.iter().copied().filter(|c| *c != 0.0).collect();
                match scalar {
                    _ if active.is_empty() => point_at_zero(),
                    Scalar::TwoPoint { lo, hi, prob } if active.len() <= MAX_ATOM_COORDS => {
                        ProjectedLaw::Atoms(product_atoms(&active, *lo, *hi, *prob))
                    }
                    _ if active.len() == 1 => ProjectedLaw::Scaled {
                        scale: active[0],
                        law: scalar.clone(),
                    },
                    _ => ProjectedLaw::Sampled,
                }
            }
        }
    }

    pub fn oracle_route(&self, coeffs: &[f64], gauss_sd: f64) -> OracleRoute {
        self.projected(coeffs, gauss_sd).route()
    }

    /// W2 between the law of `a·s + β g` and Φ, where `a = coeffs` and
    /// `β = gauss_sd`.
    pub fn population_w2(&self, coeffs: &[f64], gauss_sd: f64, oracle: &PopulationOracle) -> Result<f64> {
        if coeffs.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: coeffs.len(),
            });
        }
        Blocks {
            signal: Some(self),
            complement: None,
        }
        .population_w2(coeffs, gauss_sd, oracle)
    }
}

/// The independent non-Gaussian blocks of a planted model: the signal on
/// `U` and an optional one-dimensional law on the first complement axis.
/// Coefficient vectors list the signal coordinates first.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Blocks<'a> {
    pub signal: Option<&'a SignalLaw>,
    pub complement: Option<&'a SignalLaw>,
}

impl Blocks<'_> {
    pub(crate) fn dim(&self) -> usize {
        self.signal.map_or(0, SignalLaw::k) + usize::from(self.complement.is_some())
    }

    pub(crate) fn projected(&self, coeffs: &[f64], gauss_sd: f64) -> ProjectedLaw {
        let k = self.signal.map_or(0, SignalLaw::k);
        let mut law = point_at_zero();
        if let Some(s) = self.signal {
            law = law.convolve(s.projected_signal(&coeffs[..k]));
        }
        if let Some(c) = self.complement {
            law = law.convolve(c.projected_signal(&coeffs[k..k + 1]));
        }
        law.convolve(ProjectedLaw::gaussian(gauss_sd))
    }

    pub(crate) fn route(&self, coeffs: &[f64], gauss_sd: f64) -> OracleRoute {
        self.projected(coeffs, gauss_sd).route()
    }

    pub(crate) fn sampler(&self) -> BlocksSampler<'_> {
        BlocksSampler {
            k: self.signal.map_or(0, SignalLaw::k),
            signal: self.signal.map(SignalLaw::sampler),
            complement: self.complement.map(SignalLaw::sampler),
        }
    }

    pub(crate) fn population_w2(&self, coeffs: &[f64], gauss_sd: f64, oracle: &PopulationOracle) -> Result<f64> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: coeffs.len(),
            });
        }
        oracle.validate()?;
        if let Some(sq) = self.projected(coeffs, gauss_sd).w2_squared(oracle) {
            return Ok(sq.max(0.0).sqrt());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(oracle.seed);
        let sampler = self.sampler();
        let mut s = vec![0.0; self.dim()];
        let values: Vec<f64> = (0..oracle.mc_samples)
            .map(|_| {
                sampler.sample_into(&mut rng, &mut s);
                let g: f64 = rng.sample(StandardNormal);
                s.iter().zip(coeffs).map(|(x, a)| x * a).sum::<f64>() + gauss_sd * g
            })
            .collect();
        Ok(w2_empirical_to_std_normal(&SortedProjection::from_unsorted(values)?).distance)
    }
}

pub(crate) struct BlocksSampler<'a> {
    k: usize,
    signal: Option<SignalSampler<'a>>,
    complement: Option<SignalSampler<'a>>,
}

impl BlocksSampler<'_> {
    /// Fills `out` (length [`Blocks::dim`]) with one joint draw.
    pub(crate) fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        if let Some(s) = &self.signal {
            s.sample_into(rng, &mut out[..self.k]);
        }
        if let Some(c) = &self.complement {
            c.sample_into(rng, &mut out[self.k..self.k + 1]);
        }
    }
}

fn collapse_mixture(m: Mixture1D) -> ProjectedLaw {
    if m.means.len() == 1 {
        ProjectedLaw::Gaussian {
            mean: m.means[0],
            sd: m.sds[0],
        }
    } else {
        ProjectedLaw::Mixture(m)
    }
}

// Φ(z), and the level t with 1 − t = Φ(−z) for the mirrored lookup.
fn lower_level(z: f64) -> f64 {
    if z <= 0.0 {
        std_normal_cdf(z)
    } else {
        1.0 - std_normal_sf(z)
    }
}

fn upper_level(z: f64) -> f64 {
    1.0 - lower_level(z)
}

/// Atoms of `Σ aᵢ sᵢ` with `sᵢ` i.i.d. two-point, merged and sorted.
fn product_atoms(coeffs: &[f64], lo: f64, hi: f64, prob: f64) -> Vec<(f64, f64)> {
    let c = coeffs.len();
    let atoms: Vec<(f64, f64)> = (0..1usize << c)
        .map(|mask| {
            (0..c).fold((0.0, 1.0), |(v, p), i| {
                if mask >> i & 1 == 1 {
                    (v + coeffs[i] * hi, p * prob)
                } else {
                    (v + coeffs[i] * lo, p * (1.0 - prob))
                }
            })
        })
        .collect();
    merge_atoms(atoms)
}

/// Sorts atoms and merges values equal up to round-off.
fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match merged.last_mut() {
            Some(last) if (last.0 - v).abs() <= 1e-13 * (1.0 + v.abs()) => last.1 += p,
            _ => merged.push((v, p)),
        }
    }
    merged
}

/// Exact squared W2 between a finite discrete law and Φ.
pub(crate) fn atoms_w2_squared(atoms: &[(f64, f64)]) -> f64 {
    let mut acc = 0.0;
    let mut lo = 0.0;
    for (i, &(x, p)) in atoms.iter().enumerate() {
        let hi = if i + 1 == atoms.len() { 1.0 } else { (lo + p).min(1.0) };
        let bin = Interval01::new(lo, hi).expect("cumulative probabilities stay in [0, 1]");
        acc += x * x * (hi - lo) - 2.0 * x * quantile_partial_moment_1(bin) + quantile_partial_moment_2(bin);
        lo = hi;
    }
    acc
}

/// `∫ (Q(Φ(z)) − z)² φ(z) dz` by the trapezoid rule on `[−10, 10]`.
/// `quantile` is called with increasing `z`.
fn quadrature(nodes: usize, mut quantile: impl FnMut(f64) -> f64) -> f64 {
    let h = 2.0 * QUAD_HALF_WIDTH / (nodes - 1) as f64;
    (0..nodes)
        .map(|i| {
            let z = -QUAD_HALF_WIDTH + i as f64 * h;
            let d = quantile(z) - z;
            let w = if i == 0 || i + 1 == nodes { 0.5 } else { 1.0 };
            w * d * d * std_normal_pdf(z)
        })
        .sum::<f64>()
        * h
}
