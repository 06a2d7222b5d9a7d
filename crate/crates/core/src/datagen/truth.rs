//! Ground-truth separation constants of a planted model.
//!
//! Only directions inside the signal subspace are searched, plus the
//! perturbed complement axis if there is one. For a unit `u = c·a + s·w`
//! with `a` in the searched span and `w` in its Gaussian complement,
//! coupling the shared Gaussian part gives `W2(u♯X, Φ) ≤ c·W2(a♯X, Φ)`, so
//! the largest distance is attained in the searched span.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::model::PlantedModel;
use super::population::{Blocks, OracleRoute, PopulationOracle};
use crate::error::{Error, Result};
use crate::transport::{w2_empirical_to_std_normal, SortedProjection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthMethod {
    /// Deterministic net over the sphere of `U` (k ≤ 3), refined locally.
    Net,
    /// `directions` random starting points, each refined locally. The
    /// result bounds `d_min_u` from above and `d_psi` from below.
    RandomSearch { directions: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthConfig {
    pub oracle: PopulationOracle,
    pub method: TruthMethod,
    /// Angular spacing of the net in degrees.
    pub resolution_deg: f64,
}

impl Default for TruthConfig {
    fn default() -> Self {
        TruthConfig {
            oracle: PopulationOracle::default(),
            method: TruthMethod::Net,
            resolution_deg: 0.5,
        }
    }
}

/// Population separation constants. An infinite `snr` marks
/// `d_psi = d_min_u`, where the ratio's denominator vanishes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub d_psi: f64,
    pub d_min_u: f64,
    pub d_w: f64,
    pub snr: f64,
    /// Lower bound on distances in `U` (here `d_min_u`).
    pub kappa1: f64,
    /// Upper bound on distances in `W` (here `d_w`).
    pub kappa2: f64,
    /// Coefficients of a maximizing direction in `basis_u`, followed by the
    /// perturbed complement axis when there is one; empty for a null model.
    pub argmax_u: Vec<f64>,
    pub route: Option<OracleRoute>,
}

/// `sqrt((d_psi² − d_w²) / (d_psi² − d_min_u²))`, infinite when the
/// denominator is at most `1e-12`.
pub fn snr(d_psi: f64, d_min_u: f64, d_w: f64) -> f64 {
    let den = d_psi * d_psi - d_min_u * d_min_u;
    if den <= 1e-12 {
        f64::INFINITY
    } else {
        ((d_psi * d_psi - d_w * d_w).max(0.0) / den).sqrt()
    }
}

pub fn ground_truth_metrics(model: &PlantedModel, cfg: &TruthConfig) -> Result<GroundTruth> {
    let blocks = model.blocks();
    if blocks.dim() == 0 {
        return Ok(GroundTruth::default());
    }
    if !(cfg.resolution_deg > 0.0 && cfg.resolution_deg <= 45.0) {
        return Err(Error::config("resolution_deg must lie in (0, 45]"));
    }
    // The perturbed axis is the worst direction of W by the same coupling
    // argument, so d_w is its own distance.
    let d_w = match model.complement() {
        Some(c) => c.population_w2(&[1.0], 0.0, &cfg.oracle)?,
        None => 0.0,
    };
    let signal = match model.signal() {
        Some(law) => {
            let signal_only = Blocks {
                signal: Some(law),
                complement: None,
            };
            let f = PopulationDistance::new(signal_only, &cfg.oracle)?;
            Some((extrema(&f, cfg)?, f.route))
        }
        None => None,
    };
    let d_min_u = signal.as_ref().map_or(0.0, |((min, _), _)| min.0);
    let ((d_psi, argmax), route) = match (signal, model.complement()) {
        (Some(((_, max), route)), None) => (max, route),
        _ => {
            let f = PopulationDistance::new(blocks, &cfg.oracle)?;
            (extrema(&f, cfg)?.1, f.route)
        }
    };
    if model.k() > 0 && d_min_u <= d_w {
        log::warn!("planted model is not separated: d_min_u = {d_min_u} <= d_w = {d_w}");
    }
    Ok(GroundTruth {
        d_psi,
        d_min_u,
        d_w,
        snr: snr(d_psi, d_min_u, d_w),
        kappa1: d_min_u,
        kappa2: d_w,
        argmax_u: argmax.iter().copied().collect(),
        route: Some(route),
    })
}

/// Smallest and largest population distance over the unit sphere of the
/// blocks' coordinates.
fn extrema(f: &PopulationDistance, cfg: &TruthConfig) -> Result<(Extremum, Extremum)> {
    let dim = f.blocks.dim();
    let res = cfg.resolution_deg.to_radians();
    Ok(match (cfg.method, dim) {
        (_, 1) => {
            let a = DVector::from_element(1, 1.0);
            let d = f.eval(&a)?;
            ((d, a.clone()), (d, a))
        }
        (TruthMethod::Net, 2) => circle_search(f, res)?,
        (TruthMethod::Net, 3) => sphere_search(f, hemisphere_net(res), res)?,
        (TruthMethod::Net, _) => {
            return Err(Error::Unsupported(format!(
                "net ground truth searches at most 3 dimensions, got {dim}; use random_search"
            )))
        }
        (TruthMethod::RandomSearch { directions }, _) => {
            if directions == 0 {
                return Err(Error::config("random_search needs at least one direction"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.oracle.seed ^ 0xA11CE);
            let starts = (0..directions)
                .map(|_| {
                    let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let n = v.norm();
                    v / n
                })
                .collect();
            sphere_search(f, starts, res)?
        }
    })
}

/// Population distance along a unit coefficient vector. Monte Carlo laws
/// share one sample across directions so the search sees a consistent
/// function.
struct PopulationDistance<'a> {
    blocks: Blocks<'a>,
    oracle: &'a PopulationOracle,
    route: OracleRoute,
    sample: Option<DMatrix<f64>>,
}

impl<'a> PopulationDistance<'a> {
    fn new(blocks: Blocks<'a>, oracle: &'a PopulationOracle) -> Result<Self> {
        let dim = blocks.dim();
        let generic = vec![1.0 / (dim as f64).sqrt(); dim];
        let route = blocks.route(&generic, 0.0);
        let sample = if route == OracleRoute::MonteCarlo {
            if oracle.mc_samples == 0 {
                return Err(Error::config("mc_samples must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(oracle.seed);
            let sampler = blocks.sampler();
            let mut s = DMatrix::zeros(dim, oracle.mc_samples);
            for mut col in s.column_iter_mut() {
                sampler.sample_into(&mut rng, col.as_mut_slice());
            }
            Some(s)
        } else {
            None
        };
        Ok(PopulationDistance {
            blocks,
            oracle,
            route,
            sample,
        })
    }

    fn eval(&self, a: &DVector<f64>) -> Result<f64> {
        match &self.sample {
            Some(s) => {
                let x: Vec<f64> = s.tr_mul(a).iter().copied().collect();
                Ok(w2_empirical_to_std_normal(&SortedProjection::from_unsorted(x)?).distance)
            }
            None => self.blocks.population_w2(a.as_slice(), 0.0, self.oracle),
        }
    }
}

type Extremum = (f64, DVector<f64>);

fn circle_point(t: f64) -> DVector<f64> {
    DVector::from_vec(vec![t.cos(), t.sin()])
}

/// Angles in `[0, π)` cover every direction up to sign.
fn circle_search(f: &PopulationDistance, res: f64) -> Result<(Extremum, Extremum)> {
    let m = (std::f64::consts::PI / res).ceil() as usize;
    let h = std::f64::consts::PI / m as f64;
    let values = (0..m)
        .map(|i| f.eval(&circle_point(i as f64 * h)))
        .collect::<Result<Vec<_>>>()?;
    let arg = |better: fn(f64, f64) -> bool| {
        (1..m).fold(0, |b, i| if better(values[i], values[b]) { i } else { b })
    };
    let refine = |i: usize, sign: f64| -> Result<Extremum> {
        let centre = i as f64 * h;
        let t = golden_min(|t| Ok(sign * f.eval(&circle_point(t))?), centre - h, centre + h)?;
        let (ft, fc) = (f.eval(&circle_point(t))?, values[i]);
        // Keep the grid value if refinement wandered off a non-unimodal bracket.
        Ok(if sign * ft <= sign * fc {
            (ft, circle_point(t))
        } else {
            (fc, circle_point(centre))
        })
    };
    Ok((refine(arg(|a, b| a < b), 1.0)?, refine(arg(|a, b| a > b), -1.0)?))
}

fn golden_min(mut g: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    while b - a > 1e-9 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Points of the upper hemisphere of `S²` on latitude rings spaced `res`.
fn hemisphere_net(res: f64) -> Vec<DVector<f64>> {
    let rings = (std::f64::consts::FRAC_PI_2 / res).ceil() as usize;
    let mut pts = vec![DVector::from_vec(vec![0.0, 0.0, 1.0])];
    for r in 1..=rings {
        let theta = r as f64 * std::f64::consts::FRAC_PI_2 / rings as f64;
        let count = ((2.0 * std::f64::consts::PI * theta.sin() / res).ceil() as usize).max(1);
        for j in 0..count {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            pts.push(DVector::from_vec(vec![
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ]));
        }
    }
    pts
}

/// Best and worst net points, each polished by a pattern search.
fn sphere_search(f: &PopulationDistance, starts: Vec<DVector<f64>>, res: f64) -> Result<(Extremum, Extremum)> {
    let values = starts.iter().map(|a| f.eval(a)).collect::<Result<Vec<_>>>()?;
    let pick = |better: fn(f64, f64) -> bool| {
        (1..values.len()).fold(0, |b, i| if better(values[i], values[b]) { i } else { b })
    };
    let lo = pick(|a, b| a < b);
    let hi = pick(|a, b| a > b);
    Ok((
        pattern_search(f, (values[lo], starts[lo].clone()), 1.0, res)?,
        pattern_search(f, (values[hi], starts[hi].clone()), -1.0, res)?,
    ))
}

/// Compass search on the sphere minimizing `sign · f`.
fn pattern_search(f: &PopulationDistance, start: Extremum, sign: f64, res: f64) -> Result<Extremum> {
    let (mut best, mut a) = start;
    let mut step = res;
    while step > 1e-8 {
        let mut improved = false;
        for t in tangent_basis(&a).column_iter() {
            for s in [step, -step] {
                let mut b = &a + t * s;
                b /= b.norm();
                let v = f.eval(&b)?;
                if sign * v < sign * best {
                    best = v;
                    a = b;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best, a))
}

fn tangent_basis(a: &DVector<f64>) -> DMatrix<f64> {
    let k = a.len();
    let mut m = DMatrix::identity(k, k);
    m.set_column(0, a);
    let q = m.qr().q();
    q.columns(1, k - 1).into_owned()
}
