use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{objective, Evaluator};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::frame::{Direction, Frame};

/// Upper bound on the number of points [`net_maximizer_oracle`] will visit.
pub const NET_MAX_POINTS: usize = 10_000_000;

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
const MAX_STEP_GROWTH: f64 = 1e3;
const MOMENT_ITERS: usize = 100;
const MOMENT_TOL: f64 = 1e-10;
const STALL_WINDOW: usize = 10;

/// Settings for the multi-start projected-gradient ascent.
///
/// `restarts` starts are drawn uniformly on the sphere. `moment_starts`
/// further starts are first pushed through a kurtosis fixed-point iteration;
/// at moderate `p` the W2 landscape is too flat away from the signal for
/// uniform starts alone to reach it.
///
/// An ascent stops when the tangent gradient norm drops below `grad_tol`,
/// when no Armijo step exists, or when the squared objective gains less
/// than `f_tol` over 10 accepted steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub moment_starts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub step_shrink: f64,
    pub grad_tol: f64,
    pub f_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 4,
            moment_starts: 16,
            max_iters: 500,
            step_init: 1.0,
            step_shrink: 0.5,
            grad_tol: 1e-7,
            f_tol: 1e-9,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts + self.moment_starts == 0 {
            return Err(Error::config("optimizer needs at least one start"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return Err(Error::config("step_init must be positive"));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::config("step_shrink must lie in (0, 1)"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::config("grad_tol must be positive"));
        }
        if !(self.f_tol >= 0.0 && self.f_tol.is_finite()) {
            return Err(Error::config("f_tol must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Uniform,
    Moment,
}

/// What happened in one restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub kind: StartKind,
    /// Squared objective after each accepted step, starting point first.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final (unsquared) objective value.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct SphereOptimum {
    pub direction: Direction,
    pub value: f64,
    pub restarts: Vec<RestartTrace>,
}

/// Maximizes the objective over unit vectors orthogonal to `constraints`.
pub fn maximize_on_sphere(
    data: &DataMatrix,
    constraints: &Frame,
    config: &OptimizerConfig,
) -> Result<(Direction, f64)> {
    let opt = maximize_on_sphere_traced(data, constraints, config)?;
    Ok((opt.direction, opt.value))
}

/// As [`maximize_on_sphere`], keeping the per-restart ascent traces.
pub fn maximize_on_sphere_traced(
    data: &DataMatrix,
    constraints: &Frame,
    config: &OptimizerConfig,
) -> Result<SphereOptimum> {
    config.validate()?;
    let p = data.p();
    if constraints.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: constraints.p(),
        });
    }
    if constraints.len() >= p {
        return Err(Error::Infeasible(p));
    }

    // u = B w with B an orthonormal basis of the feasible subspace.
    let basis = constraints.complement_basis();
    let reduced = if constraints.is_empty() {
        data.matrix().clone()
    } else {
        data.matrix() * &basis
    };
    let ev = Evaluator::new(reduced);
    let dim = ev.dim();

    let starts = start_points(dim, config);
    let traces: Vec<(DVector<f64>, RestartTrace)> = if dim == 1 {
        let w = DVector::from_element(1, 1.0);
        let f = ev.squared(&w);
        vec![(
            w,
            RestartTrace {
                kind: StartKind::Uniform,
                history: vec![f],
                iterations: 0,
                converged: true,
                value: f.sqrt(),
            },
        )]
    } else {
        starts
            .into_par_iter()
            .map(|(kind, w0)| {
                let w0 = match kind {
                    StartKind::Moment => moment_refine(&ev, w0),
                    StartKind::Uniform => w0,
                };
                ascend(&ev, w0, kind, config)
            })
            .collect()
    };

    // Deterministic reduction: first restart attaining the maximum wins.
    let (best_w, _) = traces
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |acc, (i, (_, t))| match acc {
            Some((_, v)) if v >= t.value => acc,
            _ => Some((i, t.value)),
        })
        .map(|(i, v)| (traces[i].0.clone(), v))
        .expect("at least one start");

    let mut u = &basis * best_w;
    // Re-orthogonalize against the constraints to remove round-off.
    for c in constraints.directions() {
        let proj = u.dot(c.vector());
        u -= c.vector() * proj;
    }
    let direction = Direction::from_dvector(u)?.canonical_sign();
    let value = objective(data, &direction)?;
    Ok(SphereOptimum {
        direction,
        value,
        restarts: traces.into_iter().map(|(_, t)| t).collect(),
    })
}

fn start_points(dim: usize, config: &OptimizerConfig) -> Vec<(StartKind, DVector<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |kind| (kind, random_unit(&mut rng, dim));
    let mut starts: Vec<_> = (0..config.restarts).map(|_| draw(StartKind::Uniform)).collect();
    starts.extend((0..config.moment_starts).map(|_| draw(StartKind::Moment)));
    starts
}

pub(crate) fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

fn moment_refine(ev: &Evaluator, mut w: DVector<f64>) -> DVector<f64> {
    for _ in 0..MOMENT_ITERS {
        let next = ev.kurtosis_step(&w);
        let done = (next.dot(&w).abs() - 1.0).abs() < MOMENT_TOL;
        w = next;
        if done {
            break;
        }
    }
    w
}

/// Riemannian gradient ascent on the sphere: tangent projection, Armijo
/// backtracking, renormalization retraction.
fn ascend(
    ev: &Evaluator,
    mut w: DVector<f64>,
    kind: StartKind,
    config: &OptimizerConfig,
) -> (DVector<f64>, RestartTrace) {
    let mut order = Vec::new();
    let (mut f, mut g) = ev.squared_with_gradient_ordered(&w, &mut order);
    let mut history = vec![f];
    let mut step = config.step_init;
    let max_step = config.step_init * MAX_STEP_GROWTH;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iters {
        let tangent = &g - &w * g.dot(&w);
        let gnorm2 = tangent.norm_squared();
        if gnorm2.sqrt() < config.grad_tol {
            converged = true;
            break;
        }
        let mut accepted = None;
        while step >= MIN_STEP {
            let mut cand = &w + &tangent * step;
            cand /= cand.norm();
            let (fc, gc) = ev.squared_with_gradient_ordered(&cand, &mut order);
            if fc >= f + ARMIJO_C * step * gnorm2 {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= config.step_shrink;
        }
        let Some((cand, fc, gc)) = accepted else {
            // No ascent step exists at machine resolution: a kink or a
            // stationary point.
            converged = true;
            break;
        };
        w = cand;
        f = fc;
        g = gc;
        history.push(f);
        iterations += 1;
        if history.len() > STALL_WINDOW && f - history[history.len() - 1 - STALL_WINDOW] < config.f_tol {
            converged = true;
            break;
        }
        step = (step / config.step_shrink).min(max_step);
    }

    let trace = RestartTrace {
        kind,
        history,
        iterations,
        converged,
        value: f.sqrt(),
    };
    (w, trace)
}

/// Number of points in the net of the given angular resolution for `p`.
pub fn net_size(p: usize, resolution: f64) -> Result<usize> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::domain("net resolution must be positive"));
    }
    match p {
        2 => Ok((PI / resolution).ceil() as usize),
        3 => Ok(sphere_rings(resolution).iter().map(|(_, m)| m).sum()),
        _ => Err(Error::Unsupported(format!(
            "exhaustive net search is limited to p in {{2, 3}}, got p = {p}"
        ))),
    }
}

// Polar rings over the upper hemisphere (u and -u are equivalent) with
// azimuthal spacing at most `resolution`.
fn sphere_rings(resolution: f64) -> Vec<(f64, usize)> {
    let rings = ((PI / 2.0) / resolution).ceil() as usize;
    (0..=rings)
        .map(|i| {
            let theta = i as f64 * (PI / 2.0) / rings as f64;
            let count = ((2.0 * PI * theta.sin()) / resolution).ceil().max(1.0) as usize;
            (theta, count)
        })
        .collect()
}

/// Exhaustive search over a net of the sphere for `p ∈ {2, 3}`.
pub fn net_maximizer_oracle(data: &DataMatrix, resolution: f64) -> Result<(Direction, f64)> {
    let p = data.p();
    let size = net_size(p, resolution)?;
    if size > NET_MAX_POINTS {
        return Err(Error::Unsupported(format!(
            "net of resolution {resolution} has {size} points, limit is {NET_MAX_POINTS}"
        )));
    }
    let points: Vec<DVector<f64>> = if p == 2 {
        (0..size)
            .map(|j| {
                let a = j as f64 * PI / size as f64;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect()
    } else {
        sphere_rings(resolution)
            .into_iter()
            .flat_map(|(theta, count)| {
                (0..count).map(move |j| {
                    let phi = j as f64 * 2.0 * PI / count as f64;
                    DVector::from_vec(vec![
                        theta.sin() * phi.cos(),
                        theta.sin() * phi.sin(),
                        theta.cos(),
                    ])
                })
            })
            .collect()
    };
    let ev = Evaluator::new(data.matrix().clone());
    let values: Vec<f64> = points.par_iter().map(|w| ev.squared(w)).collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let direction = Direction::from_dvector(points[best].clone())?;
    let value = objective(data, &direction)?;
    Ok((direction, value))
}
