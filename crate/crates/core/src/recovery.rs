//! Greedy sequential extraction of non-Gaussian directions and the
//! threshold rule that decides how many of them are signal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pursuit::{maximize_on_sphere, DataMatrix, Frame, OptimizerConfig};

/// Stopping-rule parameters.
///
/// A direction is kept while its distance is at least
/// `sqrt(1 − 4δ²)·d̂ + ε + C_σ·n^(−1/4)`, where `d̂` is either the fixed
/// `d_psi_hat` or the plug-in estimate from the first extracted direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingConfig {
    pub delta: f64,
    pub epsilon: f64,
    pub c_sigma: f64,
    pub d_psi_hat: Option<f64>,
    /// Maximum number of directions to extract; `None` means `p`.
    pub max_k: Option<usize>,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        StoppingConfig {
            delta: 0.4,
            epsilon: 0.1,
            c_sigma: 0.0,
            d_psi_hat: None,
            max_k: None,
        }
    }
}

impl StoppingConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.delta > 0.0 && 4.0 * self.delta * self.delta < 1.0) {
            return Err(Error::config(format!(
                "delta must satisfy 0 < delta and 4 delta^2 < 1, got {}",
                self.delta
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon must be nonnegative"));
        }
        if !(self.c_sigma >= 0.0 && self.c_sigma.is_finite()) {
            return Err(Error::config("c_sigma must be nonnegative"));
        }
        if let Some(d) = self.d_psi_hat {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::config("d_psi_hat must be nonnegative"));
            }
        }
        match self.max_k {
            Some(0) => Err(Error::config("max_k must be positive")),
            Some(k) if k > p => Err(Error::config(format!("max_k = {k} exceeds p = {p}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The last extracted direction fell below the threshold.
    Threshold,
    /// `max_k` directions were extracted and all passed.
    MaxK,
    /// Every dimension was used up.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    /// All extracted directions, including a final rejected one when
    /// stopping on the threshold.
    pub frame: Frame,
    pub distances: Vec<f64>,
    pub k_hat: usize,
    pub threshold_used: f64,
    pub d_psi_estimate: f64,
    pub stopped_reason: StopReason,
    /// Threshold in force after each extraction.
    pub threshold_trace: Vec<f64>,
}

impl RecoveryReport {
    /// The first `k_hat` directions.
    pub fn retained(&self) -> Frame {
        self.frame.truncated(self.k_hat)
    }
}

/// `sqrt(1 − 4δ²)·d̂ + ε + C_σ·n^(−1/4)`; `stop.d_psi_hat` overrides `d_psi_hat`.
pub fn threshold(stop: &StoppingConfig, n: usize, d_psi_hat: f64) -> f64 {
    let d = stop.d_psi_hat.unwrap_or(d_psi_hat);
    let shrink = (1.0 - 4.0 * stop.delta * stop.delta).max(0.0).sqrt();
    shrink * d + stop.epsilon + stop.c_sigma * (n.max(1) as f64).powf(-0.25)
}

/// Plug-in estimate of the largest directional distance: the maximum of the
/// observed ones.
pub fn estimate_d_psi(distances: &[f64]) -> Result<f64> {
    distances
        .iter()
        .copied()
        .max_by(f64::total_cmp)
        .ok_or(Error::EmptySample)
}

// Per-step seeds are spread so consecutive steps draw unrelated starts.
const STEP_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Extracts directions one at a time, each maximizing the objective
/// orthogonally to the previous ones, until the stopping rule fires.
///
/// The test runs after each extraction, so a threshold stop leaves the
/// rejected direction in the report (excluded from `k_hat`). The plug-in
/// `d̂` is the first direction's distance.
pub fn sequential_recovery(
    data: &DataMatrix,
    opt: &OptimizerConfig,
    stop: &StoppingConfig,
) -> Result<RecoveryReport> {
    let (n, p) = (data.n(), data.p());
    stop.validate(p)?;
    opt.validate()?;
    if !data.is_whitened() {
        log::warn!("recovering from data not marked as whitened; the objective assumes identity covariance");
    }
    let limit = stop.max_k.unwrap_or(p).min(p);

    let mut frame = Frame::empty(p);
    let mut distances = Vec::new();
    let mut trace = Vec::new();
    loop {
        let step = frame.len() as u64;
        let cfg = OptimizerConfig {
            seed: opt.seed.wrapping_add(step.wrapping_mul(STEP_SEED_STRIDE)),
            ..opt.clone()
        };
        let (u, value) = maximize_on_sphere(data, &frame, &cfg)?;
        frame.push(u)?;
        distances.push(value);
        let d_hat = match stop.d_psi_hat {
            Some(d) => d,
            None => estimate_d_psi(&distances[..1])?,
        };
        let thr = threshold(stop, n, d_hat);
        trace.push(thr);

        let reason = if value < thr {
            Some(StopReason::Threshold)
        } else if frame.len() == p {
            Some(StopReason::Exhausted)
        } else if frame.len() == limit {
            Some(StopReason::MaxK)
        } else {
            None
        };
        if let Some(stopped_reason) = reason {
            let k_hat = match stopped_reason {
                StopReason::Threshold => frame.len() - 1,
                _ => frame.len(),
            };
            log::info!("stopped after {} directions ({stopped_reason:?}), k_hat = {k_hat}", frame.len());
            return Ok(RecoveryReport {
                frame,
                distances,
                k_hat,
                threshold_used: thr,
                d_psi_estimate: d_hat,
                stopped_reason,
                threshold_trace: trace,
            });
        }
    }
}
