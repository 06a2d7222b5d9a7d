//! Recovery accuracy against a planted model, and empirical probes of how
//! fast projected distances concentrate.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::datagen::{sample, PlantedModel, PopulationOracle, SignalLaw};
use crate::error::{Error, Result};
use crate::frame::{Direction, Frame};
use crate::pursuit::Evaluator;
use crate::recovery::RecoveryReport;
use crate::transport::{w2_empirical_to_std_normal, SortedProjection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryError {
    /// `‖Proj_W v̂_j‖` for every extracted direction, rejected ones included.
    pub per_direction_w_proj: Vec<f64>,
    /// Largest `w_proj` over the retained directions (0 when none is kept).
    pub max_w_proj: f64,
    /// Principal angles between the retained span and `U`, nondecreasing.
    pub principal_angles: Vec<f64>,
    /// `2 / snr`: 0 for an infinite SNR, infinite for `snr = 0`.
    pub snr_bound: f64,
}

/// `sqrt(Σ_b (vᵀb)²)` over the directions `b` of `subspace`.
pub fn projection_norm(v: &Direction, subspace: &Frame) -> Result<f64> {
    if v.dim() != subspace.p() {
        return Err(Error::DimensionMismatch {
            expected: subspace.p(),
            found: v.dim(),
        });
    }
    let sq: f64 = subspace.directions().iter().map(|b| v.dot(b).powi(2)).sum();
    Ok(sq.sqrt().min(1.0))
}

/// Principal angles between two spans, from the singular values of the
/// cross-Gram matrix clamped into `[0, 1]`.
pub fn principal_angles(a: &Frame, b: &Frame) -> Result<Vec<f64>> {
    if a.p() != b.p() {
        return Err(Error::DimensionMismatch {
            expected: a.p(),
            found: b.p(),
        });
    }
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let gram = a.to_matrix().tr_mul(&b.to_matrix());
    let mut s: Vec<f64> = gram.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s.into_iter().map(|c| c.clamp(0.0, 1.0).acos()).collect())
}

pub fn evaluate_recovery(report: &RecoveryReport, model: &PlantedModel) -> Result<RecoveryError> {
    if report.frame.p() != model.p() {
        return Err(Error::DimensionMismatch {
            expected: model.p(),
            found: report.frame.p(),
        });
    }
    let per_direction_w_proj = report
        .frame
        .directions()
        .iter()
        .map(|v| projection_norm(v, model.basis_w()))
        .collect::<Result<Vec<_>>>()?;
    let max_w_proj = per_direction_w_proj[..report.k_hat].iter().copied().fold(0.0, f64::max);
    Ok(RecoveryError {
        per_direction_w_proj,
        max_w_proj,
        principal_angles: principal_angles(&report.retained(), model.basis_u())?,
        snr_bound: 2.0 / model.truth().snr,
    })
}

/// Where the population side of a concentration gap comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthSource {
    /// Population distance of the projected model law.
    Population(PopulationOracle),
    /// Empirical distance on an independent sample of size `samples`
    /// drawn with `seed`.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for TruthSource {
    fn default() -> Self {
        TruthSource::Population(PopulationOracle::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGap {
    pub empirical: f64,
    pub population: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationProbe {
    pub n: usize,
    /// Maximum gap over the sampled directions; a lower bound on the
    /// supremum over the whole sphere.
    pub max_abs_deviation: f64,
    pub per_direction: Vec<DirectionGap>,
}

// Keeps the direction stream independent of the sample stream.
const DIRECTION_STREAM: u64 = 0xD1EC_7105;

/// Compares empirical and population distances along `directions`
/// uniformly random unit vectors. The data are drawn with `seed`.
pub fn concentration_probe(
    model: &PlantedModel,
    n: usize,
    directions: usize,
    truth: &TruthSource,
    seed: u64,
) -> Result<ConcentrationProbe> {
    if directions == 0 {
        return Err(Error::config("directions must be positive"));
    }
    let p = model.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DIRECTION_STREAM);
    let dirs: Vec<DVector<f64>> = (0..directions).map(|_| random_unit(&mut rng, p)).collect();

    let empirical = Evaluator::new(sample(model, n, seed)?.matrix().clone());
    let reference = match truth {
        TruthSource::MonteCarlo { samples, seed } => {
            Some(Evaluator::new(sample(model, *samples, *seed)?.matrix().clone()))
        }
        TruthSource::Population(_) => None,
    };
    let per_direction = dirs
        .par_iter()
        .map(|u| {
            let emp = empirical.squared(u).sqrt();
            let pop = match (&reference, truth) {
                (Some(ev), _) => ev.squared(u).sqrt(),
                (None, TruthSource::Population(oracle)) => model.population_w2(u.as_slice(), oracle)?,
                (None, TruthSource::MonteCarlo { .. }) => unreachable!(),
            };
            Ok(DirectionGap {
                empirical: emp,
                population: pop,
                gap: (emp - pop).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_deviation = per_direction.iter().map(|g| g.gap).fold(0.0, f64::max);
    Ok(ConcentrationProbe {
        n,
        max_abs_deviation,
        per_direction,
    })
}

fn random_unit(rng: &mut impl Rng, p: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub mean_w2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateProbe {
    pub points: Vec<RatePoint>,
    /// Least-squares slope of `log mean_w2` against `log n`.
    pub slope: f64,
}

/// Mean empirical distance to Φ of i.i.d. samples from a one-dimensional
/// law, over `trials` repetitions at each `n`.
pub fn rate_probe(law: &SignalLaw, n_grid: &[usize], trials: usize, seed: u64) -> Result<RateProbe> {
    if law.k() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: law.k(),
        });
    }
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return Err(Error::config("n_grid must be positive, increasing, with at least 3 points"));
    }
    if trials == 0 {
        return Err(Error::config("trials must be positive"));
    }
    let points = n_grid
        .iter()
        .enumerate()
        .map(|(gi, &n)| {
            let total = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let stream = seed
                        .wrapping_add((gi as u64) << 32)
                        .wrapping_add(t as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(stream);
                    let sampler = law.sampler();
                    let mut x = vec![0.0; n];
                    for v in x.iter_mut() {
                        sampler.sample_into(&mut rng, std::slice::from_mut(v));
                    }
                    Ok(w2_empirical_to_std_normal(&SortedProjection::from_unsorted(x)?).distance)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .sum::<f64>();
            Ok(RatePoint {
                n,
                mean_w2: total / trials as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_w2.ln()).collect();
    Ok(RateProbe {
        slope: ls_slope(&xs, &ys),
        points,
    })
}

pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest eigenvalue of `(1/n) Σ xᵢ xᵢᵀ` (uncentred) by power iteration on
/// the `p × p` Gram matrix.
pub fn sample_cov_spectral_norm(data: &DataMatrix) -> f64 {
    let x = data.matrix();
    let gram: DMatrix<f64> = x.tr_mul(x) / data.n() as f64;
    let p = gram.nrows();
    // A fixed, generic start vector keeps the result deterministic.
    let mut v = DVector::from_fn(p, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let w = &gram * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= 1e-8 * next.abs() {
            return next;
        }
        lambda = next;
    }
    log::warn!("power iteration did not reach tolerance");
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{BasisSpec, ModelSpec, SignalKind, TruthConfig};
    use crate::recovery::StopReason;
    use proptest::prelude::*;
    use rand::Rng;

    fn haar(p: usize, seed: u64) -> DMatrix<f64> {
        crate::datagen::random_orthogonal(p, seed)
    }

    fn frame(m: DMatrix<f64>) -> Frame {
        Frame::from_columns(&m).unwrap()
    }

    #[test]
    fn projection_norm_examples() {
        let sub = frame(DMatrix::identity(3, 3).columns(0, 1).into_owned());
        assert_eq!(projection_norm(&Direction::axis(3, 0), &sub).unwrap(), 1.0);
        assert_eq!(projection_norm(&Direction::axis(3, 2), &sub).unwrap(), 0.0);
        let diag = Direction::normalized(vec![1.0, 1.0, 0.0]).unwrap();
        let r = projection_norm(&diag, &sub).unwrap();
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(projection_norm(&Direction::axis(2, 0), &sub).is_err());
    }

    fn report(frame: Frame, k_hat: usize) -> RecoveryReport {
        let m = frame.len();
        RecoveryReport {
            frame,
            distances: vec![0.5; m],
            k_hat,
            threshold_used: 0.1,
            d_psi_estimate: 0.5,
            stopped_reason: StopReason::MaxK,
            threshold_trace: vec![0.1; m],
        }
    }

    #[test]
    fn perfect_and_worst_recovery() {
        let model = PlantedModel::new(
            ModelSpec {
                p: 5,
                k: 2,
                signal: SignalKind::rademacher(),
                basis: BasisSpec::Random { seed: 4 },
                complement: None,
            },
            &TruthConfig::default(),
        )
        .unwrap();
        let good = evaluate_recovery(&report(model.basis_u().clone(), 2), &model).unwrap();
        assert!(good.per_direction_w_proj.iter().all(|w| *w < 1e-12));
        assert!(good.principal_angles.iter().all(|a| *a < 1e-6));
        assert_eq!(good.principal_angles.len(), 2);
        assert!((good.snr_bound - 2.0 / model.truth().snr).abs() < 1e-15);

        let bad = evaluate_recovery(&report(model.basis_w().truncated(2), 2), &model).unwrap();
        assert!(bad.per_direction_w_proj.iter().all(|w| (w - 1.0).abs() < 1e-12));
        assert!((bad.max_w_proj - 1.0).abs() < 1e-12);
        assert!(bad.principal_angles.iter().all(|a| (a - std::f64::consts::FRAC_PI_2).abs() < 1e-6));

        // Rejected directions are reported but do not count.
        let mut mixed = model.basis_u().truncated(1);
        mixed.push(model.basis_w().directions()[0].clone()).unwrap();
        let e = evaluate_recovery(&report(mixed, 1), &model).unwrap();
        assert_eq!(e.max_w_proj, e.per_direction_w_proj[0]);
        assert!((e.per_direction_w_proj[1] - 1.0).abs() < 1e-12);

        let other = evaluate_recovery(&report(Frame::empty(4), 0), &model);
        assert!(other.is_err());
    }

    #[test]
    fn spectral_norm_examples() {
        let p = 6;
        let eye = DataMatrix::new(DMatrix::identity(p, p), false).unwrap();
        assert!((sample_cov_spectral_norm(&eye) - 1.0 / p as f64).abs() < 1e-12);
        let v = Direction::normalized(vec![1.0, 2.0, -1.0]).unwrap();
        let same = DataMatrix::from_rows(&vec![v.as_slice().to_vec(); 9]).unwrap();
        assert!((sample_cov_spectral_norm(&same) - 1.0).abs() < 1e-12);
        let zero = DataMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(sample_cov_spectral_norm(&zero), 0.0);
    }

    #[test]
    fn spectral_norm_matches_eigendecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(200, 20, |_, _| rng.sample::<f64, _>(StandardNormal));
        let d = DataMatrix::new(x.clone(), false).unwrap();
        let exact = (x.tr_mul(&x) / 200.0).symmetric_eigen().eigenvalues.max();
        assert!((sample_cov_spectral_norm(&d) - exact).abs() < 1e-6 * exact);
    }

    fn null_model(p: usize) -> PlantedModel {
        PlantedModel::without_truth(ModelSpec {
            p,
            k: 0,
            signal: SignalKind::rademacher(),
            basis: BasisSpec::Canonical,
            complement: None,
        })
        .unwrap()
    }

    #[test]
    fn concentration_identical_streams_give_zero_gap() {
        let model = null_model(4);
        let truth = TruthSource::MonteCarlo { samples: 300, seed: 21 };
        let probe = concentration_probe(&model, 300, 10, &truth, 21).unwrap();
        assert!(probe.per_direction.iter().all(|g| g.gap == 0.0));
        let again = concentration_probe(&model, 300, 10, &truth, 21).unwrap();
        assert_eq!(probe, again);
    }

    #[test]
    fn concentration_population_truth() {
        let model = PlantedModel::without_truth(ModelSpec {
            p: 4,
            k: 1,
            signal: SignalKind::rademacher(),
            basis: BasisSpec::Canonical,
            complement: None,
        })
        .unwrap();
        let probe = concentration_probe(&model, 5000, 20, &TruthSource::default(), 2).unwrap();
        assert!(probe.max_abs_deviation < 0.1);
        assert!(probe.per_direction.iter().all(|g| g.population >= 0.0 && g.population <= 0.636));
    }

    #[test]
    fn rate_probe_on_normal_law() {
        let law = SignalLaw::new(SignalKind::standard_normal(), 1).unwrap();
        let r = rate_probe(&law, &[100, 400, 1600], 20, 1).unwrap();
        assert!(r.slope < 0.0);
        assert!(r.points.windows(2).all(|w| w[1].mean_w2 < w[0].mean_w2));
        assert!(rate_probe(&law, &[100, 50, 200], 2, 1).is_err());
        assert!(rate_probe(&law, &[100, 200], 2, 1).is_err());
        let plane = SignalLaw::new(SignalKind::rademacher(), 2).unwrap();
        assert!(rate_probe(&plane, &[10, 20, 30], 2, 1).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = [10.0f64, 100.0, 1000.0].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = [10.0f64, 100.0, 1000.0].iter().map(|x| (3.0 * x.powf(-0.25)).ln()).collect();
        assert!((ls_slope(&xs, &ys) + 0.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn complementary_projections_are_pythagorean(p in 2usize..12, seed in any::<u64>(), split in 0usize..12) {
            let q = haar(p, seed);
            let k = split % (p + 1);
            let a = frame(q.columns(0, k).into_owned());
            let b = frame(q.columns(k, p - k).into_owned());
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let v = Direction::from_dvector(random_unit(&mut rng, p)).unwrap();
            let s = projection_norm(&v, &a).unwrap().powi(2) + projection_norm(&v, &b).unwrap().powi(2);
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn principal_angles_are_sorted(p in 3usize..10, seed in any::<u64>()) {
            let a = frame(haar(p, seed).columns(0, 2).into_owned());
            let b = frame(haar(p, seed ^ 7).columns(0, 3).into_owned());
            let angles = principal_angles(&a, &b).unwrap();
            prop_assert_eq!(angles.len(), 2);
            prop_assert!(angles.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(angles.iter().all(|t| (0.0..=std::f64::consts::FRAC_PI_2).contains(t)));
        }
    }
}
