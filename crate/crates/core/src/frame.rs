use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-10;
const ORTHO_TOL: f64 = 1e-8;

/// A unit vector in `R^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Direction {
    vector: DVector<f64>,
}

impl Direction {
    /// Accepts a vector whose norm is already 1 within `1e-10`.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let vector = DVector::from_vec(v);
        let norm = vector.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::domain(format!("direction has norm {norm}, expected 1")));
        }
        Ok(Direction { vector })
    }

    /// Rescales to unit length. Fails on zero or non-finite vectors.
    pub fn normalized(v: Vec<f64>) -> Result<Self> {
        Self::from_dvector(DVector::from_vec(v))
    }

    pub fn from_dvector(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::domain("cannot normalize a zero or non-finite vector"));
        }
        Ok(Direction { vector: v / norm })
    }

    /// The `i`-th standard basis vector of `R^p`.
    pub fn axis(p: usize, i: usize) -> Self {
        let mut vector = DVector::zeros(p);
        vector[i] = 1.0;
        Direction { vector }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.vector.as_slice()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.vector
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.vector.dot(&other.vector)
    }

    pub fn negated(&self) -> Direction {
        Direction {
            vector: -&self.vector,
        }
    }

    /// Flips the sign so the largest-magnitude coordinate is positive.
    pub(crate) fn canonical_sign(mut self) -> Self {
        let lead = self
            .vector
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            self.vector.neg_mut();
        }
        self
    }
}

impl TryFrom<Vec<f64>> for Direction {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Direction::new(v)
    }
}

impl From<Direction> for Vec<f64> {
    fn from(d: Direction) -> Self {
        d.vector.as_slice().to_vec()
    }
}

/// An ordered orthonormal set of directions in `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    p: usize,
    directions: Vec<Direction>,
}

impl Frame {
    pub fn empty(p: usize) -> Self {
        Frame {
            p,
            directions: Vec::new(),
        }
    }

    pub fn new(p: usize, directions: Vec<Direction>) -> Result<Self> {
        let mut frame = Frame::empty(p);
        for d in directions {
            frame.push(d)?;
        }
        Ok(frame)
    }

    /// Columns of `m` must be orthonormal.
    pub fn from_columns(m: &DMatrix<f64>) -> Result<Self> {
        let dirs = m
            .column_iter()
            .map(|c| Direction::new(c.iter().copied().collect()))
            .collect::<Result<Vec<_>>>()?;
        Frame::new(m.nrows(), dirs)
    }

    pub fn push(&mut self, d: Direction) -> Result<()> {
        if d.dim() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: d.dim(),
            });
        }
        if self.directions.len() == self.p {
            return Err(Error::Infeasible(self.p));
        }
        if let Some(worst) = self
            .directions
            .iter()
            .map(|e| e.dot(&d).abs())
            .max_by(f64::total_cmp)
        {
            if worst > ORTHO_TOL {
                return Err(Error::domain(format!(
                    "direction is not orthogonal to the frame (|inner product| = {worst:e})"
                )));
            }
        }
        self.directions.push(d);
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    /// Frame made of the first `k` directions.
    pub fn truncated(&self, k: usize) -> Frame {
        Frame {
            p: self.p,
            directions: self.directions[..k.min(self.len())].to_vec(),
        }
    }

    /// `p × len` matrix whose columns are the directions.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.len(), |i, j| self.directions[j].vector[i])
    }

    /// Orthonormal basis (as columns) of the orthogonal complement of the
    /// span of the frame.
    pub fn complement_basis(&self) -> DMatrix<f64> {
        let m = self.len();
        if m == 0 {
            return DMatrix::identity(self.p, self.p);
        }
        // QR of [F | I]: the first m columns of Q span F, the rest span its
        // complement.
        let mut aug = DMatrix::zeros(self.p, m + self.p);
        aug.columns_mut(0, m).copy_from(&self.to_matrix());
        aug.columns_mut(m, self.p).fill_with_identity();
        let q = aug.qr().q();
        q.columns(m, self.p - m).into_owned()
    }

    /// The complement as a frame, completing this one to a basis of `R^p`.
    pub fn complement(&self) -> Frame {
        let basis = self.complement_basis();
        Frame {
            p: self.p,
            directions: basis
                .column_iter()
                .map(|c| Direction {
                    vector: c.into_owned(),
                })
                .collect(),
        }
    }

    /// Largest absolute pairwise inner product; zero for frames of size < 2.
    pub fn max_coherence(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.directions.iter().enumerate() {
            for b in &self.directions[i + 1..] {
                worst = worst.max(a.dot(b).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn direction_validation() {
        assert!(Direction::new(vec![1.0, 0.0]).is_ok());
        assert!(Direction::new(vec![1.0, 1.0]).is_err());
        assert!(Direction::normalized(vec![0.0, 0.0]).is_err());
        let d = Direction::normalized(vec![3.0, 4.0]).unwrap();
        assert!((d.as_slice()[0] - 0.6).abs() < 1e-15);
        assert_eq!(Direction::normalized(vec![-3.0, 1.0]).unwrap().canonical_sign().as_slice()[0] > 0.0, true);
    }

    #[test]
    fn frame_rejects_non_orthogonal_and_overfull() {
        let mut f = Frame::empty(2);
        f.push(Direction::axis(2, 0)).unwrap();
        assert!(f.push(Direction::normalized(vec![1.0, 1.0]).unwrap()).is_err());
        f.push(Direction::axis(2, 1)).unwrap();
        assert!(matches!(f.push(Direction::axis(2, 1)), Err(Error::Infeasible(2))));
        assert!(Frame::empty(3).push(Direction::axis(2, 0)).is_err());
    }

    proptest! {
        #[test]
        fn complement_completes_a_basis(p in 2usize..12, m in 0usize..6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let m = m.min(p - 1);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = DMatrix::from_fn(p, m.max(1), |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let q = g.qr().q().columns(0, m).into_owned();
            let frame = Frame::from_columns(&q).unwrap();
            let comp = frame.complement();
            prop_assert_eq!(comp.len(), p - m);
            let mut all = frame.directions().to_vec();
            all.extend_from_slice(comp.directions());
            let full = Frame::new(p, all).unwrap();
            prop_assert!(full.max_coherence() <= 1e-10);
        }
    }
}
