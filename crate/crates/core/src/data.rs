use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `n × p` sample matrix, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    matrix: DMatrix<f64>,
    whitened: bool,
}

/// How far a sample is from zero mean and identity covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhiteningDiagnostic {
    pub mean_norm: f64,
    /// Spectral norm of `(1/n) Σ (xᵢ − x̄)(xᵢ − x̄)ᵀ − I`.
    pub covariance_deviation: f64,
}

impl WhiteningDiagnostic {
    pub fn is_white(&self, p: usize) -> bool {
        self.mean_norm <= 1e-6 * (p as f64).sqrt() && self.covariance_deviation <= 0.5
    }
}

impl DataMatrix {
    pub fn new(matrix: DMatrix<f64>, whitened: bool) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::EmptySample);
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("data contains a non-finite value"));
        }
        Ok(DataMatrix { matrix, whitened })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]), false)
    }

    pub fn from_row_major(n: usize, p: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: values.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, p, values), false)
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn is_whitened(&self) -> bool {
        self.whitened
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.n()).map(|i| self.row(i))
    }

    /// Returns `X u` in sample order.
    pub fn project_unsorted(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: u.len(),
            });
        }
        let v = DVector::from_column_slice(u);
        Ok((&self.matrix * v).data.into())
    }

    pub fn mean(&self) -> DVector<f64> {
        self.matrix.row_mean().transpose()
    }

    /// `(1/n) Σ (xᵢ − x̄)(xᵢ − x̄)ᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.matrix.row_mean();
        let mut centered = self.matrix.clone();
        for mut row in centered.row_iter_mut() {
            row -= &mean;
        }
        centered.tr_mul(&centered) / self.n() as f64
    }

    pub fn whitening_diagnostic(&self) -> WhiteningDiagnostic {
        let p = self.p();
        let dev = self.covariance() - DMatrix::identity(p, p);
        let eig = dev.symmetric_eigenvalues();
        WhiteningDiagnostic {
            mean_norm: self.mean().norm(),
            covariance_deviation: eig.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }
}
