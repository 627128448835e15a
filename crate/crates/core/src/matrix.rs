//! Validated matrix newtypes shared by every module.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Frobenius tolerance on `T'T - I` accepted for a transformation matrix.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// An m×k loading matrix: rows are variables, columns are components.
///
/// Construction guarantees `m >= k >= 1` and finite entries, so the
/// criterion and gradient functions never see NaN or infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingMatrix(DMatrix<f64>);

impl LoadingMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (m, k) = values.shape();
        if k == 0 || m < k {
            return Err(Error::invalid(format!(
                "loading matrix must satisfy m >= k >= 1, got {m}x{k}"
            )));
        }
        if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "loading matrix entry {pos} (column-major) is not finite"
            )));
        }
        Ok(Self(values))
    }

    /// Builds a matrix from row slices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("ragged rows in loading matrix"));
        }
        Self::new(DMatrix::from_fn(m, k, |i, j| rows[i][j]))
    }

    /// Wraps values produced internally from already validated inputs.
    pub(crate) fn from_trusted(values: DMatrix<f64>) -> Self {
        debug_assert!(values.iter().all(|x| x.is_finite()));
        Self(values)
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.nrows())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    /// Row sums of squares (communalities for orthogonal components).
    pub fn communalities(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.0.row(i).norm_squared()).collect()
    }

    /// `self · t`.
    pub fn rotate(&self, t: &TransformationMatrix) -> Result<LoadingMatrix> {
        if t.dim() != self.ncols() {
            return Err(Error::invalid(format!(
                "transformation is {0}x{0} but loadings have {1} columns",
                t.dim(),
                self.ncols()
            )));
        }
        Ok(Self(&self.0 * t.as_matrix()))
    }
}

/// A k×k orthogonal transformation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformationMatrix(DMatrix<f64>);

impl TransformationMatrix {
    /// Validates squareness, finiteness and `||T'T - I||_F <= 1e-10`.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() || values.nrows() == 0 {
            return Err(Error::invalid("transformation matrix must be square and non-empty"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("transformation matrix has non-finite entries"));
        }
        let dev = orthogonality_defect(&values);
        if dev > ORTHOGONALITY_TOL {
            return Err(Error::invalid(format!(
                "transformation matrix is not orthogonal (||T'T - I||_F = {dev:e})"
            )));
        }
        Ok(Self(values))
    }

    pub fn identity(k: usize) -> Self {
        Self(DMatrix::identity(k, k))
    }

    pub(crate) fn from_trusted(values: DMatrix<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// `||M'M - I||_F`.
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let k = m.ncols();
    (m.transpose() * m - DMatrix::<f64>::identity(k, k)).norm()
}
