//! Kaiser normalization of loading rows.

use crate::error::{Error, Result};
use crate::matrix::LoadingMatrix;

/// Rows with a norm below this are treated as zero-communality variables.
pub const MIN_ROW_NORM: f64 = 1e-12;

/// Row norms removed by [`kaiser_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct RowScales(Vec<f64>);

impl RowScales {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        if scales.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::invalid("row scales must be positive and finite"));
        }
        Ok(Self(scales))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Divides every row by its Euclidean norm.
pub fn kaiser_normalize(a: &LoadingMatrix) -> Result<(LoadingMatrix, RowScales)> {
    let mut values = a.as_matrix().clone();
    let mut scales = Vec::with_capacity(values.nrows());
    for (row, mut r) in values.row_iter_mut().enumerate() {
        let norm = r.norm();
        if norm < MIN_ROW_NORM {
            return Err(Error::ZeroCommunality { row, norm });
        }
        r /= norm;
        scales.push(norm);
    }
    Ok((LoadingMatrix::from_trusted(values), RowScales(scales)))
}

/// Multiplies every row back by its scale.
pub fn kaiser_denormalize(lambda_norm: &LoadingMatrix, scales: &RowScales) -> Result<LoadingMatrix> {
    if scales.len() != lambda_norm.nrows() {
        return Err(Error::invalid(format!(
            "{} row scales for a matrix with {} rows",
            scales.len(),
            lambda_norm.nrows()
        )));
    }
    let mut values = lambda_norm.as_matrix().clone();
    for (mut r, h) in values.row_iter_mut().zip(scales.as_slice()) {
        r *= *h;
    }
    Ok(LoadingMatrix::from_trusted(values))
}
