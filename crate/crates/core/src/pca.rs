//! Correlation matrices and principal component loadings.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::LoadingMatrix;

/// Column variances at or below this are treated as zero.
pub const MIN_VARIANCE: f64 = 1e-12;
/// Eigenvalues below `-EIGEN_TOL` mean the input is not a correlation matrix.
pub const EIGEN_TOL: f64 = 1e-10;
const TIE_TOL: f64 = 1e-12;

/// n×m data, rows are cases and columns are variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 || values.ncols() == 0 {
            return Err(Error::invalid(format!(
                "data needs at least 2 cases and 1 variable, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("data contains non-finite values"));
        }
        Ok(Self(values))
    }

    pub(crate) fn from_trusted(values: DMatrix<f64>) -> Self {
        Self(values)
    }

    pub fn ncases(&self) -> usize {
        self.0.nrows()
    }

    pub fn nvars(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Symmetric m×m matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(DMatrix<f64>);

impl CorrelationMatrix {
    /// Accepts a matrix that is symmetric with unit diagonal within 1e-12.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() || values.nrows() == 0 {
            return Err(Error::invalid("correlation matrix must be square and non-empty"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("correlation matrix has non-finite entries"));
        }
        let m = values.nrows();
        for i in 0..m {
            if (values[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid("correlation matrix is not symmetric"));
                }
            }
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Column means and `n - 1` standard deviations.
fn column_moments(x: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = x.nrows() as f64;
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let mut sds = DVector::zeros(x.ncols());
    for (j, c) in x.column_iter().enumerate() {
        let var = c.iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / (n - 1.0);
        if !(var > MIN_VARIANCE) {
            return Err(Error::DegenerateVariable { column: j });
        }
        sds[j] = var.sqrt();
    }
    Ok((means, sds))
}

/// Columns centred and scaled to unit `n - 1` variance.
pub(crate) fn standardize(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (means, sds) = column_moments(x)?;
    let mut z = x.clone();
    for (j, mut c) in z.column_iter_mut().enumerate() {
        c.add_scalar_mut(-means[j]);
        c /= sds[j];
    }
    Ok(z)
}

/// Cross-product of standardized columns, symmetrised, with an exact unit
/// diagonal.
fn correlation_of_standardized(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows() as f64;
    let mut r = z.tr_mul(z) / (n - 1.0);
    let m = r.nrows();
    for i in 0..m {
        r[(i, i)] = 1.0;
        for j in 0..i {
            let v = 0.5 * (r[(i, j)] + r[(j, i)]);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}

/// Pearson correlations between the columns of `x`.
pub fn correlation_matrix(x: &DataMatrix) -> Result<CorrelationMatrix> {
    let z = standardize(x.as_matrix())?;
    Ok(CorrelationMatrix(correlation_of_standardized(&z)))
}

/// Eigenpairs of a symmetric matrix in a reproducible order and orientation.
#[derive(Debug, Clone)]
pub struct OrderedEigen {
    pub values: Vec<f64>,
    /// Columns are unit eigenvectors matching `values`.
    pub vectors: DMatrix<f64>,
}

fn first_significant(v: &[f64]) -> usize {
    v.iter().position(|x| x.abs() > TIE_TOL).unwrap_or(v.len())
}

/// Flips `v` so its entry sum is non-negative; for sums within 1e-12 of
/// zero, so its first largest-magnitude entry is positive.
fn orient(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    let flip = if sum.abs() > TIE_TOL {
        sum < 0.0
    } else {
        let mut best = 0.0_f64;
        let mut sign_negative = false;
        for &x in v.iter() {
            if x.abs() > best + TIE_TOL {
                best = x.abs();
                sign_negative = x < 0.0;
            }
        }
        sign_negative
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Symmetric eigendecomposition sorted by descending eigenvalue, with the
/// orientation convention applied to every eigenvector. Eigenvalues that tie
/// within 1e-12 are ordered by the position of their vector's first
/// significant component.
pub fn ordered_eigen(a: &DMatrix<f64>) -> OrderedEigen {
    let eig = SymmetricEigen::new(a.clone());
    let m = a.nrows();
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..m)
        .map(|j| {
            let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            orient(&mut v);
            (eig.eigenvalues[j], v)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal));

    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end - 1].0 - pairs[end].0).abs() <= TIE_TOL * pairs[start].0.abs().max(1.0) {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|x, y| {
                let (ix, iy) = (first_significant(&x.1), first_significant(&y.1));
                ix.cmp(&iy).then_with(|| {
                    let (ax, ay) = (x.1.get(ix).map_or(0.0, |v| v.abs()), y.1.get(iy).map_or(0.0, |v| v.abs()));
                    ay.partial_cmp(&ax).unwrap_or(Ordering::Equal)
                })
            });
        }
        start = end;
    }

    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = DMatrix::from_fn(m, m, |i, j| pairs[j].1[i]);
    OrderedEigen { values, vectors }
}

/// Unrotated loadings of the `k` largest principal components:
/// `eigenvector_j · sqrt(eigenvalue_j)`.
pub fn pca_loadings(r: &CorrelationMatrix, k: usize) -> Result<LoadingMatrix> {
    Ok(pca_with_eigenvalues(r, k)?.0)
}

/// Like [`pca_loadings`], also returning all eigenvalues in descending order.
pub fn pca_with_eigenvalues(r: &CorrelationMatrix, k: usize) -> Result<(LoadingMatrix, Vec<f64>)> {
    let m = r.dim();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("cannot extract {k} components from {m} variables")));
    }
    let eig = ordered_eigen(r.as_matrix());
    if let Some(&neg) = eig.values.iter().find(|&&l| l < -EIGEN_TOL) {
        return Err(Error::InvalidCorrelation(neg));
    }
    let loadings = DMatrix::from_fn(m, k, |i, j| eig.vectors[(i, j)] * eig.values[j].max(0.0).sqrt());
    Ok((LoadingMatrix::from_trusted(loadings), eig.values))
}

/// Standardized component scores of all `p` components of `x`: exactly
/// uncorrelated columns with unit `n - 1` variance.
pub(crate) fn full_component_scores(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let z = standardize(x)?;
    let r = correlation_of_standardized(&z);
    let eig = ordered_eigen(&r);
    if let Some(&small) = eig.values.iter().find(|&&l| l <= MIN_VARIANCE) {
        return Err(Error::InvalidCorrelation(small));
    }
    let mut weights = eig.vectors.clone();
    for (mut c, l) in weights.column_iter_mut().zip(&eig.values) {
        c /= l.sqrt();
    }
    Ok(z * weights)
}
