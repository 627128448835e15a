//! Tucker congruence, component matching and loading RMSE.

use nalgebra::{DMatrix, DVectorView};

use crate::error::{Error, Result};
use crate::matrix::LoadingMatrix;

/// Alignment of sample components to population components.
///
/// Population column `j` is matched with sample column `perm[j]`, multiplied
/// by `signs[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub perm: Vec<usize>,
    pub signs: Vec<f64>,
    pub per_component_c: Vec<f64>,
}

impl Matching {
    /// Sample loadings with columns reordered and reflected onto the
    /// population's column order.
    pub fn align(&self, lambda: &LoadingMatrix) -> Result<DMatrix<f64>> {
        let l = lambda.as_matrix();
        if self.perm.len() != l.ncols() {
            return Err(Error::invalid("matching and loadings disagree on the number of components"));
        }
        Ok(DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| self.signs[j] * l[(i, self.perm[j])]))
    }
}

/// `Σ x_i y_i / sqrt(Σ x_i² · Σ y_i²)`.
pub fn tucker_congruence(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("congruence needs vectors of equal length"));
    }
    congruence_raw(x.iter().copied(), y.iter().copied())
}

fn congruence_raw(x: impl Iterator<Item = f64>, y: impl Iterator<Item = f64>) -> Result<f64> {
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (a, b) in x.zip(y) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx == 0.0 || yy == 0.0 {
        return Err(Error::UndefinedCongruence);
    }
    Ok((xy / (xx * yy).sqrt()).clamp(-1.0, 1.0))
}

fn column_congruence(x: DVectorView<'_, f64>, y: DVectorView<'_, f64>) -> Result<f64> {
    congruence_raw(x.iter().copied(), y.iter().copied())
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method
/// with row and column potentials). Returns `assignment[row] = column`.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert!(cost.is_square(), "assignment needs a square cost matrix");
    // 1-based with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[(r0 - 1, col - 1)] - u[r0] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for col in 1..=n {
        assignment[owner[col] - 1] = col - 1;
    }
    assignment
}

/// Pairs sample components with population components by maximising the
/// total absolute congruence, reflecting sample columns so every matched
/// congruence is non-negative.
pub fn match_components(lambda: &LoadingMatrix, pop: &LoadingMatrix) -> Result<Matching> {
    if lambda.nrows() != pop.nrows() || lambda.ncols() != pop.ncols() {
        return Err(Error::invalid(format!(
            "cannot match {}x{} loadings against {}x{} population loadings",
            lambda.nrows(),
            lambda.ncols(),
            pop.nrows(),
            pop.ncols()
        )));
    }
    let (l, p) = (lambda.as_matrix(), pop.as_matrix());
    let k = l.ncols();
    // congruence[(pop column, sample column)]
    let mut congruence = DMatrix::zeros(k, k);
    for j in 0..k {
        for s in 0..k {
            congruence[(j, s)] = column_congruence(p.column(j), l.column(s))?;
        }
    }
    let cost = congruence.map(|c: f64| -c.abs());
    let perm = min_cost_assignment(&cost);
    let signs: Vec<f64> = perm
        .iter()
        .enumerate()
        .map(|(j, &s)| if congruence[(j, s)] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let per_component_c = perm.iter().enumerate().map(|(j, &s)| congruence[(j, s)].abs()).collect();
    Ok(Matching { perm, signs, per_component_c })
}

pub fn mean_congruence(matching: &Matching) -> f64 {
    let c = &matching.per_component_c;
    c.iter().sum::<f64>() / c.len() as f64
}

/// Root mean square difference over all m·k entries after alignment.
pub fn rmse_loadings(lambda: &LoadingMatrix, pop: &LoadingMatrix, matching: &Matching) -> Result<f64> {
    if lambda.nrows() != pop.nrows() || lambda.ncols() != pop.ncols() {
        return Err(Error::invalid("RMSE needs loadings of equal shape"));
    }
    let aligned = matching.align(lambda)?;
    let diff = aligned - pop.as_matrix();
    Ok((diff.norm_squared() / diff.len() as f64).sqrt())
}
