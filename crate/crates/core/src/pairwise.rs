//! Classic Varimax by successive planar rotations of column pairs.
//!
//! Each sweep visits every pair `(j, l)`, `j < l`, and rotates the two
//! columns by the closed-form angle that maximises the pair's contribution to
//! the criterion. Sweeps repeat until the largest angle of a sweep drops
//! below `angle_tol` or `max_cycles` sweeps have run. This is the benchmark
//! the gradient projection results are compared against.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{LoadingMatrix, TransformationMatrix};
use crate::normalization::{kaiser_denormalize, kaiser_normalize};
use crate::rotation::{criterion_of, RotationSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseParams {
    pub max_cycles: usize,
    /// Radians.
    pub angle_tol: f64,
    pub kaiser_normalize: bool,
}

impl Default for PairwiseParams {
    fn default() -> Self {
        Self { max_cycles: 250, angle_tol: 1e-9, kaiser_normalize: false }
    }
}

/// Rotation angle maximising the Varimax contribution of columns `x`, `y`.
fn planar_angle(lambda: &DMatrix<f64>, j: usize, l: usize) -> f64 {
    let m = lambda.nrows() as f64;
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..lambda.nrows() {
        let x = lambda[(i, j)];
        let y = lambda[(i, l)];
        let u = x * x - y * y;
        let w = 2.0 * x * y;
        a += u;
        b += w;
        c += u * u - w * w;
        d += 2.0 * u * w;
    }
    let num = d - 2.0 * a * b / m;
    let den = c - (a * a - b * b) / m;
    num.atan2(den) / 4.0
}

fn rotate_pair(mat: &mut DMatrix<f64>, j: usize, l: usize, cos: f64, sin: f64) {
    for i in 0..mat.nrows() {
        let x = mat[(i, j)];
        let y = mat[(i, l)];
        mat[(i, j)] = x * cos + y * sin;
        mat[(i, l)] = -x * sin + y * cos;
    }
}

/// Pairwise Varimax of `a`.
///
/// With `kaiser_normalize` the rotation runs on row-normalized loadings and
/// the returned `lambda` is scaled back; `criterion_v` and `f_trace` then
/// refer to the normalized loadings. `f_trace` holds `-v` before the first
/// sweep and after each sweep; it is non-increasing. `iterations` counts
/// sweeps.
pub fn pairwise_varimax(a: &LoadingMatrix, params: &PairwiseParams) -> Result<RotationSolution> {
    if params.max_cycles == 0 {
        return Err(Error::invalid("max_cycles must be at least 1"));
    }
    if !(params.angle_tol > 0.0) {
        return Err(Error::invalid("angle_tol must be positive"));
    }
    let (work, scales) = if params.kaiser_normalize {
        let (n, h) = kaiser_normalize(a)?;
        (n, Some(h))
    } else {
        (a.clone(), None)
    };

    let k = work.ncols();
    let mut lambda = work.as_matrix().clone();
    let mut t = DMatrix::<f64>::identity(k, k);
    let mut f_trace = vec![-criterion_of(&lambda)];
    let mut converged = k == 1;
    let mut cycles = 0;

    while !converged && cycles < params.max_cycles {
        let mut largest = 0.0_f64;
        for j in 0..k - 1 {
            for l in j + 1..k {
                let phi = planar_angle(&lambda, j, l);
                largest = largest.max(phi.abs());
                if phi == 0.0 {
                    continue;
                }
                let (sin, cos) = phi.sin_cos();
                rotate_pair(&mut lambda, j, l, cos, sin);
                rotate_pair(&mut t, j, l, cos, sin);
            }
        }
        cycles += 1;
        f_trace.push(-criterion_of(&lambda));
        converged = largest < params.angle_tol;
    }

    let criterion_v = criterion_of(&lambda);
    let lambda = LoadingMatrix::from_trusted(lambda);
    let lambda = match &scales {
        Some(h) => kaiser_denormalize(&lambda, h)?,
        None => lambda,
    };
    Ok(RotationSolution {
        lambda,
        t: TransformationMatrix::from_trusted(t),
        f_value: -criterion_v,
        criterion_v,
        f_trace,
        converged,
        iterations: cycles,
    })
}
