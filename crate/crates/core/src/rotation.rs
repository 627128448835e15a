//! Orthogonal gradient projection rotation toward the Varimax criterion.
//!
//! The rotation minimises `f(T) = -v(A·T)` over orthogonal `T`. Each
//! iteration moves `T` against the gradient projected onto the tangent space
//! of the orthogonal group, maps the result back onto the group with the
//! polar factor, and only accepts strictly descending steps, halving the step
//! length until one is found.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{LoadingMatrix, TransformationMatrix};

/// Singular values below this make a matrix unprojectable.
pub const MIN_SINGULAR_VALUE: f64 = 1e-12;

/// Step and stopping controls for [`gpr_rotate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GprParams {
    /// Initial step length.
    pub alpha0: f64,
    /// Maximum number of accepted steps.
    pub max_iter: usize,
    /// Convergence threshold on the Frobenius norm of the projected gradient.
    pub grad_tol: f64,
    /// Halvings attempted per iteration before declaring the point stationary.
    pub max_halvings: usize,
}

impl Default for GprParams {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            max_iter: 1000,
            grad_tol: 1e-6,
            max_halvings: 30,
        }
    }
}

impl GprParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::invalid(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::invalid(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.max_iter == 0 || self.max_halvings == 0 {
            return Err(Error::invalid("max_iter and max_halvings must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of a single rotation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSolution {
    /// Rotated loadings `A·T`.
    pub lambda: LoadingMatrix,
    pub t: TransformationMatrix,
    /// Minimised objective, `-criterion_v`.
    pub f_value: f64,
    pub criterion_v: f64,
    /// Objective at the start matrix followed by every accepted step.
    pub f_trace: Vec<f64>,
    pub converged: bool,
    /// Number of iterates at which the gradient was evaluated (start included).
    pub iterations: usize,
}

/// Varimax criterion: per-column variance of the squared loadings, averaged
/// over columns.
///
/// `v = (1/k) Σ_j (1/m) Σ_i (λ²_ij - s_j)²` with `s_j` the column mean of the
/// squared loadings.
pub fn varimax_criterion(lambda: &LoadingMatrix) -> f64 {
    criterion_of(lambda.as_matrix())
}

pub(crate) fn criterion_of(lambda: &DMatrix<f64>) -> f64 {
    let (m, k) = lambda.shape();
    let mf = m as f64;
    let mut total = 0.0;
    for col in lambda.column_iter() {
        let mean = col.iter().map(|x| x * x).sum::<f64>() / mf;
        let var = col
            .iter()
            .map(|x| {
                let d = x * x - mean;
                d * d
            })
            .sum::<f64>()
            / mf;
        total += var;
    }
    total / k as f64
}

/// Gradient of the minimised objective `Q(Λ) = -v(Λ)` with respect to `Λ`:
/// `G_ij = -(4/(k·m)) λ_ij (λ²_ij - s_j)`.
pub fn varimax_gradient(lambda: &LoadingMatrix) -> DMatrix<f64> {
    objective_and_gradient(lambda.as_matrix()).1
}

/// Returns `(-v(Λ), ∂(-v)/∂Λ)` in one pass.
fn objective_and_gradient(lambda: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let (m, k) = lambda.shape();
    let mf = m as f64;
    let scale = -4.0 / (k as f64 * mf);
    let mut grad = DMatrix::zeros(m, k);
    let mut total = 0.0;
    for (j, col) in lambda.column_iter().enumerate() {
        let mean = col.iter().map(|x| x * x).sum::<f64>() / mf;
        let mut var = 0.0;
        for (i, &x) in col.iter().enumerate() {
            let d = x * x - mean;
            var += d * d;
            grad[(i, j)] = scale * x * d;
        }
        total += var / mf;
    }
    (-total / k as f64, grad)
}

/// Nearest orthogonal matrix in Frobenius norm: the polar factor `U·V'` of
/// `M = U·S·V'`.
pub fn project_orthogonal(m: &DMatrix<f64>) -> Result<TransformationMatrix> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::invalid("projection needs a non-empty square matrix"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("projection input has non-finite entries"));
    }
    polar_factor(m).map(TransformationMatrix::from_trusted)
}

fn polar_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(true, true);
    let smallest = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest < MIN_SINGULAR_VALUE {
        return Err(Error::DegenerateProjection(smallest));
    }
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::DegenerateProjection(smallest)),
    }
}

/// Projects a gradient onto the tangent space of the orthogonal group at `t`:
/// `G - T·sym(T'G)`.
fn tangent_component(t: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let tg = t.transpose() * g;
    let sym = (&tg + tg.transpose()) * 0.5;
    g - t * sym
}

/// Runs orthogonal GPR-Varimax from `t0`.
///
/// Every accepted step strictly lowers `f = -v`: a step of length `α` along
/// the projected gradient `Gp` is accepted when
/// `f(T~) < f(T) - α·||Gp||²/2`. At the start of each iteration the step
/// length is doubled, then halved until a step is accepted; if
/// `max_halvings` halvings all fail the current point is returned as
/// stationary with `converged = true`. Hitting `max_iter`
/// accepted steps returns the last iterate with `converged = false`.
pub fn gpr_rotate(
    a: &LoadingMatrix,
    t0: &TransformationMatrix,
    params: &GprParams,
) -> Result<RotationSolution> {
    params.validate()?;
    if t0.dim() != a.ncols() {
        return Err(Error::invalid(format!(
            "start matrix is {0}x{0} but loadings have {1} columns",
            t0.dim(),
            a.ncols()
        )));
    }
    let a_mat = a.as_matrix();
    let a_t = a_mat.transpose();

    let mut t = t0.as_matrix().clone();
    let mut lambda = a_mat * &t;
    let (mut f, mut dq) = objective_and_gradient(&lambda);
    let mut f_trace = vec![f];
    let mut alpha = params.alpha0;
    let mut converged = false;

    loop {
        let gf = &a_t * &dq;
        let tangent = tangent_component(&t, &gf);
        let grad_norm = tangent.norm();
        if grad_norm < params.grad_tol {
            converged = true;
            break;
        }
        if f_trace.len() > params.max_iter {
            break;
        }

        alpha *= 2.0;
        let mut accepted = None;
        for _ in 0..=params.max_halvings {
            let candidate = polar_factor(&(&t - &tangent * alpha))?;
            let cand_lambda = a_mat * &candidate;
            let (cand_f, cand_dq) = objective_and_gradient(&cand_lambda);
            // Sufficient decrease; implies the strict descent f(T~) < f(T).
            if cand_f < f - 0.5 * alpha * grad_norm * grad_norm {
                accepted = Some((candidate, cand_lambda, cand_f, cand_dq));
                break;
            }
            alpha *= 0.5;
        }

        match accepted {
            Some((next_t, next_lambda, next_f, next_dq)) => {
                t = next_t;
                lambda = next_lambda;
                f = next_f;
                dq = next_dq;
                f_trace.push(f);
            }
            None => {
                // No descending step at any tried length: numerically stationary.
                converged = true;
                break;
            }
        }
    }

    Ok(RotationSolution {
        lambda: LoadingMatrix::from_trusted(lambda),
        t: TransformationMatrix::from_trusted(t),
        f_value: f,
        criterion_v: -f,
        iterations: f_trace.len(),
        f_trace,
        converged,
    })
}
