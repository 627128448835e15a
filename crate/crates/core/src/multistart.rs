//! Random orthonormal start matrices, best-of-q rotation and adaptive
//! stopping.
//!
//! Start matrices are always drawn from the stream in index order, so the
//! first `q'` starts of a run with `q > q'` are identical to a run with `q'`
//! starts from the same seed. Best-of-q is therefore monotone in `q`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{LoadingMatrix, TransformationMatrix};
use crate::rotation::{gpr_rotate, GprParams, RotationSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StartKind {
    Identity,
    Random,
}

/// Which start matrices to use and how many.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StartSpec {
    pub kind: StartKind,
    /// Number of random starts; ignored for [`StartKind::Identity`].
    pub q: usize,
}

impl StartSpec {
    pub fn identity() -> Self {
        Self { kind: StartKind::Identity, q: 1 }
    }

    pub fn random(q: usize) -> Self {
        Self { kind: StartKind::Random, q }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == StartKind::Random && self.q == 0 {
            return Err(Error::invalid("random starts need q >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartResult {
    pub best: RotationSolution,
    /// Criterion of every start in draw order; failed starts hold `-inf`.
    pub all_criteria: Vec<f64>,
    pub q_used: usize,
}

/// Draws a random orthogonal k×k matrix: QR of a standard normal matrix with
/// each column of Q multiplied by the sign of the matching diagonal entry of R.
pub fn random_orthonormal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> TransformationMatrix {
    assert!(k >= 1, "random_orthonormal needs k >= 1");
    loop {
        let g = DMatrix::<f64>::from_fn(k, k, |_, _| rng.sample(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        if r.diagonal().iter().any(|d| d.abs() < 1e-12) {
            continue;
        }
        let mut q = qr.q();
        for (mut col, d) in q.column_iter_mut().zip(r.diagonal().iter()) {
            if *d < 0.0 {
                col.neg_mut();
            }
        }
        return TransformationMatrix::from_trusted(q);
    }
}

/// Rotates from every start (in parallel) and keeps results in start order.
fn rotate_starts(
    a: &LoadingMatrix,
    starts: &[TransformationMatrix],
    params: &GprParams,
) -> Vec<Result<RotationSolution>> {
    starts.par_iter().map(|t0| gpr_rotate(a, t0, params)).collect()
}

/// Tracks the best solution over a growing, ordered sequence of starts.
struct Incumbent {
    best: Option<(usize, RotationSolution)>,
    criteria: Vec<f64>,
    last_error: Option<Error>,
}

impl Incumbent {
    fn new() -> Self {
        Self { best: None, criteria: Vec::new(), last_error: None }
    }

    fn push(&mut self, outcome: Result<RotationSolution>) {
        let idx = self.criteria.len();
        match outcome {
            Ok(sol) => {
                self.criteria.push(sol.criterion_v);
                // Strict comparison: ties keep the earliest start.
                let better = self.best.as_ref().is_none_or(|(_, b)| sol.criterion_v > b.criterion_v);
                if better {
                    self.best = Some((idx, sol));
                }
            }
            Err(e) => {
                self.criteria.push(f64::NEG_INFINITY);
                self.last_error = Some(e);
            }
        }
    }

    fn snapshot(&mut self) -> Result<MultiStartResult> {
        match &self.best {
            Some((_, sol)) => Ok(MultiStartResult {
                best: sol.clone(),
                all_criteria: self.criteria.clone(),
                q_used: self.criteria.len(),
            }),
            None => Err(self
                .last_error
                .take()
                .unwrap_or_else(|| Error::invalid("no starts were run"))),
        }
    }
}

fn draw_starts<R: Rng + ?Sized>(k: usize, count: usize, rng: &mut R) -> Vec<TransformationMatrix> {
    (0..count).map(|_| random_orthonormal(k, rng)).collect()
}

/// Best-of-q GPR-Varimax.
///
/// For [`StartKind::Identity`] this is a single rotation from `I` and the
/// stream is not touched. For [`StartKind::Random`] the q starts are drawn in
/// order, rotated, and the solution with the largest criterion is returned
/// (ties go to the earliest start). A failing start is recorded as `-inf`.
pub fn multi_start_rotate<R: Rng + ?Sized>(
    a: &LoadingMatrix,
    spec: StartSpec,
    params: &GprParams,
    rng: &mut R,
) -> Result<MultiStartResult> {
    spec.validate()?;
    params.validate()?;
    let starts = match spec.kind {
        StartKind::Identity => vec![TransformationMatrix::identity(a.ncols())],
        StartKind::Random => draw_starts(a.ncols(), spec.q, rng),
    };
    let mut inc = Incumbent::new();
    for outcome in rotate_starts(a, &starts, params) {
        inc.push(outcome);
    }
    inc.snapshot()
}

/// Best-of-q for every q in `schedule`, sharing one nested set of
/// `max(schedule)` random starts. Element `i` equals
/// `multi_start_rotate(a, StartSpec::random(schedule[i]), ..)` from the same
/// seed.
pub fn multi_start_prefixes<R: Rng + ?Sized>(
    a: &LoadingMatrix,
    schedule: &[usize],
    params: &GprParams,
    rng: &mut R,
) -> Result<Vec<MultiStartResult>> {
    validate_schedule(schedule)?;
    params.validate()?;
    let total = *schedule.last().unwrap();
    let starts = draw_starts(a.ncols(), total, rng);
    let outcomes = rotate_starts(a, &starts, params);

    let mut inc = Incumbent::new();
    let mut out = Vec::with_capacity(schedule.len());
    let mut points = schedule.iter().peekable();
    for outcome in outcomes {
        inc.push(outcome);
        if points.peek() == Some(&&inc.criteria.len()) {
            out.push(inc.snapshot()?);
            points.next();
        }
    }
    Ok(out)
}

fn validate_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::invalid("start schedule is empty"));
    }
    if schedule[0] == 0 {
        return Err(Error::invalid("start schedule must begin at 1 or more"));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("start schedule must be strictly increasing"));
    }
    Ok(())
}

/// Extends a nested start set along `schedule` and stops as soon as the best
/// criterion improves by no more than `eps_v` between consecutive points.
///
/// The earlier point's result is returned, so `q_used` is always a schedule
/// member. If the criterion never settles the last point is returned.
pub fn adaptive_rotate<R: Rng + ?Sized>(
    a: &LoadingMatrix,
    schedule: &[usize],
    eps_v: f64,
    params: &GprParams,
    rng: &mut R,
) -> Result<MultiStartResult> {
    validate_schedule(schedule)?;
    if !(eps_v > 0.0 && eps_v.is_finite()) {
        return Err(Error::invalid(format!("eps_v must be positive, got {eps_v}")));
    }
    params.validate()?;

    let mut inc = Incumbent::new();
    let mut previous: Option<MultiStartResult> = None;
    for &q in schedule {
        let starts = draw_starts(a.ncols(), q - inc.criteria.len(), rng);
        for outcome in rotate_starts(a, &starts, params) {
            inc.push(outcome);
        }
        let current = inc.snapshot()?;
        if let Some(prev) = previous {
            if current.best.criterion_v - prev.best.criterion_v <= eps_v {
                return Ok(prev);
            }
        }
        previous = Some(current);
    }
    Ok(previous.expect("schedule is non-empty"))
}
