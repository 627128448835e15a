//! Orthogonal gradient projection rotation (GPR) toward the Varimax criterion,
//! random multi-start optimization, and a seeded Monte Carlo harness that
//! measures how many random starts GPR-Varimax needs before its results stop
//! improving.
//!
//! The crate is organised bottom-up:
//!
//! * [`rotation`]: criterion, gradient, orthogonal projection and the GPR
//!   iteration itself.
//! * [`normalization`]: Kaiser row normalization.
//! * [`multistart`]: random orthonormal starts, best-of-q and adaptive
//!   stopping.
//! * [`pairwise`]: classic planar (Kaiser) Varimax, used as the benchmark.
//! * [`pca`]: correlation matrices and principal component loadings.
//! * [`popgen`]: finite populations with perfect orthogonal simple structure.
//! * [`metrics`]: Tucker congruence, component matching and RMSE.
//! * [`harness`]: the simulation grid, cut-off scans and report files.
//! * [`io`]: loading matrices as CSV.

pub mod error;
pub mod harness;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod multistart;
pub mod normalization;
pub mod pairwise;
pub mod pca;
pub mod popgen;
pub mod rng;
pub mod rotation;

pub use error::{Error, ErrorClass, Result};
pub use matrix::{LoadingMatrix, TransformationMatrix};
pub use multistart::{adaptive_rotate, multi_start_rotate, random_orthonormal, MultiStartResult, StartKind, StartSpec};
pub use normalization::{kaiser_denormalize, kaiser_normalize, RowScales};
pub use pairwise::{pairwise_varimax, PairwiseParams};
pub use rotation::{gpr_rotate, project_orthogonal, varimax_criterion, varimax_gradient, GprParams, RotationSolution};
