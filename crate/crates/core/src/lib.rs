//! Polynomial superlevel sets `{x in B : p(x) >= 1}` of small volume around
//! finite point clouds.
//!
//! The volume of the superlevel set is bounded above by the integral of `p`
//! over the box `B` whenever `p` is nonnegative there, so minimizing that
//! integral (a linear function of the coefficients, weighted by the box
//! moments) subject to `p >= 1` on the cloud and `p >= 0` on a dense grid of
//! `B` gives a linear program whose solution shrinks the set.
//!
//! * [`polybasis`]: multi-indices, monomial and tensor-Chebyshev bases, Gram matrices
//! * [`moments`]: box moments, moment matrices, orthonormalization
//! * [`lp`]: dense LP solver and MPS export
//! * [`fit`]: grids, LP assembly, fitting and degree sweeps
//! * [`verify`]: Monte Carlo volume, volume bound, trace identity, component counts

pub mod domain;
pub mod error;
pub mod fit;
pub mod lp;
pub mod moments;
pub mod polybasis;
pub mod verify;

pub use domain::BoxDomain;
pub use error::{Error, Result};
pub use fit::{degree_sweep, fit, fit_problem, FitOptions, FitProblem, FitResult, GridSpec, PointCloud};
pub use polybasis::{BasisKind, MultiIndex, PolyBasis, Polynomial};
