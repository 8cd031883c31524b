//! Dynamic tomography over level curves.
//!
//! The forward operator integrates an image over the level curves
//! `{x : phi(t, x) = s}` of a phase function with a positive weight. The
//! crate provides the curve families (static, moving object, fan beam),
//! discrete forward and adjoint operators, checkers for the conditions under
//! which the normal operator is elliptic, and normal-equation solvers.

// `!(x > 0.0)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod microlocal;
pub mod operators;
pub mod par;
pub mod phantom;
pub mod recon;

pub use error::{Error, Result};
