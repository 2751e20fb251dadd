//! Numerical workbench for the steady two-dimensional Navier–Stokes equations
//! in the whole plane with a compactly supported force.
//!
//! The crate solves the problem on a sequence of growing disks (invading
//! domains) in streamfunction–vorticity form, recovers pressure and derived
//! fields, evaluates a catalogue of a-priori inequalities on the computed
//! solutions, and cross-checks small-data solutions against a fixed-point
//! iteration built on the Oseen fundamental tensor.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod field;
pub mod forcing;
pub mod fourier;
pub mod grid;
pub mod invading;
pub mod io;
pub mod linalg;
pub mod nse;
pub mod operators;
pub mod oseen;
pub mod poisson;

pub use error::{Error, Result};
pub use estimates::{EstimateReport, Status};
pub use field::{CircleMean, ScalarField, TensorField, VectorField};
pub use grid::PolarGrid;
