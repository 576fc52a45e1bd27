//! Causality analysis for linear operators on discretized resolution spaces.
//!
//! A *resolution space* pairs a space `X` with a nested family of projections
//! `P_t` modelling "the past up to time `t`". An operator `M` is causal when
//! equal pasts of inputs force equal pasts of outputs. This crate makes that
//! notion computable on weighted finite-dimensional models of `L²` and `ℓ²`:
//!
//! * [`linalg`] holds weighted spaces, bounded maps, operators given on an
//!   explicit core subspace, and the eigen/singular-value kernels.
//! * [`resolution`] builds and validates projection families.
//! * [`causality`] computes compatibility defects, the norm-strong causality
//!   modulus over graph balls, closure extensions, and equivalence harnesses.
//! * [`hermite`] reproduces the Hermite-span counterexample: a shift that is
//!   vacuously causal on its core while its closure is not.
//! * [`discrete`] covers Toeplitz (FIR) operators on truncated sequence spaces.

// NaN-rejecting `!(x > 0)` guards and index loops over coupled arrays are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod causality;
pub mod discrete;
pub mod error;
pub mod hermite;
pub mod instances;
pub mod linalg;
pub mod resolution;

pub use error::{Error, Result};
