//! Superpositions of fractional Laplacians on a bounded interval.
//!
//! The operator studied here is
//!
//! ```text
//! L_mu u = integral over s in [0,1] of (-Laplacian)^s u  d mu(s),   mu = mu+ - mu-
//! ```
//!
//! on `Omega = (a, b)` with `u = 0` outside `Omega`. Order `s = 0` contributes
//! the identity and `s = 1` the classical Laplacian.
//!
//! The crate is `no_std` (with `alloc`). The `std` feature only links the
//! standard library; `parallel` assembles component matrices on a rayon pool.
//!
//! Layout:
//!
//! - [`measure`]: signed measures over the order `s`, structural hypotheses,
//!   atomization into quadrature nodes.
//! - [`kernel`]: normalization constant, pointwise quadrature oracle,
//!   per-order discretization matrices.
//! - [`operator`]: assembled operator, bilinear forms and norms.
//! - [`eigensolver`]: direct and recursive Rayleigh-quotient spectra.
//! - [`maxprinciple`]: maximum-principle harnesses and the capped-parabola
//!   counterexample.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod eigensolver;
mod error;
pub mod kernel;
pub mod maxprinciple;
pub mod measure;
pub mod operator;
pub mod quadrature;

pub use error::{Error, Result};
pub use kernel::{Grid, GridFunction};
pub use measure::{HypothesisReport, MeasureComponent, QuadratureNode, Sign, SignedMeasure};
pub use operator::OperatorMatrix;
