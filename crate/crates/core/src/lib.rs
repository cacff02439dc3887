//! Numerical kernels for stochastic evolution equations
//!
//! ```text
//! dX = (AX + B(X)) dt + dW
//! ```
//!
//! on a Hilbert space truncated to the first `m` eigenmodes of a negative
//! definite self-adjoint operator `A`, with `B` bounded and merely
//! measurable and `W` cylindrical.
//!
//! The crate is `no_std` (it needs `alloc`) and free of IO; the `parallel`
//! feature pulls in `std` and rayon for data-parallel solver sweeps. It provides the
//! Ornstein–Uhlenbeck machinery (semigroup, covariances, gradient formula,
//! resolvent), a fixed-point solver for the elliptic Kolmogorov equation
//! `λu − Lu − ⟨B, Du⟩ = f`, an exact-linear path engine, Girsanov weights,
//! and residual checks for the Itô/Zvonkin identities satisfied by the
//! Kolmogorov solution along paths.
#![cfg_attr(not(any(test, feature = "parallel")), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod drifts;
pub mod error;
pub mod field;
pub mod gaussian;
pub mod girsanov;
pub mod grid;
pub mod kolmogorov;
pub mod math;
pub mod mollify;
pub mod paths;
pub mod quadrature;
pub mod rng;
pub mod semigroup;
pub mod spectrum;
pub mod stats;
pub mod zvonkin;

pub use error::{Error, Result};
pub use field::{DriftField, ScalarField, Smoothness};
pub use spectrum::{DiagonalKernel, GrowthLaw, SpectralOperator, Time};
