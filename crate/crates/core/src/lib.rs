//! Numerical toolkit for time-fractional subdiffusion equations
//! `∂ₜᵅ(u − u₀) − div(A Du) = f` with bounded measurable coefficients.
//!
//! * [`kernels`]: Riemann–Liouville, Mittag-Leffler, Yosida and resolvent kernels,
//!   plus a Volterra solver used as a cross-check.
//! * [`fracops`]: discrete convolution, the L1 derivative and identity verifiers.
//! * [`solver`]: implicit finite-difference solver in one and two space dimensions.
//! * [`fundsol`]: the whole-space fundamental solution and exponent algebra.
//! * [`harnack`]: box geometry and the weak Harnack measurement harness.
//! * [`cli`]: the configuration-driven experiment runner.

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fracops;
pub mod fundsol;
pub mod harnack;
pub mod kernels;
pub mod quadrature;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use kernels::{FractionalOrder, KernelKind, KernelTable, MittagLefflerParams};
