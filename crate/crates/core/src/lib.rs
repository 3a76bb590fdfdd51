//! Pointwise complex Finsler geometry.
//!
//! Metrics `G(z, v)` on domains of `C^n` are evaluated on truncated Taylor
//! jets, from which every Wirtinger derivative up to order four is read off.
//! On top of that sit the fundamental tensor and nonlinear connection,
//! curvature, Schwarz and Kobayashi checks for holomorphic discs, and fiber
//! integrals over the projectivized tangent space.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl)]

pub mod catalog;
pub mod error;
pub mod exec;
pub mod fiber;
pub mod finsler;
pub mod jet;
pub mod linalg;
pub mod report;
pub mod rng;
pub mod schwarz;

pub use catalog::{Domain, HermitianField, MetricSpec, ScalarField};
pub use error::{FinslerError, Result};
pub use exec::Execution;
pub use jet::{evaluate_jet, fd_oracle, wirtinger, WirtingerIndex};
