//! Cyclic block coordinate descent for composite nonconvex problems.

// `!(x > 0.0)` is deliberate: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::single_range_in_vec_init)]

pub mod algorithms;
pub mod block;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod sampling;
pub mod smoothness;
pub mod suite;
pub mod theory;

pub use block::{metric_norm_sq, BlockPartition, DiagonalMetric, MaskKind};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use problems::{Objective, Regularizer};
