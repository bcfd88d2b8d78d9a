//! Interlocked open chains: explicit construction, invariant checks and
//! randomized unlock planning.

// Comparisons like `!(x > 0.0)` are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod cli;
pub mod construction;
pub mod geom;
pub mod linkage;
pub mod planner;
pub mod scene;
