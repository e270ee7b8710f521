//! Quantum many-body probes for global magnetometry.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fisher;
pub mod free_fermion;
pub mod global_metric;
pub mod lattice;
pub mod linalg;
pub mod probe_optimizer;
pub mod quadrature;

pub use error::{Error, Result};
