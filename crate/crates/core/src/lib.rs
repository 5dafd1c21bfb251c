//! Coordinate descent, ADMM, proximal operators and Dykstra's algorithm,
//! composed into portfolio allocation models.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod admm;
pub mod cli;
pub mod cd;
pub mod dykstra;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod numerics;
pub mod prox;
pub mod portfolio;
pub mod qp;
pub mod report;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector};
pub use report::{SolverReport, Status};
