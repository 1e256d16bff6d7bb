#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod copula;
pub mod dataset;
pub mod diagnostics;
pub mod eval;
pub mod error;
pub mod gibbs;
pub mod io;
pub mod matrix;
pub mod model;
pub mod numeric;
pub mod prior;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;
