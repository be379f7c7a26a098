// Positivity guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod dilation;
pub mod duhamel;
pub mod error;
pub mod io;
pub mod ito;
pub mod linalg;
pub mod measurement;
pub mod minkowski;

pub use error::{Error, Result};
