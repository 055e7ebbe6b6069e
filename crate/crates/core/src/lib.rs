// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod functionals;
pub mod gaussian;
pub mod quadrature;
pub mod report;
pub mod slack;
pub mod stability;
pub mod transport;
pub mod wasserstein;

pub use error::{Error, Result};
