//! Hyperbolic-geometry and Fuchsian-group toolkit for finite-horizon
//! experiments on horocycle and geodesic flows.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod error;
pub mod fuchsian;
pub mod hirsch;
pub mod hyperbolic;
pub mod keylemma;

pub use error::{Error, Result};
