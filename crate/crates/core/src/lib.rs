//! Numerical laboratory for moments of Dedekind zeta functions of quadratic fields.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod euler;
pub mod experiment;
pub mod field;
pub mod hybrid;
pub mod lfun;
pub mod moments;
pub mod primes;
pub mod quad;
pub mod recipe;
pub mod special;
pub mod zeros;

pub use error::{LabError, Result};
