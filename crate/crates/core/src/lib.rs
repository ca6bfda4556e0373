//! Joint transmit/receive angle and polarization estimation for bistatic
//! coprime EMVS-MIMO radar via coarray tensor decomposition.

// `!(x > t)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cp;
pub mod crb;
pub mod emvs;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod pipeline;
pub mod tensor;

pub use error::{Error, Result};
