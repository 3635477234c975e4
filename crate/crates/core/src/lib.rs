//! Closed-form value functions and optimal feedbacks for five infinite-dimensional
//! control problems (spatial growth, transboundary pollution, vintage capital as a
//! delay equation and as a transport equation, time-to-build), with simulation
//! and numerical verification tools.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod exec;
pub mod gridcore;
pub mod hjbverify;
pub mod models;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
