#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Simulator and optimizer for energy-efficient task offloading in
//! satellite-terrestrial edge computing networks.

pub mod baselines;
pub mod channel;
pub mod costmodel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod instance;
pub mod linkrate;
pub mod num;
pub mod optimizer;
pub mod oracle;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use num::Scalar;

pub type C64 = nalgebra::Complex<f64>;
pub type C32 = nalgebra::Complex<f32>;
