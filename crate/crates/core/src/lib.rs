//! Learned incomplete-factorization preconditioners for the conjugate
//! gradient method, with the classical baselines, data generators and the
//! benchmark harness used to evaluate them.

pub mod bench;
pub mod datagen;
pub mod error;
pub mod graph;
pub mod krylov;
pub mod model;
pub mod precond;
pub mod sparse;
pub mod train;

pub use error::{Error, Result};
