//! Random-scan Metropolis-within-Gibbs sampling for log-concave targets,
//! with spectral and conductance verification tools for the one-dimensional
//! coordinate kernels and a hierarchical logistic regression benchmark.

pub mod adapt;
pub mod cli;
pub mod decomp2d;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod kernel;
pub(crate) mod lanczos;
pub mod model;
pub(crate) mod quad;
pub mod spectral;

pub use error::{Error, Result};
