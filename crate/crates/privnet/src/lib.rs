//! Simulation and change point detection for dynamic Bernoulli networks under
//! local differential privacy.
//!
//! The crate provides:
//!
//! - [`netgen`]: dynamic (bipartite) inhomogeneous Bernoulli network models
//!   with change points, samplers, and worst-case instance generators;
//! - [`ldp`]: the two privatization channels (edge-level randomized response
//!   and the row-level `±B` hypercube mechanism) together with exact
//!   small-dimension enumeration oracles for privacy and moment checks;
//! - [`cusum`]: matrix CUSUM statistics and the inner-product scan;
//! - [`detector`]: network binary segmentation over random intervals, the
//!   simplified full-segment variant, and the even/odd data split;
//! - [`metrics`]: Hausdorff-distance evaluation of change point estimates;
//! - [`simlab`]: a reproducible scenario-grid experiment harness emitting CSV
//!   tables and SVG plots;
//! - [`io`]: on-disk formats (model config TOML, sequence directories).
//!
//! Numeric kernels are generic over the floating point [`Scalar`] type;
//! the aliases below fix the common double-precision instantiation.

pub mod cusum;
pub mod detector;
pub mod error;
pub mod io;
pub mod ldp;
pub mod metrics;
pub mod netgen;
pub mod scalar;
pub mod seed;
pub mod simlab;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use seed::SeedSpace;

/// Probability matrix over `f64`.
pub type ProbMat = netgen::ProbMatrix<f64>;
/// Network sequence over `f64`.
pub type NetSeq = netgen::NetworkSequence<f64>;
/// Model specification over `f64`.
pub type Model = netgen::ModelSpec<f64>;
/// CUSUM matrix over `f64`.
pub type CusumMat = cusum::CusumMatrix<f64>;
