//! Bayesian Type 2 Tobit sample-selection models with sum-of-trees mean
//! functions in the selection and outcome equations.
//!
//! The crate provides:
//!
//! * numerical kernels (truncated normals, inverse gamma / 2x2 inverse
//!   Wishart draws, modified Bessel K, adaptive quadrature) in [`math`],
//! * regression-tree machinery and marginalized tree likelihoods in [`bart`],
//! * Gibbs samplers for Gaussian-error Tobit models with three covariance
//!   priors and a leaf/covariance-marginalized variant in [`model`],
//! * a Dirichlet-process-mixture error model in [`dpm`],
//! * prior calibration formulas and implied-prior distributions in
//!   [`calibrate`],
//! * posterior prediction and treatment-effect estimands in [`estimands`],
//! * simulation DGPs and a scenario runner in [`sim`],
//! * CSV ingestion and the command-line entry points in [`cli`].

pub mod bart;
pub mod calibrate;
pub mod cli;
pub mod dpm;
pub mod estimands;
pub mod math;
pub mod model;
pub mod rng;
pub mod sim;
pub mod stats;

pub use rng::RngStream;
