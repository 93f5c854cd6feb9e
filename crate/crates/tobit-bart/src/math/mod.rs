//! Shared deterministic and stochastic numerical kernels.

mod bessel;
mod gamma;
mod normal;
mod quad;
mod truncnorm;
mod wishart;

pub use bessel::bessel_k;
pub use gamma::{
    chi_square_quantile, inverse_gamma_cdf, inverse_gamma_quantile, sample_chi_square,
    sample_gamma, sample_inverse_gamma,
};
pub use normal::{mills_ratio, normal_cdf, normal_inv_cdf, normal_pdf};
pub use quad::{integrate_adaptive, QuadError};
pub use truncnorm::{
    sample_truncated_normal, truncated_normal_cdf, truncated_normal_mean, TruncatedDraw,
};
pub use wishart::{sample_inverse_wishart_2, SymMat2};

/// An interval `(lower, upper)` of the extended real line; either bound may
/// be infinite. Used both as a truncation region and as an integration
/// region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(lower < upper, "invalid interval [{lower}, {upper}]");
        Self { lower, upper }
    }

    pub fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn below(c: f64) -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: c,
        }
    }

    pub fn above(c: f64) -> Self {
        Self {
            lower: c,
            upper: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}
