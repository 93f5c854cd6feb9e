//! Selection-model samplers: Gibbs chains for the two-equation selection
//! model with Gaussian or mixture errors, linear or sum-of-trees means,
//! three covariance priors, and a collapsed (leaf- and covariance-
//! marginalized) outcome-block variant.

mod chain;
mod dataset;
mod linear;
mod steps;

pub use chain::{
    run_chain, ChainConfig, DpmDraws, ErrorModel, EvalPoints, FitOutput, MeanModel,
    PosteriorDraws, SamplerKind,
};
pub use dataset::Dataset;
pub use linear::{draw_linear_coefficients, LinearPriors};
pub use steps::{
    draw_gamma, draw_gamma_phi_joint, draw_latent_y_binary, draw_latent_z, draw_omega_ding,
    draw_phi, DingDraw, LatentMeans,
};

use crate::math::SymMat2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dataset has no selected observations")]
    NoSelected,
    #[error("dataset has no unselected observations (required for selection-model fitting)")]
    NoUnselected,
    #[error("prior {0} is not supported by this operation")]
    UnsupportedPrior(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("posterior precision is singular")]
    Singular,
    #[error(transparent)]
    Marginal(#[from] crate::bart::marginal::MarginalError),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("iteration {iter}: {source}")]
    AtIteration {
        iter: usize,
        #[source]
        source: Box<ModelError>,
    },
}

/// Gaussian error state: selection error variance is fixed at one, the
/// outcome error decomposes as eta = gamma xi + sqrt(phi) e.
#[derive(Debug, Clone, Copy)]
pub struct GaussianErrorState {
    pub gamma: f64,
    pub phi: f64,
}

impl GaussianErrorState {
    pub fn new(gamma: f64, phi: f64) -> Self {
        assert!(phi > 0.0, "phi must be positive");
        Self { gamma, phi }
    }

    /// Correlation of the selection and outcome errors.
    pub fn rho(&self) -> f64 {
        self.gamma / (self.gamma * self.gamma + self.phi).sqrt()
    }

    /// Outcome error variance phi + gamma^2.
    pub fn sigma_y2(&self) -> f64 {
        self.phi + self.gamma * self.gamma
    }

    /// Full 2x2 error covariance [[1, gamma], [gamma, phi + gamma^2]].
    pub fn sigma(&self) -> SymMat2 {
        SymMat2::new(1.0, self.gamma, self.sigma_y2())
    }
}

/// Prior on the error covariance parameters (gamma, phi).
#[derive(Debug, Clone, Copy)]
pub enum CovariancePrior {
    /// gamma | phi ~ N(g0, tau phi), phi ~ IG(n0/2, S0/2)
    Vh { g0: f64, tau: f64, n0: f64, s0: f64 },
    /// gamma ~ N(g0, G0) independent of phi ~ IG(n0/2, S0/2)
    Omori { g0: f64, big_g0: f64, n0: f64, s0: f64 },
    /// scaled inverse-Wishart on the expanded covariance; rho marginal
    /// uniform at nu0 = 3
    Ding { nu0: f64, c: f64 },
}

impl CovariancePrior {
    pub fn vh_default(s0: f64) -> Self {
        CovariancePrior::Vh { g0: 0.0, tau: 0.5, n0: 6.0, s0 }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = match *self {
            CovariancePrior::Vh { tau, n0, s0, .. } => tau > 0.0 && n0 > 0.0 && s0 > 0.0,
            CovariancePrior::Omori { big_g0, n0, s0, .. } => {
                big_g0 > 0.0 && n0 > 0.0 && s0 > 0.0
            }
            CovariancePrior::Ding { nu0, c } => nu0 > 1.0 && c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::Data("invalid covariance prior hyperparameters".into()))
        }
    }
}
