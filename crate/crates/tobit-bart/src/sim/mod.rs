//! Simulation data-generating processes and the scenario runner used to
//! reproduce the benchmark tables at configurable scale.

mod brewer;
mod cate;
mod iqbal;
mod scenario;

pub use brewer::gen_brewer;
pub use cate::gen_cate;
pub use iqbal::gen_iqbal;
pub use scenario::{
    run_scenario, ModelSpec, PriorSpec, RepMetrics, ScenarioModelResult, ScenarioTable,
};

use crate::bart::Covariates;
use crate::model::Dataset;
use crate::rng::RngStream;
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unsupported DGP id {0}")]
    UnsupportedId(u8),
    #[error("invalid spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Normal,
    T5,
    NormalMixture,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DgpFamily {
    Brewer { id: u8 },
    Iqbal { p: usize },
    Cate { p: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct DgpSpec {
    pub family: DgpFamily,
    pub rho: f64,
    pub error_kind: ErrorKind,
    pub n_train: usize,
    pub n_test: usize,
    pub reps: usize,
    pub seed: u64,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_train == 0 || self.n_test == 0 || self.reps == 0 {
            return Err(SimError::BadSpec("n_train, n_test, reps must be positive".into()));
        }
        if !(-1.0..1.0).contains(&self.rho) {
            return Err(SimError::BadSpec("rho must lie in (-1, 1)".into()));
        }
        match self.family {
            DgpFamily::Brewer { id } if ![1, 2, 3, 5].contains(&id) => {
                Err(SimError::UnsupportedId(id))
            }
            DgpFamily::Iqbal { p } if p < 3 => {
                Err(SimError::BadSpec("linear DGP needs p >= 3".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Per-observation truths of a generated sample.
#[derive(Debug, Clone, Default)]
pub struct SimTruth {
    /// true latent-outcome mean
    pub f_y: Vec<f64>,
    /// true selection index (including intercepts)
    pub f_z: Vec<f64>,
    /// true selection probability P(z* >= 0) under the true error law
    pub sel_prob: Vec<f64>,
    /// true latent treatment effect (heterogeneous-effect DGP)
    pub cate: Option<Vec<f64>>,
    /// true effect of treatment on the selection probability
    pub sel_effect: Option<Vec<f64>>,
}

/// Extra test designs for the treatment-effect DGP: both arms.
#[derive(Debug, Clone)]
pub struct CateArms {
    pub x_test_treat: Covariates,
    pub x_test_ctrl: Covariates,
    pub w_test_treat: Covariates,
    pub w_test_ctrl: Covariates,
}

#[derive(Debug)]
pub struct GeneratedData {
    pub train: Dataset,
    pub x_test: Covariates,
    pub w_test: Covariates,
    pub truth_train: SimTruth,
    pub truth_test: SimTruth,
    pub arms: Option<CateArms>,
}

pub fn generate(spec: &DgpSpec, rng: &RngStream) -> Result<GeneratedData, SimError> {
    spec.validate()?;
    match spec.family {
        DgpFamily::Brewer { id } => gen_brewer(spec, id, rng),
        DgpFamily::Iqbal { p } => gen_iqbal(spec, p, rng),
        DgpFamily::Cate { p } => gen_cate(spec, p, rng),
    }
}

/// Student-t CDF (used for selection-probability truths under t errors).
pub(crate) fn student_t_cdf(x: f64, df: f64) -> f64 {
    let b = beta_reg(0.5 * df, 0.5, df / (df + x * x));
    if x >= 0.0 {
        1.0 - 0.5 * b
    } else {
        0.5 * b
    }
}

/// Correlated error pairs (xi, eta) for the shared error kinds. Under t5
/// errors the correlation is 1/sqrt(2) by construction; under the
/// bivariate normal mixture it is 0.5.
pub(crate) fn draw_errors(kind: ErrorKind, rho: f64, rng: &mut RngStream) -> (f64, f64) {
    match kind {
        ErrorKind::Normal => {
            let xi = rng.standard_normal();
            let eta = rho * xi + (1.0 - rho * rho).sqrt() * rng.standard_normal();
            (xi, eta)
        }
        ErrorKind::T5 => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let xi = draw_t5(rng);
            let eta = r * xi + (1.0 - r * r).sqrt() * draw_t5(rng);
            (xi, eta)
        }
        ErrorKind::NormalMixture => {
            // 0.3 N((0, -2.1), S) + 0.7 N((0, 0.9), S), S12 = 0.85
            let m2 = if rng.uniform() < 0.3 { -2.1 } else { 0.9 };
            let z1 = rng.standard_normal();
            let z2 = rng.standard_normal();
            let b = 0.85 * z1 + (1.0 - 0.85f64 * 0.85).sqrt() * z2;
            (z1, m2 + b)
        }
    }
}

pub(crate) fn draw_t5(rng: &mut RngStream) -> f64 {
    let z = rng.standard_normal();
    let chi = crate::math::sample_chi_square(5.0, rng);
    z / (chi / 5.0).sqrt()
}

/// P(index + xi >= 0) for the error kind driving the selection equation.
pub(crate) fn selection_probability(kind: ErrorKind, index: f64) -> f64 {
    match kind {
        ErrorKind::Normal | ErrorKind::NormalMixture => crate::math::normal_cdf(index),
        ErrorKind::T5 => student_t_cdf(index, 5.0),
    }
}
