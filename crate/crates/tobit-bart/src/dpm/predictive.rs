//! Out-of-sample error draws and the per-iteration dependence measure.

use super::gibbs::draw_base;
use super::{ClusterParams, DpmConfig, DpmError, DpmState};
use crate::rng::RngStream;

/// Error parameters for a new observation: an existing observation's atom
/// with probability n/(alpha+n) (uniformly over observations), otherwise a
/// fresh draw from the base measure.
pub fn sample_error_predictive(
    state: &DpmState,
    config: &DpmConfig,
    rng: &mut RngStream,
) -> ClusterParams {
    let n = state.n() as f64;
    if rng.uniform() < n / (state.alpha + n) {
        let i = rng.below(state.n());
        *state.params_of(i)
    } else {
        draw_base(config, rng)
    }
}

/// Dependence measure of one iteration: draw a pseudo-sample u_i ~
/// N(mu_i, Sigma_i) per observation and return its sample correlation.
pub fn dependence_summary(
    params: &[ClusterParams],
    rng: &mut RngStream,
) -> Result<f64, DpmError> {
    if params.len() < 3 {
        return Err(DpmError::TooFewObservations);
    }
    let mut a = Vec::with_capacity(params.len());
    let mut b = Vec::with_capacity(params.len());
    for p in params {
        // Sigma = [[1, g], [g, phi + g^2]] has Cholesky [[1,0],[g, sqrt(phi)]]
        let z1 = rng.standard_normal();
        let z2 = rng.standard_normal();
        a.push(p.mu1 + z1);
        b.push(p.mu2 + p.gamma * z1 + p.phi.sqrt() * z2);
    }
    Ok(crate::stats::correlation(&a, &b))
}
