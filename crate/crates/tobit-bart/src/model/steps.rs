//! Individual Gibbs steps of the selection-model samplers.

use super::{CovariancePrior, ModelError};
use crate::math::{
    sample_inverse_gamma, sample_inverse_wishart_2, sample_truncated_normal, Interval, SymMat2,
};
use crate::rng::RngStream;

/// Per-observation conditional means and error parameters entering the
/// latent draw; in Gaussian mode mu1 = mu2 = 0 and (gamma, phi) are
/// shared, in mixture mode they vary by observation.
#[derive(Debug, Clone, Copy)]
pub struct LatentMeans {
    pub f_z: f64,
    pub f_y: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma: f64,
    pub phi: f64,
}

/// Latent selection variable draw. Censored rows are truncated to the
/// negative half-line around f_z + mu1 with unit variance; selected rows
/// to the positive half-line around the regression of the selection error
/// on the observed outcome residual.
pub fn draw_latent_z(
    z_star: &mut [f64],
    selected: &[bool],
    means: impl Fn(usize) -> LatentMeans,
    y: &[Option<f64>],
    rng: &mut RngStream,
) {
    for i in 0..z_star.len() {
        let m = means(i);
        if selected[i] {
            let yi = y[i].expect("selected row has outcome");
            let s2 = m.gamma * m.gamma + m.phi;
            let mean = m.f_z + m.mu1 + m.gamma * (yi - m.mu2 - m.f_y) / s2;
            let var = m.phi / s2;
            z_star[i] = sample_truncated_normal(mean, var, Interval::above(0.0), rng).value;
        } else {
            z_star[i] =
                sample_truncated_normal(m.f_z + m.mu1, 1.0, Interval::below(0.0), rng).value;
        }
    }
}

/// Latent outcome draw for binary outcomes: conditional on the selection
/// latent, y* is normal around f_y + mu2 + gamma (z* - mu1 - f_z) with
/// variance phi, truncated to the half-line matching the observed label.
pub fn draw_latent_y_binary(
    y_star: &mut [f64],
    rows: &[usize],
    y_binary: &[bool],
    z_star: &[f64],
    means: impl Fn(usize) -> LatentMeans,
    rng: &mut RngStream,
) {
    for (pos, &i) in rows.iter().enumerate() {
        let m = means(i);
        let mean = m.f_y + m.mu2 + m.gamma * (z_star[i] - m.mu1 - m.f_z);
        let region = if y_binary[pos] { Interval::above(0.0) } else { Interval::below(0.0) };
        y_star[pos] = sample_truncated_normal(mean, m.phi, region, rng).value;
    }
}

/// Full conditional draw of gamma given phi and the uncensored residual
/// pairs (z_tilde, y_tilde).
pub fn draw_gamma(
    z_tilde: &[f64],
    y_tilde: &[f64],
    phi: f64,
    prior: &CovariancePrior,
    rng: &mut RngStream,
) -> Result<f64, ModelError> {
    let szz: f64 = z_tilde.iter().map(|v| v * v).sum();
    let szy: f64 = z_tilde.iter().zip(y_tilde).map(|(a, b)| a * b).sum();
    match *prior {
        CovariancePrior::Vh { g0, tau, .. } => {
            let prec = 1.0 / tau + szz;
            let mean = (g0 / tau + szy) / prec;
            Ok(mean + (phi / prec).sqrt() * rng.standard_normal())
        }
        CovariancePrior::Omori { g0, big_g0, .. } => {
            let prec = 1.0 / big_g0 + szz / phi;
            let mean = (g0 / big_g0 + szy / phi) / prec;
            Ok(mean + (1.0 / prec).sqrt() * rng.standard_normal())
        }
        CovariancePrior::Ding { .. } => Err(ModelError::UnsupportedPrior(
            "Ding prior updates (gamma, phi) through the expanded covariance draw",
        )),
    }
}

/// Full conditional draw of phi given gamma.
pub fn draw_phi(
    z_tilde: &[f64],
    y_tilde: &[f64],
    gamma: f64,
    prior: &CovariancePrior,
    rng: &mut RngStream,
) -> Result<f64, ModelError> {
    let ssr: f64 = y_tilde
        .iter()
        .zip(z_tilde)
        .map(|(y, z)| {
            let r = y - gamma * z;
            r * r
        })
        .sum();
    let n1 = z_tilde.len() as f64;
    match *prior {
        CovariancePrior::Vh { g0, tau, n0, s0 } => {
            let dg = gamma - g0;
            Ok(sample_inverse_gamma(
                0.5 * (n0 + n1 + 1.0),
                0.5 * s0 + dg * dg / (2.0 * tau) + 0.5 * ssr,
                rng,
            ))
        }
        CovariancePrior::Omori { n0, s0, .. } => {
            Ok(sample_inverse_gamma(0.5 * (n0 + n1), 0.5 * s0 + 0.5 * ssr, rng))
        }
        CovariancePrior::Ding { .. } => Err(ModelError::UnsupportedPrior(
            "Ding prior updates (gamma, phi) through the expanded covariance draw",
        )),
    }
}

/// Joint normal-inverse-gamma draw of (gamma, phi); exact for the
/// conditionally conjugate gamma | phi ~ N(g0, tau phi) prior only.
pub fn draw_gamma_phi_joint(
    z_tilde: &[f64],
    y_tilde: &[f64],
    prior: &CovariancePrior,
    rng: &mut RngStream,
) -> Result<(f64, f64), ModelError> {
    let CovariancePrior::Vh { g0, tau, n0, s0 } = *prior else {
        return Err(ModelError::UnsupportedPrior(
            "joint (gamma, phi) draw requires the gamma | phi ~ N(g0, tau phi) prior",
        ));
    };
    let szz: f64 = z_tilde.iter().map(|v| v * v).sum();
    let szy: f64 = z_tilde.iter().zip(y_tilde).map(|(a, b)| a * b).sum();
    let syy: f64 = y_tilde.iter().map(|v| v * v).sum();
    let n1 = z_tilde.len() as f64;
    let a = 1.0 / tau + szz;
    let h = (g0 / tau + szy) / a;
    let scale = 0.5 * (s0 + g0 * g0 / tau - a * h * h + syy);
    let phi = sample_inverse_gamma(0.5 * (n1 + n0), scale.max(1e-300), rng);
    let gamma = h + (phi / a).sqrt() * rng.standard_normal();
    Ok((gamma, phi))
}

/// Outcome of the parameter-expanded inverse-Wishart covariance draw.
#[derive(Debug, Clone, Copy)]
pub struct DingDraw {
    pub gamma: f64,
    pub phi: f64,
    /// expansion scale sigma_1^2 drawn en route
    pub sigma1_2: f64,
    /// expanded outcome variance (the 2,2 entry of the Wishart draw)
    pub sigma2t_2: f64,
    /// numerically degenerate draws that had to be redrawn
    pub redraws: usize,
}

/// Covariance update for the scaled inverse-Wishart prior: draw the
/// expansion scale from its conditional, form the expanded residuals,
/// draw the expanded covariance, and map back to (gamma, phi).
pub fn draw_omega_ding(
    z_tilde: &[f64],
    y_tilde: &[f64],
    nu0: f64,
    c: f64,
    current_rho: f64,
    rng: &mut RngStream,
) -> DingDraw {
    let mut redraws = 0usize;
    loop {
        let sigma1_2 = sample_inverse_gamma(
            0.5 * nu0,
            c / (2.0 * (1.0 - current_rho * current_rho).max(1e-12)),
            rng,
        );
        let s1 = sigma1_2.sqrt();
        let mut s11 = c;
        let mut s12 = 0.0;
        let mut s22 = c;
        for (z, y) in z_tilde.iter().zip(y_tilde) {
            let e1 = s1 * z;
            s11 += e1 * e1;
            s12 += e1 * y;
            s22 += y * y;
        }
        let df = z_tilde.len() as f64 + nu0;
        let sig = match sample_inverse_wishart_2(df, SymMat2::new(s11, s12, s22), rng) {
            Ok(s) => s,
            Err(_) => {
                redraws += 1;
                continue;
            }
        };
        let st1 = sig.a11.sqrt();
        let gamma = sig.a12 / st1;
        let phi = sig.det() / sig.a11;
        if phi > 0.0 && phi.is_finite() && gamma.is_finite() {
            return DingDraw {
                gamma,
                phi,
                sigma1_2,
                sigma2t_2: sig.a22,
                redraws,
            };
        }
        redraws += 1;
    }
}
