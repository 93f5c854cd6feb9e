//! Prior calibration and implied-prior distributions for the three
//! covariance priors: data-informed scale choices, the implied correlation
//! densities/CDFs, and outcome-variance prior summaries.

use crate::math::{
    bessel_k, chi_square_quantile, integrate_adaptive, inverse_gamma_cdf, inverse_gamma_quantile,
    normal_cdf, sample_inverse_gamma, Interval, QuadError,
};
use crate::rng::RngStream;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("prior mean undefined: requires n0 > 2")]
    MeanUndefined,
    #[error("infeasible calibration target: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Inputs shared by the calibration formulas.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationInput {
    /// estimated outcome-error variance (sample variance of the selected
    /// outcomes unless a better estimate is supplied)
    pub sigma_hat_y2: f64,
    pub g0: f64,
    pub n0: f64,
    pub tau: f64,
    pub big_g0: f64,
    pub nu0: f64,
    pub q: f64,
}

impl Default for CalibrationInput {
    fn default() -> Self {
        Self {
            sigma_hat_y2: 1.0,
            g0: 0.0,
            n0: 6.0,
            tau: 0.5,
            big_g0: 0.1,
            nu0: 3.0,
            q: 0.95,
        }
    }
}

/// S0 such that E[phi + gamma^2] = sigma_hat_y2 under the conditionally
/// conjugate prior: S0 = (sigma^2 - g0^2)(n0 - 2)/(1 + tau).
pub fn vh_calibrate_s0(inp: &CalibrationInput) -> Result<f64, CalibrationError> {
    if inp.n0 <= 2.0 {
        return Err(CalibrationError::MeanUndefined);
    }
    if inp.sigma_hat_y2 <= inp.g0 * inp.g0 {
        return Err(CalibrationError::Infeasible(
            "sigma_hat_y2 must exceed g0^2".into(),
        ));
    }
    Ok((inp.sigma_hat_y2 - inp.g0 * inp.g0) * (inp.n0 - 2.0) / (1.0 + inp.tau))
}

/// S0 such that E[phi + gamma^2] = sigma_hat_y2 under the independent
/// gamma ~ N(g0, G0) prior: S0 = (n0 - 2)(sigma^2 - G0 (1 + g0^2)).
pub fn omori_calibrate_s0(inp: &CalibrationInput) -> Result<f64, CalibrationError> {
    if inp.n0 <= 2.0 {
        return Err(CalibrationError::MeanUndefined);
    }
    if inp.sigma_hat_y2 <= inp.big_g0 * (1.0 + inp.g0 * inp.g0) {
        return Err(CalibrationError::Infeasible(
            "sigma_hat_y2 must exceed G0 (1 + g0^2)".into(),
        ));
    }
    Ok((inp.n0 - 2.0) * (inp.sigma_hat_y2 - inp.big_g0 * (1.0 + inp.g0 * inp.g0)))
}

/// Result of the scaled inverse-Wishart calibration: the primary value
/// enforces the marginal-quantile condition on the implied
/// IG((nu0-1)/2, c/2) outcome-variance prior; the companion value applies
/// the chi-square shortcut with nu0 degrees of freedom for comparison.
#[derive(Debug, Clone, Copy)]
pub struct DingCalibration {
    pub c: f64,
    pub c_chi2_nu0: f64,
}

/// c such that the q-quantile of the implied outcome-variance prior
/// IG((nu0-1)/2, c/2) equals sigma_hat_y2.
pub fn ding_calibrate_c(sigma_hat_y2: f64, nu0: f64, q: f64) -> DingCalibration {
    assert!(sigma_hat_y2 > 0.0 && nu0 > 1.0 && q > 0.0 && q < 1.0);
    // IG(a, c/2) quantile scales linearly in c
    let unit_q = inverse_gamma_quantile(q, 0.5 * (nu0 - 1.0), 0.5);
    let c = sigma_hat_y2 / unit_q;
    let c_chi2_nu0 = sigma_hat_y2 * chi_square_quantile(1.0 - q, nu0);
    DingCalibration { c, c_chi2_nu0 }
}

/// CDF of the correlation implied by the conditionally conjugate prior:
/// Phi(sqrt(c^2 / (tau (1 - c^2)))) for c >= 0, mirrored below zero.
pub fn vh_rho_cdf(rho: f64, tau: f64) -> f64 {
    assert!(rho > -1.0 && rho < 1.0 && tau > 0.0);
    let t = (rho * rho / (tau * (1.0 - rho * rho))).sqrt();
    if rho >= 0.0 {
        normal_cdf(t)
    } else {
        1.0 - normal_cdf(t)
    }
}

/// Mode locations of the implied correlation prior: {0} for tau <= 1/3,
/// otherwise +- sqrt(1 - 1/(3 tau)).
pub fn vh_rho_modes(tau: f64) -> Vec<f64> {
    assert!(tau > 0.0);
    if tau <= 1.0 / 3.0 {
        vec![0.0]
    } else {
        let m = (1.0 - 1.0 / (3.0 * tau)).sqrt();
        vec![-m, m]
    }
}

/// Normalized density of the correlation implied by the scaled
/// inverse-Wishart prior: (1 - rho^2)^((nu0-3)/2) / B(1/2, (nu0-1)/2).
pub fn ding_rho_density(rho: f64, nu0: f64) -> f64 {
    assert!(rho > -1.0 && rho < 1.0 && nu0 > 1.0);
    let a = 0.5 * (nu0 - 3.0);
    // int_{-1}^{1} (1-r^2)^a dr = B(1/2, a+1) = sqrt(pi) G(a+1)/G(a+3/2)
    let log_norm = 0.5 * std::f64::consts::PI.ln() + ln_gamma(a + 1.0) - ln_gamma(a + 1.5);
    ((1.0 - rho * rho).ln() * a - log_norm).exp()
}

/// Unnormalized density of the correlation implied by the independent
/// gamma prior (g0 = 0): a Bessel-K kernel in rho.
fn omori_rho_kernel(rho: f64, n0: f64, s0: f64, big_g0: f64) -> f64 {
    let om = 1.0 - rho * rho;
    if om <= 0.0 {
        return 0.0;
    }
    let arg = (s0 / big_g0).sqrt() * (rho * rho / om).sqrt();
    if arg > 600.0 {
        return 0.0;
    }
    let nu = 0.5 * (n0 - 1.0);
    if rho == 0.0 {
        // interior nodes never hit 0 exactly; kept for completeness
        return if n0 > 1.0 { 0.0 } else { f64::INFINITY };
    }
    om.powf(-0.25 * (n0 + 5.0)) * rho.abs().powf(nu) * bessel_k(nu, arg)
}

/// CDF of the correlation implied by the independent gamma prior with
/// g0 = 0, by adaptive quadrature of the Bessel-K density.
pub fn omori_rho_cdf(rho: f64, n0: f64, s0: f64, big_g0: f64) -> Result<f64, CalibrationError> {
    assert!(rho > -1.0 && rho < 1.0);
    assert!(n0 > 0.0 && s0 > 0.0 && big_g0 > 0.0);
    let half = integrate_adaptive(
        |r| omori_rho_kernel(r, n0, s0, big_g0),
        Interval::new(0.0, 1.0),
        1e-11,
    )?;
    if rho == 0.0 {
        return Ok(0.5);
    }
    let a = rho.abs();
    let part = integrate_adaptive(
        |r| omori_rho_kernel(r, n0, s0, big_g0),
        Interval::new(0.0, a),
        1e-11,
    )?;
    let tail = 0.5 * part / half;
    Ok(if rho > 0.0 { 0.5 + tail } else { 0.5 - tail })
}

/// Normalized density of the correlation implied by the independent gamma
/// prior (g0 = 0); numerical normalization.
pub fn omori_rho_density(rho: f64, n0: f64, s0: f64, big_g0: f64) -> Result<f64, CalibrationError> {
    let half = integrate_adaptive(
        |r| omori_rho_kernel(r, n0, s0, big_g0),
        Interval::new(0.0, 1.0),
        1e-11,
    )?;
    Ok(omori_rho_kernel(rho, n0, s0, big_g0) / (2.0 * half))
}

/// CDF of the correlation implied by the scaled inverse-Wishart prior:
/// (rho + 1)/2 is Beta((nu0-1)/2, (nu0-1)/2).
pub fn ding_rho_cdf(rho: f64, nu0: f64) -> f64 {
    assert!(rho > -1.0 && rho < 1.0 && nu0 > 1.0);
    let a = 0.5 * (nu0 - 1.0);
    statrs::function::beta::beta_reg(a, a, 0.5 * (rho + 1.0))
}

/// CDF of the outcome variance implied by the scaled inverse-Wishart
/// prior: IG((nu0 - 1)/2, c/2).
pub fn ding_sigma2_marginal_cdf(x: f64, nu0: f64, c: f64) -> f64 {
    assert!(nu0 > 1.0 && c > 0.0);
    inverse_gamma_cdf(x, 0.5 * (nu0 - 1.0), 0.5 * c)
}

/// Prior mean of the outcome variance phi + gamma^2 under the
/// conditionally conjugate prior: (1 + tau) S0/(n0 - 2) + g0^2.
pub fn vh_outcome_var_prior_mean(
    tau: f64,
    s0: f64,
    n0: f64,
    g0: f64,
) -> Result<f64, CalibrationError> {
    if n0 <= 2.0 {
        return Err(CalibrationError::MeanUndefined);
    }
    Ok((1.0 + tau) * s0 / (n0 - 2.0) + g0 * g0)
}

/// Monte Carlo CDF of phi + gamma^2 under the conditionally conjugate
/// prior (no convenient closed form); returns (estimate, standard error).
pub fn vh_outcome_var_cdf_mc(
    x: f64,
    tau: f64,
    s0: f64,
    n0: f64,
    g0: f64,
    draws: usize,
    rng: &mut RngStream,
) -> (f64, f64) {
    let mut hits = 0usize;
    for _ in 0..draws {
        let phi = sample_inverse_gamma(0.5 * n0, 0.5 * s0, rng);
        let gamma = g0 + (tau * phi).sqrt() * rng.standard_normal();
        if phi + gamma * gamma <= x {
            hits += 1;
        }
    }
    let p = hits as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}

/// Modified Struve function of the first kind by its ascending series;
/// adequate for moderate arguments, used only to cross-check the
/// quadrature CDF.
#[cfg(feature = "struve-check")]
pub fn struve_l(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut total = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        let lt = (2.0 * kf + nu + 1.0) * half.ln()
            - ln_gamma(kf + 1.5)
            - ln_gamma(kf + nu + 1.5);
        let term = lt.exp();
        total += term;
        if term < 1e-17 * total.abs() && k > 3 {
            break;
        }
    }
    total
}

/// Closed-form CDF of the implied correlation via the Bessel-K /
/// modified-Struve representation of the variance-gamma CDF; cross-check
/// for the quadrature path.
#[cfg(feature = "struve-check")]
pub fn omori_rho_cdf_struve(rho: f64, n0: f64, s0: f64, big_g0: f64) -> f64 {
    if rho == 0.0 {
        return 0.5;
    }
    let x = (s0 / big_g0).sqrt() * (rho * rho / (1.0 - rho * rho)).sqrt();
    let r = n0;
    let t = x
        * (bessel_k(0.5 * (r - 1.0), x) * struve_l(0.5 * (r - 3.0), x)
            + struve_l(0.5 * (r - 1.0), x) * bessel_k(0.5 * (r - 3.0), x));
    0.5 + 0.5 * rho.signum() * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;

    #[test]
    fn vh_s0_worked_value_and_tau_zero_limit() {
        let inp = CalibrationInput::default();
        let s0 = vh_calibrate_s0(&inp).unwrap();
        assert!((s0 - 8.0 / 3.0).abs() < 1e-12);
        let inp0 = CalibrationInput { tau: 1e-15, ..inp };
        let s0 = vh_calibrate_s0(&inp0).unwrap();
        assert!((s0 - 4.0).abs() < 1e-10);
        assert!(vh_calibrate_s0(&CalibrationInput { n0: 2.0, ..inp }).is_err());
        assert!(vh_calibrate_s0(&CalibrationInput { g0: 1.2, ..inp }).is_err());
    }

    #[test]
    fn vh_s0_monte_carlo_round_trip() {
        let inp = CalibrationInput::default();
        let s0 = vh_calibrate_s0(&inp).unwrap();
        let mut rng = RngStream::new(171);
        let draws = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let phi = sample_inverse_gamma(0.5 * inp.n0, 0.5 * s0, &mut rng);
            let gamma = inp.g0 + (inp.tau * phi).sqrt() * rng.standard_normal();
            acc += phi + gamma * gamma;
        }
        let m = acc / draws as f64;
        assert!((m - 1.0).abs() < 0.01, "MC mean {m}");
        // analytic round trip
        let back = vh_outcome_var_prior_mean(inp.tau, s0, inp.n0, inp.g0).unwrap();
        assert!((back - inp.sigma_hat_y2).abs() < 1e-10);
    }

    #[test]
    fn omori_s0_worked_value_and_limits() {
        let inp = CalibrationInput::default();
        let s0 = omori_calibrate_s0(&inp).unwrap();
        assert!((s0 - 3.6).abs() < 1e-12);
        // G0 -> 0 matches the tau -> 0 conjugate formula
        let tiny = CalibrationInput { big_g0: 1e-14, ..inp };
        let a = omori_calibrate_s0(&tiny).unwrap();
        let b = vh_calibrate_s0(&CalibrationInput { tau: 1e-16, ..inp }).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(omori_calibrate_s0(&CalibrationInput { big_g0: 2.0, ..inp }).is_err());
    }

    #[test]
    fn omori_s0_monte_carlo_round_trip() {
        let inp = CalibrationInput::default();
        let s0 = omori_calibrate_s0(&inp).unwrap();
        let mut rng = RngStream::new(172);
        let draws = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let phi = sample_inverse_gamma(0.5 * inp.n0, 0.5 * s0, &mut rng);
            let gamma = inp.g0 + inp.big_g0.sqrt() * rng.standard_normal();
            acc += phi + gamma * gamma;
        }
        let m = acc / draws as f64;
        assert!((m - 1.0).abs() < 0.01, "MC mean {m}");
    }

    #[test]
    fn ding_c_quantile_condition() {
        let cal = ding_calibrate_c(1.0, 3.0, 0.95);
        // nu0 = 3: IG(1, c/2) has CDF exp(-c/(2x)); condition gives
        // c = -2 ln(0.95)
        assert!((cal.c - 0.102_586_588_775_101_1).abs() < 1e-8, "c {}", cal.c);
        assert!((ding_sigma2_marginal_cdf(1.0, 3.0, cal.c) - 0.95).abs() < 1e-8);
        // bisection oracle on the quantile condition
        let mut lo = 1e-8;
        let mut hi = 10.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ding_sigma2_marginal_cdf(1.0, 3.0, mid) > 0.95 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((cal.c - 0.5 * (lo + hi)).abs() < 1e-8);
        // scale family
        let cal3 = ding_calibrate_c(3.0, 3.0, 0.95);
        assert!((cal3.c - 3.0 * cal.c).abs() < 1e-10);
        // chi-square companion value
        assert!((cal.c_chi2_nu0 - 0.351_846_317_749_271_44).abs() < 1e-9);
        // and at nu0 = 4 the quantile condition still holds
        let cal4 = ding_calibrate_c(2.5, 4.0, 0.9);
        assert!((ding_sigma2_marginal_cdf(2.5, 4.0, cal4.c) - 0.9).abs() < 1e-8);
    }

    #[test]
    fn vh_rho_cdf_values_and_monotonicity() {
        assert!((vh_rho_cdf(0.0, 0.5) - 0.5).abs() < 1e-14);
        assert!((vh_rho_cdf(0.0, 5.0) - 0.5).abs() < 1e-14);
        let c = (1.0f64 / 3.0).sqrt();
        assert!((vh_rho_cdf(c, 0.5) - 0.841_344_746_068_543).abs() < 1e-12);
        let mut last = 0.0;
        for k in 1..99 {
            let v = vh_rho_cdf(-0.99 + 0.02 * k as f64, 0.7);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn vh_rho_cdf_matches_prior_draws() {
        let tau = 0.5;
        let mut rng = RngStream::new(173);
        let draws = 1_000_000;
        let mut rhos: Vec<f64> = (0..draws)
            .map(|_| {
                let phi = sample_inverse_gamma(3.0, 1.0, &mut rng);
                let gamma = (tau * phi).sqrt() * rng.standard_normal();
                gamma / (gamma * gamma + phi).sqrt()
            })
            .collect();
        rhos.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // sup over a 99-point grid
        let mut sup: f64 = 0.0;
        for k in 1..100 {
            let c = -0.99 + 0.02 * k as f64;
            let emp = rhos.partition_point(|&r| r <= c) as f64 / draws as f64;
            sup = sup.max((emp - vh_rho_cdf(c, tau)).abs());
        }
        assert!(sup < 0.005, "sup norm {sup}");
    }

    #[test]
    fn vh_mode_locations() {
        assert_eq!(vh_rho_modes(1.0 / 3.0), vec![0.0]);
        assert_eq!(vh_rho_modes(0.2), vec![0.0]);
        let m = vh_rho_modes(0.5);
        assert!((m[1] - 0.577_350_269_189_625_7).abs() < 1e-12);
        assert_eq!(m[0], -m[1]);
        // formula value at tau = 5: sqrt(1 - 1/15)
        let m = vh_rho_modes(5.0);
        assert!((m[1] - (14.0f64 / 15.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ding_density_uniform_and_normalized() {
        for r in [-0.9, -0.3, 0.0, 0.4, 0.85] {
            assert!((ding_rho_density(r, 3.0) - 0.5).abs() < 1e-12);
        }
        for nu0 in [3.0, 3.25, 5.0, 10.0] {
            let total = integrate_adaptive(
                |r| ding_rho_density(r, nu0),
                Interval::new(-1.0, 1.0),
                1e-10,
            )
            .unwrap();
            assert!((total - 1.0).abs() < 1e-9, "nu0 {nu0}: mass {total}");
        }
        assert!(ding_rho_density(0.0, 5.0) > ding_rho_density(0.9, 5.0));
        assert!(ding_rho_density(0.0, 5.0) > ding_rho_density(-0.9, 5.0));
    }

    #[test]
    fn omori_rho_cdf_symmetric_and_matches_draws() {
        let (n0, s0, g0_big) = (6.0, 5.0, 6.0);
        assert!((omori_rho_cdf(0.0, n0, s0, g0_big).unwrap() - 0.5).abs() < 1e-12);
        let mut rng = RngStream::new(174);
        let draws = 1_000_000;
        let mut rhos: Vec<f64> = (0..draws)
            .map(|_| {
                let phi = sample_inverse_gamma(0.5 * n0, 0.5 * s0, &mut rng);
                let gamma = g0_big.sqrt() * rng.standard_normal();
                gamma / (gamma * gamma + phi).sqrt()
            })
            .collect();
        rhos.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut sup: f64 = 0.0;
        for k in 1..40 {
            let c = -0.975 + 0.05 * k as f64;
            let emp = rhos.partition_point(|&r| r <= c) as f64 / draws as f64;
            let thy = omori_rho_cdf(c, n0, s0, g0_big).unwrap();
            sup = sup.max((emp - thy).abs());
        }
        assert!(sup < 0.005, "sup norm {sup}");
    }

    /// Mode counts of the implied density across the hyperparameter grid;
    /// the density route must agree with an independent Monte Carlo
    /// histogram route on whether the prior is unimodal or bimodal.
    #[test]
    fn omori_rho_density_mode_counts_match_monte_carlo() {
        let triples = [
            (6.0, 6.0, 5.0),
            (6.0, 6.0, 10.0),
            (6.0, 6.0, 100.0),
            (3.0, 60.0, 80.0),
            (3.0, 1.0, 10.0),
            (3.0, 6.0, 6.0),
            (1.0, 15.0, 50.0),
            (1.0, 20.0, 5.0),
            (10.0, 0.5, 20.0),
        ];
        let bins = 41usize;
        let edges: Vec<f64> = (0..=bins).map(|i| -1.0 + 2.0 * i as f64 / bins as f64).collect();
        // modes of binned masses, counting edge bins
        let count_modes = |v: &[f64]| {
            let mut c = 0;
            for i in 0..v.len() {
                let left_ok = i == 0 || v[i] > v[i - 1];
                let right_ok = i + 1 == v.len() || v[i] >= v[i + 1];
                if left_ok && right_ok {
                    c += 1;
                }
            }
            c
        };
        let smooth = |v: &[f64]| -> Vec<f64> {
            (0..v.len())
                .map(|i| {
                    let lo = i.saturating_sub(1);
                    let hi = (i + 1).min(v.len() - 1);
                    (lo..=hi).map(|j| v[j]).sum::<f64>() / (hi - lo + 1) as f64
                })
                .collect()
        };
        let mut rng = RngStream::new(175);
        for &(n0, g0_big, s0) in &triples {
            // quadrature route: expected bin masses from the CDF
            let expected: Vec<f64> = (0..bins)
                .map(|i| {
                    let lo = (edges[i]).max(-0.999_999);
                    let hi = (edges[i + 1]).min(0.999_999);
                    omori_rho_cdf(hi, n0, s0, g0_big).unwrap()
                        - omori_rho_cdf(lo, n0, s0, g0_big).unwrap()
                })
                .collect();
            let dens_modes = count_modes(&smooth(&expected));

            // Monte Carlo histogram route
            let draws = 400_000;
            let mut hist = vec![0f64; bins];
            for _ in 0..draws {
                let phi = sample_inverse_gamma(0.5 * n0, 0.5 * s0, &mut rng);
                let gamma = g0_big.sqrt() * rng.standard_normal();
                let rho = gamma / (gamma * gamma + phi).sqrt();
                let b = (((rho + 1.0) / 2.0) * bins as f64) as usize;
                hist[b.min(bins - 1)] += 1.0 / draws as f64;
            }
            let mc_modes = count_modes(&smooth(&hist));
            assert_eq!(
                dens_modes.min(2),
                mc_modes.min(2),
                "mode count mismatch at (n0={n0}, G0={g0_big}, S0={s0}): density {dens_modes}, mc {mc_modes}"
            );
        }
    }

    #[test]
    fn ding_rho_cdf_consistent_with_density() {
        for nu0 in [3.0, 3.25, 5.0] {
            assert!((ding_rho_cdf(0.0, nu0) - 0.5).abs() < 1e-12);
            for &r in &[-0.7, -0.2, 0.4, 0.9] {
                let by_quad = integrate_adaptive(
                    |t| ding_rho_density(t, nu0),
                    Interval::new(-1.0, r),
                    1e-11,
                )
                .unwrap();
                assert!((ding_rho_cdf(r, nu0) - by_quad).abs() < 1e-9);
            }
        }
        // uniform case
        assert!((ding_rho_cdf(0.6, 3.0) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ding_sigma2_cdf_median_and_monotone() {
        let (nu0, c) = (5.0, 2.0);
        let med = inverse_gamma_quantile(0.5, 0.5 * (nu0 - 1.0), 0.5 * c);
        assert!((ding_sigma2_marginal_cdf(med, nu0, c) - 0.5).abs() < 1e-8);
        let mut last = 0.0;
        for k in 1..200 {
            let v = ding_sigma2_marginal_cdf(0.05 * k as f64, nu0, c);
            assert!(v >= last);
            last = v;
        }
        assert!(ding_sigma2_marginal_cdf(1e9, nu0, c) > 0.999999);
    }

    #[test]
    fn ding_sigma2_cdf_matches_expanded_draws() {
        // sigma2~^2 from the inverse-Wishart expansion vs the formula
        let (nu0, c) = (5.0, 2.0);
        let mut rng = RngStream::new(176);
        let draws = 1_000_000;
        let mut vals: Vec<f64> = (0..draws)
            .map(|_| {
                let sig = crate::math::sample_inverse_wishart_2(
                    nu0,
                    crate::math::SymMat2::scaled_identity(c),
                    &mut rng,
                )
                .unwrap();
                sig.a22
            })
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = crate::stats::ks_statistic_sorted(&vals, |x| ding_sigma2_marginal_cdf(x, nu0, c));
        assert!(ks < 0.005, "ks {ks}");
    }

    #[test]
    fn outcome_var_prior_mean_and_mc_cdf() {
        let mean_v = vh_outcome_var_prior_mean(0.5, 8.0 / 3.0, 6.0, 0.0).unwrap();
        assert!((mean_v - 1.0).abs() < 1e-12);
        assert!(vh_outcome_var_prior_mean(0.5, 2.0, 2.0, 0.0).is_err());
        let mut rng = RngStream::new(177);
        let (p, se) = vh_outcome_var_cdf_mc(mean_v, 0.5, 8.0 / 3.0, 6.0, 0.0, 1_000_000, &mut rng);
        assert!(p > 0.5 && p < 0.95, "CDF at the mean {p} (se {se})");
        assert!(se < 0.001);
    }

    #[cfg(feature = "struve-check")]
    #[test]
    fn struve_closed_form_agrees_with_quadrature() {
        let (n0, s0, g0_big) = (6.0, 5.0, 6.0);
        for &r in &[-0.8, -0.4, -0.1, 0.2, 0.5, 0.9] {
            let a = omori_rho_cdf(r, n0, s0, g0_big).unwrap();
            let b = omori_rho_cdf_struve(r, n0, s0, g0_big);
            assert!((a - b).abs() < 1e-7, "rho {r}: quadrature {a} vs closed form {b}");
        }
    }

    #[test]
    fn calibration_quantile_round_trips() {
        for &(s2, nu0, q) in &[(1.0, 3.0, 0.95), (4.2, 3.25, 0.9), (0.3, 5.0, 0.99)] {
            let cal = ding_calibrate_c(s2, nu0, q);
            let back = inverse_gamma_quantile(q, 0.5 * (nu0 - 1.0), 0.5 * cal.c);
            assert!((back - s2).abs() < 1e-6 * s2.max(1.0), "{back} vs {s2}");
        }
        let _ = mean(&[0.0]);
    }
}
