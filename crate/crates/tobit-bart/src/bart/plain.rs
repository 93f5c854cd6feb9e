//! Plain BART regression and probit BART, used both as stand-alone
//! baselines in the simulation studies and as the degenerate case the
//! selection samplers must reduce to.

use super::{BartConfig, Covariates, Forest, OutcomeScale};
use crate::math::{inverse_gamma_quantile, sample_inverse_gamma, sample_truncated_normal, Interval};
use crate::rng::RngStream;
use crate::stats::variance;

/// Gibbs-iteration substream labels shared by every sampler in the crate;
/// keeping them fixed makes degenerate samplers replay identical streams.
pub(crate) const STEP_LATENT_Z: u64 = 0;
pub(crate) const STEP_SEL_TREES: u64 = 1;
pub(crate) const STEP_OUT_TREES: u64 = 2;
pub(crate) const STEP_COV: u64 = 3;
pub(crate) const STEP_LATENT_Y: u64 = 4;
pub(crate) const STEP_ALPHA: u64 = 5;
pub(crate) const STEP_REASSIGN: u64 = 6;
pub(crate) const STEP_REMIX: u64 = 7;
pub(crate) const STEP_PREDICTIVE: u64 = 8;

#[derive(Debug, Clone, Copy)]
pub struct McmcSize {
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
}

impl McmcSize {
    pub fn new(iters: usize, burnin: usize, thin: usize) -> Self {
        assert!(iters > burnin, "iters must exceed burnin");
        assert!(thin >= 1);
        Self { iters, burnin, thin }
    }

    pub fn retained(&self) -> usize {
        (self.iters - self.burnin).div_ceil(self.thin)
    }

    pub fn keep(&self, iter: usize) -> bool {
        iter >= self.burnin && (iter - self.burnin) % self.thin == 0
    }
}

/// Scale calibration for the error-variance prior sigma^2 ~ IG(v/2, v
/// lambda / 2): the q-quantile equals the data estimate sigma_hat2.
pub fn calibrate_error_lambda(sigma_hat2: f64, v: f64, q: f64) -> f64 {
    assert!(sigma_hat2 > 0.0 && v > 0.0 && q > 0.0 && q < 1.0);
    // IG(v/2, b) quantile scales linearly in b
    let unit_q = inverse_gamma_quantile(q, 0.5 * v, 1.0);
    2.0 * sigma_hat2 / (v * unit_q)
}

#[derive(Debug)]
pub struct BartRegressionFit {
    /// retained draws of f at the test rows (original scale)
    pub f_test: Vec<Vec<f64>>,
    /// retained draws of f at the training rows (original scale)
    pub f_train: Vec<Vec<f64>>,
    /// retained error-variance draws (original scale)
    pub sigma2: Vec<f64>,
}

/// Standard BART regression of `y` on `x`, with the response internally
/// rescaled to [-0.5, 0.5] and sigma^2 ~ IG(v/2, v lambda/2), lambda
/// calibrated so the 0.9 prior quantile matches the sample variance.
pub fn fit_bart_regression(
    x: &Covariates,
    y: &[f64],
    x_test: &Covariates,
    cfg: &BartConfig,
    mcmc: &McmcSize,
    rng: &RngStream,
) -> BartRegressionFit {
    fit_bart_regression_impl(x, y, x_test, cfg, mcmc, rng, true)
}

/// Same sampler with `cfg.lambda` taken as given (internal response
/// scale) instead of calibrated from the data.
pub fn fit_bart_regression_with_prior(
    x: &Covariates,
    y: &[f64],
    x_test: &Covariates,
    cfg: &BartConfig,
    mcmc: &McmcSize,
    rng: &RngStream,
) -> BartRegressionFit {
    fit_bart_regression_impl(x, y, x_test, cfg, mcmc, rng, false)
}

/// Residual variance of a least-squares linear fit (with intercept and a
/// small ridge); the error-variance prior is anchored at this estimate.
/// Falls back to the sample variance when the design is too wide.
fn linear_fit_residual_variance(x: &Covariates, ys: &[f64]) -> f64 {
    use nalgebra::{Cholesky, DMatrix, DVector};
    let n = ys.len();
    let p = x.n_cols() + 1;
    if n < 2 * p {
        return variance(ys).max(1e-12);
    }
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    let xi = |i: usize, a: usize| if a == 0 { 1.0 } else { x.value(i, a - 1) };
    for i in 0..n {
        for a in 0..p {
            xty[a] += xi(i, a) * ys[i];
            for b in a..p {
                xtx[(a, b)] += xi(i, a) * xi(i, b);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
        xtx[(a, a)] += 1e-8;
    }
    let Some(chol) = Cholesky::new(xtx) else {
        return variance(ys).max(1e-12);
    };
    let beta = chol.solve(&xty);
    let mut ssr = 0.0;
    for i in 0..n {
        let fit: f64 = (0..p).map(|a| beta[a] * xi(i, a)).sum();
        let r = ys[i] - fit;
        ssr += r * r;
    }
    (ssr / (n - p) as f64).max(1e-12)
}

fn fit_bart_regression_impl(
    x: &Covariates,
    y: &[f64],
    x_test: &Covariates,
    cfg: &BartConfig,
    mcmc: &McmcSize,
    rng: &RngStream,
    calibrate: bool,
) -> BartRegressionFit {
    let n = y.len();
    assert_eq!(x.n_rows(), n);
    let scale = OutcomeScale::fit(y);
    let ys: Vec<f64> = y.iter().map(|&v| scale.to_internal(v)).collect();
    let var_hat = if ys.len() > 1 { variance(&ys).max(1e-12) } else { 1.0 };
    let lambda = if calibrate {
        calibrate_error_lambda(linear_fit_residual_variance(x, &ys), cfg.v, 0.9)
    } else {
        cfg.lambda
    };

    let mut forest = Forest::constant(cfg.m, n, cfg.sigma0_2());
    let mut sigma2 = var_hat;
    let weights = vec![1.0; n];

    let mut out = BartRegressionFit {
        f_test: Vec::with_capacity(mcmc.retained()),
        f_train: Vec::with_capacity(mcmc.retained()),
        sigma2: Vec::with_capacity(mcmc.retained()),
    };
    for iter in 0..mcmc.iters {
        let iter_rng = rng.substream(iter as u64);
        let mut tree_rng = iter_rng.substream(STEP_OUT_TREES);
        forest.backfit(x, &ys, &weights, sigma2, cfg, &mut tree_rng);
        let mut var_rng = iter_rng.substream(STEP_COV);
        let ssr: f64 = ys
            .iter()
            .zip(forest.predictions())
            .map(|(&yi, &fi)| (yi - fi) * (yi - fi))
            .sum();
        sigma2 = sample_inverse_gamma(
            0.5 * (cfg.v + n as f64),
            0.5 * (cfg.v * lambda + ssr),
            &mut var_rng,
        );
        if mcmc.keep(iter) {
            out.f_test.push(
                forest
                    .predict_matrix(x_test)
                    .into_iter()
                    .map(|f| scale.to_original(f))
                    .collect(),
            );
            out.f_train
                .push(forest.predictions().iter().map(|&f| scale.to_original(f)).collect());
            out.sigma2.push(scale.var_to_original(sigma2));
        }
    }
    out
}

#[derive(Debug)]
pub struct ProbitBartFit {
    /// retained draws of the latent index f at test rows
    pub f_test: Vec<Vec<f64>>,
    pub f_train: Vec<Vec<f64>>,
}

/// Probit BART: P(s=1 | w) = Phi(f(w)) via truncated-normal data
/// augmentation with unit latent variance.
pub fn fit_probit_bart(
    w: &Covariates,
    s: &[bool],
    w_test: &Covariates,
    cfg: &BartConfig,
    mcmc: &McmcSize,
    rng: &RngStream,
) -> ProbitBartFit {
    let n = s.len();
    assert_eq!(w.n_rows(), n);
    let mut forest = Forest::constant(cfg.m, n, cfg.sigma0_2());
    let mut z: Vec<f64> = s.iter().map(|&si| if si { 0.5 } else { -0.5 }).collect();
    let weights = vec![1.0; n];

    let mut out = ProbitBartFit {
        f_test: Vec::with_capacity(mcmc.retained()),
        f_train: Vec::with_capacity(mcmc.retained()),
    };
    for iter in 0..mcmc.iters {
        let iter_rng = rng.substream(iter as u64);
        let mut latent_rng = iter_rng.substream(STEP_LATENT_Z);
        for i in 0..n {
            let f = forest.predictions()[i];
            let region = if s[i] { Interval::above(0.0) } else { Interval::below(0.0) };
            z[i] = sample_truncated_normal(f, 1.0, region, &mut latent_rng).value;
        }
        let mut tree_rng = iter_rng.substream(STEP_SEL_TREES);
        forest.backfit(w, &z, &weights, 1.0, cfg, &mut tree_rng);
        if mcmc.keep(iter) {
            out.f_test.push(forest.predict_matrix(w_test));
            out.f_train.push(forest.predictions().to_vec());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::normal_cdf;
    use crate::stats::mean;

    #[test]
    fn lambda_calibration_hits_quantile() {
        let lambda = calibrate_error_lambda(2.0, 3.0, 0.9);
        let q = inverse_gamma_quantile(0.9, 1.5, 0.5 * 3.0 * lambda);
        assert!((q - 2.0).abs() < 1e-8, "q {q}");
    }

    #[test]
    fn regression_recovers_step_function() {
        let mut rng = RngStream::new(81);
        let n = 300;
        let xs: Vec<f64> = (0..n).map(|_| rng.uniform() * 2.0 - 1.0).collect();
        let y: Vec<f64> = xs
            .iter()
            .map(|&x| if x > 0.0 { 2.0 } else { -1.0 } + 0.3 * rng.standard_normal())
            .collect();
        let cov = Covariates::from_columns(vec![xs]);
        let test = Covariates::from_columns(vec![vec![-0.5, 0.5]]);
        let cfg = BartConfig { m: 50, ..BartConfig::outcome_default() };
        let fit = fit_bart_regression(
            &cov,
            &y,
            &test,
            &cfg,
            &McmcSize::new(300, 100, 1),
            &RngStream::new(82),
        );
        let lo = mean(&fit.f_test.iter().map(|d| d[0]).collect::<Vec<_>>());
        let hi = mean(&fit.f_test.iter().map(|d| d[1]).collect::<Vec<_>>());
        assert!((lo + 1.0).abs() < 0.25, "lo {lo}");
        assert!((hi - 2.0).abs() < 0.25, "hi {hi}");
        // sigma2 near the truth 0.09
        let s2 = mean(&fit.sigma2);
        assert!(s2 > 0.05 && s2 < 0.2, "sigma2 {s2}");
    }

    #[test]
    fn probit_recovers_selection_probability() {
        let mut rng = RngStream::new(83);
        let n = 600;
        let xs: Vec<f64> = (0..n).map(|_| rng.uniform() * 4.0 - 2.0).collect();
        let s: Vec<bool> = xs
            .iter()
            .map(|&x| rng.standard_normal() < x)
            .collect();
        let cov = Covariates::from_columns(vec![xs]);
        let test = Covariates::from_columns(vec![vec![-1.0, 0.0, 1.0]]);
        let cfg = BartConfig { m: 30, ..BartConfig::selection_default() };
        let fit = fit_probit_bart(
            &cov,
            &s,
            &test,
            &cfg,
            &McmcSize::new(400, 150, 1),
            &RngStream::new(84),
        );
        for (k, want) in [(0usize, normal_cdf(-1.0)), (1, 0.5), (2, normal_cdf(1.0))] {
            let p = mean(
                &fit.f_test
                    .iter()
                    .map(|d| normal_cdf(d[k]))
                    .collect::<Vec<_>>(),
            );
            assert!((p - want).abs() < 0.1, "p {p} want {want}");
        }
    }
}
