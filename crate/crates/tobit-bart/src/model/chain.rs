//! The per-chain Gibbs loop tying together latent draws, mean updates,
//! covariance updates, and the mixture error model.

use super::dataset::Dataset;
use super::linear::{draw_linear_coefficients, LinearDrawInputs, LinearPriors};
use super::steps::{
    draw_gamma, draw_gamma_phi_joint, draw_latent_y_binary, draw_latent_z, draw_omega_ding,
    draw_phi, LatentMeans,
};
use super::{CovariancePrior, GaussianErrorState, ModelError};
use crate::bart::marginal::{
    joint_leaf_gamma_draw_design, outcome_block_loglik_design, LeafDesign,
};
use crate::bart::plain::{
    STEP_ALPHA, STEP_COV, STEP_LATENT_Y, STEP_LATENT_Z, STEP_OUT_TREES, STEP_PREDICTIVE,
    STEP_REASSIGN, STEP_REMIX, STEP_SEL_TREES,
};
use crate::bart::proposal::ProposeOutcome;
use crate::bart::{BartConfig, Covariates, Forest, McmcSize, OutcomeScale};
use crate::dpm::{
    dependence_summary, draw_alpha_escobar_west, draw_alpha_grid, init_theta, reassign_clusters,
    remix_cluster_params, sample_error_predictive, AlphaPrior, ClusterParams, DpmConfig, DpmState,
};
use crate::rng::RngStream;
use crate::stats::variance;

const STEP_DEPENDENCE: u64 = 9;

#[derive(Debug, Clone)]
pub enum MeanModel {
    Linear(LinearPriors),
    Trees { selection: BartConfig, outcome: BartConfig },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// sequential tree updates conditioning on leaf values and gamma
    Standard,
    /// outcome trees drawn with leaf values and gamma integrated out,
    /// followed by a joint draw of all outcome leaves and gamma
    Marginalized,
}

#[derive(Debug, Clone)]
pub enum ErrorModel {
    Gaussian(CovariancePrior),
    Dpm(DpmConfig),
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub mcmc: McmcSize,
    /// treat the outcome as binary and impute its latent Gaussian
    pub binary_outcome: bool,
    /// pin gamma at a fixed value (diagnostics; also lifts the requirement
    /// of having unselected rows)
    pub freeze_gamma: Option<f64>,
    /// draw (gamma, phi) jointly instead of sequentially (VH prior only)
    pub joint_gamma_phi: bool,
    /// retain f draws at the training points as well
    pub store_train: bool,
}

impl ChainConfig {
    pub fn new(mcmc: McmcSize) -> Self {
        Self {
            mcmc,
            binary_outcome: false,
            freeze_gamma: None,
            joint_gamma_phi: false,
            store_train: false,
        }
    }
}

/// Where to evaluate the fitted mean functions.
#[derive(Debug, Clone, Default)]
pub struct EvalPoints {
    pub x_test: Option<Covariates>,
    pub w_test: Option<Covariates>,
}

/// Retained per-iteration state. Scalar error parameters are reported on
/// the original outcome scale; rho is scale-free and satisfies
/// rho = gamma / sqrt(gamma^2 + phi) exactly.
#[derive(Debug, Clone, Default)]
pub struct PosteriorDraws {
    pub gamma: Vec<f64>,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    pub sigma_y2: Vec<f64>,
    pub fz_test: Vec<Vec<f64>>,
    pub fy_test: Vec<Vec<f64>>,
    pub fz_train: Vec<Vec<f64>>,
    pub fy_train: Vec<Vec<f64>>,
    pub dpm: Option<DpmDraws>,
}

/// Mixture-model extras per retained iteration.
#[derive(Debug, Clone, Default)]
pub struct DpmDraws {
    pub k: Vec<usize>,
    pub alpha: Vec<f64>,
    pub dependence: Vec<f64>,
    /// per retained draw, per test row: error parameters for a new
    /// observation (original outcome scale)
    pub test_params: Vec<Vec<ClusterParams>>,
}

#[derive(Debug)]
pub struct FitOutput {
    pub draws: PosteriorDraws,
    /// map between the internal and original outcome scales
    pub scale: OutcomeScale,
    /// degenerate covariance draws that were redrawn (scaled
    /// inverse-Wishart prior only)
    pub ding_redraws: usize,
    pub warnings: Vec<String>,
}

enum MeanState {
    Linear {
        priors: LinearPriors,
        theta: nalgebra::DVector<f64>,
        beta: nalgebra::DVector<f64>,
        fz_all: Vec<f64>,
        fy_sel: Vec<f64>,
    },
    Trees {
        sel_cfg: BartConfig,
        out_cfg: BartConfig,
        fz: Forest,
        fy: Forest,
    },
}

enum ErrState {
    Gaussian(GaussianErrorState),
    Dpm(DpmState),
}

impl ErrState {
    /// (mu1, mu2, gamma, phi) of observation i (internal scale)
    fn params(&self, i: usize) -> (f64, f64, f64, f64) {
        match self {
            ErrState::Gaussian(g) => (0.0, 0.0, g.gamma, g.phi),
            ErrState::Dpm(s) => {
                let p = s.params_of(i);
                (p.mu1, p.mu2, p.gamma, p.phi)
            }
        }
    }
}

/// Run one Gibbs chain. The draw order per iteration is: latent selection
/// variable (and latent binary outcome), selection mean, outcome mean,
/// covariance parameters (or the joint outcome-block draw in the
/// marginalized sampler, with phi drawn last), and the mixture updates.
pub fn run_chain(
    data: &Dataset,
    mean: &MeanModel,
    error: &ErrorModel,
    sampler: SamplerKind,
    cfg: &ChainConfig,
    eval: &EvalPoints,
    rng: &RngStream,
) -> Result<FitOutput, ModelError> {
    let n = data.n();
    let n1 = data.n_selected();
    if n1 == 0 {
        return Err(ModelError::NoSelected);
    }
    if n1 == n && cfg.freeze_gamma.is_none() {
        return Err(ModelError::NoUnselected);
    }
    if sampler == SamplerKind::Marginalized {
        match (mean, error) {
            (MeanModel::Trees { .. }, ErrorModel::Gaussian(CovariancePrior::Vh { .. })) => {}
            _ => {
                return Err(ModelError::UnsupportedPrior(
                    "the marginalized sampler requires tree means and the gamma | phi ~ N(g0, tau phi) prior",
                ))
            }
        }
        if cfg.freeze_gamma.is_some() {
            return Err(ModelError::UnsupportedPrior(
                "freeze_gamma is incompatible with the marginalized sampler",
            ));
        }
    }
    if let ErrorModel::Gaussian(p) = error {
        p.validate()?;
        if cfg.freeze_gamma.is_some() {
            if let CovariancePrior::Ding { .. } = p {
                return Err(ModelError::UnsupportedPrior(
                    "freeze_gamma is incompatible with the expanded-covariance prior",
                ));
            }
        }
    }
    if let ErrorModel::Dpm(c) = error {
        c.validate().map_err(|e| ModelError::Data(e.to_string()))?;
    }

    let sel_idx = data.selected_indices();
    let y_obs = data.selected_outcomes();
    let mut y_binary = Vec::new();
    if cfg.binary_outcome {
        for &v in &y_obs {
            if v != 0.0 && v != 1.0 {
                return Err(ModelError::Data(
                    "binary outcome mode requires outcomes in {0, 1}".into(),
                ));
            }
            y_binary.push(v == 1.0);
        }
    }

    let scale = if cfg.binary_outcome {
        OutcomeScale::identity()
    } else {
        let fitted = OutcomeScale::fit(&y_obs);
        match mean {
            // trees need the centered [-0.5, 0.5] response for the leaf
            // prior; a linear design must keep its origin (an uncentered
            // shift would silently add an intercept the design may lack)
            MeanModel::Trees { .. } => fitted,
            MeanModel::Linear(_) => OutcomeScale { center: 0.0, range: fitted.range },
        }
    };

    // covariance-prior hyperparameters are specified on the original
    // outcome scale; the sampler works on the rescaled response
    let error = &to_internal_scale(error, &scale);
    let freeze_gamma_int = cfg.freeze_gamma.map(|g| g / scale.range);

    // internal outcome: scaled observed values, or latent probit values
    let mut ys: Vec<f64> = if cfg.binary_outcome {
        y_binary.iter().map(|&b| if b { 0.5 } else { -0.5 }).collect()
    } else {
        y_obs.iter().map(|&v| scale.to_internal(v)).collect()
    };

    let x_sel = data.x_selected();
    let mut z_star: Vec<f64> = data.selected.iter().map(|&s| if s { 0.5 } else { -0.5 }).collect();

    let phi_init = if ys.len() > 1 { variance(&ys).max(1e-6) } else { 1.0 };
    let mut mean_state = match mean {
        MeanModel::Linear(priors) => MeanState::Linear {
            priors: priors.clone(),
            theta: priors.theta0.clone(),
            beta: priors.beta0.clone(),
            fz_all: vec![0.0; n],
            fy_sel: vec![0.0; n1],
        },
        MeanModel::Trees { selection, outcome } => MeanState::Trees {
            sel_cfg: selection.clone(),
            out_cfg: outcome.clone(),
            fz: Forest::constant(selection.m, n, selection.sigma0_2()),
            fy: Forest::constant(outcome.m, n1, outcome.sigma0_2()),
        },
    };

    let mut err_state = match error {
        ErrorModel::Gaussian(_) => ErrState::Gaussian(GaussianErrorState::new(
            freeze_gamma_int.unwrap_or(0.0),
            phi_init,
        )),
        ErrorModel::Dpm(dc) => {
            let u1: Vec<f64> = z_star.clone();
            let mut u2 = vec![0.0; n];
            for (pos, &i) in sel_idx.iter().enumerate() {
                u2[i] = ys[pos];
            }
            let alpha0 = match &dc.alpha_prior {
                AlphaPrior::EscobarWest { c1, c2 } => c1 / c2,
                AlphaPrior::Grid(g) => 0.5 * (g.alpha_min + g.alpha_max),
            };
            ErrState::Dpm(init_theta(
                &u1,
                &u2,
                &data.selected,
                dc,
                alpha0,
                &rng.substream(u64::MAX),
            ))
        }
    };

    let mut draws = PosteriorDraws::default();
    if matches!(error, ErrorModel::Dpm(_)) {
        draws.dpm = Some(DpmDraws::default());
    }
    let mut ding_redraws = 0usize;
    let mut warnings: Vec<String> = Vec::new();

    // scratch
    let mut target_z = vec![0.0; n];
    let mut weights_z = vec![1.0; n];
    let mut target_y = vec![0.0; n1];
    let mut weights_y = vec![1.0; n1];
    let mut pos_of = vec![usize::MAX; n];
    for (pos, &i) in sel_idx.iter().enumerate() {
        pos_of[i] = pos;
    }

    for iter in 0..cfg.mcmc.iters {
        let iter_rng = rng.substream(iter as u64);
        let wrap = |e: ModelError| ModelError::AtIteration { iter, source: Box::new(e) };

        // ------------------------------------------------------ latent z
        {
            let mut lrng = iter_rng.substream(STEP_LATENT_Z);
            let fz_of = |i: usize| match &mean_state {
                MeanState::Linear { fz_all, .. } => fz_all[i],
                MeanState::Trees { fz, .. } => fz.predictions()[i],
            };
            let fy_of = |i: usize| match &mean_state {
                MeanState::Linear { fy_sel, .. } => {
                    if pos_of[i] != usize::MAX { fy_sel[pos_of[i]] } else { 0.0 }
                }
                MeanState::Trees { fy, .. } => {
                    if pos_of[i] != usize::MAX { fy.predictions()[pos_of[i]] } else { 0.0 }
                }
            };
            let y_latent: Vec<Option<f64>> = (0..n)
                .map(|i| if pos_of[i] != usize::MAX { Some(ys[pos_of[i]]) } else { None })
                .collect();
            let err_ref = &err_state;
            draw_latent_z(
                &mut z_star,
                &data.selected,
                |i| {
                    let (mu1, mu2, gamma, phi) = err_ref.params(i);
                    LatentMeans { f_z: fz_of(i), f_y: fy_of(i), mu1, mu2, gamma, phi }
                },
                &y_latent,
                &mut lrng,
            );
            debug_assert!(
                z_star
                    .iter()
                    .zip(&data.selected)
                    .all(|(&z, &s)| (z >= 0.0) == s),
                "latent sign inconsistent with selection indicator"
            );
        }

        // --------------------------------------------- latent y (binary)
        if cfg.binary_outcome {
            let mut brng = iter_rng.substream(STEP_LATENT_Y);
            let fz_of = |i: usize| match &mean_state {
                MeanState::Linear { fz_all, .. } => fz_all[i],
                MeanState::Trees { fz, .. } => fz.predictions()[i],
            };
            let fy_of = |i: usize| match &mean_state {
                MeanState::Linear { fy_sel, .. } => fy_sel[pos_of[i]],
                MeanState::Trees { fy, .. } => fy.predictions()[pos_of[i]],
            };
            let err_ref = &err_state;
            let z_ref = &z_star;
            let mut ys_new = vec![0.0; n1];
            draw_latent_y_binary(
                &mut ys_new,
                &sel_idx,
                &y_binary,
                z_ref,
                |i| {
                    let (mu1, mu2, gamma, phi) = err_ref.params(i);
                    LatentMeans { f_z: fz_of(i), f_y: fy_of(i), mu1, mu2, gamma, phi }
                },
                &mut brng,
            );
            ys = ys_new;
        }

        // ------------------------------------------------ mean functions
        match &mut mean_state {
            MeanState::Linear { priors, theta, beta, fz_all, fy_sel } => {
                let mut mrng = iter_rng.substream(STEP_SEL_TREES);
                let err_ref = &err_state;
                let y_all = {
                    let mut v = vec![0.0; n];
                    for (pos, &i) in sel_idx.iter().enumerate() {
                        v[i] = ys[pos];
                    }
                    v
                };
                let err_fn = |i: usize| err_ref.params(i);
                let inp = LinearDrawInputs {
                    w: &data.w,
                    x: &data.x,
                    selected: &data.selected,
                    z_star: &z_star,
                    y_internal: &y_all,
                    err: &err_fn,
                };
                let (t, b) = draw_linear_coefficients(&inp, priors, &mut mrng).map_err(wrap)?;
                *theta = t;
                *beta = b;
                for i in 0..n {
                    fz_all[i] = (0..data.w.n_cols()).map(|j| data.w.value(i, j) * theta[j]).sum();
                }
                for (pos, &i) in sel_idx.iter().enumerate() {
                    fy_sel[pos] = (0..data.x.n_cols()).map(|j| data.x.value(i, j) * beta[j]).sum();
                }
            }
            MeanState::Trees { sel_cfg, out_cfg, fz, fy } => {
                // selection forest
                {
                    let mut srng = iter_rng.substream(STEP_SEL_TREES);
                    for i in 0..n {
                        let (mu1, mu2, gamma, phi) = err_state.params(i);
                        if pos_of[i] != usize::MAX {
                            let pos = pos_of[i];
                            let s2 = gamma * gamma + phi;
                            target_z[i] = z_star[i]
                                - mu1
                                - gamma * (ys[pos] - mu2 - fy.predictions()[pos]) / s2;
                            weights_z[i] = s2 / phi;
                        } else {
                            target_z[i] = z_star[i] - mu1;
                            weights_z[i] = 1.0;
                        }
                    }
                    fz.backfit(&data.w, &target_z, &weights_z, 1.0, sel_cfg, &mut srng);
                }
                // outcome forest
                let mut orng = iter_rng.substream(STEP_OUT_TREES);
                match sampler {
                    SamplerKind::Standard => {
                        let (sigma2, gaussian) = match &err_state {
                            ErrState::Gaussian(g) => (g.phi, true),
                            ErrState::Dpm(_) => (1.0, false),
                        };
                        for (pos, &i) in sel_idx.iter().enumerate() {
                            let (mu1, mu2, gamma, phi) = err_state.params(i);
                            target_y[pos] =
                                ys[pos] - mu2 - gamma * (z_star[i] - mu1 - fz.predictions()[i]);
                            weights_y[pos] = if gaussian { 1.0 } else { 1.0 / phi };
                        }
                        fy.backfit(&x_sel, &target_y, &weights_y, sigma2, out_cfg, &mut orng);
                    }
                    SamplerKind::Marginalized => {
                        let ErrState::Gaussian(g) = &mut err_state else { unreachable!() };
                        let ErrorModel::Gaussian(CovariancePrior::Vh { tau, .. }) = error else {
                            unreachable!()
                        };
                        let z_tilde: Vec<f64> =
                            sel_idx.iter().map(|&i| z_star[i] - fz.predictions()[i]).collect();
                        let gamma_new = marginalized_outcome_update(
                            fy,
                            &x_sel,
                            &z_tilde,
                            &ys,
                            g.phi,
                            *tau,
                            out_cfg,
                            &mut orng,
                        )
                        .map_err(wrap)?;
                        g.gamma = gamma_new;
                    }
                }
            }
        }

        // -------------------------------------------- covariance (gauss)
        if let ErrState::Gaussian(g) = &mut err_state {
            let mut crng = iter_rng.substream(STEP_COV);
            let fz_of = |i: usize| match &mean_state {
                MeanState::Linear { fz_all, .. } => fz_all[i],
                MeanState::Trees { fz, .. } => fz.predictions()[i],
            };
            let fy_of = |pos: usize| match &mean_state {
                MeanState::Linear { fy_sel, .. } => fy_sel[pos],
                MeanState::Trees { fy, .. } => fy.predictions()[pos],
            };
            let z_tilde: Vec<f64> = sel_idx.iter().map(|&i| z_star[i] - fz_of(i)).collect();
            let y_tilde: Vec<f64> =
                (0..n1).map(|pos| ys[pos] - fy_of(pos)).collect();
            let ErrorModel::Gaussian(prior) = error else { unreachable!() };
            if let Some(frozen) = freeze_gamma_int {
                g.gamma = frozen;
                g.phi = draw_phi(&z_tilde, &y_tilde, frozen, prior, &mut crng).map_err(wrap)?;
            } else {
                match (sampler, prior) {
                    (SamplerKind::Marginalized, _) => {
                        // gamma came from the joint outcome-block draw
                        g.phi = draw_phi(&z_tilde, &y_tilde, g.gamma, prior, &mut crng)
                            .map_err(wrap)?;
                    }
                    (_, CovariancePrior::Ding { nu0, c }) => {
                        let d = draw_omega_ding(&z_tilde, &y_tilde, *nu0, *c, g.rho(), &mut crng);
                        ding_redraws += d.redraws;
                        g.gamma = d.gamma;
                        g.phi = d.phi;
                    }
                    (_, CovariancePrior::Vh { .. }) if cfg.joint_gamma_phi => {
                        let (gm, ph) = draw_gamma_phi_joint(&z_tilde, &y_tilde, prior, &mut crng)
                            .map_err(wrap)?;
                        g.gamma = gm;
                        g.phi = ph;
                    }
                    _ => {
                        g.gamma = draw_gamma(&z_tilde, &y_tilde, g.phi, prior, &mut crng)
                            .map_err(wrap)?;
                        g.phi = draw_phi(&z_tilde, &y_tilde, g.gamma, prior, &mut crng)
                            .map_err(wrap)?;
                    }
                }
            }
        }

        // --------------------------------------------------- dpm updates
        if let ErrState::Dpm(state) = &mut err_state {
            let ErrorModel::Dpm(dc) = error else { unreachable!() };
            let fz_of = |i: usize| match &mean_state {
                MeanState::Linear { fz_all, .. } => fz_all[i],
                MeanState::Trees { fz, .. } => fz.predictions()[i],
            };
            let fy_of = |pos: usize| match &mean_state {
                MeanState::Linear { fy_sel, .. } => fy_sel[pos],
                MeanState::Trees { fy, .. } => fy.predictions()[pos],
            };
            let u1: Vec<f64> = (0..n).map(|i| z_star[i] - fz_of(i)).collect();
            let mut u2 = vec![0.0; n];
            for (pos, &i) in sel_idx.iter().enumerate() {
                u2[i] = ys[pos] - fy_of(pos);
            }
            let mut arng = iter_rng.substream(STEP_ALPHA);
            state.alpha = match &dc.alpha_prior {
                AlphaPrior::EscobarWest { c1, c2 } => {
                    draw_alpha_escobar_west(state.k(), n, state.alpha, *c1, *c2, &mut arng)
                }
                AlphaPrior::Grid(grid) => draw_alpha_grid(state.k(), n, grid, &mut arng),
            };
            reassign_clusters(
                state,
                &u1,
                &u2,
                &data.selected,
                dc,
                &iter_rng.substream(STEP_REASSIGN),
                None,
            );
            remix_cluster_params(state, &u1, &u2, &data.selected, dc, &iter_rng.substream(STEP_REMIX));
        }

        // --------------------------------------------------------- retain
        if cfg.mcmc.keep(iter) {
            let fz_of_all = |cov: &Covariates| match &mean_state {
                MeanState::Linear { theta, .. } => (0..cov.n_rows())
                    .map(|i| (0..cov.n_cols()).map(|j| cov.value(i, j) * theta[j]).sum())
                    .collect::<Vec<f64>>(),
                MeanState::Trees { fz, .. } => fz.predict_matrix(cov),
            };
            let fy_of_all = |cov: &Covariates| match &mean_state {
                MeanState::Linear { beta, .. } => (0..cov.n_rows())
                    .map(|i| (0..cov.n_cols()).map(|j| cov.value(i, j) * beta[j]).sum())
                    .collect::<Vec<f64>>(),
                MeanState::Trees { fy, .. } => fy.predict_matrix(cov),
            };

            let (gamma_int, phi_int) = match &err_state {
                ErrState::Gaussian(g) => (g.gamma, g.phi),
                ErrState::Dpm(s) => {
                    let mut gs = 0.0;
                    let mut ps = 0.0;
                    for i in 0..n {
                        let p = s.params_of(i);
                        gs += p.gamma;
                        ps += p.phi;
                    }
                    (gs / n as f64, ps / n as f64)
                }
            };
            let gamma_o = scale.scale_only(gamma_int);
            let phi_o = scale.var_to_original(phi_int);
            draws.gamma.push(gamma_o);
            draws.phi.push(phi_o);
            draws.rho.push(gamma_o / (gamma_o * gamma_o + phi_o).sqrt());
            draws.sigma_y2.push(phi_o + gamma_o * gamma_o);

            if let Some(wt) = &eval.w_test {
                draws.fz_test.push(fz_of_all(wt));
            }
            if let Some(xt) = &eval.x_test {
                draws
                    .fy_test
                    .push(fy_of_all(xt).into_iter().map(|f| scale.to_original(f)).collect());
            }
            if cfg.store_train {
                let fz_tr = match &mean_state {
                    MeanState::Linear { fz_all, .. } => fz_all.clone(),
                    MeanState::Trees { fz, .. } => fz.predictions().to_vec(),
                };
                draws.fz_train.push(fz_tr);
                let fy_tr: Vec<f64> = match &mean_state {
                    MeanState::Linear { fy_sel, .. } => {
                        fy_sel.iter().map(|&f| scale.to_original(f)).collect()
                    }
                    MeanState::Trees { fy, .. } => {
                        fy.predictions().iter().map(|&f| scale.to_original(f)).collect()
                    }
                };
                draws.fy_train.push(fy_tr);
            }

            if let ErrState::Dpm(state) = &err_state {
                let ErrorModel::Dpm(dc) = error else { unreachable!() };
                let dd = draws.dpm.as_mut().expect("dpm draws allocated");
                dd.k.push(state.k());
                dd.alpha.push(state.alpha);
                let mut drng = iter_rng.substream(STEP_DEPENDENCE);
                let params: Vec<ClusterParams> =
                    (0..n).map(|i| *state.params_of(i)).collect();
                match dependence_summary(&params, &mut drng) {
                    Ok(d) => dd.dependence.push(d),
                    Err(e) => {
                        warnings.push(format!("iteration {iter}: dependence summary: {e}"));
                        dd.dependence.push(f64::NAN);
                    }
                }
                let n_test = eval.x_test.as_ref().map(|x| x.n_rows()).unwrap_or(0);
                let mut prng = iter_rng.substream(STEP_PREDICTIVE);
                let row: Vec<ClusterParams> = (0..n_test)
                    .map(|_| {
                        let p = sample_error_predictive(state, dc, &mut prng);
                        ClusterParams {
                            mu1: p.mu1,
                            mu2: scale.scale_only(p.mu2),
                            gamma: scale.scale_only(p.gamma),
                            phi: scale.var_to_original(p.phi),
                        }
                    })
                    .collect();
                dd.test_params.push(row);
            }
        }
    }

    if ding_redraws > 0 {
        warnings.push(format!("{ding_redraws} degenerate covariance draws redrawn"));
    }
    Ok(FitOutput { draws, scale, ding_redraws, warnings })
}


/// Rescale covariance-prior hyperparameters from the original outcome
/// scale to the internal [-0.5, 0.5] response scale: locations in the
/// outcome dimension divide by the range, variances by its square, and
/// shape/df/relative-scale parameters (n0, nu0, tau) are untouched.
fn to_internal_scale(error: &ErrorModel, scale: &OutcomeScale) -> ErrorModel {
    use crate::dpm::ErrBase;
    use crate::math::SymMat2;
    let r = scale.range;
    let r2 = r * r;
    match error {
        ErrorModel::Gaussian(p) => ErrorModel::Gaussian(match *p {
            CovariancePrior::Vh { g0, tau, n0, s0 } => {
                CovariancePrior::Vh { g0: g0 / r, tau, n0, s0: s0 / r2 }
            }
            CovariancePrior::Omori { g0, big_g0, n0, s0 } => CovariancePrior::Omori {
                g0: g0 / r,
                big_g0: big_g0 / r2,
                n0,
                s0: s0 / r2,
            },
            CovariancePrior::Ding { nu0, c } => CovariancePrior::Ding { nu0, c: c / r2 },
        }),
        ErrorModel::Dpm(dc) => {
            let mut d = dc.clone();
            d.mu_cov = SymMat2::new(dc.mu_cov.a11, dc.mu_cov.a12 / r, dc.mu_cov.a22 / r2);
            d.base = match dc.base {
                ErrBase::Vh { g0, tau, n0, s0 } => {
                    ErrBase::Vh { g0: g0 / r, tau, n0, s0: s0 / r2 }
                }
                ErrBase::Ding { nu0, c } => ErrBase::Ding { nu0, c: c / r2 },
            };
            ErrorModel::Dpm(d)
        }
    }
}

/// Marginalized outcome-block update: every tree's structure is proposed
/// against the likelihood with all leaf values and gamma integrated out,
/// then (leaf values, gamma) are drawn jointly and written back.
#[allow(clippy::too_many_arguments)]
fn marginalized_outcome_update(
    fy: &mut Forest,
    x_sel: &Covariates,
    z_tilde: &[f64],
    ys: &[f64],
    phi: f64,
    tau: f64,
    out_cfg: &BartConfig,
    rng: &mut RngStream,
) -> Result<f64, ModelError> {
    let n1 = ys.len();
    let rows: Vec<usize> = (0..n1).collect();
    let sigma0y_2 = fy.sigma0_2;
    let mut cur_ll: Option<f64> = None;
    for j in 0..fy.n_trees() {
        let prop = match crate::bart::proposal::propose_move(&fy.fits()[j], x_sel, out_cfg, rng) {
            ProposeOutcome::Proposed(p) => p,
            ProposeOutcome::Infeasible => {
                let _ = rng.uniform();
                continue;
            }
        };
        let cur = match cur_ll {
            Some(v) => v,
            None => {
                let design = LeafDesign::from_forest(fy, &rows);
                outcome_block_loglik_design(&design, z_tilde, ys, phi, tau, sigma0y_2)?
            }
        };
        // proposal design: swap tree j in place, restore on rejection
        let saved = fy.fits()[j].clone();
        fy.fits_mut()[j].tree = prop.tree;
        fy.fits_mut()[j].leaf_of = prop.leaf_of;
        let design = LeafDesign::from_forest(fy, &rows);
        let prop_ll = outcome_block_loglik_design(&design, z_tilde, ys, phi, tau, sigma0y_2)?;
        let log_accept = prop_ll - cur + prop.log_prior_ratio + prop.log_transition_ratio;
        if rng.uniform().ln() < log_accept {
            cur_ll = Some(prop_ll);
        } else {
            fy.fits_mut()[j] = saved;
            cur_ll = Some(cur);
        }
    }
    let design = LeafDesign::from_forest(fy, &rows);
    let (leaf_vals, gamma) =
        joint_leaf_gamma_draw_design(&design, z_tilde, ys, phi, tau, sigma0y_2, rng)?;
    for (col, &(tree, slot)) in design.owner.iter().enumerate() {
        fy.fits_mut()[tree as usize]
            .tree
            .set_leaf_value(slot as usize, leaf_vals[col]);
    }
    fy.recompute_cache(x_sel);
    Ok(gamma)
}
