//! The `fit`, `simulate`, and `calibrate` commands and their output
//! bundles.

use super::config::{
    CalibrateConfig, FitConfig, ModelChoice, PriorChoice, SimulateConfig,
};
use super::io::load_dataset;
use super::CliError;
use crate::bart::{BartConfig, Covariates, McmcSize};
use crate::calibrate::{
    ding_calibrate_c, ding_rho_cdf, omori_calibrate_s0, vh_calibrate_s0, vh_outcome_var_prior_mean,
    vh_rho_cdf, vh_rho_modes, omori_rho_cdf, CalibrationInput,
};
use crate::dpm::{ClusterParams, DpmConfig, ErrBase};
use crate::estimands::{observed_conditional_mean, summarize};
use crate::math::normal_cdf;
use crate::model::{
    run_chain, ChainConfig, CovariancePrior, Dataset, ErrorModel, EvalPoints, FitOutput,
    LinearPriors, MeanModel, SamplerKind,
};
use crate::rng::RngStream;
use crate::sim::{run_scenario, DgpSpec, ModelSpec, PriorSpec};
use crate::stats::variance;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Removes every file it registered unless disarmed; keeps failed runs
/// from leaving partial bundles behind.
struct OutputGuard {
    files: Vec<PathBuf>,
    armed: bool,
}

impl OutputGuard {
    fn new() -> Self {
        Self { files: Vec::new(), armed: true }
    }
    fn track(&mut self, p: &Path) -> PathBuf {
        self.files.push(p.to_path_buf());
        p.to_path_buf()
    }
    fn disarm(&mut self) {
        self.armed = false;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.armed {
            for f in &self.files {
                let _ = std::fs::remove_file(f);
            }
        }
    }
}

fn sigma_hat_y2(data: &Dataset) -> f64 {
    variance(&data.selected_outcomes()).max(1e-12)
}

fn build_prior(cfg: &FitConfig, sigma2: f64) -> Result<CovariancePrior, CliError> {
    let prior = match cfg.prior {
        PriorChoice::Vh => {
            let s0 = match cfg.s0 {
                Some(v) => v,
                None => vh_calibrate_s0(&CalibrationInput {
                    sigma_hat_y2: sigma2,
                    g0: cfg.g0,
                    n0: cfg.n0,
                    tau: cfg.tau,
                    ..Default::default()
                })
                .map_err(|e| CliError::Calibration(e.to_string()))?,
            };
            CovariancePrior::Vh { g0: cfg.g0, tau: cfg.tau, n0: cfg.n0, s0 }
        }
        PriorChoice::Omori => {
            let s0 = match cfg.s0 {
                Some(v) => v,
                None => omori_calibrate_s0(&CalibrationInput {
                    sigma_hat_y2: sigma2,
                    g0: cfg.g0,
                    n0: cfg.n0,
                    big_g0: cfg.big_g0,
                    ..Default::default()
                })
                .map_err(|e| CliError::Calibration(e.to_string()))?,
            };
            CovariancePrior::Omori { g0: cfg.g0, big_g0: cfg.big_g0, n0: cfg.n0, s0 }
        }
        PriorChoice::Ding => {
            let c = cfg.ding_c.unwrap_or_else(|| ding_calibrate_c(sigma2, cfg.nu0, cfg.q).c);
            CovariancePrior::Ding { nu0: cfg.nu0, c }
        }
    };
    Ok(prior)
}

/// Covariate matrices for rows at which to evaluate the fit (the test
/// file when provided, else the training rows).
fn eval_covariates(
    cfg: &FitConfig,
    data: &Dataset,
) -> Result<(Covariates, Covariates), CliError> {
    match &cfg.test_data {
        None => Ok((data.x.clone(), data.w.clone())),
        Some(path) => {
            // the test file uses the same column roles; outcome values may
            // be missing everywhere, so read covariates directly
            let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
            let headers: Vec<String> =
                rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
            let idx = |name: &str| -> Result<usize, CliError> {
                headers.iter().position(|h| h == name).ok_or_else(|| {
                    CliError::Config(format!("test data lacks column '{name}'"))
                })
            };
            let xi: Vec<usize> =
                cfg.roles.x_cols.iter().map(|c| idx(c)).collect::<Result<_, _>>()?;
            let wi: Vec<usize> =
                cfg.roles.w_cols.iter().map(|c| idx(c)).collect::<Result<_, _>>()?;
            let mut x_rows = Vec::new();
            let mut w_rows = Vec::new();
            for (k, rec) in rdr.records().enumerate() {
                let rec = rec?;
                let parse = |j: usize| -> Result<f64, CliError> {
                    rec[j].trim().parse::<f64>().map_err(|_| {
                        CliError::Data(format!("test data row {}: non-numeric cell", k + 1))
                    })
                };
                x_rows.push(xi.iter().map(|&j| parse(j)).collect::<Result<Vec<_>, _>>()?);
                w_rows.push(wi.iter().map(|&j| parse(j)).collect::<Result<Vec<_>, _>>()?);
            }
            if x_rows.is_empty() {
                return Err(CliError::Data("test data has no rows".into()));
            }
            Ok((Covariates::from_rows(&x_rows), Covariates::from_rows(&w_rows)))
        }
    }
}

fn with_column_set(cov: &Covariates, col: Option<usize>, value: f64) -> Covariates {
    match col {
        None => cov.clone(),
        Some(j) => {
            let rows: Vec<Vec<f64>> = (0..cov.n_rows())
                .map(|i| {
                    let mut r = cov.row(i);
                    r[j] = value;
                    r
                })
                .collect();
            Covariates::from_rows(&rows)
        }
    }
}

fn vstack(a: &Covariates, b: &Covariates) -> Covariates {
    let rows: Vec<Vec<f64>> = (0..a.n_rows())
        .map(|i| a.row(i))
        .chain((0..b.n_rows()).map(|i| b.row(i)))
        .collect();
    Covariates::from_rows(&rows)
}

pub fn cmd_fit(cfg: &FitConfig) -> Result<(), CliError> {
    let data = load_dataset(&cfg.data, &cfg.roles)?;
    eprintln!(
        "loaded {} rows ({} selected, rate {:.3})",
        data.n(),
        data.n_selected(),
        data.n_selected() as f64 / data.n() as f64
    );

    let sigma2 = sigma_hat_y2(&data);
    let prior = build_prior(cfg, sigma2)?;

    let sel_cfg = BartConfig { m: cfg.m_selection, ..BartConfig::selection_default() };
    let out_cfg = BartConfig { m: cfg.m_outcome, ..BartConfig::outcome_default() };
    let mean_model = match cfg.model {
        ModelChoice::Linear => MeanModel::Linear(LinearPriors::diffuse(
            data.w.n_cols(),
            data.x.n_cols(),
            100.0,
        )),
        _ => MeanModel::Trees { selection: sel_cfg, outcome: out_cfg },
    };
    let sampler = match cfg.model {
        ModelChoice::BartMarginalized => SamplerKind::Marginalized,
        _ => SamplerKind::Standard,
    };
    let error_model = match cfg.model {
        ModelChoice::BartNp => {
            let base = match prior {
                CovariancePrior::Vh { g0, tau, n0, s0 } => ErrBase::Vh { g0, tau, n0, s0 },
                CovariancePrior::Ding { nu0, c } => ErrBase::Ding { nu0, c },
                CovariancePrior::Omori { .. } => {
                    return Err(CliError::Config(
                        "model bart-np supports the vh and ding priors".into(),
                    ))
                }
            };
            ErrorModel::Dpm(DpmConfig::with_base(base))
        }
        _ => ErrorModel::Gaussian(prior),
    };

    // evaluation rows: test data (or training rows) plus, when a
    // treatment column is configured, both treatment arms appended
    let (x_eval_base, w_eval_base) = eval_covariates(cfg, &data)?;
    let n_eval = x_eval_base.n_rows();
    let treat_x = cfg
        .roles
        .treat
        .as_ref()
        .and_then(|t| cfg.roles.x_cols.iter().position(|c| c == t));
    let treat_w = cfg
        .roles
        .treat
        .as_ref()
        .and_then(|t| cfg.roles.w_cols.iter().position(|c| c == t));
    if cfg.roles.treat.is_some() && treat_x.is_none() && treat_w.is_none() {
        return Err(CliError::Config(
            "treatment column must appear among x_cols or w_cols".into(),
        ));
    }
    let with_arms = cfg.roles.treat.is_some();
    let (x_eval, w_eval) = if with_arms {
        (
            vstack(
                &vstack(&x_eval_base, &with_column_set(&x_eval_base, treat_x, 1.0)),
                &with_column_set(&x_eval_base, treat_x, 0.0),
            ),
            vstack(
                &vstack(&w_eval_base, &with_column_set(&w_eval_base, treat_w, 1.0)),
                &with_column_set(&w_eval_base, treat_w, 0.0),
            ),
        )
    } else {
        (x_eval_base, w_eval_base)
    };

    let mut chain_cfg = ChainConfig::new(McmcSize::new(cfg.mcmc.iters, cfg.mcmc.burnin, cfg.mcmc.thin));
    chain_cfg.binary_outcome = cfg.binary_outcome;
    let eval = EvalPoints { x_test: Some(x_eval), w_test: Some(w_eval) };

    let root = RngStream::new(cfg.mcmc.seed);
    let fits: Vec<Result<FitOutput, _>> = (0..cfg.mcmc.chains)
        .into_par_iter()
        .map(|c| {
            run_chain(
                &data,
                &mean_model,
                &error_model,
                sampler,
                &chain_cfg,
                &eval,
                &root.substream(c as u64),
            )
        })
        .collect();
    let mut outputs = Vec::new();
    for f in fits {
        outputs.push(f?);
    }
    for o in &outputs {
        for w in &o.warnings {
            eprintln!("warning: {w}");
        }
    }

    std::fs::create_dir_all(&cfg.out)?;
    let mut guard = OutputGuard::new();
    write_bundle(cfg, &outputs, n_eval, with_arms, &mut guard)?;
    guard.disarm();
    Ok(())
}

fn write_bundle(
    cfg: &FitConfig,
    outputs: &[FitOutput],
    n_eval: usize,
    with_arms: bool,
    guard: &mut OutputGuard,
) -> Result<(), CliError> {
    let is_np = cfg.model == ModelChoice::BartNp;

    // ------------------------------------------------------- draws.csv
    let draws_path = guard.track(&cfg.out.join("draws.csv"));
    {
        let mut out = String::new();
        out.push_str("iter,chain,gamma,phi,rho,sigma_y2");
        if is_np {
            out.push_str(",dependence,k,alpha");
        }
        out.push('\n');
        for (c, fit) in outputs.iter().enumerate() {
            let d = &fit.draws;
            for t in 0..d.gamma.len() {
                let iter = cfg.mcmc.burnin + t * cfg.mcmc.thin;
                write!(
                    out,
                    "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                    iter, c, d.gamma[t], d.phi[t], d.rho[t], d.sigma_y2[t]
                )
                .unwrap();
                if is_np {
                    let dd = d.dpm.as_ref().expect("np draws");
                    write!(out, ",{:.16e},{},{:.16e}", dd.dependence[t], dd.k[t], dd.alpha[t])
                        .unwrap();
                }
                out.push('\n');
            }
        }
        std::fs::write(&draws_path, out)?;
    }

    // pooled per-draw estimand values over all chains
    let mut latent: Vec<Vec<f64>> = Vec::new();
    let mut obs_cond: Vec<Vec<f64>> = Vec::new();
    let mut sel_prob: Vec<Vec<f64>> = Vec::new();
    let mut cate: Vec<Vec<f64>> = Vec::new();
    let mut sel_eff: Vec<Vec<f64>> = Vec::new();
    for fit in outputs {
        let d = &fit.draws;
        for t in 0..d.gamma.len() {
            let fy = &d.fy_test[t];
            let fz = &d.fz_test[t];
            let params_of = |i: usize| -> ClusterParams {
                if is_np {
                    d.dpm.as_ref().expect("np draws").test_params[t][i]
                } else {
                    ClusterParams { mu1: 0.0, mu2: 0.0, gamma: d.gamma[t], phi: d.phi[t] }
                }
            };
            let mut lat = Vec::with_capacity(n_eval);
            let mut ocm = Vec::with_capacity(n_eval);
            let mut sp = Vec::with_capacity(n_eval);
            for i in 0..n_eval {
                let p = params_of(i);
                lat.push(fy[i] + p.mu2);
                ocm.push(observed_conditional_mean(fy[i], fz[i], p.gamma, p.mu1, p.mu2));
                sp.push(normal_cdf(fz[i] + p.mu1));
            }
            latent.push(lat);
            obs_cond.push(ocm);
            sel_prob.push(sp);
            if with_arms {
                let mut ce = Vec::with_capacity(n_eval);
                let mut se = Vec::with_capacity(n_eval);
                for i in 0..n_eval {
                    let p = params_of(i);
                    ce.push(fy[n_eval + i] - fy[2 * n_eval + i]);
                    se.push(
                        normal_cdf(fz[n_eval + i] + p.mu1) - normal_cdf(fz[2 * n_eval + i] + p.mu1),
                    );
                }
                cate.push(ce);
                sel_eff.push(se);
            }
        }
    }

    // ------------------------------------------------- predictions.csv
    let pred_path = guard.track(&cfg.out.join("predictions.csv"));
    {
        let lat_s = summarize(&latent);
        let ocm_s = summarize(&obs_cond);
        let sp_s = summarize(&sel_prob);
        let mut out = String::from(
            "row,latent_mean,latent_q025,latent_q975,obs_cond_mean,obs_cond_q025,obs_cond_q975,sel_prob_mean\n",
        );
        for i in 0..n_eval {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                i,
                lat_s.mean[i],
                lat_s.q025[i],
                lat_s.q975[i],
                ocm_s.mean[i],
                ocm_s.q025[i],
                ocm_s.q975[i],
                sp_s.mean[i]
            )
            .unwrap();
        }
        std::fs::write(&pred_path, out)?;
    }

    // ----------------------------------------------------- effects.csv
    if with_arms {
        let eff_path = guard.track(&cfg.out.join("effects.csv"));
        let cate_s = summarize(&cate);
        let se_s = summarize(&sel_eff);
        let mut out = String::from(
            "row,cate_mean,cate_q025,cate_q975,sel_effect_mean,sel_effect_q025,sel_effect_q975\n",
        );
        for i in 0..n_eval {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                i,
                cate_s.mean[i],
                cate_s.q025[i],
                cate_s.q975[i],
                se_s.mean[i],
                se_s.q025[i],
                se_s.q975[i]
            )
            .unwrap();
        }
        std::fs::write(&eff_path, out)?;
    }

    // ------------------------------------------------------ summary.txt
    let summary_path = guard.track(&cfg.out.join("summary.txt"));
    {
        let pool = |f: &dyn Fn(&FitOutput) -> &[f64]| -> Vec<f64> {
            outputs.iter().flat_map(|o| f(o).iter().copied()).collect()
        };
        let table_row = |name: &str, v: &[f64]| -> String {
            let mut sv = v.to_vec();
            sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
            format!(
                "{:<10} {:>12.6} {:>12.6} {:>12.6}\n",
                name,
                crate::stats::mean(v),
                crate::stats::quantile_sorted(&sv, 0.025),
                crate::stats::quantile_sorted(&sv, 0.975)
            )
        };
        let mut out = String::new();
        writeln!(out, "{:<10} {:>12} {:>12} {:>12}", "parameter", "mean", "q2.5%", "q97.5%")
            .unwrap();
        out.push_str(&table_row("rho", &pool(&|o| &o.draws.rho)));
        out.push_str(&table_row("gamma", &pool(&|o| &o.draws.gamma)));
        out.push_str(&table_row("phi", &pool(&|o| &o.draws.phi)));
        out.push_str(&table_row("sigma_y2", &pool(&|o| &o.draws.sigma_y2)));
        if is_np {
            let deps: Vec<f64> = outputs
                .iter()
                .flat_map(|o| o.draws.dpm.as_ref().unwrap().dependence.iter().copied())
                .filter(|d| d.is_finite())
                .collect();
            out.push_str(&table_row("dependence", &deps));
            let ks: Vec<f64> = outputs
                .iter()
                .flat_map(|o| o.draws.dpm.as_ref().unwrap().k.iter().map(|&k| k as f64))
                .collect();
            out.push_str(&table_row("clusters", &ks));
        }
        std::fs::write(&summary_path, out)?;
    }

    // ------------------------------------------------------ config echo
    let echo_path = guard.track(&cfg.out.join("config_resolved.txt"));
    std::fs::write(&echo_path, cfg.raw.echo())?;
    Ok(())
}

fn parse_model_name(name: &str) -> Result<ModelSpec, CliError> {
    let spec = match name {
        "bart" => ModelSpec::PlainBart,
        "tobart-vh" => ModelSpec::Tobart {
            prior: PriorSpec::vh_default(),
            sampler: SamplerKind::Standard,
        },
        "tobart-omori" => ModelSpec::Tobart {
            prior: PriorSpec::Omori { g0: 0.0, big_g0: 0.1, n0: 6.0 },
            sampler: SamplerKind::Standard,
        },
        "tobart-ding" => ModelSpec::Tobart {
            prior: PriorSpec::Ding { nu0: 3.0, q: 0.95 },
            sampler: SamplerKind::Standard,
        },
        "tobart-marg" | "tobart-vh-marg" => ModelSpec::Tobart {
            prior: PriorSpec::vh_default(),
            sampler: SamplerKind::Marginalized,
        },
        "tobart-np-vh" | "tobart-np" => ModelSpec::TobartNp { prior: PriorSpec::vh_default() },
        "tobart-np-ding" => ModelSpec::TobartNp { prior: PriorSpec::Ding { nu0: 3.25, q: 0.95 } },
        other => return Err(CliError::Config(format!("unknown model '{other}'"))),
    };
    Ok(spec)
}

pub fn cmd_simulate(cfg: &SimulateConfig) -> Result<(), CliError> {
    let spec = DgpSpec {
        family: cfg.family,
        rho: cfg.rho,
        error_kind: cfg.error_kind,
        n_train: cfg.n_train,
        n_test: cfg.n_test,
        reps: cfg.reps,
        seed: cfg.mcmc.seed,
    };
    let models: Vec<ModelSpec> =
        cfg.models.iter().map(|m| parse_model_name(m)).collect::<Result<_, _>>()?;
    let mcmc = McmcSize::new(cfg.mcmc.iters, cfg.mcmc.burnin, cfg.mcmc.thin);
    let sel_cfg = BartConfig { m: cfg.m_selection, ..BartConfig::selection_default() };
    let out_cfg = BartConfig { m: cfg.m_outcome, ..BartConfig::outcome_default() };
    let table = run_scenario(&spec, &models, &mcmc, &sel_cfg, &out_cfg)?;
    let csv = table.to_csv();
    print!("{csv}");

    std::fs::create_dir_all(&cfg.out)?;
    let mut guard = OutputGuard::new();
    let results = guard.track(&cfg.out.join("results.csv"));
    std::fs::write(&results, &csv)?;
    let echo = guard.track(&cfg.out.join("config_resolved.txt"));
    std::fs::write(&echo, cfg.raw.echo())?;
    guard.disarm();
    Ok(())
}

pub fn cmd_calibrate(cfg: &CalibrateConfig) -> Result<(), CliError> {
    let inp = CalibrationInput {
        sigma_hat_y2: cfg.sigma_hat_y2,
        g0: cfg.g0,
        n0: cfg.n0,
        tau: cfg.tau,
        big_g0: cfg.big_g0,
        nu0: cfg.nu0,
        q: cfg.q,
    };
    let s0_vh = vh_calibrate_s0(&inp).map_err(|e| CliError::Calibration(e.to_string()))?;
    let s0_omori = omori_calibrate_s0(&inp).map_err(|e| CliError::Calibration(e.to_string()))?;
    let ding = ding_calibrate_c(cfg.sigma_hat_y2, cfg.nu0, cfg.q);

    let mut out = String::new();
    writeln!(out, "calibration for sigma_hat_y2 = {:.6}", cfg.sigma_hat_y2).unwrap();
    writeln!(out, "S0 (vh, tau = {:.3}, n0 = {:.1}): {:.6}", cfg.tau, cfg.n0, s0_vh).unwrap();
    writeln!(out, "S0 (omori, G0 = {:.3}, n0 = {:.1}): {:.6}", cfg.big_g0, cfg.n0, s0_omori)
        .unwrap();
    writeln!(
        out,
        "c (ding, nu0 = {:.2}, q = {:.2}): {:.6}  [chi2(nu0) shortcut: {:.6}]",
        cfg.nu0, cfg.q, ding.c, ding.c_chi2_nu0
    )
    .unwrap();
    writeln!(
        out,
        "prior mean of phi + gamma^2: vh {:.6}, omori {:.6}",
        vh_outcome_var_prior_mean(cfg.tau, s0_vh, cfg.n0, cfg.g0)
            .map_err(|e| CliError::Calibration(e.to_string()))?,
        s0_omori / (cfg.n0 - 2.0) + cfg.big_g0 * (1.0 + cfg.g0 * cfg.g0)
    )
    .unwrap();
    let modes = vh_rho_modes(cfg.tau);
    let modes_str = modes.iter().map(|m| format!("{m:.5}")).collect::<Vec<_>>().join(", ");
    writeln!(out, "rho prior modes (vh): {{{modes_str}}}").unwrap();

    writeln!(out, "\nrho prior CDF table").unwrap();
    writeln!(out, "{:>8} {:>10} {:>10} {:>10}", "rho", "vh", "omori", "ding").unwrap();
    for k in 0..21 {
        let rho = -0.99 + 0.099 * k as f64;
        let vh = vh_rho_cdf(rho, cfg.tau);
        let om = omori_rho_cdf(rho, cfg.n0, s0_omori, cfg.big_g0)
            .map_err(|e| CliError::Calibration(e.to_string()))?;
        let dg = ding_rho_cdf(rho, cfg.nu0);
        writeln!(out, "{rho:>8.3} {vh:>10.6} {om:>10.6} {dg:>10.6}").unwrap();
    }

    print!("{out}");
    if let Some(path) = &cfg.out {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, &out)?;
    }
    Ok(())
}
