//! Scenario runner: fits a baseline and the requested selection models on
//! repeated draws from a DGP and aggregates the benchmark metrics.

use super::{generate, DgpSpec, GeneratedData, SimError};
use crate::bart::{fit_bart_regression, fit_probit_bart, BartConfig, Covariates, McmcSize};
use crate::calibrate::{ding_calibrate_c, omori_calibrate_s0, vh_calibrate_s0, CalibrationInput};
use crate::dpm::{DpmConfig, ErrBase};
use crate::estimands::{metrics, summarize, Summaries};
use crate::math::normal_cdf;
use crate::model::{
    run_chain, ChainConfig, CovariancePrior, ErrorModel, EvalPoints, MeanModel, SamplerKind,
};
use crate::rng::RngStream;
use crate::stats::{mean, variance};
use rayon::prelude::*;

/// Covariance-prior family with data-calibrated scale.
#[derive(Debug, Clone, Copy)]
pub enum PriorSpec {
    Vh { g0: f64, tau: f64, n0: f64 },
    Omori { g0: f64, big_g0: f64, n0: f64 },
    Ding { nu0: f64, q: f64 },
}

impl PriorSpec {
    pub fn vh_default() -> Self {
        PriorSpec::Vh { g0: 0.0, tau: 0.5, n0: 6.0 }
    }

    /// Resolve the scale hyperparameter against the estimated outcome
    /// variance (original scale).
    pub fn calibrate(&self, sigma_hat_y2: f64) -> Result<CovariancePrior, SimError> {
        match *self {
            PriorSpec::Vh { g0, tau, n0 } => {
                let inp = CalibrationInput { sigma_hat_y2, g0, tau, n0, ..Default::default() };
                let s0 = vh_calibrate_s0(&inp)
                    .map_err(|e| SimError::BadSpec(format!("VH calibration: {e}")))?;
                Ok(CovariancePrior::Vh { g0, tau, n0, s0 })
            }
            PriorSpec::Omori { g0, big_g0, n0 } => {
                let inp = CalibrationInput { sigma_hat_y2, g0, big_g0, n0, ..Default::default() };
                let s0 = omori_calibrate_s0(&inp)
                    .map_err(|e| SimError::BadSpec(format!("Omori calibration: {e}")))?;
                Ok(CovariancePrior::Omori { g0, big_g0, n0, s0 })
            }
            PriorSpec::Ding { nu0, q } => {
                let c = ding_calibrate_c(sigma_hat_y2, nu0, q).c;
                Ok(CovariancePrior::Ding { nu0, c })
            }
        }
    }
}

/// One fitted column of the results table.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// plain BART on the selected outcomes plus probit BART for selection
    PlainBart,
    Tobart { prior: PriorSpec, sampler: SamplerKind },
    TobartNp { prior: PriorSpec },
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::PlainBart => "bart".into(),
            ModelSpec::Tobart { prior, sampler } => {
                let p = match prior {
                    PriorSpec::Vh { .. } => "vh",
                    PriorSpec::Omori { .. } => "omori",
                    PriorSpec::Ding { .. } => "ding",
                };
                match sampler {
                    SamplerKind::Standard => format!("tobart-{p}"),
                    SamplerKind::Marginalized => format!("tobart-{p}-marg"),
                }
            }
            ModelSpec::TobartNp { prior } => {
                let p = match prior {
                    PriorSpec::Vh { .. } => "vh",
                    PriorSpec::Omori { .. } => "vh",
                    PriorSpec::Ding { .. } => "ding",
                };
                format!("tobart-np-{p}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RepMetrics {
    pub fy_rmse: f64,
    pub fy_cover95: f64,
    pub sel_mse: f64,
    pub rho_mean: f64,
    pub pehe_outcome: Option<f64>,
    pub pehe_selection: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioModelResult {
    pub name: String,
    pub per_rep: Vec<Option<RepMetrics>>,
}

impl ScenarioModelResult {
    pub fn failures(&self) -> usize {
        self.per_rep.iter().filter(|r| r.is_none()).count()
    }

    pub fn aggregate(&self) -> Option<RepMetrics> {
        let ok: Vec<&RepMetrics> = self.per_rep.iter().flatten().collect();
        if ok.is_empty() {
            return None;
        }
        let n = ok.len() as f64;
        let get = |f: &dyn Fn(&RepMetrics) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / n;
        let opt = |f: &dyn Fn(&RepMetrics) -> Option<f64>| {
            let vals: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
            if vals.is_empty() { None } else { Some(mean(&vals)) }
        };
        Some(RepMetrics {
            fy_rmse: get(&|r| r.fy_rmse),
            fy_cover95: get(&|r| r.fy_cover95),
            sel_mse: get(&|r| r.sel_mse),
            rho_mean: get(&|r| r.rho_mean),
            pehe_outcome: opt(&|r| r.pehe_outcome),
            pehe_selection: opt(&|r| r.pehe_selection),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioTable {
    pub baseline: String,
    pub models: Vec<ScenarioModelResult>,
}

impl ScenarioTable {
    pub fn aggregate_of(&self, name: &str) -> Option<RepMetrics> {
        self.models.iter().find(|m| m.name == name).and_then(|m| m.aggregate())
    }

    /// CSV with absolute metrics and baseline-relative columns.
    pub fn to_csv(&self) -> String {
        let base = self.aggregate_of(&self.baseline);
        let mut out = String::from(
            "model,fy_rmse,fy_rmse_rel,fy_cover95,sel_mse,sel_mse_rel,rho_mean,pehe_outcome,pehe_selection,failures\n",
        );
        for m in &self.models {
            let agg = m.aggregate();
            let (abs, rel) = match (&agg, &base) {
                (Some(a), Some(b)) => {
                    (a.clone(), (a.fy_rmse / b.fy_rmse, a.sel_mse / b.sel_mse))
                }
                (Some(a), None) => (a.clone(), (f64::NAN, f64::NAN)),
                _ => {
                    out.push_str(&format!("{},,,,,,,,,{}\n", m.name, m.failures()));
                    continue;
                }
            };
            let fmt_opt =
                |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}\n",
                m.name,
                abs.fy_rmse,
                rel.0,
                abs.fy_cover95,
                abs.sel_mse,
                rel.1,
                abs.rho_mean,
                fmt_opt(abs.pehe_outcome),
                fmt_opt(abs.pehe_selection),
                m.failures()
            ));
        }
        out
    }
}

fn vstack(a: &Covariates, b: &Covariates) -> Covariates {
    let rows: Vec<Vec<f64>> = (0..a.n_rows())
        .map(|i| a.row(i))
        .chain((0..b.n_rows()).map(|i| b.row(i)))
        .collect();
    Covariates::from_rows(&rows)
}

fn split_draws(draws: &[Vec<f64>], n_first: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let first = draws.iter().map(|d| d[..n_first].to_vec()).collect();
    let second = draws.iter().map(|d| d[n_first..].to_vec()).collect();
    (first, second)
}

fn pehe(first: &Summaries, second: &Summaries, truth: &[f64]) -> f64 {
    let n = truth.len();
    let mut se = 0.0;
    for i in 0..n {
        let d = (first.mean[i] - second.mean[i]) - truth[i];
        se += d * d;
    }
    (se / n as f64).sqrt()
}

struct FitArtifacts {
    fy_test: Vec<Vec<f64>>,
    sel_prob_mean: Vec<f64>,
    rho_mean: f64,
    fy_arms: Option<(Summaries, Summaries)>,
    sel_arms: Option<(Vec<f64>, Vec<f64>)>,
}

fn fit_model(
    model: &ModelSpec,
    data: &GeneratedData,
    mcmc: &McmcSize,
    sel_cfg: &BartConfig,
    out_cfg: &BartConfig,
    rng: &RngStream,
) -> Result<FitArtifacts, SimError> {
    let n_test = data.x_test.n_rows();
    // stack both treatment arms after the plain test rows when present
    let (x_eval, w_eval) = match &data.arms {
        Some(arms) => (
            vstack(&vstack(&data.x_test, &arms.x_test_treat), &arms.x_test_ctrl),
            vstack(&vstack(&data.w_test, &arms.w_test_treat), &arms.w_test_ctrl),
        ),
        None => (data.x_test.clone(), data.w_test.clone()),
    };

    match model {
        ModelSpec::PlainBart => {
            let x_sel = data.train.x_selected();
            let y_sel = data.train.selected_outcomes();
            let reg = fit_bart_regression(&x_sel, &y_sel, &x_eval, out_cfg, mcmc, &rng.substream(0));
            let probit = fit_probit_bart(
                &data.train.w,
                &data.train.selected,
                &w_eval,
                sel_cfg,
                mcmc,
                &rng.substream(1),
            );
            let sel_draws: Vec<Vec<f64>> = probit
                .f_test
                .iter()
                .map(|d| d.iter().map(|&f| normal_cdf(f)).collect())
                .collect();
            let (fy_main, fy_rest) = split_draws(&reg.f_test, n_test);
            let (sel_main, sel_rest) = split_draws(&sel_draws, n_test);
            let fy_arms = arms_summaries(&fy_rest, n_test, data.arms.is_some());
            let sel_arms = arm_means(&sel_rest, n_test, data.arms.is_some());
            Ok(FitArtifacts {
                sel_prob_mean: summarize(&sel_main).mean,
                fy_test: fy_main,
                rho_mean: 0.0,
                fy_arms,
                sel_arms,
            })
        }
        ModelSpec::Tobart { prior, sampler } => {
            let sigma_hat2 = variance(&data.train.selected_outcomes());
            let cov_prior = prior.calibrate(sigma_hat2)?;
            let mean_model = MeanModel::Trees {
                selection: sel_cfg.clone(),
                outcome: out_cfg.clone(),
            };
            let cfg = ChainConfig::new(*mcmc);
            let eval = EvalPoints { x_test: Some(x_eval), w_test: Some(w_eval) };
            let fit = run_chain(
                &data.train,
                &mean_model,
                &ErrorModel::Gaussian(cov_prior),
                *sampler,
                &cfg,
                &eval,
                &rng.substream(0),
            )?;
            let sel_draws: Vec<Vec<f64>> = fit
                .draws
                .fz_test
                .iter()
                .map(|d| d.iter().map(|&f| normal_cdf(f)).collect())
                .collect();
            let (fy_main, fy_rest) = split_draws(&fit.draws.fy_test, n_test);
            let (sel_main, sel_rest) = split_draws(&sel_draws, n_test);
            let fy_arms = arms_summaries(&fy_rest, n_test, data.arms.is_some());
            let sel_arms = arm_means(&sel_rest, n_test, data.arms.is_some());
            Ok(FitArtifacts {
                sel_prob_mean: summarize(&sel_main).mean,
                fy_test: fy_main,
                rho_mean: mean(&fit.draws.rho),
                fy_arms,
                sel_arms,
            })
        }
        ModelSpec::TobartNp { prior } => {
            let sigma_hat2 = variance(&data.train.selected_outcomes());
            let base = match prior.calibrate(sigma_hat2)? {
                CovariancePrior::Vh { g0, tau, n0, s0 } => ErrBase::Vh { g0, tau, n0, s0 },
                CovariancePrior::Ding { nu0, c } => ErrBase::Ding { nu0, c },
                CovariancePrior::Omori { .. } => {
                    return Err(SimError::BadSpec(
                        "the mixture error model uses the conjugate or expanded-covariance base".into(),
                    ))
                }
            };
            let mean_model = MeanModel::Trees {
                selection: sel_cfg.clone(),
                outcome: out_cfg.clone(),
            };
            let cfg = ChainConfig::new(*mcmc);
            let eval = EvalPoints { x_test: Some(x_eval), w_test: Some(w_eval) };
            let fit = run_chain(
                &data.train,
                &mean_model,
                &ErrorModel::Dpm(DpmConfig::with_base(base)),
                SamplerKind::Standard,
                &cfg,
                &eval,
                &rng.substream(0),
            )?;
            let dpm = fit.draws.dpm.as_ref().expect("dpm draws");
            let sel_draws: Vec<Vec<f64>> = fit
                .draws
                .fz_test
                .iter()
                .map(|d| d.iter().map(|&f| normal_cdf(f)).collect())
                .collect();
            let (fy_main, fy_rest) = split_draws(&fit.draws.fy_test, n_test);
            let (sel_main, sel_rest) = split_draws(&sel_draws, n_test);
            let fy_arms = arms_summaries(&fy_rest, n_test, data.arms.is_some());
            let sel_arms = arm_means(&sel_rest, n_test, data.arms.is_some());
            let dep: Vec<f64> = dpm.dependence.iter().copied().filter(|d| d.is_finite()).collect();
            Ok(FitArtifacts {
                sel_prob_mean: summarize(&sel_main).mean,
                fy_test: fy_main,
                rho_mean: if dep.is_empty() { f64::NAN } else { mean(&dep) },
                fy_arms,
                sel_arms,
            })
        }
    }
}

fn arms_summaries(
    rest: &[Vec<f64>],
    n_test: usize,
    has_arms: bool,
) -> Option<(Summaries, Summaries)> {
    if !has_arms {
        return None;
    }
    let (treat, ctrl) = split_draws(rest, n_test);
    Some((summarize(&treat), summarize(&ctrl)))
}

fn arm_means(rest: &[Vec<f64>], n_test: usize, has_arms: bool) -> Option<(Vec<f64>, Vec<f64>)> {
    if !has_arms {
        return None;
    }
    let (treat, ctrl) = split_draws(rest, n_test);
    Some((summarize(&treat).mean, summarize(&ctrl).mean))
}

fn rep_metrics(art: &FitArtifacts, data: &GeneratedData) -> Result<RepMetrics, SimError> {
    let summ = summarize(&art.fy_test);
    let m = metrics(&summ, &data.truth_test.f_y)
        .map_err(|e| SimError::BadSpec(e.to_string()))?;
    let sel_mse = {
        let t = &data.truth_test.sel_prob;
        t.iter()
            .zip(&art.sel_prob_mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / t.len() as f64
    };
    let mut out = RepMetrics {
        fy_rmse: m.rmse,
        fy_cover95: m.coverage,
        sel_mse,
        rho_mean: art.rho_mean,
        pehe_outcome: None,
        pehe_selection: None,
    };
    if let (Some((fy_t, fy_c)), Some(truth)) = (&art.fy_arms, &data.truth_test.cate) {
        out.pehe_outcome = Some(pehe(fy_t, fy_c, truth));
    }
    if let (Some((sel_t, sel_c)), Some(truth)) = (&art.sel_arms, &data.truth_test.sel_effect) {
        let n = truth.len();
        let mut se = 0.0;
        for i in 0..n {
            let d = (sel_t[i] - sel_c[i]) - truth[i];
            se += d * d;
        }
        out.pehe_selection = Some((se / n as f64).sqrt());
    }
    Ok(out)
}

/// Run all models over all repetitions. Repetitions are independent and
/// dispatched over the worker pool; each rep derives its own stream from
/// the scenario seed, so results do not depend on scheduling.
pub fn run_scenario(
    spec: &DgpSpec,
    models: &[ModelSpec],
    mcmc: &McmcSize,
    sel_cfg: &BartConfig,
    out_cfg: &BartConfig,
) -> Result<ScenarioTable, SimError> {
    spec.validate()?;
    if models.is_empty() {
        return Err(SimError::BadSpec("need at least one model".into()));
    }
    let root = RngStream::new(spec.seed);

    let reps: Vec<Vec<Option<RepMetrics>>> = (0..spec.reps)
        .into_par_iter()
        .map(|r| {
            let rep_rng = root.substream(r as u64);
            let data = match generate(spec, &rep_rng.substream(0)) {
                Ok(d) => d,
                Err(_) => return vec![None; models.len()],
            };
            models
                .iter()
                .enumerate()
                .map(|(mi, model)| {
                    fit_model(model, &data, mcmc, sel_cfg, out_cfg, &rep_rng.substream(1 + mi as u64))
                        .and_then(|art| rep_metrics(&art, &data))
                        .ok()
                })
                .collect()
        })
        .collect();

    let baseline = models
        .iter()
        .find(|m| matches!(m, ModelSpec::PlainBart))
        .map(|m| m.name())
        .unwrap_or_else(|| models[0].name());
    let mut table = ScenarioTable { baseline, models: Vec::new() };
    for (mi, model) in models.iter().enumerate() {
        table.models.push(ScenarioModelResult {
            name: model.name(),
            per_rep: reps.iter().map(|r| r[mi]).collect(),
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{DgpFamily, ErrorKind};

    fn tiny_spec() -> DgpSpec {
        DgpSpec {
            family: DgpFamily::Brewer { id: 1 },
            rho: 0.9,
            error_kind: ErrorKind::Normal,
            n_train: 150,
            n_test: 40,
            reps: 2,
            seed: 99,
        }
    }

    #[test]
    fn baseline_relative_metric_is_one() {
        let spec = tiny_spec();
        let models = vec![ModelSpec::PlainBart];
        let mcmc = McmcSize::new(40, 15, 1);
        let sel = BartConfig { m: 6, ..BartConfig::selection_default() };
        let out = BartConfig { m: 6, ..BartConfig::outcome_default() };
        let table = run_scenario(&spec, &models, &mcmc, &sel, &out).unwrap();
        let csv = table.to_csv();
        let line: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(line[0], "bart");
        assert!((line[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
        assert!((line[5].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
        assert!(csv.starts_with("model,fy_rmse,fy_rmse_rel,fy_cover95,sel_mse,sel_mse_rel,rho_mean"));
    }

    #[test]
    fn single_rep_aggregate_equals_the_rep() {
        let mut spec = tiny_spec();
        spec.reps = 1;
        let models = vec![ModelSpec::PlainBart, ModelSpec::Tobart {
            prior: PriorSpec::vh_default(),
            sampler: crate::model::SamplerKind::Standard,
        }];
        let mcmc = McmcSize::new(30, 10, 1);
        let sel = BartConfig { m: 5, ..BartConfig::selection_default() };
        let out = BartConfig { m: 5, ..BartConfig::outcome_default() };
        let table = run_scenario(&spec, &models, &mcmc, &sel, &out).unwrap();
        for m in &table.models {
            assert_eq!(m.per_rep.len(), 1);
            let agg = m.aggregate().unwrap();
            let rep = m.per_rep[0].unwrap();
            assert_eq!(agg.fy_rmse, rep.fy_rmse);
            assert_eq!(agg.rho_mean, rep.rho_mean);
            assert_eq!(m.failures(), 0);
        }
    }

    #[test]
    fn cate_scenario_produces_pehe() {
        let spec = DgpSpec {
            family: DgpFamily::Cate { p: 10 },
            rho: 0.5,
            error_kind: ErrorKind::Normal,
            n_train: 200,
            n_test: 30,
            reps: 1,
            seed: 100,
        };
        let models = vec![ModelSpec::Tobart {
            prior: PriorSpec::vh_default(),
            sampler: crate::model::SamplerKind::Standard,
        }];
        let mcmc = McmcSize::new(30, 10, 1);
        let sel = BartConfig { m: 5, ..BartConfig::selection_default() };
        let out = BartConfig { m: 5, ..BartConfig::outcome_default() };
        let table = run_scenario(&spec, &models, &mcmc, &sel, &out).unwrap();
        let agg = table.models[0].aggregate().unwrap();
        assert!(agg.pehe_outcome.unwrap() > 0.0);
        assert!(agg.pehe_selection.unwrap() > 0.0);
    }
}
