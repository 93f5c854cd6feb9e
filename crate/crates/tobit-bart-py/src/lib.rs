//! Python bindings: fitting, prior calibration, DGP generation, and the
//! scalar numerical kernels.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use tb::bart::{BartConfig, Covariates, McmcSize};
use tb::calibrate::{
    ding_calibrate_c, ding_rho_cdf, omori_calibrate_s0, vh_calibrate_s0, vh_rho_cdf,
    vh_rho_modes, CalibrationInput,
};
use tb::dpm::{DpmConfig, ErrBase};
use tb::model::{
    run_chain, ChainConfig, CovariancePrior, Dataset, ErrorModel, EvalPoints, LinearPriors,
    MeanModel, SamplerKind,
};
use tb::rng::RngStream;
use tb::sim::{generate, DgpFamily, DgpSpec, ErrorKind};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    tb::math::normal_cdf(x)
}

#[pyfunction]
fn mills_ratio(x: f64) -> f64 {
    tb::math::mills_ratio(x)
}

#[pyfunction]
fn bessel_k(nu: f64, x: f64) -> f64 {
    tb::math::bessel_k(nu, x)
}

/// Prior calibration table for an estimated outcome variance.
#[pyfunction]
#[pyo3(signature = (sigma_hat_y2, tau=0.5, n0=6.0, g0=0.0, big_g0=0.1, nu0=3.0, q=0.95))]
fn calibrate(
    py: Python<'_>,
    sigma_hat_y2: f64,
    tau: f64,
    n0: f64,
    g0: f64,
    big_g0: f64,
    nu0: f64,
    q: f64,
) -> PyResult<Py<PyAny>> {
    let inp = CalibrationInput { sigma_hat_y2, tau, n0, g0, big_g0, nu0, q };
    let ding = ding_calibrate_c(sigma_hat_y2, nu0, q);
    let d = pyo3::types::PyDict::new(py);
    d.set_item("s0_vh", vh_calibrate_s0(&inp).map_err(err)?)?;
    d.set_item("s0_omori", omori_calibrate_s0(&inp).map_err(err)?)?;
    d.set_item("c_ding", ding.c)?;
    d.set_item("c_ding_chi2", ding.c_chi2_nu0)?;
    d.set_item("rho_modes_vh", vh_rho_modes(tau))?;
    Ok(d.into_any().unbind())
}

#[pyfunction]
fn rho_cdf_vh(rho: f64, tau: f64) -> f64 {
    vh_rho_cdf(rho, tau)
}

#[pyfunction]
fn rho_cdf_ding(rho: f64, nu0: f64) -> f64 {
    ding_rho_cdf(rho, nu0)
}

/// Posterior draws and evaluations from one fitted chain.
#[pyclass]
struct FitResult {
    #[pyo3(get)]
    gamma: Vec<f64>,
    #[pyo3(get)]
    phi: Vec<f64>,
    #[pyo3(get)]
    rho: Vec<f64>,
    #[pyo3(get)]
    sigma_y2: Vec<f64>,
    #[pyo3(get)]
    fy_test: Vec<Vec<f64>>,
    #[pyo3(get)]
    fz_test: Vec<Vec<f64>>,
    #[pyo3(get)]
    dependence: Option<Vec<f64>>,
    #[pyo3(get)]
    n_clusters: Option<Vec<usize>>,
    #[pyo3(get)]
    alpha: Option<Vec<f64>>,
}

/// Fit a selection model.
///
/// `x`, `w` are row-major covariate matrices over all observations; `y`
/// holds the outcome with None where unobserved. Optional `x_test` /
/// `w_test` choose the evaluation rows (training rows otherwise).
#[pyfunction]
#[pyo3(signature = (x, w, y, x_test=None, w_test=None, model="bart", prior="vh",
    iters=1500, burnin=500, thin=1, seed=0, m_selection=50, m_outcome=200,
    binary_outcome=false, tau=0.5, n0=6.0, g0=0.0, big_g0=0.1, nu0=3.0, q=0.95))]
#[allow(clippy::too_many_arguments)]
fn fit(
    x: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    y: Vec<Option<f64>>,
    x_test: Option<Vec<Vec<f64>>>,
    w_test: Option<Vec<Vec<f64>>>,
    model: &str,
    prior: &str,
    iters: usize,
    burnin: usize,
    thin: usize,
    seed: u64,
    m_selection: usize,
    m_outcome: usize,
    binary_outcome: bool,
    tau: f64,
    n0: f64,
    g0: f64,
    big_g0: f64,
    nu0: f64,
    q: f64,
) -> PyResult<FitResult> {
    let selected: Vec<bool> = y.iter().map(|v| v.is_some()).collect();
    let x_cov = Covariates::from_rows(&x);
    let w_cov = Covariates::from_rows(&w);
    let data = Dataset::new(x_cov, w_cov, y, selected).map_err(err)?;

    let sigma2 = {
        let ys = data.selected_outcomes();
        if ys.len() > 1 { tb::stats::variance(&ys).max(1e-12) } else { 1.0 }
    };
    let cov_prior = match prior {
        "vh" => {
            let inp = CalibrationInput { sigma_hat_y2: sigma2, g0, n0, tau, ..Default::default() };
            CovariancePrior::Vh { g0, tau, n0, s0: vh_calibrate_s0(&inp).map_err(err)? }
        }
        "omori" => {
            let inp = CalibrationInput {
                sigma_hat_y2: sigma2,
                g0,
                n0,
                big_g0,
                ..Default::default()
            };
            CovariancePrior::Omori { g0, big_g0, n0, s0: omori_calibrate_s0(&inp).map_err(err)? }
        }
        "ding" => CovariancePrior::Ding { nu0, c: ding_calibrate_c(sigma2, nu0, q).c },
        other => return Err(PyValueError::new_err(format!("unknown prior '{other}'"))),
    };

    let mean_model = match model {
        "linear" => {
            MeanModel::Linear(LinearPriors::diffuse(data.w.n_cols(), data.x.n_cols(), 100.0))
        }
        _ => MeanModel::Trees {
            selection: BartConfig { m: m_selection, ..BartConfig::selection_default() },
            outcome: BartConfig { m: m_outcome, ..BartConfig::outcome_default() },
        },
    };
    let sampler = match model {
        "bart-marginalized" => SamplerKind::Marginalized,
        "linear" | "bart" | "bart-np" => SamplerKind::Standard,
        other => return Err(PyValueError::new_err(format!("unknown model '{other}'"))),
    };
    let error_model = if model == "bart-np" {
        let base = match cov_prior {
            CovariancePrior::Vh { g0, tau, n0, s0 } => ErrBase::Vh { g0, tau, n0, s0 },
            CovariancePrior::Ding { nu0, c } => ErrBase::Ding { nu0, c },
            CovariancePrior::Omori { .. } => {
                return Err(PyValueError::new_err("bart-np supports the vh and ding priors"))
            }
        };
        ErrorModel::Dpm(DpmConfig::with_base(base))
    } else {
        ErrorModel::Gaussian(cov_prior)
    };

    let mut cfg = ChainConfig::new(McmcSize::new(iters, burnin, thin));
    cfg.binary_outcome = binary_outcome;
    let eval = EvalPoints {
        x_test: Some(match x_test {
            Some(rows) => Covariates::from_rows(&rows),
            None => data.x.clone(),
        }),
        w_test: Some(match w_test {
            Some(rows) => Covariates::from_rows(&rows),
            None => data.w.clone(),
        }),
    };
    let fit = run_chain(
        &data,
        &mean_model,
        &error_model,
        sampler,
        &cfg,
        &eval,
        &RngStream::new(seed),
    )
    .map_err(err)?;
    let d = fit.draws;
    let (dependence, n_clusters, alpha) = match d.dpm {
        Some(dd) => (Some(dd.dependence), Some(dd.k), Some(dd.alpha)),
        None => (None, None, None),
    };
    Ok(FitResult {
        gamma: d.gamma,
        phi: d.phi,
        rho: d.rho,
        sigma_y2: d.sigma_y2,
        fy_test: d.fy_test,
        fz_test: d.fz_test,
        dependence,
        n_clusters,
        alpha,
    })
}

/// Generate one simulation draw from a named DGP; returns a dict with the
/// training data and the test-set truths.
#[pyfunction]
#[pyo3(signature = (dgp="brewer1", rho=0.9, error_kind="normal", n_train=500, n_test=100, seed=0, p=10))]
fn generate_dgp(
    py: Python<'_>,
    dgp: &str,
    rho: f64,
    error_kind: &str,
    n_train: usize,
    n_test: usize,
    seed: u64,
    p: usize,
) -> PyResult<Py<PyAny>> {
    let family = match dgp {
        "brewer1" => DgpFamily::Brewer { id: 1 },
        "brewer2" => DgpFamily::Brewer { id: 2 },
        "brewer3" => DgpFamily::Brewer { id: 3 },
        "brewer5" => DgpFamily::Brewer { id: 5 },
        "iqbal" => DgpFamily::Iqbal { p },
        "cate" => DgpFamily::Cate { p },
        other => return Err(PyValueError::new_err(format!("unknown dgp '{other}'"))),
    };
    let error_kind = match error_kind {
        "normal" => ErrorKind::Normal,
        "t5" => ErrorKind::T5,
        "mixture" => ErrorKind::NormalMixture,
        other => return Err(PyValueError::new_err(format!("unknown error kind '{other}'"))),
    };
    let spec = DgpSpec { family, rho, error_kind, n_train, n_test, reps: 1, seed };
    let g = generate(&spec, &RngStream::new(seed)).map_err(err)?;
    let rows = |c: &Covariates| -> Vec<Vec<f64>> { (0..c.n_rows()).map(|i| c.row(i)).collect() };
    let d = pyo3::types::PyDict::new(py);
    d.set_item("x", rows(&g.train.x))?;
    d.set_item("w", rows(&g.train.w))?;
    d.set_item("y", g.train.y.clone())?;
    d.set_item("selected", g.train.selected.clone())?;
    d.set_item("x_test", rows(&g.x_test))?;
    d.set_item("w_test", rows(&g.w_test))?;
    d.set_item("fy_test_true", g.truth_test.f_y.clone())?;
    d.set_item("fz_test_true", g.truth_test.f_z.clone())?;
    d.set_item("sel_prob_test_true", g.truth_test.sel_prob.clone())?;
    if let Some(c) = &g.truth_test.cate {
        d.set_item("cate_true", c.clone())?;
    }
    Ok(d.into_any().unbind())
}

#[pymodule]
fn tobit_bart(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(mills_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_k, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(rho_cdf_vh, m)?)?;
    m.add_function(wrap_pyfunction!(rho_cdf_ding, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dgp, m)?)?;
    m.add_class::<FitResult>()?;
    Ok(())
}
