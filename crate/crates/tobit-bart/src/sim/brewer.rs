//! Benchmark DGPs with ten correlated covariates and an excluded
//! instrument in the selection equation.
//!
//! 1: linear outcome; 2: sine outcome; 3: sine outcome with a nearly
//! useless instrument (coefficient 0.001); 5: linear outcome with
//! normal-mixture errors carrying the correlation through the shared
//! selection error.

use super::{
    draw_errors, selection_probability, DgpSpec, GeneratedData, SimError, SimTruth,
};
use crate::bart::Covariates;
use crate::math::normal_cdf;
use crate::model::Dataset;
use crate::rng::RngStream;

const P: usize = 10;

fn cov_chol() -> [[f64; P]; P] {
    let mut cov = [[0.0; P]; P];
    for k in 0..P {
        for j in 0..P {
            cov[k][j] = 0.3_f64.powi((k as i32 - j as i32).abs());
        }
    }
    // lower Cholesky
    let mut l = [[0.0; P]; P];
    for i in 0..P {
        for j in 0..=i {
            let mut s = cov[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    l
}

fn outcome_weights() -> [f64; P] {
    std::array::from_fn(|j| 0.4 / ((j + 1) * (j + 1)) as f64)
}

fn selection_weights() -> [f64; P] {
    std::array::from_fn(|j| 0.1 / ((10.5 - (j + 1) as f64) * (10.5 - (j + 1) as f64)))
}

fn outcome_mean(x: &[f64; P], nonlinear: bool) -> f64 {
    let lin: f64 = outcome_weights().iter().zip(x).map(|(w, v)| w * v).sum();
    if nonlinear {
        -0.25 + 1.25 * (std::f64::consts::FRAC_PI_4 + 0.75 * std::f64::consts::PI * lin).sin()
    } else {
        lin
    }
}

/// Mixture error of DGP 5: 0.8 N(-0.5, 0.2) + 0.2 N(2, 0.4) (variances),
/// zero mean overall.
fn draw_dgp5_component(rng: &mut RngStream) -> f64 {
    if rng.uniform() < 0.8 {
        -0.5 + 0.2_f64.sqrt() * rng.standard_normal()
    } else {
        2.0 + 0.4_f64.sqrt() * rng.standard_normal()
    }
}

fn dgp5_component_cdf(x: f64) -> f64 {
    0.8 * normal_cdf((x + 0.5) / 0.2_f64.sqrt()) + 0.2 * normal_cdf((x - 2.0) / 0.4_f64.sqrt())
}

pub fn gen_brewer(spec: &DgpSpec, id: u8, rng: &RngStream) -> Result<GeneratedData, SimError> {
    if ![1, 2, 3, 5].contains(&id) {
        return Err(SimError::UnsupportedId(id));
    }
    let nonlinear = id == 2 || id == 3;
    let instrument_coef = if id == 3 { 0.001 } else { 1.0 };
    let l = cov_chol();
    let sel_w = selection_weights();

    let n_total = spec.n_train + spec.n_test;
    let mut rng = rng.substream(0);
    let mut w_rows: Vec<Vec<f64>> = Vec::with_capacity(n_total);
    let mut x_rows: Vec<Vec<f64>> = Vec::with_capacity(n_total);
    let mut f_y = Vec::with_capacity(n_total);
    let mut f_z = Vec::with_capacity(n_total);
    let mut sel_p = Vec::with_capacity(n_total);
    let mut y = Vec::with_capacity(n_total);
    let mut s = Vec::with_capacity(n_total);

    for _ in 0..n_total {
        let z: [f64; P] = std::array::from_fn(|_| rng.standard_normal());
        let mut x = [0.0; P];
        for i in 0..P {
            for (k, lv) in l[i].iter().enumerate().take(i + 1) {
                x[i] += lv * z[k];
            }
        }
        let w_exc: f64 = x.iter().map(|v| 0.05 * v).sum::<f64>()
            + 0.75_f64.sqrt() * rng.standard_normal();
        let fz = 1.25
            + sel_w.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>()
            + instrument_coef * w_exc;
        let fy = outcome_mean(&x, nonlinear);

        let (xi, eta, p_sel) = if id == 5 {
            let xi = draw_dgp5_component(rng_mut(&mut rng));
            let indep = draw_dgp5_component(rng_mut(&mut rng));
            let eta = spec.rho * xi + (1.0 - spec.rho * spec.rho).sqrt() * indep;
            // P(fz + xi >= 0) under the mixture law of xi
            (xi, eta, 1.0 - dgp5_component_cdf(-fz))
        } else {
            let (xi, eta) = draw_errors(spec.error_kind, spec.rho, &mut rng);
            (xi, eta, selection_probability(spec.error_kind, fz))
        };

        let z_star = fz + xi;
        let sel = z_star >= 0.0;
        let mut wr = x.to_vec();
        wr.push(w_exc);
        w_rows.push(wr);
        x_rows.push(x.to_vec());
        f_y.push(fy);
        f_z.push(fz);
        sel_p.push(p_sel);
        s.push(sel);
        y.push(if sel { Some(fy + eta) } else { None });
    }

    split_generated(spec, w_rows, x_rows, f_y, f_z, sel_p, y, s)
}

fn rng_mut(rng: &mut RngStream) -> &mut RngStream {
    rng
}

/// Split the first n_train rows into the training dataset and the rest
/// into the test design + truths.
#[allow(clippy::too_many_arguments)]
pub(crate) fn split_generated(
    spec: &DgpSpec,
    w_rows: Vec<Vec<f64>>,
    x_rows: Vec<Vec<f64>>,
    f_y: Vec<f64>,
    f_z: Vec<f64>,
    sel_p: Vec<f64>,
    y: Vec<Option<f64>>,
    s: Vec<bool>,
) -> Result<GeneratedData, SimError> {
    let nt = spec.n_train;
    let train = Dataset::new(
        Covariates::from_rows(&x_rows[..nt]),
        Covariates::from_rows(&w_rows[..nt]),
        y[..nt].to_vec(),
        s[..nt].to_vec(),
    )?;
    Ok(GeneratedData {
        train,
        x_test: Covariates::from_rows(&x_rows[nt..]),
        w_test: Covariates::from_rows(&w_rows[nt..]),
        truth_train: SimTruth {
            f_y: f_y[..nt].to_vec(),
            f_z: f_z[..nt].to_vec(),
            sel_prob: sel_p[..nt].to_vec(),
            cate: None,
            sel_effect: None,
        },
        truth_test: SimTruth {
            f_y: f_y[nt..].to_vec(),
            f_z: f_z[nt..].to_vec(),
            sel_prob: sel_p[nt..].to_vec(),
            cate: None,
            sel_effect: None,
        },
        arms: None,
    })
}
