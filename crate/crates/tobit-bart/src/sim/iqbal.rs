//! Sparse linear DGP without an excluded instrument: three active
//! coefficients in each equation, intercept solved so that 30% of
//! outcomes are unselected.

use super::{brewer::split_generated, DgpSpec, GeneratedData, SimError};
use crate::math::normal_cdf;
use crate::rng::RngStream;

fn beta(p: usize) -> Vec<f64> {
    let mut b = vec![0.0; p];
    b[0] = 0.25;
    b[1] = 0.5;
    b[2] = 1.0;
    b
}

fn alpha(p: usize) -> Vec<f64> {
    let mut a = vec![0.0; p];
    let s = 2.0_f64.sqrt();
    a[0] = 0.5 / s;
    a[1] = 1.0 / s;
    a[2] = 1.5 / s;
    a
}

/// Intercept such that the unselected proportion is 0.30, solved by
/// bisection on the empirical proportion of a large pilot sample.
pub(crate) fn solve_alpha0(p: usize, rng: &mut RngStream) -> f64 {
    let a = alpha(p);
    let pilot = 1_000_000;
    // index + xi, intercept excluded
    let mut u = Vec::with_capacity(pilot);
    for _ in 0..pilot {
        let idx: f64 = a.iter().take(3).map(|&c| c * rng.standard_normal()).sum();
        u.push(idx + rng.standard_normal());
    }
    let frac_unselected = |a0: f64| u.iter().filter(|&&v| a0 + v < 0.0).count() as f64 / pilot as f64;
    let mut lo = -5.0;
    let mut hi = 5.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if frac_unselected(mid) > 0.30 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a0 = 0.5 * (lo + hi);
    debug_assert!((frac_unselected(a0) - 0.30).abs() <= 0.005);
    a0
}

pub fn gen_iqbal(spec: &DgpSpec, p: usize, rng: &RngStream) -> Result<GeneratedData, SimError> {
    if p < 3 {
        return Err(SimError::BadSpec("needs p >= 3".into()));
    }
    let b = beta(p);
    let a = alpha(p);
    let mut pilot_rng = rng.substream(1);
    let a0 = solve_alpha0(p, &mut pilot_rng);

    let n_total = spec.n_train + spec.n_test;
    let mut rng = rng.substream(0);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_total);
    let mut f_y = Vec::with_capacity(n_total);
    let mut f_z = Vec::with_capacity(n_total);
    let mut sel_p = Vec::with_capacity(n_total);
    let mut y = Vec::with_capacity(n_total);
    let mut s = Vec::with_capacity(n_total);
    let rho = spec.rho;
    for _ in 0..n_total {
        let x: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
        let fy = 0.5 + b.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
        let fz = a0 + a.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
        let xi = rng.standard_normal();
        let eta = rho * xi + (1.0 - rho * rho).sqrt() * rng.standard_normal();
        let sel = fz + xi >= 0.0;
        f_y.push(fy);
        f_z.push(fz);
        sel_p.push(normal_cdf(fz));
        s.push(sel);
        y.push(if sel { Some(fy + eta) } else { None });
        rows.push(x);
    }
    // no excluded instrument: the selection design equals the outcome design
    split_generated(spec, rows.clone(), rows, f_y, f_z, sel_p, y, s)
}
