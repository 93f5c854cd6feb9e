//! Heterogeneous-treatment-effect DGP: treatment assigned with selection
//! on observables, treatment entering both equations, and the first five
//! covariates excluded from the outcome design.

use super::{CateArms, DgpSpec, GeneratedData, SimError, SimTruth};
use crate::bart::Covariates;
use crate::math::normal_cdf;
use crate::model::Dataset;
use crate::rng::RngStream;

fn propensity(x6: f64, x7: f64, x8: f64) -> f64 {
    0.7 * normal_cdf(0.5 * x6 * x7 + 0.3 * x8 * x8) + 0.1
}

/// Outcome design: covariates 6..p plus the treatment column.
fn outcome_row(x: &[f64], t: f64) -> Vec<f64> {
    let mut r: Vec<f64> = x[5..].to_vec();
    r.push(t);
    r
}

/// Selection design: all covariates plus the treatment column.
fn selection_row(x: &[f64], t: f64) -> Vec<f64> {
    let mut r = x.to_vec();
    r.push(t);
    r
}

pub fn gen_cate(spec: &DgpSpec, p: usize, rng: &RngStream) -> Result<GeneratedData, SimError> {
    if p < 8 {
        return Err(SimError::BadSpec("heterogeneous-effect DGP needs p >= 8".into()));
    }
    let n_total = spec.n_train + spec.n_test;
    let mut rng = rng.substream(0);
    let rho = spec.rho;

    let mut x_rows = Vec::with_capacity(n_total);
    let mut w_rows = Vec::with_capacity(n_total);
    let mut f_y = Vec::with_capacity(n_total);
    let mut f_z = Vec::with_capacity(n_total);
    let mut sel_p = Vec::with_capacity(n_total);
    let mut cate = Vec::with_capacity(n_total);
    let mut sel_eff = Vec::with_capacity(n_total);
    let mut y = Vec::with_capacity(n_total);
    let mut s = Vec::with_capacity(n_total);
    let mut raw: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n_total);

    for _ in 0..n_total {
        let x: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
        let (x1, x3, x6, x7, x8) = (x[0], x[2], x[5], x[6], x[7]);
        let pi = propensity(x6, x7, x8);
        let t = if rng.uniform() < pi { 1.0 } else { 0.0 };
        let effect = 0.25 * (x3 - 1.0) * (x3 - 1.0);
        let fy = 0.5 * x6 + 0.5 * x6 * x7 + effect * t;
        let fz = 0.5 * x1 * x6 + x1 * x6 * t;
        let xi = rng.standard_normal();
        let eta = rho * xi + (1.0 - rho * rho).sqrt() * rng.standard_normal();
        let sel = fz + xi >= 0.0;

        x_rows.push(outcome_row(&x, t));
        w_rows.push(selection_row(&x, t));
        f_y.push(fy);
        f_z.push(fz);
        sel_p.push(normal_cdf(fz));
        cate.push(effect);
        sel_eff.push(normal_cdf(1.5 * x1 * x6) - normal_cdf(0.5 * x1 * x6));
        s.push(sel);
        y.push(if sel { Some(fy + eta) } else { None });
        raw.push((x, t));
    }

    let nt = spec.n_train;
    let train = Dataset::new(
        Covariates::from_rows(&x_rows[..nt]),
        Covariates::from_rows(&w_rows[..nt]),
        y[..nt].to_vec(),
        s[..nt].to_vec(),
    )?;
    let arm =
        |t: f64, f: &dyn Fn(&[f64], f64) -> Vec<f64>| -> Covariates {
            Covariates::from_rows(&raw[nt..].iter().map(|(x, _)| f(x, t)).collect::<Vec<_>>())
        };
    let truth = |lo: usize, hi: usize| SimTruth {
        f_y: f_y[lo..hi].to_vec(),
        f_z: f_z[lo..hi].to_vec(),
        sel_prob: sel_p[lo..hi].to_vec(),
        cate: Some(cate[lo..hi].to_vec()),
        sel_effect: Some(sel_eff[lo..hi].to_vec()),
    };
    Ok(GeneratedData {
        train,
        x_test: Covariates::from_rows(&x_rows[nt..]),
        w_test: Covariates::from_rows(&w_rows[nt..]),
        truth_train: truth(0, nt),
        truth_test: truth(nt, n_total),
        arms: Some(CateArms {
            x_test_treat: arm(1.0, &|x, t| outcome_row(x, t)),
            x_test_ctrl: arm(0.0, &|x, t| outcome_row(x, t)),
            w_test_treat: arm(1.0, &|x, t| selection_row(x, t)),
            w_test_ctrl: arm(0.0, &|x, t| selection_row(x, t)),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{DgpFamily, ErrorKind};

    fn spec(n: usize) -> DgpSpec {
        DgpSpec {
            family: DgpFamily::Cate { p: 50 },
            rho: 0.5,
            error_kind: ErrorKind::Normal,
            n_train: n,
            n_test: 60,
            reps: 1,
            seed: 4,
        }
    }

    #[test]
    fn propensity_bounds() {
        let mut rng = RngStream::new(81);
        for _ in 0..10_000 {
            let p = propensity(rng.standard_normal(), rng.standard_normal(), rng.standard_normal());
            assert!((0.1..=0.8).contains(&p), "propensity {p}");
        }
    }

    #[test]
    fn cate_values() {
        // 0.25 (x3 - 1)^2 at x3 = 1 and x3 = 3
        assert_eq!(0.25 * (1.0f64 - 1.0) * (1.0 - 1.0), 0.0);
        assert_eq!(0.25 * (3.0f64 - 1.0) * (3.0 - 1.0), 1.0);
        let g = gen_cate(&spec(500), 50, &RngStream::new(82)).unwrap();
        assert!(g.truth_train.cate.as_ref().unwrap().iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn true_selection_effect_at_unit_interaction() {
        // x1 x6 = 1: Phi(1.5) - Phi(0.5)
        let v = normal_cdf(1.5) - normal_cdf(0.5);
        assert!((v - 0.241_730_337_457_128_83).abs() < 1e-12);
        // and the inverse-Mills contrast used by the bias diagnostic
        let m = crate::math::mills_ratio(1.5) - crate::math::mills_ratio(0.5);
        assert!((m + 0.370_370_683_378_182_7).abs() < 1e-12);
    }

    #[test]
    fn designs_have_expected_shapes() {
        let g = gen_cate(&spec(200), 50, &RngStream::new(83)).unwrap();
        // outcome design: 45 covariates + treatment
        assert_eq!(g.train.x.n_cols(), 46);
        // selection design: 50 covariates + treatment
        assert_eq!(g.train.w.n_cols(), 51);
        let arms = g.arms.as_ref().unwrap();
        assert_eq!(arms.x_test_treat.n_rows(), 60);
        // arms differ only in the treatment column
        for i in 0..60 {
            assert_eq!(arms.x_test_treat.value(i, 45), 1.0);
            assert_eq!(arms.x_test_ctrl.value(i, 45), 0.0);
            for j in 0..45 {
                assert_eq!(arms.x_test_treat.value(i, j), arms.x_test_ctrl.value(i, j));
            }
        }
    }

    #[test]
    fn treated_fraction_matches_propensity_mean() {
        let g = gen_cate(&spec(30_000), 50, &RngStream::new(84)).unwrap();
        let treated = (0..g.train.n())
            .filter(|&i| g.train.w.value(i, 50) == 1.0)
            .count() as f64
            / g.train.n() as f64;
        // E[pi] = 0.7 E[Phi(.)] + 0.1 with Phi(.) averaging near 0.5-ish
        assert!((0.35..=0.55).contains(&treated), "treated fraction {treated}");
    }
}
