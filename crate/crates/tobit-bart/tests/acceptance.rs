//! Acceptance suite: one test per criterion, tolerances pinned in code.
//! The heavy benchmark fits are shared across criteria through a
//! lazily-built suite. Each test prints a pass line with the measured
//! values (visible with --nocapture, or on failure).

use std::sync::OnceLock;
use tobit_bart::bart::{fit_bart_regression, BartConfig, Covariates, McmcSize};
use tobit_bart::calibrate::{ding_rho_cdf, omori_rho_cdf, vh_rho_cdf};
use tobit_bart::dpm;
use tobit_bart::estimands::{
    metrics, naive_selection_bias, observed_conditional_mean, summarize,
};
use tobit_bart::math::{
    mills_ratio, normal_pdf, sample_inverse_gamma, sample_inverse_wishart_2, SymMat2,
};
use tobit_bart::model::{
    draw_gamma, draw_gamma_phi_joint, draw_phi, run_chain, ChainConfig, CovariancePrior, Dataset,
    ErrorModel, EvalPoints, LinearPriors, MeanModel, SamplerKind,
};
use tobit_bart::rng::RngStream;
use tobit_bart::sim::{generate, DgpFamily, DgpSpec, ErrorKind, PriorSpec};
use tobit_bart::stats::{ks_statistic_sorted, ks_two_sample, mean, variance};

const REPS: usize = 3;
const ITERS: usize = 1500;
const BURNIN: usize = 500;

struct RepFit {
    rho_mean: f64,
    tobart_rmse: f64,
    tobart_cover: f64,
    bart_rmse: f64,
    bart_cover: f64,
}

struct BrewerSuite {
    /// DGP1 per rho in {0, 0.45, 0.9}
    dgp1: [Vec<RepFit>; 3],
    /// DGP2 per rho in {0.45, 0.9}
    dgp2: [Vec<RepFit>; 2],
}

static SUITE: OnceLock<BrewerSuite> = OnceLock::new();

fn fit_rep(dgp: u8, rho: f64, rep: usize, with_bart: bool) -> RepFit {
    let spec = DgpSpec {
        family: DgpFamily::Brewer { id: dgp },
        rho,
        error_kind: ErrorKind::Normal,
        n_train: 2500,
        n_test: 500,
        reps: 1,
        seed: 7_000 + dgp as u64 * 100 + (rho * 100.0) as u64 + rep as u64,
    };
    let data = generate(&spec, &RngStream::new(spec.seed)).unwrap();
    let sigma2 = variance(&data.train.selected_outcomes());
    let prior = PriorSpec::vh_default().calibrate(sigma2).unwrap();
    let mean_model = MeanModel::Trees {
        selection: BartConfig { m: 50, ..BartConfig::selection_default() },
        outcome: BartConfig { m: 200, ..BartConfig::outcome_default() },
    };
    let cfg = ChainConfig::new(McmcSize::new(ITERS, BURNIN, 1));
    let eval = EvalPoints { x_test: Some(data.x_test.clone()), w_test: None };
    let fit = run_chain(
        &data.train,
        &mean_model,
        &ErrorModel::Gaussian(prior),
        SamplerKind::Standard,
        &cfg,
        &eval,
        &RngStream::new(spec.seed + 1),
    )
    .unwrap();
    let summ = summarize(&fit.draws.fy_test);
    let m = metrics(&summ, &data.truth_test.f_y).unwrap();

    let (bart_rmse, bart_cover) = if with_bart {
        let x_sel = data.train.x_selected();
        let y_sel = data.train.selected_outcomes();
        let reg = fit_bart_regression(
            &x_sel,
            &y_sel,
            &data.x_test,
            &BartConfig { m: 200, ..BartConfig::outcome_default() },
            &McmcSize::new(ITERS, BURNIN, 1),
            &RngStream::new(spec.seed + 2),
        );
        let bm = metrics(&summarize(&reg.f_test), &data.truth_test.f_y).unwrap();
        (bm.rmse, bm.coverage)
    } else {
        (f64::NAN, f64::NAN)
    };

    RepFit {
        rho_mean: mean(&fit.draws.rho),
        tobart_rmse: m.rmse,
        tobart_cover: m.coverage,
        bart_rmse,
        bart_cover,
    }
}

fn suite() -> &'static BrewerSuite {
    SUITE.get_or_init(|| {
        let run = |dgp: u8, rho: f64, with_bart: bool| -> Vec<RepFit> {
            (0..REPS).map(|r| fit_rep(dgp, rho, r, with_bart)).collect()
        };
        BrewerSuite {
            // plain BART needed at rho = 0.9 (coverage contrast); cheap to
            // carry it at 0.45 too for context
            dgp1: [run(1, 0.0, false), run(1, 0.45, false), run(1, 0.9, true)],
            dgp2: [run(2, 0.45, true), run(2, 0.9, true)],
        }
    })
}

/// Criterion 1: mean posterior rho on the linear DGP (n = 2500, 3 reps,
/// 1500 iterations) falls in the stated brackets for rho in {0, 0.45, 0.9}.
#[test]
fn criterion_1_rho_recovery() {
    let s = suite();
    let brackets = [(-0.15, 0.10), (0.31, 0.55), (0.79, 0.99)];
    let labels = [0.0, 0.45, 0.9];
    for (k, (lo, hi)) in brackets.iter().enumerate() {
        let avg = mean(&s.dgp1[k].iter().map(|r| r.rho_mean).collect::<Vec<_>>());
        println!(
            "criterion 1 (rho = {}): mean posterior rho = {avg:.4}, accept [{lo}, {hi}]",
            labels[k]
        );
        assert!(avg >= *lo && avg <= *hi, "rho {} recovery out of range: {avg}", labels[k]);
    }
    println!("criterion 1: PASS");
}

/// Criterion 2: latent-mean RMSE ratio (selection model over plain BART)
/// on the nonlinear DGP: < 0.6 at rho = 0.9 and < 0.8 at rho = 0.45.
#[test]
fn criterion_2_nonlinear_rmse_ratio() {
    let s = suite();
    let cases = [(0, 0.45, 0.8), (1, 0.9, 0.6)];
    for (k, rho, bound) in cases {
        let ratio = mean(
            &s.dgp2[k].iter().map(|r| r.tobart_rmse / r.bart_rmse).collect::<Vec<_>>(),
        );
        println!("criterion 2 (rho = {rho}): RMSE ratio = {ratio:.3}, bound < {bound}");
        assert!(ratio < bound, "RMSE ratio {ratio} exceeds {bound} at rho = {rho}");
    }
    println!("criterion 2: PASS");
}

/// Criterion 3: 95% interval coverage of the latent mean: the selection
/// model covers >= 0.85 at rho = 0.45 while plain BART falls below 0.75
/// at rho = 0.9.
#[test]
fn criterion_3_interval_calibration() {
    let s = suite();
    let tobart_cover = mean(&s.dgp1[1].iter().map(|r| r.tobart_cover).collect::<Vec<_>>());
    let bart_cover = mean(&s.dgp1[2].iter().map(|r| r.bart_cover).collect::<Vec<_>>());
    println!(
        "criterion 3: selection-model coverage (rho = 0.45) = {tobart_cover:.3} (>= 0.85); \
         plain BART coverage (rho = 0.9) = {bart_cover:.3} (< 0.75)"
    );
    assert!(tobart_cover >= 0.85, "coverage {tobart_cover}");
    assert!(bart_cover < 0.75, "plain BART coverage {bart_cover}");
    println!("criterion 3: PASS");
}

/// Criterion 4: with no censoring and gamma frozen at zero, the linear
/// chain's beta posterior means match the closed-form flat-prior
/// regression posterior (OLS) within 3 Monte Carlo standard errors.
#[test]
fn criterion_4_conjugate_oracle() {
    let mut rng = RngStream::new(9001);
    let n = 50;
    let p = 3;
    let cols: Vec<Vec<f64>> =
        (0..p).map(|_| (0..n).map(|_| rng.standard_normal()).collect()).collect();
    let x = Covariates::from_columns(cols);
    let beta_true = [1.0, -0.5, 0.25];
    let y: Vec<f64> = (0..n)
        .map(|i| {
            (0..p).map(|j| beta_true[j] * x.value(i, j)).sum::<f64>()
                + 0.6 * rng.standard_normal()
        })
        .collect();
    let data = Dataset::new(
        x.clone(),
        Covariates::from_columns(vec![vec![1.0; n]]),
        y.iter().map(|&v| Some(v)).collect(),
        vec![true; n],
    )
    .unwrap();

    let mut cfg = ChainConfig::new(McmcSize::new(4000, 500, 1));
    cfg.freeze_gamma = Some(0.0);
    // coefficients read off the fitted function at unit design points
    let mut probe_rows = vec![vec![0.0; p]];
    for j in 0..p {
        let mut r = vec![0.0; p];
        r[j] = 1.0;
        probe_rows.push(r);
    }
    let eval = EvalPoints {
        x_test: Some(Covariates::from_rows(&probe_rows)),
        w_test: None,
    };
    let fit = run_chain(
        &data,
        &MeanModel::Linear(LinearPriors::diffuse(1, p, 1e8)),
        &ErrorModel::Gaussian(CovariancePrior::vh_default(1.0)),
        SamplerKind::Standard,
        &cfg,
        &eval,
        &RngStream::new(9002),
    )
    .unwrap();
    // beta_j draws = f(e_j) - f(0)
    let d = fit.draws.fy_test.len();
    let mut beta_draws: Vec<Vec<f64>> = vec![Vec::with_capacity(d); p];
    for t in 0..d {
        for j in 0..p {
            beta_draws[j].push(fit.draws.fy_test[t][j + 1] - fit.draws.fy_test[t][0]);
        }
    }
    // OLS oracle
    let mut xtx = nalgebra::DMatrix::<f64>::zeros(p, p);
    let mut xty = nalgebra::DVector::<f64>::zeros(p);
    for i in 0..n {
        for a in 0..p {
            xty[a] += x.value(i, a) * y[i];
            for b in 0..p {
                xtx[(a, b)] += x.value(i, a) * x.value(i, b);
            }
        }
    }
    let ols = nalgebra::Cholesky::new(xtx).unwrap().solve(&xty);
    for j in 0..p {
        let m = mean(&beta_draws[j]);
        // conservative effective-sample-size deflation for the MC error
        let se = (variance(&beta_draws[j]) / (d as f64 / 4.0)).sqrt();
        println!(
            "criterion 4: beta[{j}] chain mean {m:.5} vs closed form {:.5} (3 mc se = {:.5})",
            ols[j],
            3.0 * se
        );
        assert!((m - ols[j]).abs() < 3.0 * se, "beta[{j}]: {m} vs {}", ols[j]);
    }
    println!("criterion 4: PASS");
}

/// Criterion 5: the leaf/covariance-marginalized log likelihoods match
/// dense Gaussian closed forms within 1e-8 relative on every instance
/// with <= 3 leaves and <= 6 observations.
#[test]
fn criterion_5_marginal_likelihood_oracle() {
    use nalgebra::{Cholesky, DMatrix, DVector};
    let dense_logpdf = |bt: &DMatrix<f64>, prior: &[f64], noise: &[f64], y: &[f64]| -> f64 {
        let n = y.len();
        let p = DMatrix::from_diagonal(&DVector::from_column_slice(prior));
        let mut cov = bt * p * bt.transpose();
        for i in 0..n {
            cov[(i, i)] += noise[i];
        }
        let chol = Cholesky::new(cov).unwrap();
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let yv = DVector::from_column_slice(y);
        let sol = chol.solve(&yv);
        -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * yv.dot(&sol)
    };

    let mut rng = RngStream::new(9100);
    let mut checked = 0usize;
    for n in 2..=6usize {
        for leaves in 1..=3usize {
            for trial in 0..4usize {
                // random leaf-indicator design with every leaf nonempty
                let mut bt = DMatrix::zeros(n, leaves + 1);
                for i in 0..n {
                    let leaf = if i < leaves { i } else { rng.below(leaves) };
                    bt[(i, leaf)] = 1.0;
                    bt[(i, leaves)] = rng.standard_normal(); // selection residual column
                }
                let y: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
                let phi = 0.5 + rng.uniform();
                let tau = 0.3 + rng.uniform();
                let s0 = 0.2 + rng.uniform();

                let got =
                    tobit_bart::bart::outcome_block_marginal_loglik(&bt, &y, phi, tau, s0)
                        .unwrap();
                let mut prior = vec![s0; leaves];
                prior.push(tau * phi);
                let want = dense_logpdf(&bt, &prior, &vec![phi; n], &y);
                assert!(
                    ((got - want) / want).abs() < 1e-8,
                    "outcome block n={n} L={leaves} trial={trial}: {got} vs {want}"
                );

                // weighted selection-side marginal
                let bz = bt.clone().remove_column(leaves);
                let w: Vec<f64> = (0..n).map(|_| 0.5 + 2.0 * rng.uniform()).collect();
                let z: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
                let got =
                    tobit_bart::bart::selection_marginal_loglik(&bz, &z, &w, s0).unwrap();
                let noise: Vec<f64> = w.iter().map(|wi| 1.0 / wi).collect();
                let want = dense_logpdf(&bz, &vec![s0; leaves], &noise, &z);
                assert!(
                    ((got - want) / want).abs() < 1e-8,
                    "selection block n={n} L={leaves} trial={trial}: {got} vs {want}"
                );
                checked += 2;
            }
        }
    }
    println!("criterion 5: PASS ({checked} instances within 1e-8 relative)");
}

/// Criterion 6: implied-prior CDFs match the empirical CDF of one million
/// direct prior draws within sup-norm 0.005; the scaled inverse-Wishart
/// prior at nu0 = 3 yields uniform correlations (KS < 0.01).
#[test]
fn criterion_6_implied_prior_fidelity() {
    let draws = 1_000_000usize;
    let grid: Vec<f64> = (1..40).map(|k| -0.975 + 0.05 * k as f64).collect();

    // conditionally conjugate prior
    let mut rng = RngStream::new(9200);
    let (tau, n0, s0) = (0.5f64, 6.0f64, 2.0f64);
    let mut rhos: Vec<f64> = (0..draws)
        .map(|_| {
            let phi = sample_inverse_gamma(0.5 * n0, 0.5 * s0, &mut rng);
            let g = (tau * phi).sqrt() * rng.standard_normal();
            g / (g * g + phi).sqrt()
        })
        .collect();
    rhos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sup: f64 = 0.0;
    for &c in &grid {
        let emp = rhos.partition_point(|&r| r <= c) as f64 / draws as f64;
        sup = sup.max((emp - vh_rho_cdf(c, tau)).abs());
    }
    println!("criterion 6: conjugate-prior rho CDF sup-norm = {sup:.5}");
    assert!(sup < 0.005);

    // independent-gamma prior
    let (n0, s0, big_g0) = (6.0f64, 5.0f64, 6.0f64);
    let mut rhos: Vec<f64> = (0..draws)
        .map(|_| {
            let phi = sample_inverse_gamma(0.5 * n0, 0.5 * s0, &mut rng);
            let g = big_g0.sqrt() * rng.standard_normal();
            g / (g * g + phi).sqrt()
        })
        .collect();
    rhos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sup: f64 = 0.0;
    for &c in &grid {
        let emp = rhos.partition_point(|&r| r <= c) as f64 / draws as f64;
        sup = sup.max((emp - omori_rho_cdf(c, n0, s0, big_g0).unwrap()).abs());
    }
    println!("criterion 6: independent-gamma rho CDF sup-norm = {sup:.5}");
    assert!(sup < 0.005);

    // scaled inverse-Wishart prior
    let nu0 = 3.0;
    let mut rhos: Vec<f64> = (0..draws)
        .map(|_| {
            sample_inverse_wishart_2(nu0, SymMat2::scaled_identity(0.35), &mut rng)
                .unwrap()
                .correlation()
        })
        .collect();
    rhos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sup: f64 = 0.0;
    for &c in &grid {
        let emp = rhos.partition_point(|&r| r <= c) as f64 / draws as f64;
        sup = sup.max((emp - ding_rho_cdf(c, nu0)).abs());
    }
    let ks = ks_statistic_sorted(&rhos, |x| 0.5 * (x + 1.0));
    println!(
        "criterion 6: expanded-covariance rho CDF sup-norm = {sup:.5}, KS vs uniform = {ks:.5}"
    );
    assert!(sup < 0.005);
    assert!(ks < 0.01);
    println!("criterion 6: PASS");
}

/// Criterion 7: the joint normal-inverse-gamma draw of (gamma, phi) and
/// the sequential conditional draws share a stationary distribution
/// (KS < 0.02 on both marginals, 10^4 retained draws).
#[test]
fn criterion_7_sampler_equivalence() {
    let mut rng = RngStream::new(9300);
    let n = 25;
    let mut z = Vec::new();
    let mut yv = Vec::new();
    for _ in 0..n {
        let zi = rng.standard_normal();
        z.push(zi);
        yv.push(0.5 * zi + 1.1 * rng.standard_normal());
    }
    let prior = CovariancePrior::Vh { g0: 0.0, tau: 0.5, n0: 6.0, s0: 2.0 };
    let m = 10_000;
    let mut jg = Vec::with_capacity(m);
    let mut jp = Vec::with_capacity(m);
    for _ in 0..m {
        let (g, p) = draw_gamma_phi_joint(&z, &yv, &prior, &mut rng).unwrap();
        jg.push(g);
        jp.push(p);
    }
    let mut sg = Vec::with_capacity(m);
    let mut sp = Vec::with_capacity(m);
    let mut gamma = 0.0;
    let mut phi = 1.0;
    for _ in 0..m {
        gamma = draw_gamma(&z, &yv, phi, &prior, &mut rng).unwrap();
        phi = draw_phi(&z, &yv, gamma, &prior, &mut rng).unwrap();
        sg.push(gamma);
        sp.push(phi);
    }
    let ks_g = ks_two_sample(&jg, &sg);
    let ks_p = ks_two_sample(&jp, &sp);
    println!("criterion 7: KS(gamma) = {ks_g:.4}, KS(phi) = {ks_p:.4} (< 0.02)");
    assert!(ks_g < 0.02 && ks_p < 0.02);
    println!("criterion 7: PASS");
}

/// Criterion 8: mixture-error sanity. Single-Gaussian data keeps the
/// posterior modal cluster count at 3 or fewer; the error predictive
/// integrates to one; the dependence summary recovers a single-cluster
/// correlation within 0.05.
#[test]
fn criterion_8_dpm_sanity() {
    // posterior mode of k on one-component data
    let root = RngStream::new(200);
    let mut data_rng = root.substream(0);
    let n = 500;
    let mut u1 = Vec::with_capacity(n);
    let mut u2 = Vec::with_capacity(n);
    let sel = vec![true; n];
    for _ in 0..n {
        let z1 = data_rng.standard_normal();
        u1.push(z1);
        u2.push(0.5 * z1 + data_rng.standard_normal());
    }
    let cfg = dpm::DpmConfig::with_base(dpm::ErrBase::Vh {
        g0: 0.0,
        tau: 0.5,
        n0: 6.0,
        s0: 1.25 * 4.0 / 1.5,
    });
    let mut state = dpm::init_theta(&u1, &u2, &sel, &cfg, 1.0, &root.substream(1));
    let mut k_counts = std::collections::HashMap::new();
    for sweep in 0..1500u64 {
        state.alpha = dpm::draw_alpha_escobar_west(
            state.k(),
            n,
            state.alpha,
            2.0,
            2.0,
            &mut root.substream(10_000 + sweep).clone(),
        );
        dpm::reassign_clusters(&mut state, &u1, &u2, &sel, &cfg, &root.substream(20_000 + sweep), None);
        dpm::remix_cluster_params(&mut state, &u1, &u2, &sel, &cfg, &root.substream(30_000 + sweep));
        if sweep >= 500 {
            *k_counts.entry(state.k()).or_insert(0usize) += 1;
        }
    }
    let mode_k = *k_counts.iter().max_by_key(|(_, c)| **c).unwrap().0;
    println!("criterion 8: posterior mode of cluster count = {mode_k} (<= 3)");
    assert!(mode_k <= 3);

    // predictive density mass
    let mut prng = root.substream(77);
    let atoms: Vec<dpm::ClusterParams> =
        (0..50).map(|_| dpm::sample_error_predictive(&state, &cfg, &mut prng)).collect();
    let density = |v1: f64, v2: f64| -> f64 {
        atoms
            .iter()
            .map(|p| {
                let d1 = v1 - p.mu1;
                let d2 = v2 - p.mu2;
                let qf = ((p.phi + p.gamma * p.gamma) * d1 * d1 - 2.0 * p.gamma * d1 * d2
                    + d2 * d2)
                    / p.phi;
                (-qf / 2.0).exp() / (2.0 * std::f64::consts::PI * p.phi.sqrt())
            })
            .sum::<f64>()
            / atoms.len() as f64
    };
    let inner = |v1: f64| {
        tobit_bart::math::integrate_adaptive(
            |v2| density(v1, v2),
            tobit_bart::math::Interval::new(-40.0, 40.0),
            1e-7,
        )
        .unwrap()
    };
    let mass = tobit_bart::math::integrate_adaptive(
        inner,
        tobit_bart::math::Interval::new(-30.0, 30.0),
        1e-5,
    )
    .unwrap();
    println!("criterion 8: error-predictive mass = {mass:.6} (within 1e-3 of 1)");
    assert!((mass - 1.0).abs() < 1e-3);

    // dependence recovery: gamma = 1, phi = 1 -> rho = 1/sqrt(2)
    let params = vec![
        dpm::ClusterParams { mu1: 0.0, mu2: 0.0, gamma: 1.0, phi: 1.0 };
        1000
    ];
    let mut drng = root.substream(88);
    let deps: Vec<f64> = (0..400)
        .map(|_| dpm::dependence_summary(&params, &mut drng).unwrap())
        .collect();
    let want = 1.0 / 2.0_f64.sqrt();
    let got = mean(&deps);
    println!("criterion 8: dependence measure = {got:.4} vs {want:.4} (within 0.05)");
    assert!((got - want).abs() < 0.05);
    println!("criterion 8: PASS");
}

/// Criterion 9: estimand identities hold to machine precision.
#[test]
fn criterion_9_estimand_identities() {
    let sqrt_2_over_pi = (2.0 / std::f64::consts::PI).sqrt();
    assert!((mills_ratio(0.0) - sqrt_2_over_pi).abs() < 1e-15);
    assert!((observed_conditional_mean(0.0, 0.0, 1.0, 0.0, 0.0) - sqrt_2_over_pi).abs() < 1e-15);
    assert!(
        (observed_conditional_mean(1.5, 2.0, 0.7, 0.0, 0.25)
            - (1.75 + 0.7 * mills_ratio(2.0)))
        .abs()
            < 1e-15
    );
    assert_eq!(naive_selection_bias(0.8, 0.8, 3.0), 0.0);
    // mills identity: mills(x) cdf(x) = pdf(x)
    for &x in &[-5.0, -1.0, 0.0, 0.7, 3.0] {
        let m = mills_ratio(x);
        assert!((m * tobit_bart::math::normal_cdf(x) - normal_pdf(x)).abs() < 1e-15);
    }
    // latent treatment contrast carries no selection term
    for k in 0..10 {
        let x3 = -1.0 + 0.4 * k as f64;
        let cate = 0.25 * (x3 - 1.0) * (x3 - 1.0);
        let est = tobit_bart::estimands::latent_mean(0.5 + cate, 0.0)
            - tobit_bart::estimands::latent_mean(0.5, 0.0);
        assert!((est - cate).abs() < 1e-15);
    }
    println!("criterion 9: PASS");
}
