//! Cluster reassignment (Neal's auxiliary-parameter scheme with one
//! auxiliary), the three-case remixing of unique parameter values, and the
//! initial per-observation draws.
//!
//! Residual conventions: u1[i] = z*_i - f_z(w_i) for every observation,
//! u2[i] = y_i - f_y(x_i) for selected observations (ignored otherwise).

use super::{Cluster, ClusterParams, DpmConfig, DpmState, ErrBase};
use crate::math::{sample_inverse_gamma, sample_inverse_wishart_2, SymMat2};
use crate::rng::RngStream;
use rand::RngCore;

const LN_2PI: f64 = 1.837_877_066_409_345_6;

/// Bivariate normal log density of (u1, u2) under the atom's error law.
pub(crate) fn log_lik_selected(u1: f64, u2: f64, p: &ClusterParams) -> f64 {
    let d1 = u1 - p.mu1;
    let d2 = u2 - p.mu2;
    let qf = ((p.phi + p.gamma * p.gamma) * d1 * d1 - 2.0 * p.gamma * d1 * d2 + d2 * d2) / p.phi;
    -LN_2PI - 0.5 * p.phi.ln() - 0.5 * qf
}

/// Univariate log density of u1 (selection error has unit variance).
pub(crate) fn log_lik_censored(u1: f64, p: &ClusterParams) -> f64 {
    let d = u1 - p.mu1;
    -0.5 * LN_2PI - 0.5 * d * d
}

/// Draw (gamma, phi) from the base measure.
fn draw_base_cov(base: &ErrBase, rng: &mut RngStream) -> (f64, f64) {
    match *base {
        ErrBase::Vh { g0, tau, n0, s0 } => {
            let phi = sample_inverse_gamma(0.5 * n0, 0.5 * s0, rng);
            let gamma = g0 + (tau * phi).sqrt() * rng.standard_normal();
            (gamma, phi)
        }
        ErrBase::Ding { nu0, c } => loop {
            let sig = sample_inverse_wishart_2(nu0, SymMat2::scaled_identity(c), rng)
                .expect("isotropic scale is SPD");
            let s1 = sig.a11.sqrt();
            let gamma = sig.a12 / s1;
            let phi = sig.det() / sig.a11;
            if phi > 0.0 && phi.is_finite() {
                return (gamma, phi);
            }
        },
    }
}

/// Draw (mu1, mu2) from the base measure N(0, Omega), honoring the pin.
fn draw_base_mu(config: &DpmConfig, rng: &mut RngStream) -> (f64, f64) {
    if config.mu1_pinned {
        (0.0, config.mu_cov.a22.sqrt() * rng.standard_normal())
    } else {
        let (l11, l21, l22) = config.mu_cov.cholesky().expect("mu prior covariance SPD");
        let z1 = rng.standard_normal();
        let z2 = rng.standard_normal();
        (l11 * z1, l21 * z1 + l22 * z2)
    }
}

pub(crate) fn draw_base(config: &DpmConfig, rng: &mut RngStream) -> ClusterParams {
    let (gamma, phi) = draw_base_cov(&config.base, rng);
    let (mu1, mu2) = draw_base_mu(config, rng);
    ClusterParams { mu1, mu2, gamma, phi }
}

fn remove_obs_from_cluster(state: &mut DpmState, i: usize) -> Option<Cluster> {
    let a = state.assignments[i];
    state.clusters[a].size -= 1;
    if state.clusters[a].size == 0 {
        let removed = state.clusters.swap_remove(a);
        if a < state.clusters.len() {
            // the former last cluster now lives at slot a
            let moved_from = state.clusters.len();
            for lab in state.assignments.iter_mut() {
                if *lab == moved_from {
                    *lab = a;
                }
            }
        }
        Some(removed)
    } else {
        None
    }
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard Gumbel variate from keyed hash noise; used for the candidate
/// pick so the chosen cluster does not depend on slot enumeration order.
fn keyed_gumbel(nonce: u64, id: u64) -> f64 {
    let h = mix64(nonce ^ mix64(id));
    let u = ((h >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0);
    -(-u.ln()).ln()
}

/// Processing plan for one reassignment sweep: the order observations are
/// visited in, and the stable identity that keys each observation's
/// random substream. Defaults to storage order with identity keys.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub order: Vec<usize>,
    pub ids: Vec<u64>,
}

/// One sweep of per-observation cluster reassignment (auxiliary-parameter
/// scheme with a single auxiliary). Every observation draws from its own
/// substream and candidate noise is keyed on stable cluster identities,
/// so a sweep is equivariant under relabeling of observations.
pub fn reassign_clusters(
    state: &mut DpmState,
    u1: &[f64],
    u2: &[f64],
    selected: &[bool],
    config: &DpmConfig,
    rng: &RngStream,
    plan: Option<&SweepPlan>,
) {
    let n = u1.len();
    let default_plan: SweepPlan;
    let plan = match plan {
        Some(p) => p,
        None => {
            default_plan = SweepPlan {
                order: (0..n).collect(),
                ids: (0..n as u64).collect(),
            };
            &default_plan
        }
    };
    state.sweep += 1;
    let salt = state.sweep;
    let mut logw: Vec<f64> = Vec::new();
    for &i in &plan.order {
        let ident = plan.ids[i];
        let mut obs_rng = rng.substream(ident);
        let aux = match remove_obs_from_cluster(state, i) {
            Some(own) => Cluster {
                // founding identity refreshed on re-founding
                id: (salt << 32) | ident,
                ..own
            },
            None => Cluster {
                params: draw_base(config, &mut obs_rng),
                size: 0,
                id: (salt << 32) | ident,
            },
        };
        let loglik = |p: &ClusterParams| {
            if selected[i] {
                log_lik_selected(u1[i], u2[i], p)
            } else {
                log_lik_censored(u1[i], p)
            }
        };
        logw.clear();
        for c in &state.clusters {
            logw.push((c.size as f64).ln() + loglik(&c.params));
        }
        logw.push(state.alpha.ln() + loglik(&aux.params));
        let nonce = obs_rng.next_u64();
        let mut pick = 0usize;
        let mut best = f64::NEG_INFINITY;
        for (j, &l) in logw.iter().enumerate() {
            let id = if j < state.clusters.len() { state.clusters[j].id } else { aux.id };
            let v = l + keyed_gumbel(nonce, id);
            if v > best {
                best = v;
                pick = j;
            }
        }
        if pick == state.clusters.len() {
            state.assignments[i] = state.clusters.len();
            state.clusters.push(Cluster { size: 1, ..aux });
        } else {
            state.clusters[pick].size += 1;
            state.assignments[i] = pick;
        }
    }
    debug_assert!(state.validate().is_ok());
}

struct VhBase {
    g0: f64,
    tau: f64,
    n0: f64,
    s0: f64,
}

fn vh_of(base: &ErrBase) -> Option<VhBase> {
    match *base {
        ErrBase::Vh { g0, tau, n0, s0 } => Some(VhBase { g0, tau, n0, s0 }),
        ErrBase::Ding { .. } => None,
    }
}

/// Exact mu1 draw given cluster residuals (unit selection-error variance).
fn draw_mu1(sum_u1: f64, n_members: usize, omega11: f64, rng: &mut RngStream) -> f64 {
    let v = 1.0 / (1.0 / omega11 + n_members as f64);
    let m = sum_u1 * v;
    m + v.sqrt() * rng.standard_normal()
}

/// mu2 | mu1 prior conditional.
fn draw_mu2_given_mu1_prior(mu1: f64, omega: &SymMat2, rng: &mut RngStream) -> f64 {
    let m = omega.a12 / omega.a11 * mu1;
    let v = omega.a22 - omega.a12 * omega.a12 / omega.a11;
    m + v.sqrt() * rng.standard_normal()
}

/// Sequential (gamma | phi) draw over residual pairs.
fn draw_gamma_cond(
    z: &[f64],
    y: &[f64],
    phi: f64,
    vh: &VhBase,
    rng: &mut RngStream,
) -> f64 {
    let szz: f64 = z.iter().map(|v| v * v).sum();
    let szy: f64 = z.iter().zip(y).map(|(a, b)| a * b).sum();
    let prec = 1.0 / vh.tau + szz;
    let mean = (vh.g0 / vh.tau + szy) / prec;
    mean + (phi / prec).sqrt() * rng.standard_normal()
}

/// Sequential (phi | gamma) draw over residual pairs.
fn draw_phi_cond(z: &[f64], y: &[f64], gamma: f64, vh: &VhBase, rng: &mut RngStream) -> f64 {
    let ssr: f64 = y.iter().zip(z).map(|(yi, zi)| {
        let r = yi - gamma * zi;
        r * r
    }).sum();
    let dg = gamma - vh.g0;
    sample_inverse_gamma(
        0.5 * (vh.n0 + z.len() as f64 + 1.0),
        0.5 * vh.s0 + dg * dg / (2.0 * vh.tau) + 0.5 * ssr,
        rng,
    )
}

/// Joint normal-inverse-gamma draw of (gamma, phi) over residual pairs.
fn draw_gamma_phi_nig(z: &[f64], y: &[f64], vh: &VhBase, rng: &mut RngStream) -> (f64, f64) {
    let szz: f64 = z.iter().map(|v| v * v).sum();
    let szy: f64 = z.iter().zip(y).map(|(a, b)| a * b).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let a = 1.0 / vh.tau + szz;
    let h = (vh.g0 / vh.tau + szy) / a;
    let scale = 0.5 * (vh.s0 + vh.g0 * vh.g0 / vh.tau - a * h * h + syy);
    let phi = sample_inverse_gamma(0.5 * (z.len() as f64 + vh.n0), scale.max(1e-300), rng);
    let gamma = h + (phi / a).sqrt() * rng.standard_normal();
    (gamma, phi)
}

/// Parameter-expanded inverse-Wishart draw of (gamma, phi) for the Ding
/// base, given residual pairs and the current correlation.
fn draw_gamma_phi_ding(
    z: &[f64],
    y: &[f64],
    nu0: f64,
    c: f64,
    current_rho: f64,
    rng: &mut RngStream,
) -> (f64, f64) {
    loop {
        let sigma1_2 = sample_inverse_gamma(
            0.5 * nu0,
            c / (2.0 * (1.0 - current_rho * current_rho).max(1e-12)),
            rng,
        );
        let s1 = sigma1_2.sqrt();
        let mut s11 = c;
        let mut s12 = 0.0;
        let mut s22 = c;
        for (zi, yi) in z.iter().zip(y) {
            let e1 = s1 * zi;
            s11 += e1 * e1;
            s12 += e1 * yi;
            s22 += yi * yi;
        }
        let scale = SymMat2::new(s11, s12, s22);
        let df = z.len() as f64 + nu0;
        let sig = match sample_inverse_wishart_2(df, scale, rng) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let st1 = sig.a11.sqrt();
        let gamma = sig.a12 / st1;
        let phi = sig.det() / sig.a11;
        if phi > 0.0 && phi.is_finite() {
            return (gamma, phi);
        }
    }
}

/// Remix the unique parameter values cluster by cluster, holding the
/// membership fixed. Covers the three membership cases (censored-only,
/// uncensored-only, mixed) for both base measures.
pub fn remix_cluster_params(
    state: &mut DpmState,
    u1: &[f64],
    u2: &[f64],
    selected: &[bool],
    config: &DpmConfig,
    rng: &RngStream,
) {
    let k = state.clusters.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &a) in state.assignments.iter().enumerate() {
        members[a].push(i);
    }
    let omega = config.mu_cov;
    for (j, mem) in members.iter().enumerate() {
        let mut cl_rng = rng.substream(j as u64);
        let cur = state.clusters[j].params;
        let unc: Vec<usize> = mem.iter().copied().filter(|&i| selected[i]).collect();
        let n_all = mem.len();
        let n_unc = unc.len();

        let params = if n_unc == 0 {
            // censored-only: (gamma, phi) carry no information, draw from
            // the base; mu1 conjugate against the selection residuals
            let (gamma, phi) = draw_base_cov(&config.base, &mut cl_rng);
            let (mu1, mu2) = if config.mu1_pinned {
                (0.0, omega.a22.sqrt() * cl_rng.standard_normal())
            } else {
                let sum_u1: f64 = mem.iter().map(|&i| u1[i]).sum();
                let mu1 = draw_mu1(sum_u1, n_all, omega.a11, &mut cl_rng);
                let mu2 = draw_mu2_given_mu1_prior(mu1, &omega, &mut cl_rng);
                (mu1, mu2)
            };
            ClusterParams { mu1, mu2, gamma, phi }
        } else if n_unc == n_all {
            remix_uncensored_only(&unc, u1, u2, cur, config, &mut cl_rng)
        } else {
            remix_mixed(mem, &unc, u1, u2, cur, config, &mut cl_rng)
        };
        state.clusters[j].params = params;
    }
}

/// One Gibbs scan for a cluster containing only uncensored observations.
fn remix_uncensored_only(
    unc: &[usize],
    u1: &[f64],
    u2: &[f64],
    cur: ClusterParams,
    config: &DpmConfig,
    rng: &mut RngStream,
) -> ClusterParams {
    let omega = config.mu_cov;
    let n = unc.len() as f64;
    let (gamma0, phi0) = (cur.gamma, cur.phi);

    // (mu1, mu2) | gamma, phi
    let (mu1, mu2) = if config.mu1_pinned {
        let prec = 1.0 / omega.a22 + n / phi0;
        let lin: f64 = unc.iter().map(|&i| u2[i] - gamma0 * u1[i]).sum::<f64>() / phi0;
        let v = 1.0 / prec;
        (0.0, v * lin + v.sqrt() * rng.standard_normal())
    } else {
        // bivariate: precision Omega^-1 + n Sigma^-1
        let sig = SymMat2::new(1.0, gamma0, phi0 + gamma0 * gamma0);
        let sig_inv = sig.inverse().expect("error covariance SPD");
        let om_inv = omega.inverse().expect("mu prior covariance SPD");
        let prec = SymMat2::new(
            om_inv.a11 + n * sig_inv.a11,
            om_inv.a12 + n * sig_inv.a12,
            om_inv.a22 + n * sig_inv.a22,
        );
        let (s1, s2) = unc
            .iter()
            .fold((0.0, 0.0), |acc, &i| (acc.0 + u1[i], acc.1 + u2[i]));
        let b1 = sig_inv.a11 * s1 + sig_inv.a12 * s2;
        let b2 = sig_inv.a12 * s1 + sig_inv.a22 * s2;
        let cov = prec.inverse().expect("posterior precision SPD");
        let m1 = cov.a11 * b1 + cov.a12 * b2;
        let m2 = cov.a12 * b1 + cov.a22 * b2;
        let (l11, l21, l22) = cov.cholesky().expect("posterior covariance SPD");
        let z1 = rng.standard_normal();
        let z2 = rng.standard_normal();
        (m1 + l11 * z1, m2 + l21 * z1 + l22 * z2)
    };

    let z: Vec<f64> = unc.iter().map(|&i| u1[i] - mu1).collect();
    let y: Vec<f64> = unc.iter().map(|&i| u2[i] - mu2).collect();
    let (gamma, phi) = match &config.base {
        ErrBase::Vh { .. } => {
            let vh = vh_of(&config.base).unwrap();
            if config.joint_gamma_phi_remix {
                draw_gamma_phi_nig(&z, &y, &vh, rng)
            } else {
                let phi = draw_phi_cond(&z, &y, gamma0, &vh, rng);
                let gamma = draw_gamma_cond(&z, &y, phi, &vh, rng);
                (gamma, phi)
            }
        }
        ErrBase::Ding { nu0, c } => draw_gamma_phi_ding(&z, &y, *nu0, *c, cur.rho(), rng),
    };
    ClusterParams { mu1, mu2, gamma, phi }
}

/// Mixed cluster: exact mu1 draw over all members, then a Gibbs scan of
/// (mu2, gamma, phi) over the uncensored members.
fn remix_mixed(
    mem: &[usize],
    unc: &[usize],
    u1: &[f64],
    u2: &[f64],
    cur: ClusterParams,
    config: &DpmConfig,
    rng: &mut RngStream,
) -> ClusterParams {
    let omega = config.mu_cov;
    let mu1 = if config.mu1_pinned {
        0.0
    } else {
        let sum_u1: f64 = mem.iter().map(|&i| u1[i]).sum();
        draw_mu1(sum_u1, mem.len(), omega.a11, rng)
    };
    let (gamma0, phi0) = (cur.gamma, cur.phi);
    let n1 = unc.len() as f64;

    // mu2 | mu1, gamma, phi: conditional prior N(w12/w11 mu1, w22 - w12^2/w11)
    let det = omega.a11 * omega.a22 - omega.a12 * omega.a12;
    let prior_prec = omega.a11 / det;
    let prior_lin = omega.a12 * mu1 / det;
    let lik_lin: f64 = unc.iter().map(|&i| u2[i] - gamma0 * (u1[i] - mu1)).sum::<f64>() / phi0;
    let v = 1.0 / (prior_prec + n1 / phi0);
    let mu2 = v * (prior_lin + lik_lin) + v.sqrt() * rng.standard_normal();

    let z: Vec<f64> = unc.iter().map(|&i| u1[i] - mu1).collect();
    let y: Vec<f64> = unc.iter().map(|&i| u2[i] - mu2).collect();
    let (gamma, phi) = match &config.base {
        ErrBase::Vh { .. } => {
            let vh = vh_of(&config.base).unwrap();
            if config.joint_gamma_phi_remix {
                draw_gamma_phi_nig(&z, &y, &vh, rng)
            } else {
                let gamma = draw_gamma_cond(&z, &y, phi0, &vh, rng);
                let phi = draw_phi_cond(&z, &y, gamma, &vh, rng);
                (gamma, phi)
            }
        }
        ErrBase::Ding { nu0, c } => draw_gamma_phi_ding(&z, &y, *nu0, *c, cur.rho(), rng),
    };
    ClusterParams { mu1, mu2, gamma, phi }
}

/// Initial per-observation parameter draws; every observation starts in
/// its own cluster.
pub fn init_theta(
    u1: &[f64],
    u2: &[f64],
    selected: &[bool],
    config: &DpmConfig,
    alpha0: f64,
    rng: &RngStream,
) -> DpmState {
    let n = u1.len();
    let omega = config.mu_cov;
    let mut clusters = Vec::with_capacity(n);
    for i in 0..n {
        let mut obs_rng = rng.substream(i as u64);
        let (gamma0, phi0) = draw_base_cov(&config.base, &mut obs_rng);
        let params = if !selected[i] {
            let (mu1, mu2) = if config.mu1_pinned {
                (0.0, omega.a22.sqrt() * obs_rng.standard_normal())
            } else {
                let mu1 = draw_mu1(u1[i], 1, omega.a11, &mut obs_rng);
                let mu2 = draw_mu2_given_mu1_prior(mu1, &omega, &mut obs_rng);
                (mu1, mu2)
            };
            ClusterParams { mu1, mu2, gamma: gamma0, phi: phi0 }
        } else {
            let seed = ClusterParams { mu1: 0.0, mu2: 0.0, gamma: gamma0, phi: phi0 };
            remix_uncensored_only(&[i], u1, u2, seed, config, &mut obs_rng)
        };
        clusters.push(Cluster { params, size: 1, id: i as u64 });
    }
    let state = DpmState {
        assignments: (0..n).collect(),
        clusters,
        alpha: alpha0,
        sweep: 0,
    };
    debug_assert!(state.validate().is_ok());
    state
}
