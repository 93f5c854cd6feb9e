//! Metropolis-Hastings tree updates and conjugate leaf draws.

use super::proposal::{propose_move, MoveKind, Proposal, ProposeOutcome};
use super::tree::TreeFit;
use super::{BartConfig, Covariates};
use crate::rng::RngStream;

/// Sufficient statistics of one leaf for weighted Gaussian residuals
/// r_i ~ N(mu_leaf, sigma2 / w_i).
#[derive(Debug, Clone, Copy, Default)]
pub struct LeafStats {
    pub n: usize,
    pub sum_w: f64,
    pub sum_wr: f64,
    pub sum_wr2: f64,
}

impl LeafStats {
    pub fn add(&mut self, r: f64, w: f64) {
        self.n += 1;
        self.sum_w += w;
        self.sum_wr += w * r;
        self.sum_wr2 += w * r * r;
    }
}

/// Log marginal likelihood of a leaf's residuals with the leaf mean
/// integrated out under N(0, sigma0_2), dropping the per-observation
/// normalizers -(1/2) ln(2 pi sigma2 / w_i), which are invariant under any
/// repartition of a fixed observation set.
pub fn leaf_marginal_core(stats: &LeafStats, sigma2: f64, sigma0_2: f64) -> f64 {
    let a = stats.sum_w / sigma2;
    let b = stats.sum_wr / sigma2;
    let v = 1.0 / (1.0 / sigma0_2 + a);
    0.5 * (v / sigma0_2).ln() + 0.5 * b * b * v - 0.5 * stats.sum_wr2 / sigma2
}

/// Fully normalized leaf marginal log likelihood; `sum_ln_w` is the sum of
/// the log weights over the leaf's observations.
pub fn leaf_marginal_loglik(stats: &LeafStats, sum_ln_w: f64, sigma2: f64, sigma0_2: f64) -> f64 {
    let norm = -0.5 * stats.n as f64 * (2.0 * std::f64::consts::PI * sigma2).ln() + 0.5 * sum_ln_w;
    norm + leaf_marginal_core(stats, sigma2, sigma0_2)
}

/// Leaf-marginal log-likelihood difference (proposed minus current) over
/// the leaves affected by `prop`.
pub fn evaluate_proposal(
    fit: &TreeFit,
    prop: &Proposal,
    resid: &[f64],
    weights: &[f64],
    sigma2: f64,
    sigma0_2: f64,
) -> f64 {
    let mut old_stats = vec![LeafStats::default(); prop.old_leaves.len()];
    let mut new_stats = vec![LeafStats::default(); prop.new_leaves.len()];
    for i in 0..resid.len() {
        let lo = fit.leaf_of[i] as usize;
        if let Some(pos) = prop.old_leaves.iter().position(|&l| l == lo) {
            old_stats[pos].add(resid[i], weights[i]);
        }
        let ln = prop.leaf_of[i] as usize;
        if let Some(pos) = prop.new_leaves.iter().position(|&l| l == ln) {
            new_stats[pos].add(resid[i], weights[i]);
        }
    }
    let mut delta = 0.0;
    for s in &new_stats {
        delta += leaf_marginal_core(s, sigma2, sigma0_2);
    }
    for s in &old_stats {
        delta -= leaf_marginal_core(s, sigma2, sigma0_2);
    }
    delta
}

#[derive(Debug, Clone, Copy)]
pub struct MoveResult {
    pub accepted: bool,
    pub attempted: Option<MoveKind>,
    pub log_accept: f64,
}

/// One Metropolis-Hastings structure move on `fit`. Acceptance probability
/// is min(1, prior ratio x transition ratio x leaf-marginal likelihood
/// ratio). Infeasible proposals are rejected without a uniform draw being
/// wasted on them.
pub fn tree_mh_step(
    fit: &mut TreeFit,
    cov: &Covariates,
    resid: &[f64],
    weights: &[f64],
    sigma2: f64,
    cfg: &BartConfig,
    rng: &mut RngStream,
) -> MoveResult {
    let prop = match propose_move(fit, cov, cfg, rng) {
        ProposeOutcome::Proposed(p) => p,
        ProposeOutcome::Infeasible => {
            return MoveResult {
                accepted: false,
                attempted: None,
                log_accept: f64::NEG_INFINITY,
            }
        }
    };
    let delta = evaluate_proposal(fit, &prop, resid, weights, sigma2, cfg.sigma0_2());
    let log_accept = (delta + prop.log_prior_ratio + prop.log_transition_ratio).min(0.0);
    let accepted = rng.uniform().ln() < log_accept;
    let kind = prop.kind;
    if accepted {
        fit.tree = prop.tree;
        fit.leaf_of = prop.leaf_of;
    }
    MoveResult {
        accepted,
        attempted: Some(kind),
        log_accept,
    }
}

/// Conjugate draw of every leaf value: posterior N(V sum(w r)/sigma2, V)
/// with V = 1/(1/sigma0_2 + sum(w)/sigma2). Empty leaves draw from the
/// prior N(0, sigma0_2).
pub fn weighted_leaf_draw(
    fit: &mut TreeFit,
    resid: &[f64],
    weights: &[f64],
    sigma2: f64,
    sigma0_2: f64,
    rng: &mut RngStream,
) {
    let slab = fit.tree.slab_len();
    let mut stats = vec![LeafStats::default(); slab];
    for i in 0..resid.len() {
        stats[fit.leaf_of[i] as usize].add(resid[i], weights[i]);
    }
    for leaf in fit.tree.leaves() {
        let s = &stats[leaf];
        let v = 1.0 / (1.0 / sigma0_2 + s.sum_w / sigma2);
        let mean = v * s.sum_wr / sigma2;
        fit.tree.set_leaf_value(leaf, mean + v.sqrt() * rng.standard_normal());
    }
}
