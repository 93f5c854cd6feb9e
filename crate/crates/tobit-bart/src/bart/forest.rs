//! A sum of trees with cached training predictions.

use super::tree::TreeFit;
use super::update::{tree_mh_step, weighted_leaf_draw};
use super::{BartConfig, Covariates};
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct Forest {
    fits: Vec<TreeFit>,
    pub sigma0_2: f64,
    cache: Vec<f64>,
}

impl Forest {
    pub fn constant(m: usize, n_obs: usize, sigma0_2: f64) -> Self {
        Self {
            fits: (0..m).map(|_| TreeFit::new_root(n_obs)).collect(),
            sigma0_2,
            cache: vec![0.0; n_obs],
        }
    }

    pub fn n_trees(&self) -> usize {
        self.fits.len()
    }

    pub fn fits(&self) -> &[TreeFit] {
        &self.fits
    }

    pub fn fits_mut(&mut self) -> &mut Vec<TreeFit> {
        &mut self.fits
    }

    /// Cached per-training-observation predictions.
    pub fn predictions(&self) -> &[f64] {
        &self.cache
    }

    /// Rebuild the cache by traversing every tree from scratch.
    pub fn recompute_cache(&mut self, cov: &Covariates) {
        for v in self.cache.iter_mut() {
            *v = 0.0;
        }
        for fit in &mut self.fits {
            fit.reassign_all(cov);
            for i in 0..self.cache.len() {
                self.cache[i] += fit.value_for_obs(i);
            }
        }
    }

    /// Must hold at all times; checked in debug builds after each sweep.
    pub fn cache_consistent(&self, cov: &Covariates) -> bool {
        for i in 0..self.cache.len() {
            let direct: f64 = self
                .fits
                .iter()
                .map(|f| f.tree.leaf_value(f.tree.traverse_obs(cov, i)))
                .sum();
            if (direct - self.cache[i]).abs() > 1e-9 * (1.0 + direct.abs()) {
                return false;
            }
        }
        true
    }

    /// Predictions at arbitrary rows.
    pub fn predict_matrix(&self, cov: &Covariates) -> Vec<f64> {
        let mut out = vec![0.0; cov.n_rows()];
        for fit in &self.fits {
            for (i, o) in out.iter_mut().enumerate() {
                let mut idx = crate::bart::tree::ROOT;
                loop {
                    match &fit.tree.node(idx).kind {
                        crate::bart::tree::NodeKind::Leaf { value } => {
                            *o += value;
                            break;
                        }
                        crate::bart::tree::NodeKind::Internal { rule, left, right } => {
                            idx = if rule.goes_left(cov.value(i, rule.var)) {
                                *left
                            } else {
                                *right
                            };
                        }
                    }
                }
            }
        }
        out
    }

    /// One backfitting sweep: every tree gets a structure move and a leaf
    /// draw against its partial residuals. `target[i]` is the full-model
    /// response for this forest; residual i has variance sigma2 / w_i.
    /// Returns the number of accepted structure moves.
    pub fn backfit(
        &mut self,
        cov: &Covariates,
        target: &[f64],
        weights: &[f64],
        sigma2: f64,
        cfg: &BartConfig,
        rng: &mut RngStream,
    ) -> usize {
        let n = target.len();
        let mut partial = vec![0.0; n];
        let mut accepted = 0;
        for j in 0..self.fits.len() {
            {
                let fit = &self.fits[j];
                for i in 0..n {
                    partial[i] = target[i] - self.cache[i] + fit.value_for_obs(i);
                }
            }
            let fit = &mut self.fits[j];
            let res = tree_mh_step(fit, cov, &partial, weights, sigma2, cfg, rng);
            if res.accepted {
                accepted += 1;
            }
            weighted_leaf_draw(fit, &partial, weights, sigma2, self.sigma0_2, rng);
            for i in 0..n {
                self.cache[i] = target[i] - partial[i] + fit.value_for_obs(i);
            }
        }
        debug_assert!(self.cache_consistent(cov), "forest cache diverged");
        accepted
    }
}
