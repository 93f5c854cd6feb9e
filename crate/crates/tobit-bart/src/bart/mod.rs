//! Sum-of-trees machinery: tree type and prior, proposal moves, conjugate
//! leaf draws, forest prediction, and the leaf-marginalized likelihoods
//! used by the collapsed sampler.

mod forest;
pub(crate) mod marginal;
pub(crate) mod plain;
pub(crate) mod proposal;
mod tree;
pub(crate) mod update;

pub use forest::Forest;
pub use marginal::{
    joint_leaf_gamma_draw, outcome_block_marginal_loglik, selection_marginal_loglik, LeafDesign,
};
pub use plain::{
    calibrate_error_lambda, fit_bart_regression, fit_bart_regression_with_prior,
    fit_probit_bart, BartRegressionFit, McmcSize, ProbitBartFit,
};
pub use proposal::{propose_move, MoveKind, ProposeOutcome, Proposal};
pub use tree::{Node, NodeKind, SplitRule, Tree, TreeFit};
pub use update::{
    leaf_marginal_loglik, tree_mh_step, weighted_leaf_draw, LeafStats, MoveResult,
};

/// Column-major covariate matrix.
#[derive(Debug, Clone)]
pub struct Covariates {
    n: usize,
    cols: Vec<Vec<f64>>,
}

impl Covariates {
    pub fn from_columns(cols: Vec<Vec<f64>>) -> Self {
        assert!(!cols.is_empty(), "need at least one covariate column");
        let n = cols[0].len();
        assert!(cols.iter().all(|c| c.len() == n), "ragged columns");
        Self { n, cols }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty());
        let p = rows[0].len();
        let mut cols = vec![Vec::with_capacity(rows.len()); p];
        for r in rows {
            assert_eq!(r.len(), p, "ragged rows");
            for (j, v) in r.iter().enumerate() {
                cols[j].push(*v);
            }
        }
        Self::from_columns(cols)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.cols[col][row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.cols[col]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.cols.iter().map(|c| c[row]).collect()
    }
}

/// Tree-model hyperparameters for one forest.
#[derive(Debug, Clone)]
pub struct BartConfig {
    /// number of trees
    pub m: usize,
    /// depth-penalty base: P(split at depth d) = alpha_split (1+d)^-beta_split
    pub alpha_split: f64,
    pub beta_split: f64,
    /// leaf scale parameter; sigma0 = halfwidth / (e sqrt(m))
    pub e: f64,
    /// half-width of the response range the leaf prior is calibrated to
    /// (0.5 for a response rescaled to [-0.5, 0.5]; 3.0 for probit latents)
    pub leaf_halfwidth: f64,
    /// error-variance prior degrees of freedom (plain regression only)
    pub v: f64,
    /// error-variance prior scale (plain regression only)
    pub lambda: f64,
    /// minimum training observations per leaf
    pub min_leaf: usize,
    pub p_grow: f64,
    pub p_prune: f64,
    pub p_change: f64,
}

impl BartConfig {
    pub fn outcome_default() -> Self {
        Self {
            m: 200,
            alpha_split: 0.95,
            beta_split: 2.0,
            e: 2.0,
            leaf_halfwidth: 0.5,
            v: 3.0,
            lambda: 1.0,
            min_leaf: 5,
            p_grow: 0.25,
            p_prune: 0.25,
            p_change: 0.5,
        }
    }

    pub fn selection_default() -> Self {
        Self {
            m: 50,
            leaf_halfwidth: 3.0,
            ..Self::outcome_default()
        }
    }

    pub fn sigma0(&self) -> f64 {
        self.leaf_halfwidth / (self.e * (self.m as f64).sqrt())
    }

    pub fn sigma0_2(&self) -> f64 {
        let s = self.sigma0();
        s * s
    }
}

/// Probability that a node at `depth` splits: alpha (1+d)^-beta.
pub fn split_probability(depth: u32, alpha_split: f64, beta_split: f64) -> f64 {
    assert!(alpha_split > 0.0 && alpha_split < 1.0);
    assert!(beta_split >= 0.0);
    alpha_split * (1.0 + depth as f64).powf(-beta_split)
}

/// Affine map taking the observed response onto [-0.5, 0.5].
#[derive(Debug, Clone, Copy)]
pub struct OutcomeScale {
    pub center: f64,
    pub range: f64,
}

impl OutcomeScale {
    pub fn fit(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let range = if hi > lo { hi - lo } else { 1.0 };
        Self {
            center: 0.5 * (lo + hi),
            range,
        }
    }

    pub fn identity() -> Self {
        Self { center: 0.0, range: 1.0 }
    }

    pub fn to_internal(&self, y: f64) -> f64 {
        (y - self.center) / self.range
    }

    pub fn to_original(&self, f: f64) -> f64 {
        f * self.range + self.center
    }

    /// Back-transform for quantities on the scale of the response with no
    /// location (covariances, effects).
    pub fn scale_only(&self, f: f64) -> f64 {
        f * self.range
    }

    pub fn var_to_original(&self, v: f64) -> f64 {
        v * self.range * self.range
    }

    pub fn var_to_internal(&self, v: f64) -> f64 {
        v / (self.range * self.range)
    }
}
