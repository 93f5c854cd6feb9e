//! Leaf-marginalized likelihoods for the collapsed outcome-block sampler
//! and its weighted selection-side counterpart, plus the joint conditional
//! draw of all outcome leaf values and the covariance coefficient.

use super::Forest;
use crate::rng::RngStream;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarginalError {
    #[error("posterior precision matrix is not positive definite")]
    NotSpd,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Sparse leaf-indicator design for a whole forest over a fixed set of
/// rows: each row selects exactly one column per tree.
#[derive(Debug, Clone)]
pub struct LeafDesign {
    pub n_rows: usize,
    pub n_trees: usize,
    /// total number of leaf columns
    pub n_cols: usize,
    /// row-major: cols[row * n_trees + j] = column of tree j's leaf
    pub cols: Vec<u32>,
    /// column -> (tree index, leaf slot)
    pub owner: Vec<(u32, u32)>,
}

impl LeafDesign {
    /// Build the design for `rows` (training indices) from a forest's
    /// cached leaf assignments.
    pub fn from_forest(forest: &Forest, rows: &[usize]) -> Self {
        let n_trees = forest.n_trees();
        let mut owner = Vec::new();
        let mut col_of_slot: Vec<Vec<u32>> = Vec::with_capacity(n_trees);
        for (j, fit) in forest.fits().iter().enumerate() {
            let mut map = vec![u32::MAX; fit.tree.slab_len()];
            for leaf in fit.tree.leaves() {
                map[leaf] = owner.len() as u32;
                owner.push((j as u32, leaf as u32));
            }
            col_of_slot.push(map);
        }
        let mut cols = Vec::with_capacity(rows.len() * n_trees);
        for &r in rows {
            for (j, fit) in forest.fits().iter().enumerate() {
                cols.push(col_of_slot[j][fit.leaf_of[r] as usize]);
            }
        }
        Self {
            n_rows: rows.len(),
            n_trees,
            n_cols: owner.len(),
            cols,
            owner,
        }
    }

    pub fn row_cols(&self, row: usize) -> &[u32] {
        &self.cols[row * self.n_trees..(row + 1) * self.n_trees]
    }

    /// Dense 0/1 matrix (for tests and the public dense entry points).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for &c in self.row_cols(i) {
                m[(i, c as usize)] = 1.0;
            }
        }
        m
    }
}

/// Shared core: log density of an n-vector under Cov = B P B' + noise,
/// expressed through the posterior precision M = B' noise^-1 B + P^-1.
/// `log_norm_extra` carries -(1/2) log det(noise) - (1/2) log det(P).
fn gaussian_marginal_core(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
    quad: f64,
    n: usize,
    log_norm_extra: f64,
) -> Result<f64, MarginalError> {
    let chol = Cholesky::new(m.clone()).ok_or(MarginalError::NotSpd)?;
    let log_det_m: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let sol = chol.solve(b);
    let exploit = b.dot(&sol);
    Ok(-0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() + log_norm_extra
        - 0.5 * log_det_m
        - 0.5 * (quad - exploit))
}

fn chol_sample(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<DVector<f64>, MarginalError> {
    let chol: Cholesky<f64, Dyn> = Cholesky::new(m.clone()).ok_or(MarginalError::NotSpd)?;
    let mean = chol.solve(b);
    let z = DVector::from_iterator(m.nrows(), (0..m.nrows()).map(|_| rng.standard_normal()));
    // covariance M^-1 = L^-T L^-1; draw = mean + L^-T z
    let u = chol.l().transpose().solve_upper_triangular(&z).ok_or(MarginalError::NotSpd)?;
    Ok(mean + u)
}

/// Log marginal likelihood of the selected outcomes with all outcome leaf
/// values and the covariance coefficient integrated out jointly.
///
/// `b_tilde` is the n1 x (L+1) design whose first L columns are the leaf
/// indicators and whose last column is the selection residual; the prior
/// is N(0, diag(sigma0y_2 I_L, tau phi)), the noise is phi I.
pub fn outcome_block_marginal_loglik(
    b_tilde: &DMatrix<f64>,
    y: &[f64],
    phi: f64,
    tau: f64,
    sigma0y_2: f64,
) -> Result<f64, MarginalError> {
    let n = y.len();
    if b_tilde.nrows() != n {
        return Err(MarginalError::Dimension(format!(
            "design has {} rows, response has {n}",
            b_tilde.nrows()
        )));
    }
    let ncol = b_tilde.ncols();
    let l = ncol - 1;
    let yv = DVector::from_column_slice(y);
    let mut m = b_tilde.transpose() * b_tilde / phi;
    for j in 0..l {
        m[(j, j)] += 1.0 / sigma0y_2;
    }
    m[(l, l)] += 1.0 / (tau * phi);
    let b = b_tilde.transpose() * &yv / phi;
    let quad = yv.dot(&yv) / phi;
    let log_norm_extra =
        -0.5 * (n as f64 * phi.ln() + l as f64 * sigma0y_2.ln() + (tau * phi).ln());
    gaussian_marginal_core(&m, &b, quad, n, log_norm_extra)
}

/// Joint conditional draw of (leaf values, gamma) given the trees: a
/// multivariate normal with precision B~'B~/phi + P0 and mean solve
/// against B~'y/phi.
pub fn joint_leaf_gamma_draw(
    b_tilde: &DMatrix<f64>,
    y: &[f64],
    phi: f64,
    tau: f64,
    sigma0y_2: f64,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, f64), MarginalError> {
    let ncol = b_tilde.ncols();
    let l = ncol - 1;
    let yv = DVector::from_column_slice(y);
    let mut m = b_tilde.transpose() * b_tilde / phi;
    for j in 0..l {
        m[(j, j)] += 1.0 / sigma0y_2;
    }
    m[(l, l)] += 1.0 / (tau * phi);
    let b = b_tilde.transpose() * &yv / phi;
    let draw = chol_sample(&m, &b, rng)?;
    let gamma = draw[l];
    Ok((draw.as_slice()[..l].to_vec(), gamma))
}

/// Weighted leaf-marginal likelihood for the selection equation: response
/// `z_breve` with diagonal noise V = diag(1/w), leaves integrated under
/// N(0, sigma0z_2 I).
pub fn selection_marginal_loglik(
    b_z: &DMatrix<f64>,
    z_breve: &[f64],
    weights: &[f64],
    sigma0z_2: f64,
) -> Result<f64, MarginalError> {
    let n = z_breve.len();
    if b_z.nrows() != n || weights.len() != n {
        return Err(MarginalError::Dimension("row mismatch".into()));
    }
    let l = b_z.ncols();
    let mut m = DMatrix::zeros(l, l);
    let mut b = DVector::zeros(l);
    let mut quad = 0.0;
    let mut sum_ln_w = 0.0;
    for i in 0..n {
        let w = weights[i];
        sum_ln_w += w.ln();
        quad += w * z_breve[i] * z_breve[i];
        for a in 0..l {
            let ba = b_z[(i, a)];
            if ba == 0.0 {
                continue;
            }
            b[a] += w * ba * z_breve[i];
            for c in 0..l {
                let bc = b_z[(i, c)];
                if bc != 0.0 {
                    m[(a, c)] += w * ba * bc;
                }
            }
        }
    }
    for j in 0..l {
        m[(j, j)] += 1.0 / sigma0z_2;
    }
    let log_norm_extra = 0.5 * sum_ln_w - 0.5 * l as f64 * sigma0z_2.ln();
    gaussian_marginal_core(&m, &b, quad, n, log_norm_extra)
}

/// Design-based variant used inside the collapsed sampler: same formula as
/// [`outcome_block_marginal_loglik`] with the leaf-indicator block given
/// implicitly by `design` and the residual column by `z_tilde`.
pub fn outcome_block_loglik_design(
    design: &LeafDesign,
    z_tilde: &[f64],
    y: &[f64],
    phi: f64,
    tau: f64,
    sigma0y_2: f64,
) -> Result<f64, MarginalError> {
    let (m, b, quad) = assemble_outcome_system(design, z_tilde, y, phi, tau, sigma0y_2)?;
    let n = y.len();
    let log_norm_extra = -0.5
        * (n as f64 * phi.ln() + design.n_cols as f64 * sigma0y_2.ln() + (tau * phi).ln());
    gaussian_marginal_core(&m, &b, quad, n, log_norm_extra)
}

/// Design-based joint draw; writes nothing, returns (per-column leaf
/// values, gamma).
pub fn joint_leaf_gamma_draw_design(
    design: &LeafDesign,
    z_tilde: &[f64],
    y: &[f64],
    phi: f64,
    tau: f64,
    sigma0y_2: f64,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, f64), MarginalError> {
    let (m, b, _quad) = assemble_outcome_system(design, z_tilde, y, phi, tau, sigma0y_2)?;
    let draw = chol_sample(&m, &b, rng)?;
    let l = design.n_cols;
    Ok((draw.as_slice()[..l].to_vec(), draw[l]))
}

fn assemble_outcome_system(
    design: &LeafDesign,
    z_tilde: &[f64],
    y: &[f64],
    phi: f64,
    tau: f64,
    sigma0y_2: f64,
) -> Result<(DMatrix<f64>, DVector<f64>, f64), MarginalError> {
    let n = design.n_rows;
    if z_tilde.len() != n || y.len() != n {
        return Err(MarginalError::Dimension("row mismatch".into()));
    }
    let l = design.n_cols;
    let dim = l + 1;
    let mut m = DMatrix::zeros(dim, dim);
    let mut b = DVector::zeros(dim);
    let mut quad = 0.0;
    for i in 0..n {
        let cols = design.row_cols(i);
        let z = z_tilde[i];
        let yi = y[i];
        quad += yi * yi;
        for (a_pos, &a) in cols.iter().enumerate() {
            let a = a as usize;
            b[a] += yi;
            m[(a, a)] += 1.0;
            for &c in &cols[a_pos + 1..] {
                let c = c as usize;
                m[(a, c)] += 1.0;
                m[(c, a)] += 1.0;
            }
            m[(a, l)] += z;
            m[(l, a)] += z;
        }
        m[(l, l)] += z * z;
        b[l] += yi * z;
    }
    m /= phi;
    b /= phi;
    quad /= phi;
    for j in 0..l {
        m[(j, j)] += 1.0 / sigma0y_2;
    }
    m[(l, l)] += 1.0 / (tau * phi);
    Ok((m, b, quad))
}
