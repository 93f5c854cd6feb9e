//! Concentration-parameter updates: the Escobar-West auxiliary-variable
//! draw and a discretized-support draw under a polynomial prior with
//! mode-matched bounds.

use crate::rng::RngStream;
use rand_distr::{Beta, Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

/// Mixture pieces of the Escobar-West update given the auxiliary draw:
/// (p_kappa, shape if the first component fires, shape otherwise, rate).
pub(crate) fn escobar_west_parts(
    k: usize,
    n: usize,
    c1: f64,
    c2: f64,
    kappa: f64,
) -> (f64, f64, f64, f64) {
    let rate = c2 - kappa.ln();
    let p = (c1 + k as f64 - 1.0) / (n as f64 * rate + c1 + k as f64 - 1.0);
    (p, c1 + k as f64, c1 + k as f64 - 1.0, rate)
}

/// alpha | k under alpha ~ Gamma(c1, c2): draw kappa ~ Beta(alpha+1, n),
/// then a two-component Gamma mixture.
pub fn draw_alpha_escobar_west(
    k: usize,
    n: usize,
    alpha: f64,
    c1: f64,
    c2: f64,
    rng: &mut RngStream,
) -> f64 {
    assert!(k >= 1 && n >= 1 && alpha > 0.0);
    let kappa = Beta::new(alpha + 1.0, n as f64).expect("valid beta").sample(rng);
    let (p, shape_hi, shape_lo, rate) = escobar_west_parts(k, n, c1, c2, kappa);
    let shape = if rng.uniform() < p { shape_hi } else { shape_lo };
    Gamma::new(shape, 1.0 / rate).expect("valid gamma").sample(rng)
}

/// Polynomial prior over a mode-matched interval, sampled over an equally
/// spaced grid.
#[derive(Debug, Clone)]
pub struct GridAlphaPrior {
    pub i_min: usize,
    pub i_max: usize,
    pub psi: f64,
    pub grid_size: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log |s(n, k)| for k = 0..=n via the triangle recurrence.
fn log_stirling_row(n: usize) -> Vec<f64> {
    let mut row = vec![f64::NEG_INFINITY; n + 1];
    row[0] = 0.0; // s(0,0) = 1
    for m in 0..n {
        // build row m+1 from row m, in place from the right
        let mut next = vec![f64::NEG_INFINITY; n + 1];
        for k in 0..=m + 1 {
            let carry = if k >= 1 { row[k - 1] } else { f64::NEG_INFINITY };
            let stay = if k <= m { (m as f64).ln() + row[k] } else { f64::NEG_INFINITY };
            next[k] = log_add(carry, stay);
        }
        row = next;
    }
    row
}

/// log p(k | alpha) up to a k-independent constant.
fn log_k_given_alpha(k: usize, alpha: f64, n: usize, row: &[f64]) -> f64 {
    row[k] + k as f64 * alpha.ln() + ln_gamma(alpha) - ln_gamma(alpha + n as f64)
}

fn prior_mode_of_k(alpha: f64, n: usize, row: &[f64]) -> usize {
    let mut best = 1;
    let mut best_val = f64::NEG_INFINITY;
    for k in 1..=n {
        let v = log_k_given_alpha(k, alpha, n, row);
        if v > best_val {
            best_val = v;
            best = k;
        }
    }
    best
}

impl GridAlphaPrior {
    /// Bounds solved by mode matching: `alpha_min` is the largest
    /// concentration whose prior modal cluster count is still `i_min`,
    /// `alpha_max` likewise for `i_max`.
    pub fn new(i_min: usize, i_max: usize, psi: f64, grid_size: usize, n: usize) -> Self {
        assert!(i_min >= 1 && i_max > i_min && i_max <= n);
        assert!(grid_size >= 2);
        let row = log_stirling_row(n);
        let solve = |target: usize| -> f64 {
            // largest alpha with mode(alpha) <= target
            let mut lo = 1e-8;
            let mut hi = 4.0 * n as f64;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if prior_mode_of_k(mid, n, &row) <= target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let alpha_min = solve(i_min);
        let alpha_max = solve(i_max);
        assert!(alpha_min < alpha_max, "degenerate mode-matched bounds");
        Self { i_min, i_max, psi, grid_size, alpha_min, alpha_max }
    }

    /// Defaults from the nonparametric-error literature: I_min = 1,
    /// I_max = floor(0.1 n), psi = 1/2, 100 grid points.
    pub fn with_defaults(n: usize) -> Self {
        let i_max = ((0.1 * n as f64).floor() as usize).max(2);
        Self::new(1, i_max, 0.5, 100, n)
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let step = (self.alpha_max - self.alpha_min) / (self.grid_size - 1) as f64;
        (0..self.grid_size).map(|i| self.alpha_min + step * i as f64).collect()
    }

    /// Normalized posterior weights over the grid for the current k.
    pub fn grid_weights(&self, k: usize, n: usize) -> Vec<f64> {
        let pts = self.grid_points();
        let logs: Vec<f64> = pts
            .iter()
            .map(|&a| {
                let rel = (a - self.alpha_min) / (self.alpha_max - self.alpha_min);
                let prior = if self.psi == 0.0 {
                    0.0
                } else if rel >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    self.psi * (1.0 - rel).ln()
                };
                k as f64 * a.ln() + ln_gamma(a) - ln_gamma(a + n as f64) + prior
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let tot: f64 = w.iter().sum();
        assert!(tot > 0.0, "alpha grid weights vanished");
        for v in w.iter_mut() {
            *v /= tot;
        }
        w
    }
}

/// Multinomial draw of alpha over the grid.
pub fn draw_alpha_grid(k: usize, n: usize, grid: &GridAlphaPrior, rng: &mut RngStream) -> f64 {
    let w = grid.grid_weights(k, n);
    debug_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let pts = grid.grid_points();
    let u = rng.uniform();
    let mut acc = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        acc += wi;
        if u <= acc {
            return pts[i];
        }
    }
    *pts.last().unwrap()
}
