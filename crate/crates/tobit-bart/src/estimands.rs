//! Posterior prediction estimands, treatment-effect estimands, and the
//! evaluation metrics of the simulation studies.

use crate::math::{mills_ratio, normal_cdf};
use crate::stats::{quantile_sorted, mean};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimandError {
    #[error("length mismatch: {0}")]
    Length(String),
}

/// E[Y | selected]: f_y + mu2 + gamma * mills(f_z + mu1).
pub fn observed_conditional_mean(f_y: f64, f_z: f64, gamma: f64, mu1: f64, mu2: f64) -> f64 {
    f_y + mu2 + gamma * mills_ratio(f_z + mu1)
}

/// E[Y*]: the latent mean f_y (+ mu2 under the mixture error model).
pub fn latent_mean(f_y: f64, mu2: f64) -> f64 {
    f_y + mu2
}

/// Effect of treatment on the selection probability:
/// Phi(f_z(w,1) + mu1) - Phi(f_z(w,0) + mu1).
pub fn selection_effect(f_z_treat: f64, f_z_ctrl: f64, mu1: f64) -> f64 {
    normal_cdf(f_z_treat + mu1) - normal_cdf(f_z_ctrl + mu1)
}

/// Selection-bias term a naive conditional-mean contrast would absorb:
/// gamma (mills(f_z(w,1)) - mills(f_z(w,0))). Diagnostic only.
pub fn naive_selection_bias(f_z_treat: f64, f_z_ctrl: f64, gamma: f64) -> f64 {
    gamma * (mills_ratio(f_z_treat) - mills_ratio(f_z_ctrl))
}

/// Per-observation posterior summary of a draw matrix (draws x rows).
#[derive(Debug, Clone, Default)]
pub struct Summaries {
    pub mean: Vec<f64>,
    pub q025: Vec<f64>,
    pub q975: Vec<f64>,
}

pub fn summarize(draws: &[Vec<f64>]) -> Summaries {
    assert!(!draws.is_empty());
    let n = draws[0].len();
    let d = draws.len();
    let mut out = Summaries {
        mean: vec![0.0; n],
        q025: vec![0.0; n],
        q975: vec![0.0; n],
    };
    let mut col = vec![0.0; d];
    for j in 0..n {
        for (t, row) in draws.iter().enumerate() {
            col[t] = row[j];
        }
        out.mean[j] = mean(&col);
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.q025[j] = quantile_sorted(&col, 0.025);
        out.q975[j] = quantile_sorted(&col, 0.975);
    }
    out
}

/// Point-prediction and interval metrics.
#[derive(Debug, Clone, Copy, Default)]
pub struct Metrics {
    pub rmse: f64,
    pub mse: f64,
    pub coverage: f64,
    pub interval_length: f64,
}

/// RMSE/MSE of the posterior means against the truth plus 95%-interval
/// coverage and mean length.
pub fn metrics(summ: &Summaries, truth: &[f64]) -> Result<Metrics, EstimandError> {
    if summ.mean.len() != truth.len() {
        return Err(EstimandError::Length(format!(
            "{} predictions vs {} truths",
            summ.mean.len(),
            truth.len()
        )));
    }
    let n = truth.len() as f64;
    let mut se = 0.0;
    let mut cover = 0.0;
    let mut len = 0.0;
    for j in 0..truth.len() {
        let d = summ.mean[j] - truth[j];
        se += d * d;
        if truth[j] >= summ.q025[j] && truth[j] <= summ.q975[j] {
            cover += 1.0;
        }
        len += summ.q975[j] - summ.q025[j];
    }
    Ok(Metrics {
        rmse: (se / n).sqrt(),
        mse: se / n,
        coverage: cover / n,
        interval_length: len / n,
    })
}

/// Binary-prediction metrics for predicted probabilities.
#[derive(Debug, Clone, Copy, Default)]
pub struct BinaryMetrics {
    pub brier: f64,
    pub auc: f64,
    pub hit_rate: f64,
}

pub fn binary_metrics(prob: &[f64], truth: &[bool]) -> Result<BinaryMetrics, EstimandError> {
    if prob.len() != truth.len() {
        return Err(EstimandError::Length(format!(
            "{} probabilities vs {} labels",
            prob.len(),
            truth.len()
        )));
    }
    let n = truth.len() as f64;
    let mut brier = 0.0;
    let mut hits = 0.0;
    for (p, &t) in prob.iter().zip(truth) {
        let y = if t { 1.0 } else { 0.0 };
        brier += (p - y) * (p - y);
        if (*p >= 0.5) == t {
            hits += 1.0;
        }
    }
    // AUC as the rank statistic: P(score_pos > score_neg) + ties/2
    let mut pos: Vec<f64> = prob.iter().zip(truth).filter(|(_, &t)| t).map(|(p, _)| *p).collect();
    let mut neg: Vec<f64> =
        prob.iter().zip(truth).filter(|(_, &t)| !t).map(|(p, _)| *p).collect();
    let auc = if pos.is_empty() || neg.is_empty() {
        0.5
    } else {
        pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
        neg.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // merge-count pairs with pos > neg (ties half)
        let mut wins = 0.0;
        for p in &pos {
            let below = neg.partition_point(|v| v < p) as f64;
            let ties = neg.partition_point(|v| v <= p) as f64 - below;
            wins += below + 0.5 * ties;
        }
        wins / (pos.len() as f64 * neg.len() as f64)
    };
    Ok(BinaryMetrics { brier: brier / n, auc, hit_rate: hits / n })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

    #[test]
    fn observed_conditional_mean_values() {
        assert_eq!(observed_conditional_mean(2.0, 5.0, 0.0, 0.0, 0.3), 2.3);
        let v = observed_conditional_mean(0.0, 0.0, 1.0, 0.0, 0.0);
        assert!((v - SQRT_2_OVER_PI).abs() < 1e-12);
        // mu1 shifts the selection index
        let v = observed_conditional_mean(0.0, 0.0, 1.0, 3.0, 0.0);
        assert!((v - 4.437_839_042_125_664e-3).abs() < 1e-12);
    }

    #[test]
    fn latent_mean_is_additive() {
        assert_eq!(latent_mean(2.5, 0.0), 2.5);
        assert_eq!(latent_mean(2.5, -0.3), 2.2);
        // averaging commutes with the estimand (linearity)
        let f = [1.0, 2.0, 3.0];
        let per_draw: f64 = f.iter().map(|&v| latent_mean(v, 0.1)).sum::<f64>() / 3.0;
        assert!((per_draw - latent_mean(2.0, 0.1)).abs() < 1e-12);
    }

    #[test]
    fn selection_effect_values() {
        assert_eq!(selection_effect(0.7, 0.7, 0.2), 0.0);
        assert!((selection_effect(40.0, -40.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((selection_effect(1.0, 0.0, 0.0) - 0.341_344_746_068_543).abs() < 1e-12);
    }

    #[test]
    fn naive_bias_values() {
        assert_eq!(naive_selection_bias(1.0, 0.5, 0.0), 0.0);
        assert_eq!(naive_selection_bias(0.8, 0.8, 1.7), 0.0);
        // worked treatment-effect instance: f_z = 1.5 under treatment,
        // 0.5 under control
        let v = naive_selection_bias(1.5, 0.5, 1.0);
        assert!((v + 0.370_370_683_378_182_7).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn perfect_predictions_metrics() {
        let draws = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]];
        let mut s = summarize(&draws);
        // widen the degenerate intervals slightly so they contain truth
        s.q025 = vec![0.9, 1.9];
        s.q975 = vec![1.1, 2.1];
        let m = metrics(&s, &[1.0, 2.0]).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.coverage, 1.0);
        assert!(m.interval_length > 0.0);
    }

    #[test]
    fn constant_probability_brier_and_auc() {
        let prob = vec![0.5; 10];
        let truth: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let m = binary_metrics(&prob, &truth).unwrap();
        assert!((m.brier - 0.25).abs() < 1e-12);
        assert!((m.auc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn auc_matches_all_pairs_oracle() {
        let prob = [0.9, 0.8, 0.7, 0.55, 0.3, 0.1];
        let truth = [true, false, true, true, false, false];
        let m = binary_metrics(&prob, &truth).unwrap();
        // brute-force pair counting
        let mut wins = 0.0;
        let mut total = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                if truth[i] && !truth[j] {
                    total += 1.0;
                    if prob[i] > prob[j] {
                        wins += 1.0;
                    } else if prob[i] == prob[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        assert!((m.auc - wins / total).abs() < 1e-12);
        assert!(m.auc >= 0.0 && m.auc <= 1.0);
    }

    #[test]
    fn summaries_idempotent_and_ordered() {
        let mut rng = crate::rng::RngStream::new(181);
        let draws: Vec<Vec<f64>> =
            (0..500).map(|_| (0..7).map(|_| rng.standard_normal()).collect()).collect();
        let s = summarize(&draws);
        for j in 0..7 {
            assert!(s.q025[j] <= s.q975[j]);
        }
        // summaries of the summary rows reproduce themselves (quantiles of
        // a constant vector are that constant)
        let again = summarize(&[s.mean.clone()]);
        for j in 0..7 {
            assert_eq!(again.mean[j], s.mean[j]);
            assert_eq!(again.q025[j], s.mean[j]);
            assert_eq!(again.q975[j], s.mean[j]);
        }
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let s = summarize(&[vec![1.0, 2.0]]);
        assert!(metrics(&s, &[1.0]).is_err());
        assert!(binary_metrics(&[0.5], &[true, false]).is_err());
    }

    /// Estimand-level cancellation: when treatment enters the selection
    /// equation, the latent-outcome contrast computed from the model
    /// parameters carries no selection term; with truth plugged in, it
    /// equals the true conditional effect exactly.
    #[test]
    fn latent_contrast_free_of_selection_effect() {
        // true pieces on a grid of x3 values, with a strong selection shift
        let gamma = 0.9;
        for k in 0..20 {
            let x3 = -2.0 + 0.2 * k as f64;
            let cate = 0.25 * (x3 - 1.0) * (x3 - 1.0);
            let f_y_treat = 0.5 + cate;
            let f_y_ctrl = 0.5;
            let fz_treat = 1.5;
            let fz_ctrl = 0.5;
            // latent contrast from the latent-mean estimand
            let est = latent_mean(f_y_treat, 0.0) - latent_mean(f_y_ctrl, 0.0);
            assert!((est - cate).abs() <= 1e-15 * (1.0 + cate.abs()));
            // whereas the observed-conditional contrast absorbs the bias
            let naive = observed_conditional_mean(f_y_treat, fz_treat, gamma, 0.0, 0.0)
                - observed_conditional_mean(f_y_ctrl, fz_ctrl, gamma, 0.0, 0.0);
            let bias = naive_selection_bias(fz_treat, fz_ctrl, gamma);
            assert!((naive - cate - bias).abs() < 1e-12);
        }
    }
}
