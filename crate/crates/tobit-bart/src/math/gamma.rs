//! Gamma-family sampling and distribution functions.

use crate::rng::RngStream;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::{gamma_lr, gamma_ur};

/// Draw from Gamma(shape, scale) (mean = shape * scale).
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> f64 {
    assert!(shape > 0.0 && scale > 0.0);
    Gamma::new(shape, scale).expect("valid gamma parameters").sample(rng)
}

/// Draw from the inverse gamma distribution IG(shape, scale) with density
/// proportional to x^-(shape+1) exp(-scale/x); mean scale/(shape-1) for
/// shape > 1.
pub fn sample_inverse_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> f64 {
    assert!(shape > 0.0 && scale > 0.0);
    let g = sample_gamma(shape, 1.0 / scale, rng);
    1.0 / g.max(f64::MIN_POSITIVE)
}

/// Chi-square draw with (possibly non-integer) degrees of freedom.
pub fn sample_chi_square(df: f64, rng: &mut RngStream) -> f64 {
    sample_gamma(0.5 * df, 2.0, rng)
}

/// CDF of IG(shape, scale) at x.
pub fn inverse_gamma_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_ur(shape, scale / x)
}

/// Quantile of IG(shape, scale): bisection on the CDF.
pub fn inverse_gamma_quantile(p: f64, shape: f64, scale: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = scale.max(1.0);
    while inverse_gamma_cdf(hi, shape, scale) < p {
        hi *= 4.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if inverse_gamma_cdf(mid, shape, scale) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Quantile of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_quantile(p: f64, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let shape = 0.5 * df;
    let mut lo = 0.0_f64;
    let mut hi = df.max(1.0);
    while gamma_lr(shape, 0.5 * hi) < p {
        hi *= 4.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_lr(shape, 0.5 * mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-14 * hi.max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}
