//! Truncated-normal sampling.
//!
//! Inverse-CDF sampling in the body of the distribution; for regions lying
//! entirely beyond 5 standard deviations the inverse CDF loses accuracy, so
//! exponential rejection sampling (Robert 1995) is used there.

use super::normal::{normal_cdf, normal_inv_cdf, normal_pdf};
use super::Interval;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy)]
pub struct TruncatedDraw {
    pub value: f64,
    /// Set when the region was numerically degenerate and the midpoint was
    /// returned instead of a random draw.
    pub degenerate: bool,
}

const TAIL_CUTOFF: f64 = 5.0;

/// Draw from N(mu, sigma2) truncated to `region`.
pub fn sample_truncated_normal(
    mu: f64,
    sigma2: f64,
    region: Interval,
    rng: &mut RngStream,
) -> TruncatedDraw {
    assert!(sigma2 > 0.0, "sigma2 must be positive");
    let sigma = sigma2.sqrt();
    let a = (region.lower - mu) / sigma;
    let b = (region.upper - mu) / sigma;

    if b - a < 1e-12 {
        return TruncatedDraw {
            value: mu + 0.5 * (a + b) * sigma,
            degenerate: true,
        };
    }

    let z = if a > TAIL_CUTOFF {
        tail_rejection(a, b, rng)
    } else if b < -TAIL_CUTOFF {
        -tail_rejection(-b, -a, rng)
    } else {
        inverse_cdf_body(a, b, rng)
    };
    // clamp guards against round-off at the region edge
    let value = (mu + sigma * z.clamp(a, b)).clamp(region.lower, region.upper);
    TruncatedDraw {
        value,
        degenerate: false,
    }
}

fn inverse_cdf_body(a: f64, b: f64, rng: &mut RngStream) -> f64 {
    // Work on the side where the CDF is far from 1 to preserve resolution.
    if a > 0.0 {
        return -inverse_cdf_body(-b, -a, rng);
    }
    let pa = normal_cdf(a);
    let pb = normal_cdf(b);
    let u = rng.uniform();
    let p = pa + u * (pb - pa);
    if p <= 0.0 {
        return a;
    }
    if p >= 1.0 {
        return b;
    }
    normal_inv_cdf(p)
}

/// Robert-style exponential rejection on [a, b], both bounds in the upper
/// tail (a > 0). Falls back to the lower bound if the region is so extreme
/// that no proposal lands inside (probability ~0 for sane inputs).
fn tail_rejection(a: f64, b: f64, rng: &mut RngStream) -> f64 {
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    for _ in 0..10_000 {
        let e = -rng.uniform().ln();
        let z = a + e / alpha;
        if z > b {
            continue;
        }
        let log_accept = -0.5 * (z - alpha) * (z - alpha);
        if rng.uniform().ln() <= log_accept {
            return z;
        }
    }
    a
}

/// CDF of N(mu, sigma2) truncated to `region`, evaluated at x.
pub fn truncated_normal_cdf(x: f64, mu: f64, sigma2: f64, region: Interval) -> f64 {
    let sigma = sigma2.sqrt();
    if x <= region.lower {
        return 0.0;
    }
    if x >= region.upper {
        return 1.0;
    }
    let pa = normal_cdf((region.lower - mu) / sigma);
    let pb = normal_cdf((region.upper - mu) / sigma);
    (normal_cdf((x - mu) / sigma) - pa) / (pb - pa)
}

/// Analytic mean of N(mu, sigma2) truncated to `region`.
pub fn truncated_normal_mean(mu: f64, sigma2: f64, region: Interval) -> f64 {
    let sigma = sigma2.sqrt();
    let a = (region.lower - mu) / sigma;
    let b = (region.upper - mu) / sigma;
    let pa = if a.is_finite() { normal_cdf(a) } else { 0.0 };
    let pb = if b.is_finite() { normal_cdf(b) } else { 1.0 };
    let da = if a.is_finite() { normal_pdf(a) } else { 0.0 };
    let db = if b.is_finite() { normal_pdf(b) } else { 0.0 };
    mu + sigma * (da - db) / (pb - pa)
}
