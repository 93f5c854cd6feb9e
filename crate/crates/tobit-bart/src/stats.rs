//! Small statistical utilities: quantiles, descriptive moments, and the
//! two-sample tests used by the sampler-equivalence checks.

/// Type-7 (linear interpolation) quantile of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Type-7 quantile of an unsorted slice.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_sorted(&v, p)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Kolmogorov-Smirnov statistic of a sorted sample against a CDF.
pub fn ks_statistic_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample energy statistic for d-dimensional points stored row-wise.
pub fn energy_statistic(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn dist(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
    }
    let (n, m) = (a.len(), b.len());
    let mut dab = 0.0;
    for x in a {
        for y in b {
            dab += dist(x, y);
        }
    }
    dab /= (n * m) as f64;
    let mut daa = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            daa += dist(&a[i], &a[j]);
        }
    }
    daa *= 2.0 / (n * n) as f64;
    let mut dbb = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            dbb += dist(&b[i], &b[j]);
        }
    }
    dbb *= 2.0 / (m * m) as f64;
    2.0 * dab - daa - dbb
}

/// Permutation p-value for the two-sample energy test.
pub fn energy_test_pvalue(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    n_perm: usize,
    rng: &mut crate::rng::RngStream,
) -> f64 {
    let observed = energy_statistic(a, b);
    let mut pool: Vec<&Vec<f64>> = a.iter().chain(b.iter()).collect();
    let na = a.len();
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        // Fisher-Yates shuffle
        for i in (1..pool.len()).rev() {
            let j = rng.below(i + 1);
            pool.swap(i, j);
        }
        let pa: Vec<Vec<f64>> = pool[..na].iter().map(|v| (*v).clone()).collect();
        let pb: Vec<Vec<f64>> = pool[na..].iter().map(|v| (*v).clone()).collect();
        if energy_statistic(&pa, &pb) >= observed {
            exceed += 1;
        }
    }
    (exceed + 1) as f64 / (n_perm + 1) as f64
}
