//! Small statistical helpers shared by the estimators and the tests.

use crate::count_engine::ln_factorial;

/// Mean and sample standard deviation (`n - 1` denominator).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Linearly interpolated quantile of sorted data, `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Exact two-sided binomial test of `successes` out of `n` against p = 1/2.
pub fn binomial_test_half(successes: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let ln_pmf = |k: usize| {
        ln_factorial(n as f64) - ln_factorial(k as f64) - ln_factorial((n - k) as f64)
            - n as f64 * std::f64::consts::LN_2
    };
    let k = successes.min(n - successes);
    let tail: f64 = (0..=k).map(|j| ln_pmf(j).exp()).sum();
    (2.0 * tail).min(1.0)
}

/// Weighted least-squares line `y = a + b x`; returns `(b, se(b))`.
/// `sigma` are the standard errors of `y`.
pub fn weighted_slope(x: &[f64], y: &[f64], sigma: &[f64]) -> (f64, f64) {
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    ((sw * sxy - sx * sy) / det, (sw / det).sqrt())
}
