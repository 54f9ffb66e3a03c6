//! Statistical helpers for the experiments and the acceptance checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub use rcdyn::shattering::{linear_fit, log_linear_fit, LogLinearFit};

/// `H_m = 1 + 1/2 + … + 1/m`.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).map(|k| 1.0 / k as f64).sum()
}

/// `P(T ≤ t)` for `t = 0, 1, …` where `T` is the time to see all `m`
/// coupons drawn uniformly with replacement. Computed by dynamic
/// programming over the number of coupons seen, up to the first `t` whose
/// CDF exceeds `1 − tail`.
pub fn coupon_cdf(m: usize, tail: f64) -> Vec<f64> {
    let mut dist = vec![0.0; m + 1];
    dist[0] = 1.0;
    let mut cdf = vec![if m == 0 { 1.0 } else { 0.0 }];
    while *cdf.last().expect("nonempty") < 1.0 - tail {
        let mut next = vec![0.0; m + 1];
        for (k, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            if k == m {
                next[m] += w;
                continue;
            }
            let new = (m - k) as f64 / m as f64;
            next[k + 1] += w * new;
            next[k] += w * (1.0 - new);
        }
        dist = next;
        cdf.push(dist[m]);
    }
    cdf
}

/// Mean of the coupon-collector time, `m H_m`.
pub fn coupon_mean(m: usize) -> f64 {
    m as f64 * harmonic(m)
}

/// Kolmogorov–Smirnov distance between the empirical law of integer
/// `samples` and a CDF given on `0, 1, …` (1 beyond its end).
pub fn ks_statistic(samples: &[u64], cdf: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let at = |t: u64| cdf.get(t as usize).copied().unwrap_or(1.0);
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i];
        let below = i as f64 / n;
        while i < sorted.len() && sorted[i] == t {
            i += 1;
        }
        let upto = i as f64 / n;
        let prev = if t == 0 { 0.0 } else { at(t - 1) };
        d = d.max((upto - at(t)).abs()).max((below - prev).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value for distance `d` on `n` samples, with the
/// Stephens small-sample correction. Conservative for discrete laws.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Pearson chi-square p-value of observed counts against expected counts.
pub fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (observed.len().max(2) - 1) as f64;
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat)
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_means(series: &[f64], batches: usize) -> (f64, f64) {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n.max(1) as f64;
    let b = batches.min(n).max(2);
    let size = n / b;
    if size == 0 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = (0..b).map(|i| series[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let bm = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Running batch-means accumulator for long series that are not stored.
#[derive(Clone, Debug)]
pub struct BatchAccumulator {
    batch_len: u64,
    current: f64,
    filled: u64,
    means: Vec<f64>,
}

impl BatchAccumulator {
    pub fn new(batch_len: u64) -> Self {
        BatchAccumulator { batch_len: batch_len.max(1), current: 0.0, filled: 0, means: Vec::new() }
    }

    pub fn push(&mut self, x: f64) {
        self.current += x;
        self.filled += 1;
        if self.filled == self.batch_len {
            self.means.push(self.current / self.batch_len as f64);
            self.current = 0.0;
            self.filled = 0;
        }
    }

    /// Mean and standard error over completed batches.
    pub fn estimate(&self) -> (f64, f64) {
        let b = self.means.len();
        if b == 0 {
            return (f64::NAN, f64::NAN);
        }
        let mean = self.means.iter().sum::<f64>() / b as f64;
        if b < 2 {
            return (mean, f64::NAN);
        }
        let var = self.means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        (mean, (var / b as f64).sqrt())
    }
}
