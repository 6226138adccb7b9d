//! Small numerical helpers: running moments, stable log-sum-exp, binomial
//! coefficients and Wilson score intervals.

/// Streaming mean/variance accumulator (Welford's algorithm).
///
/// Two accumulators can be merged exactly, which keeps chunked parallel
/// reductions reproducible: chunks are processed sequentially inside and
/// merged in a fixed order, so the result does not depend on the number of
/// worker threads.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Merge `other` into `self` (Chan's parallel update).
    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n1 = self.n as f64;
        let n2 = other.n as f64;
        let n = n1 + n2;
        let delta = other.mean - self.mean;
        self.mean += delta * n2 / n;
        self.m2 += other.m2 + delta * delta * n1 * n2 / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 for fewer than two samples.
    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }

    pub fn sample_std(&self) -> f64 {
        self.sample_variance().sqrt()
    }

    /// Standard error of the mean: sample std / sqrt(n).
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sample_std() / (self.n as f64).sqrt()
        }
    }
}

/// log(sum(exp(x_i))) with the usual shift-by-max stabilization.
///
/// Returns -inf on an empty slice or when every entry is -inf.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Exact binomial coefficient, small arguments only (n <= 16 here).
pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Wilson score interval for a binomial proportion at the given z quantile
/// (z = 1.96 for a 95% interval).
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_stats_matches_direct_formulas() {
        let xs = [1.0, 4.0, -2.0, 7.5, 0.25, 3.0];
        let mut st = RunningStats::new();
        for &x in &xs {
            st.push(x);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((st.mean() - mean).abs() < 1e-12);
        assert!((st.sample_variance() - var).abs() < 1e-12);
        assert!((st.std_error() - var.sqrt() / n.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn merge_equals_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin() * 3.0 + 0.1).collect();
        let mut whole = RunningStats::new();
        for &x in &xs {
            whole.push(x);
        }
        // Merge in several uneven chunks.
        let mut merged = RunningStats::new();
        for chunk in xs.chunks(17) {
            let mut part = RunningStats::new();
            for &x in chunk {
                part.push(x);
            }
            merged.merge(&part);
        }
        assert_eq!(whole.count(), merged.count());
        assert!((whole.mean() - merged.mean()).abs() < 1e-12);
        assert!((whole.sample_variance() - merged.sample_variance()).abs() < 1e-12);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let mut a = RunningStats::new();
        a.push(2.0);
        a.push(3.0);
        let before = (a.count(), a.mean(), a.sample_variance());
        a.merge(&RunningStats::new());
        assert_eq!(before, (a.count(), a.mean(), a.sample_variance()));
    }

    #[test]
    fn log_sum_exp_matches_naive_and_survives_large_inputs() {
        let xs = [-1.0f64, -2.5, 0.75];
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-12);

        // Naive evaluation overflows here; the stable path must not.
        let big = [1000.0, 1002.0];
        let expected = 1002.0 + (1.0 + (-2.0f64).exp()).ln();
        assert!((log_sum_exp(&big) - expected).abs() < 1e-12);

        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        assert!((log_sum_exp(&[f64::NEG_INFINITY, 0.0]) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn binomial_small_table() {
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(16, 8), 12870);
        assert_eq!(binomial(4, 7), 0);
    }

    #[test]
    fn wilson_interval_sane() {
        let (lo, hi) = wilson_interval(95, 100, 1.96);
        assert!(lo < 0.95 && 0.95 < hi);
        assert!(lo > 0.87 && hi < 0.99);
        let (lo0, _) = wilson_interval(0, 50, 1.96);
        assert_eq!(lo0, 0.0);
        let (_, hi1) = wilson_interval(50, 50, 1.96);
        assert_eq!(hi1, 1.0);
    }
}
