//! Small statistical helpers shared across the laboratory.
//!
//! Ensemble averages use Neumaier compensated summation in a fixed index
//! order so that results do not depend on thread count.

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice in index order.
pub fn csum(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Sample mean and standard error of the mean.
///
/// Returns `(mean, se)`; `se` is 0 for fewer than two samples.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = csum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let mut dev = CompensatedSum::new();
    for &v in values {
        let d = v - mean;
        dev.add(d * d);
    }
    let var = dev.value() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i].min(ys[j]);
        while i < n && xs[i] <= x {
            i += 1;
        }
        while j < m && ys[j] <= x {
            j += 1;
        }
        let fa = i as f64 / n as f64;
        let fb = j as f64 / m as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * (((n + m) as f64) / (n as f64 * m as f64)).sqrt()
}

/// Wilson score interval for a binomial proportion at z standard deviations.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compensated_sum_beats_naive() {
        // 1 + 1e16 - 1e16 collapses to 0 naively when summed in a bad order.
        let vals = [1.0, 1e16, -1e16];
        assert_eq!(csum(&vals), 1.0);
    }

    #[test]
    fn mean_se_of_constant() {
        let (m, se) = mean_se(&[2.0; 50]);
        assert_relative_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn ks_identical_samples_is_zero() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(ks_statistic(&xs, &xs), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_is_one() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..50).map(|i| 1000.0 + i as f64).collect();
        assert_eq!(ks_statistic(&xs, &ys), 1.0);
    }

    #[test]
    fn ks_critical_matches_tabulated() {
        // c(0.01) = 1.6276 for the asymptotic two-sample form.
        let crit = ks_critical(0.01, 10_000, 10_000);
        assert_relative_eq!(crit, 1.6276 * (2.0f64 / 10_000.0).sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn wilson_contains_proportion() {
        let (lo, hi) = wilson_interval(30, 100, 2.0);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!(lo > 0.2 && hi < 0.42);
    }
}
