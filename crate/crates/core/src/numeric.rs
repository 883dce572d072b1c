//! Small numerical building blocks: compensated summation, running
//! moments and log-space weight normalization.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        acc.extend(iter);
        acc
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().total()
}

/// Welford running mean and variance.
///
/// A constant input stream yields a variance of exactly zero, which the
/// metrics rely on for data-independent rules.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; `None` with fewer than two observations.
    pub fn sample_variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }

    /// Standard error of the mean, `sd / sqrt(count)`.
    pub fn standard_error(&self) -> Option<f64> {
        self.sample_variance()
            .map(|v| (v / self.count as f64).sqrt())
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut stats = RunningStats::new();
        for v in iter {
            stats.push(v);
        }
        stats
    }
}

/// Accumulates `Σ exp(logw_i) · value_i / Σ exp(logw_i)` without
/// materializing the weights, in two passes over a re-iterable source.
///
/// Returns `None` when every log-weight is `-inf` or the normalizer
/// underflows.
pub fn log_weighted_mean<I, F>(source: F) -> Option<f64>
where
    F: Fn() -> I,
    I: Iterator<Item = (f64, f64)>,
{
    let max = source()
        .map(|(lw, _)| lw)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut norm = CompensatedSum::new();
    let mut acc = CompensatedSum::new();
    for (lw, value) in source() {
        let w = (lw - max).exp();
        if w > 0.0 {
            norm.add(w);
            acc.add(w * value);
        }
    }
    let norm = norm.total();
    (norm > 0.0).then(|| acc.total() / norm)
}

/// Multi-output variant of [`log_weighted_mean`]: every item carries a
/// log-weight and `N` values, and the weighted mean of each is returned.
pub fn log_weighted_means<const N: usize, I, F>(source: F) -> Option<[f64; N]>
where
    F: Fn() -> I,
    I: Iterator<Item = (f64, [f64; N])>,
{
    let max = source()
        .map(|(lw, _)| lw)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut norm = CompensatedSum::new();
    let mut acc = [CompensatedSum::new(); N];
    for (lw, values) in source() {
        let w = (lw - max).exp();
        if w > 0.0 {
            norm.add(w);
            for (a, v) in acc.iter_mut().zip(values) {
                a.add(w * v);
            }
        }
    }
    let norm = norm.total();
    (norm > 0.0).then(|| acc.map(|a| a.total() / norm))
}
