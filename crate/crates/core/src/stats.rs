//! Streaming moments, binomial intervals and a two-sample KS test.

use serde::{Deserialize, Serialize};

/// 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// One-pass central moments up to order four, mergeable in any tree shape.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let t1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += t1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += t1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += t1;
    }

    pub fn merge(&self, other: &MomentAccumulator) -> MomentAccumulator {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let d = other.mean - self.mean;
        let d2 = d * d;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d2 * d * na * nb * (na - nb) / (n * n)
            + 3.0 * d * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * other.m3 - nb * self.m3) / n;
        MomentAccumulator { count: self.count + other.count, mean: self.mean + d * nb / n, m2, m3, m4 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.m2 / (self.count - 1) as f64).max(0.0)
    }

    pub fn stderr_mean(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    /// Standard error of [`variance`](Self::variance) from the fourth central moment.
    pub fn stderr_variance(&self) -> f64 {
        if self.count < 4 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let s2 = self.variance();
        let mu4 = self.m4 / n;
        ((mu4 - (n - 3.0) / (n - 1.0) * s2 * s2) / n).max(0.0).sqrt()
    }
}

/// Folds accumulators left to right as a balanced binary tree, so the result
/// depends only on their order.
pub fn merge_tree(parts: &[MomentAccumulator]) -> MomentAccumulator {
    match parts.len() {
        0 => MomentAccumulator::new(),
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            merge_tree(l).merge(&merge_tree(r))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr_mean: f64,
    pub stderr_variance: f64,
    pub samples: u64,
    pub seed: u64,
    pub streams: u64,
}

impl MCEstimate {
    pub fn from_accumulator(acc: &MomentAccumulator, seed: u64, streams: u64) -> Self {
        MCEstimate {
            mean: acc.mean,
            variance: acc.variance(),
            stderr_mean: acc.stderr_mean(),
            stderr_variance: acc.stderr_variance(),
            samples: acc.count,
            seed,
            streams,
        }
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionEstimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl ProportionEstimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (wilson_lo, wilson_hi) = wilson_interval(successes, trials, Z_95);
        let estimate = if trials == 0 { f64::NAN } else { successes as f64 / trials as f64 };
        ProportionEstimate { successes, trials, estimate, wilson_lo, wilson_hi }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value of the two-sample statistic.
pub fn ks_critical_1pct(na: usize, nb: usize) -> f64 {
    let (n, m) = (na as f64, nb as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}
