//! Small statistics helpers shared by experiments and tests.

use crate::scalar::Scalar;

/// Streaming mean/variance accumulator (Welford).
#[derive(Debug, Clone, Copy)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Default for RunningStats {
    fn default() -> Self {
        RunningStats {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }
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

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n - 1 in the denominator).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.std_dev() / (self.n as f64).sqrt()
        }
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = (self.n + other.n) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / n;
        self.n += other.n;
    }
}

/// Ordinary least squares y = a + b*x. Returns (intercept, slope, r2).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a fit");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (intercept, slope, r2)
}

/// Log-log power-law fit: returns (exponent, r2). Inputs must be positive.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (_, slope, r2) = linear_fit(&lx, &ly);
    (slope, r2)
}

/// Empirical q-quantile of a sample (sorted copy; index ceil(q*n) - 1).
pub fn quantile<F: Scalar>(samples: &[F], q: f64) -> F {
    assert!(!samples.is_empty());
    assert!(q > 0.0 && q < 1.0);
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    let idx = ((q * v.len() as f64).ceil() as usize).max(1) - 1;
    v[idx.min(v.len() - 1)]
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
pub fn ks_statistic<F: Scalar>(a: &[F], b: &[F]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // advance both pointers past the smaller value (ties together)
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Half-width of the 95% normal-approximation binomial CI for p = k/n.
pub fn binomial_ci95(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let p = k as f64 / n as f64;
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Piecewise-linear interpolation of the level crossing y = target on a
/// curve sampled at (xs, ys); None when the curve never brackets it.
pub fn interpolate_crossing(xs: &[f64], ys: &[f64], target: f64) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    for w in 0..xs.len().saturating_sub(1) {
        let (y0, y1) = (ys[w], ys[w + 1]);
        if (y0 - target) * (y1 - target) <= 0.0 && y0 != y1 {
            let t = (target - y0) / (y1 - y0);
            return Some(xs[w] + t * (xs[w + 1] - xs[w]));
        }
        if y0 == target {
            return Some(xs[w]);
        }
    }
    if *ys.last().unwrap() == target {
        return Some(*xs.last().unwrap());
    }
    None
}
