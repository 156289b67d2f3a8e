//! Small statistics toolkit for the Monte Carlo estimators and their tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

/// Running mean and variance (Welford), mergeable in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn merged<'a>(parts: impl IntoIterator<Item = &'a Self>) -> Self {
        let mut acc = Self::new();
        for p in parts {
            acc.merge(p);
        }
        acc
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

pub fn poisson_pmf(k: usize, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

/// `P(N ≥ n)` for `N ~ Poisson(lambda)`, summed directly over the tail.
pub fn poisson_tail_geq(n: usize, lambda: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if (n as f64) < lambda {
        let below: f64 = (0..n).map(|k| poisson_pmf(k, lambda)).sum();
        return (1.0 - below).max(0.0);
    }
    let mut total = 0.0;
    let mut k = n;
    loop {
        let term = poisson_pmf(k, lambda);
        total += term;
        if term < total * 1e-17 || term == 0.0 {
            break;
        }
        k += 1;
    }
    total
}

/// Regularized upper incomplete gamma `Γ(a, x)/Γ(a)` at integer `a ≥ 1`, which is `P(N < a)`
/// for `N ~ Poisson(x)`.
pub fn regularized_upper_gamma_int(a: usize, x: f64) -> f64 {
    assert!(a >= 1, "shape must be positive");
    (0..a).map(|k| poisson_pmf(k, x)).sum::<f64>().min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

fn chi_square_p(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    (1.0 - dist.cdf(statistic)).clamp(0.0, 1.0)
}

/// Merge consecutive categories until each bin reaches `min_weight`; a short final bin is
/// folded into its predecessor. Returns bin boundaries as index ranges.
fn pool_bins(weights: &[f64], min_weight: f64) -> Vec<(usize, usize)> {
    let mut bins = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc >= min_weight {
            bins.push((start, i + 1));
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < weights.len() {
        match bins.last_mut() {
            Some(last) => last.1 = weights.len(),
            None => bins.push((start, weights.len())),
        }
    }
    bins
}

/// Pearson goodness of fit of `observed[k]` against probabilities `probs[k]`.
///
/// The last category should carry the whole remaining tail mass. Categories are pooled so that
/// every bin has expected count at least 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|p| p * total as f64).collect();
    let bins = pool_bins(&expected, 5.0);
    let statistic = bins
        .iter()
        .map(|&(a, b)| {
            let o: u64 = observed[a..b].iter().sum();
            let e: f64 = expected[a..b].iter().sum();
            let d = o as f64 - e;
            if e > 0.0 {
                d * d / e
            } else if o == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .sum();
    let df = bins.len().saturating_sub(1);
    ChiSquareTest { statistic, df, p_value: chi_square_p(statistic, df) }
}

/// Two-sample chi-square test of homogeneity for categorical counts.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> ChiSquareTest {
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0);
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let n = na + nb;
    if na == 0.0 || nb == 0.0 {
        return ChiSquareTest { statistic: 0.0, df: 0, p_value: 1.0 };
    }
    let pooled: Vec<f64> = (0..len).map(|i| (get(a, i) + get(b, i)) as f64).collect();
    // expected count in the smaller sample at least 5
    let min_pooled = 5.0 * n / na.min(nb);
    let bins = pool_bins(&pooled, min_pooled);
    let mut statistic = 0.0;
    for &(lo, hi) in &bins {
        let oa: f64 = (lo..hi).map(|i| get(a, i) as f64).sum();
        let ob: f64 = (lo..hi).map(|i| get(b, i) as f64).sum();
        let col = oa + ob;
        for (o, row) in [(oa, na), (ob, nb)] {
            let e = row * col / n;
            if e > 0.0 {
                statistic += (o - e) * (o - e) / e;
            }
        }
    }
    let df = bins.len().saturating_sub(1);
    ChiSquareTest { statistic, df, p_value: chi_square_p(statistic, df) }
}

/// Asymptotic Kolmogorov survival function with the small-sample correction of Stephens.
fn kolmogorov_p(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against the uniform law on `[lo, hi]`.
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> KsTest {
    let mut xs: Vec<f64> = samples.iter().map(|x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max);
    KsTest { statistic, p_value: kolmogorov_p(statistic, n) }
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
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
    KsTest { statistic: d, p_value: kolmogorov_p(d, na * nb / (na + nb)) }
}

/// Unweighted least-squares line `y ≈ intercept + slope·x`, with the intercept's standard error
/// propagated from per-point standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_stderr: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64], y_stderr: &[f64]) -> LinearFit {
    assert!(xs.len() == ys.len() && xs.len() == y_stderr.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // intercept = Σ w_i y_i with w_i = 1/n - mx (x_i - mx)/sxx
    let var: f64 = xs
        .iter()
        .zip(y_stderr)
        .map(|(x, s)| {
            let w = 1.0 / n - mx * (x - mx) / sxx;
            w * w * s * s
        })
        .sum();
    LinearFit { intercept, slope, intercept_stderr: var.sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut whole = MeanAccumulator::new();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = MeanAccumulator::new();
        let mut b = MeanAccumulator::new();
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean() - whole.mean()).abs() < 1e-14);
        assert!((a.variance() - whole.variance()).abs() < 1e-13);
    }

    #[test]
    fn poisson_tails() {
        let lambda = 2.0;
        let direct: f64 = (0..10).map(|k| poisson_pmf(k, lambda)).sum();
        assert!((poisson_tail_geq(10, lambda) - (1.0 - direct)).abs() < 1e-15);
        assert_eq!(poisson_tail_geq(0, lambda), 1.0);
        assert!((poisson_tail_geq(1, lambda) - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        // Γ(1, x)/0! = e^{-x}
        assert!((regularized_upper_gamma_int(1, 1.5) - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn chi_square_exact_fit_has_unit_p() {
        let t = chi_square_gof(&[25, 25, 25, 25], &[0.25; 4]);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.df, 3);
        assert!((t.p_value - 1.0).abs() < 1e-12);
        let bad = chi_square_gof(&[100, 0, 0, 0], &[0.25; 4]);
        assert!(bad.p_value < 1e-10);
    }

    #[test]
    fn homogeneity_detects_shift() {
        let same = chi_square_homogeneity(&[50, 30, 20], &[50, 30, 20]);
        assert!(same.p_value > 0.99);
        let diff = chi_square_homogeneity(&[80, 15, 5], &[20, 30, 50]);
        assert!(diff.p_value < 1e-6);
    }

    #[test]
    fn ks_on_grid() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_uniform(&xs, 0.0, 1.0).p_value > 0.99);
        let squashed: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(ks_uniform(&squashed, 0.0, 1.0).p_value < 1e-6);
        assert!(ks_two_sample(&xs, &xs).p_value > 0.99);
    }

    #[test]
    fn linear_fit_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 + 2.0 * x).collect();
        let fit = linear_fit(&xs, &ys, &[0.1; 4]);
        assert!((fit.intercept - 0.5).abs() < 1e-12);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.intercept_stderr > 0.0);
    }
}
