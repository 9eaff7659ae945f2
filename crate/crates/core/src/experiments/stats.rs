//! Descriptive statistics, least squares, Kolmogorov–Smirnov distances and
//! Wilson intervals.

use serde::Serialize;

use crate::error::{Error, Result};

/// Asymptotic 5% two-sided Kolmogorov critical constant.
pub const KS_CRITICAL: f64 = 1.358;
/// Inflation applied to [`KS_CRITICAL`] to absorb finite-size bias of the limit law.
pub const KS_SAFETY: f64 = 1.4;
/// Smallest sample accepted by the KS routines.
pub const KS_MIN_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub m: usize,
    pub mean: f64,
    /// Unbiased (`m - 1`) variance.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub min: f64,
    pub max: f64,
    pub sem: f64,
}

pub fn summarize(samples: &[f64]) -> Result<SummaryStats> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: m });
    }
    let n = m as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / (n - 1.0);
    // moment ratios use the population central moments
    let (c2, c3, c4) = (m2 / n, m3 / n, m4 / n);
    let (skewness, excess_kurtosis) = if c2 > 0.0 {
        (c3 / c2.powf(1.5), c4 / (c2 * c2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(SummaryStats {
        m,
        mean,
        variance,
        skewness,
        excess_kurtosis,
        min: samples.iter().copied().fold(f64::INFINITY, f64::min),
        max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        sem: (variance / n).sqrt(),
    })
}

pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeReport {
    /// `(log x, log y)` per size.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::Degenerate("x and y lengths differ".into()));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite regression input".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("all x values equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((slope, intercept, r2))
}

/// Log–log fit of `ys` against `xs`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<SlopeReport> {
    if ys.iter().chain(xs).any(|v| *v <= 0.0) {
        return Err(Error::Degenerate("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (slope, intercept, r2) = ols_slope(&lx, &ly)?;
    Ok(SlopeReport {
        points: lx.into_iter().zip(ly).collect(),
        slope,
        intercept,
        r2,
    })
}

/// Standard normal CDF, Abramowitz & Stegun 26.2.17 (absolute error below 7.5e-8).
pub fn normal_cdf(x: f64) -> f64 {
    const P: f64 = 0.231_641_9;
    const B: [f64; 5] = [0.319_381_530, -0.356_563_782, 1.781_477_937, -1.821_255_978, 1.330_274_429];
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x.abs();
    let k = 1.0 / (1.0 + P * z);
    let poly = k * (B[0] + k * (B[1] + k * (B[2] + k * (B[3] + k * B[4]))));
    let tail = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() * poly;
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub m: usize,
    pub threshold: f64,
    pub safety_factor: f64,
    pub pass: bool,
}

fn ks_report(statistic: f64, m: usize, effective: f64) -> KsReport {
    let threshold = KS_SAFETY * KS_CRITICAL / effective.sqrt();
    KsReport {
        statistic,
        m,
        threshold,
        safety_factor: KS_SAFETY,
        pass: statistic < threshold,
    }
}

/// Distance between the empirical CDF of the standardized sample and `N(0, 1)`.
pub fn ks_one_sample_normal(samples: &[f64]) -> Result<KsReport> {
    let m = samples.len();
    if m < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: KS_MIN_SAMPLES,
            got: m,
        });
    }
    let st = summarize(samples)?;
    let sd = st.variance.sqrt();
    if sd <= 0.0 {
        return Err(Error::Degenerate("sample has zero variance".into()));
    }
    let mut z: Vec<f64> = samples.iter().map(|x| (x - st.mean) / sd).collect();
    z.sort_unstable_by(f64::total_cmp);
    let n = m as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < m {
        // ties share one jump of the empirical CDF
        let mut j = i;
        while j + 1 < m && z[j + 1] == z[i] {
            j += 1;
        }
        let f = normal_cdf(z[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    Ok(ks_report(d, m, n))
}

/// Distance between two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                needed: KS_MIN_SAMPLES,
                got: s.len(),
            });
        }
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    y.sort_unstable_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let effective = n * m / (n + m);
    Ok(ks_report(d, x.len().min(y.len()), effective))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbReport {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl ProbReport {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (wilson_lo, wilson_hi) = wilson_ci(successes, trials, 1.96);
        Self {
            successes,
            trials,
            p_hat: if trials > 0 {
                successes as f64 / trials as f64
            } else {
                f64::NAN
            },
            wilson_lo,
            wilson_hi,
        }
    }
}

/// Wilson score interval.
pub fn wilson_ci(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Phi(x) = 1/2 + phi(x) * sum x^(2n+1) / (2n+1)!!, all terms positive
    fn phi_series(x: f64) -> f64 {
        let (mut term, mut sum, mut k) = (x, x, 1.0);
        while term.abs() > 1e-18 * sum.abs().max(1e-300) {
            k += 2.0;
            term *= x * x / k;
            sum += term;
        }
        0.5 + (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt() * sum
    }

    fn phi_inverse(p: f64) -> f64 {
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_series(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.variance), (1.0, 0.0));
        let s = summarize(&[0.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.variance), (1.0, 2.0));
        let s = summarize(&[-3.0, -1.0, 0.0, 1.0, 3.0]).unwrap();
        assert!(s.skewness.abs() < 1e-12);
        assert!(matches!(summarize(&[1.0]), Err(Error::TooFewSamples { .. })));
        assert_eq!((s.min, s.max), (-3.0, 3.0));
    }

    #[test]
    fn ols_examples() {
        let (b, a, r2) = ols_slope(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((b - 2.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        let (b, _, _) = ols_slope(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(b, 0.0);
        assert!(ols_slope(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(ols_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ols_recovers_noisy_line() {
        use rand::Rng;
        use rand_distr::{Distribution, Normal as RNormal};
        let mut rng = crate::sampling::SeedSpec::new(1, 1).rng();
        let noise = RNormal::new(0.0, 0.5).unwrap();
        let xs: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..10.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 * x - 2.0 + noise.sample(&mut rng)).collect();
        let (b, a, _) = ols_slope(&xs, &ys).unwrap();
        // standard error of the slope is sigma / sqrt(Sxx), about 0.012 here
        let mx = xs.iter().sum::<f64>() / 200.0;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let se = 0.5 / sxx.sqrt();
        assert!((b - 1.5).abs() < 4.0 * se, "slope {b}");
        assert!((a + 2.0).abs() < 0.5);
    }

    #[test]
    fn normal_cdf_accuracy() {
        for i in -800..=800 {
            let x = i as f64 / 100.0;
            assert!((normal_cdf(x) - phi_series(x)).abs() < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn ks_examples() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);

        let m = 500;
        let q: Vec<f64> = (1..=m).map(|i| phi_inverse((i as f64 - 0.5) / m as f64)).collect();
        let r = ks_one_sample_normal(&q).unwrap();
        assert!(r.statistic <= 1.0 / m as f64 + 1e-6, "{}", r.statistic);

        let m = 1000;
        let base: Vec<f64> = (1..=m).map(|i| phi_inverse((i as f64 - 0.5) / m as f64)).collect();
        let shifted: Vec<f64> = base.iter().map(|x| x + 3.0).collect();
        // sup |Phi(x) - Phi(x - 3)| = 2 * Phi(1.5) - 1
        let gap = 2.0 * phi_series(1.5) - 1.0;
        let d = ks_two_sample(&base, &shifted).unwrap().statistic;
        assert!((d - gap).abs() < 2.0 / m as f64, "{d} vs {gap}");

        assert!(ks_one_sample_normal(&q[..10]).is_err());
    }

    #[test]
    fn wilson_examples() {
        assert_eq!(wilson_ci(0, 40, 1.96).0, 0.0);
        assert_eq!(wilson_ci(40, 40, 1.96).1, 1.0);
        let (lo, hi) = wilson_ci(50, 100, 1.96);
        // closed form: 0.5 ± 1.96 * sqrt(0.0025 + 0.96^2/4e4) / 1.038416
        assert!((lo - 0.403_831).abs() < 1e-5 && (hi - 0.596_169).abs() < 1e-5, "{lo} {hi}");
        let (lo, hi) = wilson_ci(3, 7, 1.96);
        assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo < hi);
    }

    #[test]
    fn median_works() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
