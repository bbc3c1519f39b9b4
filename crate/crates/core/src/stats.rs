//! Statistical helpers for the experiment harnesses: sample moments, a
//! one-sample Kolmogorov-Smirnov test against the standard normal, and
//! chi-square goodness-of-fit machinery.
//!
//! The KS p-value uses the asymptotic Kolmogorov series with the usual
//! finite-n correction (sqrt(n) + 0.12 + 0.11/sqrt(n)); chi-square tail
//! probabilities and quantiles come from statrs.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },
    #[error("observed and expected lengths differ: {observed} vs {expected}")]
    MismatchedLengths { observed: usize, expected: usize },
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("confidence must lie strictly between 0 and 1, got {0}")]
    InvalidConfidence(f64),
    #[error("variance must be positive, got {0}")]
    InvalidVariance(f64),
}

/// Sample mean, unbiased variance, and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
}

/// Computes [`Moments`] from at least two values.
pub fn empirical_moments(values: &[f64]) -> Result<Moments, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::NotEnoughSamples {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let variance = ss / (n - 1.0);
    Ok(Moments {
        n: values.len(),
        mean,
        variance,
        se: (variance / n).sqrt(),
    })
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Complement of the asymptotic Kolmogorov distribution:
/// Q(x) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 x^2).
pub fn complement_ks_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let a = -2.0 * x * x;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (a * (j * j) as f64).exp();
        sum += sign * term;
        if term <= 1e-12 * sum.abs() + 1e-300 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample KS test of `samples` against the standard normal.
pub fn ks_test_standard_normal(samples: &[f64]) -> Result<KsTest, StatsError> {
    if samples.len() < 8 {
        // The asymptotic p-value is meaningless for tiny samples.
        return Err(StatsError::NotEnoughSamples {
            needed: 8,
            got: samples.len(),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = standard_normal_cdf(x);
        let above = (i + 1) as f64 / n - cdf;
        let below = cdf - i as f64 / n;
        d = d.max(above).max(below);
    }
    let en = n.sqrt();
    let p_value = complement_ks_cdf((en + 0.12 + 0.11 / en) * d);
    Ok(KsTest {
        statistic: d,
        p_value,
        n: sorted.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
}

/// Chi-square goodness of fit of observed counts against expected category
/// probabilities (which must be positive and sum to 1).
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareTest, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::MismatchedLengths {
            observed: observed.len(),
            expected: expected.len(),
        });
    }
    if observed.len() < 2 {
        return Err(StatsError::NotEnoughSamples {
            needed: 2,
            got: observed.len(),
        });
    }
    if expected.iter().any(|&p| p.is_nan() || p <= 0.0) {
        return Err(StatsError::InvalidProbabilities(
            "every expected probability must be positive".into(),
        ));
    }
    let total_p: f64 = expected.iter().sum();
    if (total_p - 1.0).abs() > 1e-9 {
        return Err(StatsError::InvalidProbabilities(format!(
            "expected probabilities sum to {total_p}, not 1"
        )));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(StatsError::NotEnoughSamples { needed: 1, got: 0 });
    }
    let n = total as f64;
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = n * p;
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    let df = (observed.len() - 1) as u64;
    let dist = ChiSquared::new(df as f64).expect("df >= 1");
    Ok(ChiSquareTest {
        statistic,
        df,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// Two-sided confidence band for the sample variance of n draws whose true
/// variance is sigma2, from the chi-square distribution with n - 1 degrees
/// of freedom. Returns (low, high).
pub fn variance_band(n: usize, sigma2: f64, confidence: f64) -> Result<(f64, f64), StatsError> {
    if n < 2 {
        return Err(StatsError::NotEnoughSamples { needed: 2, got: n });
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(StatsError::InvalidConfidence(confidence));
    }
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(StatsError::InvalidVariance(sigma2));
    }
    let df = (n - 1) as f64;
    let dist = ChiSquared::new(df).expect("df >= 1");
    let alpha = 1.0 - confidence;
    let low = dist.inverse_cdf(alpha / 2.0) * sigma2 / df;
    let high = dist.inverse_cdf(1.0 - alpha / 2.0) * sigma2 / df;
    Ok((low, high))
}
