//! Goodness-of-fit statistics used by the verification harness.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::jump_chain::ShapeDistribution;

/// Tolerance on total mass when a distribution must be normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Asymptotic Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF, with the
/// Stephens small-sample correction of the asymptotic p-value.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let n = samples.len();
    if n == 0 {
        return TestResult { statistic: 0.0, p_value: 1.0, n };
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d = 0.0f64;
    for (k, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - k as f64 / nf).max((k + 1) as f64 / nf - f);
    }
    let sq = nf.sqrt();
    TestResult { statistic: d, p_value: kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d), n }
}

/// KS test against Uniform(0, 1).
pub fn ks_uniform(samples: &[f64]) -> TestResult {
    ks_test(samples, |x| x.clamp(0.0, 1.0))
}

/// KS test against Exponential(rate).
pub fn ks_exponential(samples: &[f64], rate: f64) -> TestResult {
    ks_test(samples, |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() })
}

/// Pearson chi-square test of equiprobable categories.
pub fn chi_square_uniform(counts: &[u64]) -> TestResult {
    let k = counts.len();
    let n: u64 = counts.iter().sum();
    if k < 2 || n == 0 {
        return TestResult { statistic: 0.0, p_value: 1.0, n: n as usize };
    }
    let expected = n as f64 / k as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("positive degrees of freedom");
    TestResult { statistic: stat, p_value: dist.sf(stat), n: n as usize }
}

fn check_normalized(d: &ShapeDistribution) -> Result<()> {
    let total: f64 = d.values().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE || d.values().any(|p| *p < 0.0) {
        return Err(Error::Unnormalized(total));
    }
    Ok(())
}

/// Total variation distance `½ Σ |pa − pb|` over the union of supports.
pub fn tv_distance(pa: &ShapeDistribution, pb: &ShapeDistribution) -> Result<f64> {
    check_normalized(pa)?;
    check_normalized(pb)?;
    Ok(tv_unchecked(pa, pb))
}

/// Total variation without the normalization check; used for sub-stochastic
/// vectors such as truncated transients.
pub fn tv_unchecked(pa: &ShapeDistribution, pb: &ShapeDistribution) -> f64 {
    let mut sum = 0.0;
    for (k, a) in pa {
        sum += (a - pb.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, b) in pb {
        if !pa.contains_key(k) {
            sum += b.abs();
        }
    }
    (0.5 * sum).min(1.0)
}

/// Normalizes a histogram of counts or weights.
pub fn normalize(weights: &ShapeDistribution) -> ShapeDistribution {
    let total: f64 = weights.values().sum();
    weights.iter().map(|(k, w)| (k.clone(), w / total)).collect()
}
