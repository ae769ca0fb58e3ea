//! Binomial interval helpers shared by the estimation code.

use statrs::distribution::{ContinuousCDF, Normal};

/// Default two-sided confidence level for all reported intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Two-sided normal quantile for a given confidence level, e.g.
/// 1.959964 at 95%.
pub fn z_for_confidence(level: f64) -> f64 {
    assert!(level > 0.0 && level < 1.0, "confidence level must be in (0,1)");
    Normal::standard().inverse_cdf(0.5 + level / 2.0)
}

/// Bonferroni-adjusted quantile for the maximum over `m` simultaneous
/// binomial estimates.
pub fn z_union_bound(level: f64, m: usize) -> f64 {
    let alpha = (1.0 - level) / m.max(1) as f64;
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// Wilson score interval for `successes` hits out of `n` trials.
/// Always brackets the point estimate.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n > 0);
    let nf = n as f64;
    let p_hat = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p_hat + z2 / (2.0 * nf)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // The interval brackets the point estimate by construction; clamping
    // absorbs the float residue at 0 and n hits.
    (((center - half).max(0.0)).min(p_hat), ((center + half).min(1.0)).max(p_hat))
}

/// Central binomial acceptance band around a known probability `p0`:
/// normal approximation with continuity correction, adequate for the
/// sample sizes used here.
pub fn binomial_band(p0: f64, n: u64, level: f64) -> (f64, f64) {
    let z = z_for_confidence(level);
    let nf = n as f64;
    let half = z * (p0 * (1.0 - p0) / nf).sqrt() + 0.5 / nf;
    ((p0 - half).max(0.0), (p0 + half).min(1.0))
}
