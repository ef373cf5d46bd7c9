//! Bernoulli estimates, ratios, and the few test statistics the experiments need.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Monte Carlo estimate of a probability.
///
/// Truncated samples are failures in `value` and successes in `upper`, so
/// `[lower, upper]` brackets every way the budget could have resolved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
    pub hits: u64,
    pub n_truncated: u64,
    pub lower: f64,
    pub upper: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl Estimate {
    pub fn from_counts(hits: u64, n_truncated: u64, n: u64) -> Self {
        assert!(n > 0, "estimate from zero samples");
        assert!(hits + n_truncated <= n);
        let nf = n as f64;
        let p = hits as f64 / nf;
        let (wilson_lo, wilson_hi) = wilson(hits, n, Z95);
        Estimate {
            value: p,
            std_error: (p * (1.0 - p) / nf).sqrt(),
            n,
            hits,
            n_truncated,
            lower: p,
            upper: (hits + n_truncated) as f64 / nf,
            wilson_lo,
            wilson_hi,
        }
    }

    /// A probability known without sampling.
    pub fn exact(value: f64, n: u64) -> Self {
        let hits = (value * n as f64).round() as u64;
        let mut e = Estimate::from_counts(hits, 0, n);
        e.value = value;
        e.std_error = 0.0;
        e.lower = value;
        e.upper = value;
        e
    }

    pub fn truncated_fraction(&self) -> f64 {
        self.n_truncated as f64 / self.n as f64
    }

    /// True when `value` is within five standard errors of zero, where the
    /// Wilson interval rather than the Wald one should be trusted.
    pub fn near_zero(&self) -> bool {
        self.value <= 5.0 * self.std_error
    }
}

/// Wilson score interval for `hits` out of `n`.
pub fn wilson(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// `numerator / denominator` from independent samples, with delta-method error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub numerator: Estimate,
    pub denominator: Estimate,
    pub ratio: f64,
    pub std_error: f64,
}

impl RatioEstimate {
    pub fn new(numerator: Estimate, denominator: Estimate) -> Result<Self> {
        if denominator.value <= 0.0 {
            return Err(Error::AllDenominatorMisses);
        }
        let (a, b) = (numerator.value, denominator.value);
        let (sa, sb) = (numerator.std_error, denominator.std_error);
        let var = sa * sa / (b * b) + a * a * sb * sb / (b * b * b * b);
        Ok(RatioEstimate {
            numerator,
            denominator,
            ratio: a / b,
            std_error: var.sqrt(),
        })
    }

    /// The ratio's Wilson-based band: numerator interval over the denominator value.
    pub fn wilson_band(&self) -> (f64, f64) {
        (
            self.numerator.wilson_lo / self.denominator.value,
            self.numerator.wilson_hi / self.denominator.value,
        )
    }
}

/// `sqrt(Σ se²)`.
pub fn pooled_se(ses: &[f64]) -> f64 {
    ses.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Outcome of a Pearson χ² goodness-of-fit test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// χ² test of observed counts against expected probabilities at level `alpha`.
///
/// Adjacent categories are pooled (in order) until each has an expected count
/// of at least 5.
pub fn chi_square(observed: &[u64], expected_probs: &[f64], alpha: f64) -> ChiSquareTest {
    assert_eq!(observed.len(), expected_probs.len());
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_probs) {
        o_acc += o as f64;
        e_acc += p * nf;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e) * (o - e) / e } else { 0.0 })
        .sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    ChiSquareTest {
        statistic,
        dof,
        critical: upper_quantile(&dist, alpha),
        p_value: 1.0 - dist.cdf(statistic),
    }
}

/// `x` with `P(X > x) = alpha`, bisected on the CDF; statrs' own inverse is
/// only good to a few digits.
fn upper_quantile(dist: &ChiSquared, alpha: f64) -> f64 {
    let target = 1.0 - alpha;
    let mut hi = dist.inverse_cdf(target).max(1.0);
    while dist.cdf(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist.cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
