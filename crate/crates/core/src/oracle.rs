//! Brute-force reference computations for small instances.
//!
//! Nothing here goes through the interval compression, binary-search ranks
//! or the sampler: ranks are linear scans, utilities are evaluated per
//! element, and probabilities come straight from the exponential-mechanism
//! formula with compensated summation.

use crate::domain::{Dataset, DomainSpec};
use crate::error::{Error, Result};
use crate::expmech::IntervalSet;
use crate::params::PrivacyParams;

/// Largest domain the oracle will enumerate.
pub const MAX_ENUMERATION: i64 = 1_000_000;
/// Largest expanded domain (and candidate count) for [`exact_coverage`].
pub const MAX_COVERAGE_DOMAIN: i64 = 1_000;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Probability of each output element, sorted by element.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    support: Vec<i64>,
    probabilities: Vec<f64>,
}

impl ExactDistribution {
    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.support.iter().copied().zip(self.probabilities.iter().copied())
    }

    pub fn probability(&self, y: i64) -> f64 {
        self.support
            .binary_search(&y)
            .map_or(0.0, |i| self.probabilities[i])
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.probabilities.iter().copied())
    }

    /// Half the L1 distance to empirical counts over the same support.
    pub fn total_variation_to_counts(&self, counts: &[u64]) -> f64 {
        assert_eq!(counts.len(), self.support.len());
        let draws: u64 = counts.iter().sum();
        0.5 * compensated_sum(
            self.probabilities
                .iter()
                .zip(counts)
                .map(|(p, c)| (p - *c as f64 / draws as f64).abs()),
        )
    }

    /// Largest `ln(P(y) / Q(y))` over the common support, in either direction.
    pub fn max_log_ratio(&self, other: &ExactDistribution) -> f64 {
        assert_eq!(self.support, other.support);
        self.probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(p, q)| (p.ln() - q.ln()).abs())
            .fold(0.0, f64::max)
    }
}

/// Exponential-mechanism probabilities over an explicit support.
pub fn exact_pointwise<F>(support: Vec<i64>, utility: F, eps: f64, delta: f64) -> Result<ExactDistribution>
where
    F: Fn(i64) -> f64,
{
    if support.len() as i64 > MAX_ENUMERATION {
        return Err(Error::TooLarge(format!("{} elements", support.len())));
    }
    if support.is_empty() {
        return Err(Error::EmptyIntervals);
    }
    let exponents: Vec<f64> = support.iter().map(|&y| eps * utility(y) / (2.0 * delta)).collect();
    if let Some(bad) = exponents.iter().find(|e| !e.is_finite()) {
        return Err(Error::NonFiniteUtility(*bad));
    }
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|e| (e - max).exp()).collect();
    let z = compensated_sum(weights.iter().copied());
    Ok(ExactDistribution {
        support,
        probabilities: weights.iter().map(|w| w / z).collect(),
    })
}

/// Element-level distribution of the exponential mechanism on `intervals`.
pub fn exact_distribution(intervals: &IntervalSet, eps: f64, delta: f64) -> Result<ExactDistribution> {
    if intervals.total_width() > MAX_ENUMERATION {
        return Err(Error::TooLarge(format!(
            "total width {} exceeds {MAX_ENUMERATION}",
            intervals.total_width()
        )));
    }
    let mut support = Vec::with_capacity(intervals.total_width() as usize);
    let mut utilities = Vec::with_capacity(support.capacity());
    for iv in intervals.intervals() {
        for y in iv.lo..=iv.hi {
            support.push(y);
            utilities.push(iv.utility);
        }
    }
    let lo = intervals.lo();
    exact_pointwise(support, |y| utilities[(y - lo) as usize], eps, delta)
}

pub fn brute_rank(data: &[i64], y: i64) -> i64 {
    data.iter().filter(|&&v| v <= y).count() as i64
}

pub fn brute_median_utility(data: &[i64], y: i64) -> f64 {
    -(brute_rank(data, y) as f64 - data.len() as f64 / 2.0).abs()
}

pub fn brute_helper_f(data: &[i64], o: i64, b: i64) -> i64 {
    let at = brute_rank(data, o);
    (brute_rank(data, o + b) - at)
        .abs()
        .min((at - brute_rank(data, o - b)).abs())
}

fn enumerable(size: i64) -> Result<Vec<i64>> {
    if size + 1 > MAX_ENUMERATION {
        return Err(Error::TooLarge(format!("domain {{0..{size}}}")));
    }
    Ok((0..=size).collect())
}

/// Distribution of the median stage over `{0..N}`.
pub fn exact_median_distribution(data: &[i64], domain_size: i64, eps1: f64) -> Result<ExactDistribution> {
    exact_pointwise(enumerable(domain_size)?, |y| brute_median_utility(data, y), eps1, 1.0)
}

/// Distribution of the half-width stage over `{s, 2s, ...}` for a fixed `o`.
pub fn exact_ri_distribution(
    data: &[i64],
    o: i64,
    step: i64,
    domain_size: i64,
    target: f64,
    eps2: f64,
) -> Result<ExactDistribution> {
    let support: Vec<i64> = (1..=domain_size / step).map(|k| k * step).collect();
    exact_pointwise(
        support,
        |b| -(brute_helper_f(data, o, b) as f64 - target).abs(),
        eps2,
        1.0,
    )
}

/// Lowest element of `{0..N}` with maximal median utility.
pub fn argmax_utility(data: &[i64], domain_size: i64) -> i64 {
    let mut best = 0;
    let mut best_u = f64::NEG_INFINITY;
    for y in 0..=domain_size {
        let u = brute_median_utility(data, y);
        if u > best_u {
            best_u = u;
            best = y;
        }
    }
    best
}

/// Smallest candidate `b` with `f_b > threshold`, if any.
pub fn brute_force_min_b(data: &[i64], o: i64, step: i64, domain_size: i64, threshold: f64) -> Option<i64> {
    (1..=domain_size / step)
        .map(|k| k * step)
        .find(|&b| brute_helper_f(data, o, b) as f64 > threshold)
}

pub fn brute_gamma(eps: f64, beta: f64, domain_size: i64, step: i64) -> f64 {
    2.0 / eps * (domain_size as f64 / (step as f64 * beta)).ln()
}

/// Spreads repeated values apart: k-th copy of `x` goes to `n*x + k - 1`.
pub fn brute_dedup(data: &[i64], domain_size: i64) -> (Vec<i64>, i64) {
    let n = data.len() as i64;
    let mut sorted = data.to_vec();
    sorted.sort_unstable();
    let out = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| n * x + sorted[..i].iter().filter(|&&v| v == x).count() as i64)
        .collect();
    (out, n * (domain_size + 1) - 1)
}

/// Probability that the median stage misses the best utility by more than
/// `gamma1`, over the expanded domain.
pub fn exact_median_violation(data: &Dataset, domain: &DomainSpec, eps1: f64, beta1: f64) -> Result<f64> {
    let (expanded, size) = brute_dedup(data.values(), domain.size());
    let dist = exact_median_distribution(&expanded, size, eps1)?;
    let gamma1 = brute_gamma(eps1, beta1, size, 1);
    let best = brute_median_utility(&expanded, argmax_utility(&expanded, size));
    Ok(compensated_sum(dist.iter().filter_map(|(o, p)| {
        (brute_median_utility(&expanded, o) < best - gamma1).then_some(p)
    })))
}

/// Exact probability over both stages that
/// `rank(o - b) <= n/2 <= rank(o + b)` on the deduplicated data.
pub fn exact_coverage(data: &Dataset, domain: &DomainSpec, params: &PrivacyParams) -> Result<f64> {
    let (expanded, size) = brute_dedup(data.values(), domain.size());
    if size > MAX_COVERAGE_DOMAIN || size / params.step > MAX_COVERAGE_DOMAIN {
        return Err(Error::TooLarge(format!(
            "expanded domain {size} (limit {MAX_COVERAGE_DOMAIN})"
        )));
    }
    let n = expanded.len() as i64;
    let gamma1 = brute_gamma(params.eps1, params.beta1, size, 1);
    let gamma2 = brute_gamma(params.eps2, params.beta2, size, params.step);
    let target = gamma1 + gamma2 + params.step as f64 * params.lipschitz;

    let medians = exact_median_distribution(&expanded, size, params.eps1)?;
    let mut per_o = Vec::with_capacity(medians.support().len());
    for (o, p_o) in medians.iter() {
        let widths = exact_ri_distribution(&expanded, o, params.step, size, target, params.eps2)?;
        let covered = compensated_sum(widths.iter().filter_map(|(b, p_b)| {
            let ok = 2 * brute_rank(&expanded, o - b) <= n && n <= 2 * brute_rank(&expanded, o + b);
            ok.then_some(p_b)
        }));
        per_o.push(p_o * covered);
    }
    Ok(compensated_sum(per_o).clamp(0.0, 1.0))
}
