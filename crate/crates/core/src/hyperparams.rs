//! Budget split and step-size selection.
//!
//! The interval width is driven by `gamma1 + gamma2 + s * l`. Minimising it
//! over the split with `eps1 + eps2 = eps` gives
//! `eps1 = eps2 * sqrt(ln(N / beta1) / ln(N / (s * beta2)))`, and minimising
//! over the step gives `s = 2 * delta_q / (eps2 * l)`. Each depends on the
//! other, so [`solve_fixed_point`] alternates the two until they agree.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PrivacyParams;

pub const FIXED_POINT_TOLERANCE: f64 = 1e-6;
pub const FIXED_POINT_MAX_ITERATIONS: usize = 100;

/// How the total budget is divided between the median and the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SplitPolicy {
    /// `eps1 = eps2 = eps / 2`
    Default,
    /// Width-minimising split solved jointly with the step.
    Optimal,
    /// `eps1 = 9 * eps2`
    MedianFocused,
    /// `eps1 = ratio * eps2`
    Ratio(f64),
}

impl SplitPolicy {
    /// Budget split and step for total budget `eps` and failure probability
    /// `beta`, of which `beta1_fraction` goes to the median stage.
    pub fn resolve(
        &self,
        eps: f64,
        beta: f64,
        beta1_fraction: f64,
        domain_size: i64,
    ) -> Result<PrivacyParams> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if !(beta1_fraction > 0.0 && beta1_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta split fraction must lie in (0, 1), got {beta1_fraction}"
            )));
        }
        let beta1 = beta * beta1_fraction;
        let beta2 = beta - beta1;
        let (eps1, eps2, step) = match *self {
            SplitPolicy::Optimal => {
                let fp = solve_fixed_point(eps, beta1, beta2, domain_size)?;
                (fp.eps1, fp.eps2, fp.step)
            }
            SplitPolicy::Default => split_by_ratio(eps, 1.0),
            SplitPolicy::MedianFocused => split_by_ratio(eps, 9.0),
            SplitPolicy::Ratio(r) => {
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "split ratio must be positive, got {r}"
                    )));
                }
                split_by_ratio(eps, r)
            }
        };
        let mut params = PrivacyParams::new(eps1, eps2, beta1, beta2, step.min(domain_size))?;
        params.eps_total = eps;
        params.beta_total = beta;
        params.validate()?;
        Ok(params)
    }
}

fn split_by_ratio(eps: f64, ratio: f64) -> (f64, f64, i64) {
    let eps2 = eps / (1.0 + ratio);
    let eps1 = eps - eps2;
    (eps1, eps2, optimal_step(eps2, 1.0, 1.0))
}

impl fmt::Display for SplitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitPolicy::Default => f.write_str("default"),
            SplitPolicy::Optimal => f.write_str("optimal"),
            SplitPolicy::MedianFocused => f.write_str("median-focused"),
            SplitPolicy::Ratio(r) => write!(f, "ratio={r}"),
        }
    }
}

impl FromStr for SplitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(SplitPolicy::Default),
            "optimal" => Ok(SplitPolicy::Optimal),
            "median-focused" => Ok(SplitPolicy::MedianFocused),
            other => {
                let ratio = other
                    .strip_prefix("ratio=")
                    .and_then(|r| r.parse::<f64>().ok())
                    .filter(|r| r.is_finite() && *r > 0.0)
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "unknown split policy '{other}' (expected default, optimal, median-focused or ratio=R)"
                        ))
                    })?;
                Ok(SplitPolicy::Ratio(ratio))
            }
        }
    }
}

impl TryFrom<String> for SplitPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SplitPolicy> for String {
    fn from(p: SplitPolicy) -> String {
        p.to_string()
    }
}

fn log_terms(beta1: f64, beta2: f64, step: i64, domain_size: i64) -> Result<(f64, f64)> {
    for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {b}")));
        }
    }
    if step < 1 || domain_size < 1 {
        return Err(Error::InvalidParameter(format!(
            "step ({step}) and domain size ({domain_size}) must be positive"
        )));
    }
    let median_log = (domain_size as f64 / beta1).ln();
    let ri_log = (domain_size as f64 / (step as f64 * beta2)).ln();
    if !(median_log > 0.0 && ri_log > 0.0) {
        return Err(Error::Degenerate(format!(
            "non-positive log term: ln(N/beta1) = {median_log}, ln(N/(s*beta2)) = {ri_log}"
        )));
    }
    Ok((median_log, ri_log))
}

/// Split of `eps` minimising `gamma1 + gamma2 + s * l` for a fixed step.
pub fn optimal_split(
    eps: f64,
    beta1: f64,
    beta2: f64,
    step: i64,
    domain_size: i64,
) -> Result<(f64, f64)> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let (median_log, ri_log) = log_terms(beta1, beta2, step, domain_size)?;
    let ratio = (median_log / ri_log).sqrt();
    let eps2 = eps / (1.0 + ratio);
    Ok((eps - eps2, eps2))
}

/// `2 * delta_q / (eps2 * l)` rounded to the nearest integer, at least 1.
pub fn optimal_step(eps2: f64, delta_q: f64, lipschitz: f64) -> i64 {
    let s = (2.0 * delta_q / (eps2 * lipschitz)).round();
    if s.is_finite() {
        (s as i64).max(1)
    } else {
        i64::MAX
    }
}

/// `gamma1 + gamma2 + s * l` with unit sensitivities and Lipschitz bound.
pub fn width_objective(
    eps1: f64,
    eps2: f64,
    beta1: f64,
    beta2: f64,
    step: i64,
    domain_size: i64,
) -> Result<f64> {
    let (median_log, ri_log) = log_terms(beta1, beta2, step, domain_size)?;
    Ok(2.0 / eps1 * median_log + 2.0 / eps2 * ri_log + step as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub eps1: f64,
    pub eps2: f64,
    pub step: i64,
    pub iterations: usize,
}

/// Which equation the alternation applies first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationOrder {
    /// Start from the even split, update the step, then the split.
    StepFirst,
    /// Start from `s = 1`, update the split, then the step.
    SplitFirst,
}

pub fn solve_fixed_point(eps: f64, beta1: f64, beta2: f64, domain_size: i64) -> Result<FixedPoint> {
    solve_fixed_point_ordered(eps, beta1, beta2, domain_size, IterationOrder::StepFirst)
}

pub fn solve_fixed_point_ordered(
    eps: f64,
    beta1: f64,
    beta2: f64,
    domain_size: i64,
    order: IterationOrder,
) -> Result<FixedPoint> {
    let mut eps1 = eps / 2.0;
    let mut eps2 = eps / 2.0;
    let mut step = 1;
    if order == IterationOrder::SplitFirst {
        (eps1, eps2) = optimal_split(eps, beta1, beta2, step, domain_size)?;
    }
    let mut trajectory = vec![(eps1, eps2, step)];

    for iteration in 1..=FIXED_POINT_MAX_ITERATIONS {
        let next_step = optimal_step(eps2, 1.0, 1.0).min(domain_size);
        let (next_eps1, next_eps2) = optimal_split(eps, beta1, beta2, next_step, domain_size)?;
        trajectory.push((next_eps1, next_eps2, next_step));

        let settled =
            (next_eps1 - eps1).abs() < FIXED_POINT_TOLERANCE * eps && next_step == step;
        eps1 = next_eps1;
        eps2 = next_eps2;
        step = next_step;
        if settled {
            return Ok(FixedPoint {
                eps1,
                eps2,
                step,
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: FIXED_POINT_MAX_ITERATIONS,
        trajectory,
    })
}
