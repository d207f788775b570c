//! End-to-end release: dedup, budget split, median, interval, inverse map.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{dedup_remap, Dataset, DedupMap, DomainSpec};
use crate::error::Result;
use crate::hyperparams::SplitPolicy;
use crate::median::{self, MedianResult};
use crate::params::PrivacyParams;
use crate::ri::{self, RIResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseConfig {
    pub eps: f64,
    pub beta: f64,
    pub policy: SplitPolicy,
    /// Share of `beta` given to the median stage.
    #[serde(default = "default_beta1_fraction")]
    pub beta1_fraction: f64,
    /// Domain size used inside the median error bound, if not the sampled
    /// (expanded) domain.
    #[serde(default)]
    pub gamma_domain_override: Option<i64>,
}

fn default_beta1_fraction() -> f64 {
    0.5
}

impl ReleaseConfig {
    pub fn new(eps: f64, beta: f64, policy: SplitPolicy) -> Self {
        ReleaseConfig {
            eps,
            beta,
            policy,
            beta1_fraction: default_beta1_fraction(),
            gamma_domain_override: None,
        }
    }
}

/// A dataset after the duplicate-removing remap, reusable across releases.
#[derive(Debug, Clone)]
pub struct PreparedData {
    original: Dataset,
    expanded: Dataset,
    map: DedupMap,
}

impl PreparedData {
    pub fn new(data: &Dataset, domain: &DomainSpec) -> Result<Self> {
        let (expanded, map) = dedup_remap(data, domain)?;
        Ok(PreparedData {
            original: data.clone(),
            expanded,
            map,
        })
    }

    pub fn original(&self) -> &Dataset {
        &self.original
    }

    pub fn expanded(&self) -> &Dataset {
        &self.expanded
    }

    pub fn map(&self) -> &DedupMap {
        &self.map
    }

    pub fn resolve(&self, config: &ReleaseConfig) -> Result<PrivacyParams> {
        config.policy.resolve(
            config.eps,
            config.beta,
            config.beta1_fraction,
            self.map.expanded_domain().size(),
        )
    }

    pub fn release<R: Rng + ?Sized>(&self, config: &ReleaseConfig, rng: &mut R) -> Result<Release> {
        let params = self.resolve(config)?;
        self.release_with(&params, config.gamma_domain_override, rng)
    }

    pub fn release_with<R: Rng + ?Sized>(
        &self,
        params: &PrivacyParams,
        gamma_domain_override: Option<i64>,
        rng: &mut R,
    ) -> Result<Release> {
        params.validate()?;
        let domain = self.map.expanded_domain();
        let mut median = median::dp_median(&self.expanded, domain, params.eps1, params.beta1, rng)?;
        if let Some(size) = gamma_domain_override {
            median.gamma1 = median::gamma1(params.eps1, params.beta1, size)?;
        }
        let interval = ri::dp_ri(&self.expanded, &self.map, &median, params, rng)?;
        let base = self.map.base_domain();
        Ok(Release {
            params: *params,
            median,
            lower: base.to_original(interval.lower),
            estimate: base.to_original(interval.center),
            upper: base.to_original(interval.upper),
            rank_covered: ri::covers_median_rank(&self.expanded, median.o, interval.b_hat),
            interval,
        })
    }
}

/// Released triple in user units, plus stage diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Release {
    pub params: PrivacyParams,
    pub median: MedianResult,
    pub interval: RIResult,
    pub lower: i64,
    pub estimate: i64,
    pub upper: i64,
    /// `rank(o - b) <= n/2 <= rank(o + b)` on the deduplicated data. Uses the
    /// private data; for evaluation only.
    pub rank_covered: bool,
}

impl Release {
    pub fn width(&self) -> i64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower as f64 <= value && value <= self.upper as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expmech::RngStream;

    #[test]
    fn release_is_ordered_and_in_range() {
        let dom = DomainSpec::new(10_000, -500, 9_000).unwrap();
        let values: Vec<i64> = (0..300).map(|i| dom.to_index(-500 + (i * i) % 9_500).unwrap()).collect();
        let data = Dataset::new(values, &dom).unwrap();
        let prepared = PreparedData::new(&data, &dom).unwrap();
        let mut rng = RngStream::new(3);
        for policy in [SplitPolicy::Default, SplitPolicy::Optimal, SplitPolicy::MedianFocused] {
            let config = ReleaseConfig::new(1.0, 0.05, policy);
            for _ in 0..20 {
                let r = prepared.release(&config, &mut rng).unwrap();
                assert!(r.lower <= r.estimate && r.estimate <= r.upper);
                assert!(r.lower >= -500 && r.upper <= 9_500);
            }
        }
    }

    #[test]
    fn gamma_override_changes_bound_only() {
        let dom = DomainSpec::index(1_000).unwrap();
        let data = Dataset::new((0..50).map(|i| i * 20).collect(), &dom).unwrap();
        let prepared = PreparedData::new(&data, &dom).unwrap();
        let mut config = ReleaseConfig::new(1.0, 0.05, SplitPolicy::Default);
        config.gamma_domain_override = Some(1_000);
        let r = prepared.release(&config, &mut RngStream::new(1)).unwrap();
        let expected = median::gamma1(0.5, 0.025, 1_000).unwrap();
        assert_eq!(r.median.gamma1, expected);
    }
}
