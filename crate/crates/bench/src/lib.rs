//! Fixtures shared by the criterion benchmarks.

use postri::{Dataset, DomainSpec};

/// A heavy-tailed integer column over `{0..domain_size}` with many ties,
/// shaped like a census weight or account balance attribute.
pub fn skewed_dataset(n: usize, domain_size: i64) -> (Dataset, DomainSpec) {
    let domain = DomainSpec::index(domain_size).expect("positive domain");
    let span = (domain_size / 100).max(1) as f64;
    let values = (0..n)
        .map(|i| {
            // deterministic quantiles of an exponential distribution
            let u = (i as f64 + 0.5) / n as f64;
            ((-(1.0 - u).ln() * span * 0.1) as i64).min(domain_size)
        })
        .collect();
    (Dataset::new(values, &domain).expect("values in domain"), domain)
}
