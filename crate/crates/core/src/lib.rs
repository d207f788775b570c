//! PostRI: a differentially private median released together with a
//! randomization interval.
//!
//! The median is drawn with the exponential mechanism over a rank utility
//! (budget `eps1`). A second exponential mechanism (budget `eps2`) then picks
//! a half-width `b` so that `[o - b, o + b]` brackets the true median's rank
//! with probability at least `1 - beta1 - beta2`. Releasing `(l, o, u)` is
//! `(eps1 + eps2)`-DP.
//!
//! ```
//! use postri::{Dataset, DomainSpec, PreparedData, ReleaseConfig, RngStream, SplitPolicy};
//!
//! let domain = DomainSpec::new(1_000, 0, 1_000).unwrap();
//! let data = Dataset::new((0..200).map(|i| (i * 7) % 1_000).collect(), &domain).unwrap();
//! let prepared = PreparedData::new(&data, &domain).unwrap();
//! let config = ReleaseConfig::new(1.0, 0.05, SplitPolicy::Default);
//! let release = prepared.release(&config, &mut RngStream::new(7)).unwrap();
//! assert!(release.lower <= release.estimate && release.estimate <= release.upper);
//! ```

pub mod domain;
pub mod error;
pub mod expmech;
pub mod harness;
pub mod hyperparams;
pub mod median;
pub mod oracle;
pub mod params;
pub mod pipeline;
pub mod ri;
pub mod validation;

pub use domain::{dedup_remap, Dataset, DedupMap, DomainSpec};
pub use error::{Error, Result};
pub use expmech::{IntervalSet, RngStream, UtilityInterval};
pub use hyperparams::SplitPolicy;
pub use median::MedianResult;
pub use params::PrivacyParams;
pub use pipeline::{PreparedData, Release, ReleaseConfig};
pub use ri::RIResult;
