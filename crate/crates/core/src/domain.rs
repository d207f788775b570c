//! Output domain, sorted datasets, rank queries and the duplicate-removing remap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The integer index domain `{0, 1, ..., size}` together with the public
/// range of the user data it was shifted from.
///
/// User values `v` in `[original_lower, original_upper]` map to the index
/// `v - original_lower`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    size: i64,
    original_lower: i64,
    original_upper: i64,
}

impl DomainSpec {
    pub fn new(size: i64, original_lower: i64, original_upper: i64) -> Result<Self> {
        if size < 1 {
            return Err(Error::InvalidParameter(format!(
                "domain size must be >= 1, got {size}"
            )));
        }
        if original_lower >= original_upper {
            return Err(Error::InvalidParameter(format!(
                "declared range [{original_lower}, {original_upper}] is empty"
            )));
        }
        let span = original_upper
            .checked_sub(original_lower)
            .ok_or_else(|| Error::Overflow("declared range span".into()))?;
        if span > size {
            return Err(Error::InvalidParameter(format!(
                "declared range span {span} does not fit in domain of size {size}"
            )));
        }
        Ok(DomainSpec {
            size,
            original_lower,
            original_upper,
        })
    }

    /// A pure index domain `{0..size}` with no user-facing offset.
    pub fn index(size: i64) -> Result<Self> {
        Self::new(size, 0, size)
    }

    /// The largest index `N`; the domain is `{0..N}`.
    pub fn size(&self) -> i64 {
        self.size
    }

    pub fn original_lower(&self) -> i64 {
        self.original_lower
    }

    pub fn original_upper(&self) -> i64 {
        self.original_upper
    }

    pub fn contains(&self, index: i64) -> bool {
        (0..=self.size).contains(&index)
    }

    /// Shifts a user value into the index domain.
    pub fn to_index(&self, value: i64) -> Result<i64> {
        if value < self.original_lower || value > self.original_upper {
            return Err(Error::Data(format!(
                "value {value} outside declared range [{}, {}]",
                self.original_lower, self.original_upper
            )));
        }
        Ok(value - self.original_lower)
    }

    pub fn to_original(&self, index: i64) -> i64 {
        index + self.original_lower
    }

    pub fn clamp(&self, index: i64) -> i64 {
        index.clamp(0, self.size)
    }
}

/// A non-empty, sorted multiset of domain indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    values: Vec<i64>,
}

impl Dataset {
    /// Sorts `values` and checks each lies in `domain`.
    pub fn new(mut values: Vec<i64>, domain: &DomainSpec) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !domain.contains(**v)) {
            return Err(Error::Data(format!(
                "value {bad} outside domain {{0..{}}}",
                domain.size()
            )));
        }
        values.sort_unstable();
        Ok(Dataset { values })
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of records `<= y`. Arguments outside the domain are fine:
    /// below every record gives 0, above every record gives `n`.
    pub fn rank(&self, y: i64) -> usize {
        self.values.partition_point(|&v| v <= y)
    }

    /// Middle element for odd `n`, mean of the two middle elements for even `n`.
    pub fn true_median(&self) -> f64 {
        let n = self.values.len();
        if n % 2 == 1 {
            self.values[n / 2] as f64
        } else {
            (self.values[n / 2 - 1] as f64 + self.values[n / 2] as f64) / 2.0
        }
    }

    pub fn min(&self) -> i64 {
        self.values[0]
    }

    pub fn max(&self) -> i64 {
        self.values[self.values.len() - 1]
    }

    /// Returns a copy with the record at `position` replaced by `value`
    /// (a bounded neighbor).
    pub fn replace(&self, position: usize, value: i64, domain: &DomainSpec) -> Result<Dataset> {
        let mut values = self.values.clone();
        values[position] = value;
        Dataset::new(values, domain)
    }
}

/// Records how a multiset was spread over the expanded domain so every
/// value is distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DedupMap {
    n: i64,
    base: DomainSpec,
    expanded: DomainSpec,
}

impl DedupMap {
    /// A no-op map for data already known to be duplicate-free.
    pub fn identity(domain: &DomainSpec) -> Self {
        DedupMap {
            n: 1,
            base: *domain,
            expanded: DomainSpec::index(domain.size()).expect("size >= 1"),
        }
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn base_domain(&self) -> &DomainSpec {
        &self.base
    }

    pub fn expanded_domain(&self) -> &DomainSpec {
        &self.expanded
    }

    /// Image of the `repetition`-th copy (0-based) of `x`.
    pub fn forward(&self, x: i64, repetition: i64) -> i64 {
        self.n * x + repetition
    }

    /// `floor(y / n)`, clamped into the base domain.
    pub fn map_back(&self, y_expanded: i64) -> i64 {
        self.base.clamp(y_expanded.div_euclid(self.n))
    }
}

/// Sends the `k`-th repetition (1-based) of `x` to `n*x + k - 1`.
///
/// The expanded index domain is `{0..n*(N+1)-1}` so that repetitions of the
/// top value `N` still fit.
pub fn dedup_remap(data: &Dataset, domain: &DomainSpec) -> Result<(Dataset, DedupMap)> {
    let n = i64::try_from(data.len()).map_err(|_| Error::Overflow("dataset length".into()))?;
    let expanded_size = domain
        .size()
        .checked_add(1)
        .and_then(|m| m.checked_mul(n))
        .and_then(|m| m.checked_sub(1))
        .ok_or_else(|| {
            Error::Overflow(format!(
                "expanded domain n*(N+1) with n={n}, N={}",
                domain.size()
            ))
        })?;
    let expanded = DomainSpec::index(expanded_size)?;
    let map = DedupMap {
        n,
        base: *domain,
        expanded,
    };

    let mut out = Vec::with_capacity(data.len());
    let mut repetition = 0;
    for (i, &x) in data.values().iter().enumerate() {
        if i > 0 && data.values()[i - 1] == x {
            repetition += 1;
        } else {
            repetition = 0;
        }
        out.push(map.forward(x, repetition));
    }
    Ok((Dataset { values: out }, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(values: &[i64], size: i64) -> Dataset {
        Dataset::new(values.to_vec(), &DomainSpec::index(size).unwrap()).unwrap()
    }

    #[test]
    fn rank_examples() {
        let d = ds(&[1, 3, 5], 10);
        assert_eq!(d.rank(3), 2);
        assert_eq!(d.rank(-7), 0);
        assert_eq!(d.rank(4), 2);
        assert_eq!(d.rank(10), 3);
        assert_eq!(d.rank(i64::MAX), 3);
    }

    #[test]
    fn true_median_examples() {
        assert_eq!(ds(&[1, 2, 3], 5).true_median(), 2.0);
        assert_eq!(ds(&[4, 1, 3, 2], 5).true_median(), 2.5);
    }

    #[test]
    fn dedup_examples() {
        let dom = DomainSpec::index(10).unwrap();
        let (d, map) = dedup_remap(&ds(&[2, 2, 5], 10), &dom).unwrap();
        assert_eq!(d.values(), &[6, 7, 15]);
        assert_eq!(map.n(), 3);
        assert_eq!(map.expanded_domain().size(), 32);

        let (d, map) = dedup_remap(&ds(&[0], 10), &dom).unwrap();
        assert_eq!(d.values(), &[0]);
        assert_eq!(map.expanded_domain().size(), 10);

        let (d, _) = dedup_remap(&ds(&[7, 7, 7, 7], 10), &dom).unwrap();
        assert_eq!(d.values(), &[28, 29, 30, 31]);
    }

    #[test]
    fn top_value_repetitions_fit() {
        let dom = DomainSpec::index(10).unwrap();
        let (d, map) = dedup_remap(&ds(&[10, 10, 10], 10), &dom).unwrap();
        assert!(d.values().iter().all(|v| map.expanded_domain().contains(*v)));
        assert!(d.values().iter().all(|v| map.map_back(*v) == 10));
    }

    #[test]
    fn map_back_examples() {
        let dom = DomainSpec::index(10).unwrap();
        let (_, map) = dedup_remap(&ds(&[2, 2, 5], 10), &dom).unwrap();
        assert_eq!(map.map_back(15), 5);
        assert_eq!(map.map_back(0), 0);
        assert_eq!(map.map_back(7), 2);
        assert_eq!(map.map_back(-4), 0);
        assert_eq!(map.map_back(1_000), 10);
    }

    #[test]
    fn dedup_overflow_is_reported() {
        let dom = DomainSpec::index(i64::MAX / 2).unwrap();
        let d = Dataset::new(vec![0, 1, 2], &dom).unwrap();
        assert!(matches!(dedup_remap(&d, &dom), Err(Error::Overflow(_))));
    }

    #[test]
    fn domain_validation() {
        assert!(DomainSpec::new(0, 0, 1).is_err());
        assert!(DomainSpec::new(10, 5, 5).is_err());
        assert!(DomainSpec::new(10, 0, 11).is_err());
        let dom = DomainSpec::new(100, -8, 50).unwrap();
        assert_eq!(dom.to_index(-8).unwrap(), 0);
        assert_eq!(dom.to_original(8), 0);
        assert!(dom.to_index(51).is_err());
    }

    #[test]
    fn dataset_rejects_out_of_domain() {
        let dom = DomainSpec::index(5).unwrap();
        assert!(Dataset::new(vec![], &dom).is_err());
        assert!(Dataset::new(vec![6], &dom).is_err());
        assert!(Dataset::new(vec![-1], &dom).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dataset() -> impl Strategy<Value = (Vec<i64>, i64)> {
            (1i64..200).prop_flat_map(|size| (prop::collection::vec(0..=size, 1..40), Just(size)))
        }

        proptest! {
            #[test]
            fn rank_is_monotone_and_saturates((values, size) in dataset()) {
                let d = ds(&values, size);
                prop_assert_eq!(d.rank(-1), 0);
                prop_assert_eq!(d.rank(size), d.len());
                for y in -1..size {
                    prop_assert!(d.rank(y) <= d.rank(y + 1));
                }
            }

            #[test]
            fn dedup_round_trips((values, size) in dataset()) {
                let dom = DomainSpec::index(size).unwrap();
                let d = ds(&values, size);
                let (e, map) = dedup_remap(&d, &dom).unwrap();
                let mut distinct = e.values().to_vec();
                distinct.dedup();
                prop_assert_eq!(distinct.len(), e.len());
                let back: Vec<i64> = e.values().iter().map(|y| map.map_back(*y)).collect();
                prop_assert_eq!(back, d.values().to_vec());
            }

            #[test]
            fn neighbor_rank_sensitivity(
                (values, size) in dataset(),
                pos in any::<prop::sample::Index>(),
                replacement in 0i64..200,
            ) {
                let dom = DomainSpec::index(size).unwrap();
                let d = ds(&values, size);
                let d2 = d.replace(pos.index(d.len()), replacement % (size + 1), &dom).unwrap();
                for y in -1..=size + 1 {
                    prop_assert!((d.rank(y) as i64 - d2.rank(y) as i64).abs() <= 1);
                }
            }
        }
    }
}
