//! First stage: the median via the exponential mechanism on a rank utility.

use rand::Rng;

use crate::domain::{Dataset, DomainSpec};
use crate::error::{Error, Result};
use crate::expmech::{self, IntervalSet, UtilityInterval};

/// Output of the median stage, in expanded-domain coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianResult {
    pub o: i64,
    pub gamma1: f64,
    pub eps1_used: f64,
}

/// `-|rank(y) - n/2|`, with `n/2` kept exact.
pub fn median_utility(data: &Dataset, y: i64) -> f64 {
    utility_from_rank(data.rank(y), data.len())
}

fn utility_from_rank(rank: usize, n: usize) -> f64 {
    -(rank as f64 - n as f64 / 2.0).abs()
}

/// Splits `{0..N}` at each distinct record into runs of constant rank.
pub fn build_median_intervals(data: &Dataset, domain: &DomainSpec) -> IntervalSet {
    let n = data.len();
    let values = data.values();
    let mut runs = Vec::with_capacity(n + 1);
    if values[0] > 0 {
        runs.push(UtilityInterval::new(0, values[0] - 1, utility_from_rank(0, n)));
    }
    let mut i = 0;
    while i < n {
        let v = values[i];
        let mut j = i + 1;
        while j < n && values[j] == v {
            j += 1;
        }
        // every element of [v, next) has rank j
        let hi = if j < n { values[j] - 1 } else { domain.size() };
        runs.push(UtilityInterval::new(v, hi, utility_from_rank(j, n)));
        i = j;
    }
    IntervalSet::new(runs).expect("median runs partition the domain")
}

/// Rank error bound holding with probability `1 - beta1`:
/// `(2 / eps1) * ln(N / beta1)` for sensitivity 1.
pub fn gamma1(eps1: f64, beta1: f64, domain_size: i64) -> Result<f64> {
    if !(eps1.is_finite() && eps1 > 0.0) {
        return Err(Error::InvalidParameter(format!("eps1 must be positive, got {eps1}")));
    }
    if !(beta1 > 0.0 && beta1 < 1.0) {
        return Err(Error::InvalidParameter(format!("beta1 must lie in (0, 1), got {beta1}")));
    }
    let ratio = domain_size as f64 / beta1;
    if ratio <= 1.0 {
        return Err(Error::Degenerate(format!("N / beta1 = {ratio} <= 1")));
    }
    Ok(2.0 / eps1 * ratio.ln())
}

pub fn dp_median<R: Rng + ?Sized>(
    data: &Dataset,
    domain: &DomainSpec,
    eps1: f64,
    beta1: f64,
    rng: &mut R,
) -> Result<MedianResult> {
    let gamma1 = gamma1(eps1, beta1, domain.size())?;
    let intervals = build_median_intervals(data, domain);
    let o = expmech::sample(&intervals, eps1, 1.0, rng)?;
    Ok(MedianResult {
        o,
        gamma1,
        eps1_used: eps1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expmech::RngStream;
    use rand::Rng;

    fn ds(values: &[i64], size: i64) -> (Dataset, DomainSpec) {
        let dom = DomainSpec::index(size).unwrap();
        (Dataset::new(values.to_vec(), &dom).unwrap(), dom)
    }

    #[test]
    fn utility_examples() {
        let (d, _) = ds(&[1, 2, 3, 4, 5], 10);
        assert_eq!(median_utility(&d, 3), -0.5);
        assert_eq!(median_utility(&d, 0), -2.5);
        let (d, _) = ds(&[10, 20], 30);
        assert_eq!(median_utility(&d, 10), 0.0);
    }

    #[test]
    fn interval_examples() {
        let (d, dom) = ds(&[3], 9);
        let s = build_median_intervals(&d, &dom);
        assert_eq!(
            s.intervals(),
            &[UtilityInterval::new(0, 2, -0.5), UtilityInterval::new(3, 9, -0.5)]
        );

        let (d, dom) = ds(&[2, 5], 9);
        let s = build_median_intervals(&d, &dom);
        assert_eq!(
            s.intervals(),
            &[
                UtilityInterval::new(0, 1, -1.0),
                UtilityInterval::new(2, 4, 0.0),
                UtilityInterval::new(5, 9, -1.0)
            ]
        );
    }

    #[test]
    fn intervals_match_pointwise_utility() {
        let mut rng = RngStream::new(42);
        for _ in 0..100 {
            let size = rng.random_range(1..=100);
            let n = rng.random_range(1..=25);
            let values: Vec<i64> = (0..n).map(|_| rng.random_range(0..=size)).collect();
            let (d, dom) = ds(&values, size);
            let s = build_median_intervals(&d, &dom);
            assert!(s.len() <= d.len() + 1);
            assert_eq!((s.lo(), s.hi()), (0, size));
            for y in 0..=size {
                // brute-force rank
                let rank = values.iter().filter(|&&v| v <= y).count() as f64;
                let expected = -(rank - n as f64 / 2.0).abs();
                assert_eq!(s.utility_at(y), Some(expected), "y={y} data={values:?}");
            }
        }
    }

    #[test]
    fn gamma1_value() {
        let g = gamma1(1.0, 0.005, 100_000_000).unwrap();
        assert!((g - 2.0 * (2e10f64).ln()).abs() < 1e-12);
        assert!((g - 47.44).abs() < 0.01, "{g}");
        assert!(gamma1(0.0, 0.1, 10).is_err());
        assert!(gamma1(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn concentrates_on_argmax_for_large_eps() {
        let (d, dom) = ds(&[2, 5, 9, 14], 20);
        let mut rng = RngStream::new(5);
        let hits = (0..10_000)
            .filter(|_| {
                let r = dp_median(&d, &dom, 1000.0, 0.01, &mut rng).unwrap();
                median_utility(&d, r.o) == 0.0
            })
            .count();
        assert!(hits as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn rank_error_within_gamma1() {
        let values: Vec<i64> = (0..1000).collect();
        let (d, dom) = ds(&values, 1000);
        let beta1 = 0.01;
        let mut rng = RngStream::new(17);
        let trials = 10_000;
        let mut ok = 0;
        for _ in 0..trials {
            let r = dp_median(&d, &dom, 4.0, beta1, &mut rng).unwrap();
            if -median_utility(&d, r.o) <= r.gamma1 {
                ok += 1;
            }
        }
        assert!(ok as f64 / trials as f64 >= 1.0 - beta1);
    }
}
