//! Second stage: a symmetric randomization interval `[o - b, o + b]` whose
//! half-width `b` is chosen by one exponential mechanism.
//!
//! The utility of a half-width is `-|f_b - (gamma1 + gamma2 + s * l)|`, where
//! `f_b` is the smaller of the two one-sided rank counts between `o` and
//! `o +/- b`. Candidates are the multiples of the step `s`.

use rand::Rng;

use crate::domain::{Dataset, DedupMap};
use crate::error::{Error, Result};
use crate::expmech::{self, IntervalSet, UtilityInterval};
use crate::median::MedianResult;
use crate::params::PrivacyParams;

/// Released interval. `lower`, `center` and `upper` are base-domain indices;
/// the `*_expanded` fields and `b_hat` are in expanded-domain units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RIResult {
    pub lower: i64,
    pub center: i64,
    pub upper: i64,
    pub b_hat: i64,
    pub gamma2: f64,
    pub beta_total: f64,
    pub lower_expanded: i64,
    pub center_expanded: i64,
    pub upper_expanded: i64,
}

/// The candidate half-widths `{s, 2s, ..., floor(N/s) * s}`, kept implicit
/// since there can be tens of millions of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BCandidates {
    step: i64,
    count: i64,
}

impl BCandidates {
    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn len(&self) -> i64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Half-width of the candidate at 0-based `index`.
    pub fn b(&self, index: i64) -> i64 {
        self.step * (index + 1)
    }

    pub fn last(&self) -> i64 {
        self.b(self.count - 1)
    }

    /// Index of the first candidate `>= b`, which may equal `len()`.
    fn first_at_least(&self, b: i64) -> i64 {
        let k = (b + self.step - 1) / self.step;
        (k - 1).max(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.count).map(move |i| self.b(i))
    }
}

pub fn build_b_candidates(domain_size: i64, step: i64) -> Result<BCandidates> {
    if step < 1 {
        return Err(Error::InvalidParameter(format!("step must be >= 1, got {step}")));
    }
    if step > domain_size {
        return Err(Error::InvalidParameter(format!(
            "step {step} exceeds domain size {domain_size}"
        )));
    }
    Ok(BCandidates {
        step,
        count: domain_size / step,
    })
}

/// `min(rank(o + b) - rank(o), rank(o) - rank(o - b))`.
pub fn helper_f(data: &Dataset, o: i64, b: i64) -> i64 {
    let at = data.rank(o) as i64;
    let above = data.rank(o.saturating_add(b)) as i64 - at;
    let below = at - data.rank(o.saturating_sub(b)) as i64;
    above.min(below)
}

/// Error bound of the half-width mechanism: `(2 / eps2) * ln(N / (s * beta2))`.
pub fn gamma2(eps2: f64, beta2: f64, domain_size: i64, step: i64) -> Result<f64> {
    if !(eps2.is_finite() && eps2 > 0.0) {
        return Err(Error::InvalidParameter(format!("eps2 must be positive, got {eps2}")));
    }
    if !(beta2 > 0.0 && beta2 < 1.0) {
        return Err(Error::InvalidParameter(format!("beta2 must lie in (0, 1), got {beta2}")));
    }
    let ratio = domain_size as f64 / (step as f64 * beta2);
    if ratio <= 1.0 {
        return Err(Error::Degenerate(format!(
            "N / (s * beta2) = {ratio} <= 1 (N={domain_size}, s={step}, beta2={beta2})"
        )));
    }
    Ok(2.0 / eps2 * ratio.ln())
}

/// `gamma1 + gamma2 + s * l`, the rank distance the half-width aims for.
pub fn ri_target(gamma1: f64, gamma2: f64, step: i64, lipschitz: f64) -> f64 {
    gamma1 + gamma2 + step as f64 * lipschitz
}

pub fn ri_utility(
    data: &Dataset,
    o: i64,
    b: i64,
    gamma1: f64,
    gamma2: f64,
    step: i64,
    lipschitz: f64,
) -> f64 {
    utility_from_f(helper_f(data, o, b), ri_target(gamma1, gamma2, step, lipschitz))
}

fn utility_from_f(f: i64, target: f64) -> f64 {
    -(f as f64 - target).abs()
}

/// Compresses the candidate landscape into runs of constant utility, indexed
/// by candidate position.
///
/// `f_b` only changes where `o + b` reaches a record above `o`, or `o - b`
/// drops below a record at or under `o`.
pub fn build_ri_intervals(
    data: &Dataset,
    o: i64,
    candidates: &BCandidates,
    target: f64,
) -> Result<IntervalSet> {
    if candidates.is_empty() {
        return Err(Error::EmptyIntervals);
    }
    let count = candidates.len();
    let mut starts: Vec<i64> = Vec::with_capacity(data.len() + 1);
    starts.push(0);
    for &v in data.values() {
        let breakpoint = if v > o { v - o } else { o - v + 1 };
        let idx = candidates.first_at_least(breakpoint);
        if idx > 0 && idx < count {
            starts.push(idx);
        }
    }
    starts.sort_unstable();
    starts.dedup();

    let mut runs: Vec<UtilityInterval> = Vec::with_capacity(starts.len());
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).map_or(count - 1, |next| next - 1);
        let u = utility_from_f(helper_f(data, o, candidates.b(start)), target);
        match runs.last_mut() {
            Some(prev) if prev.utility == u => prev.hi = end,
            _ => runs.push(UtilityInterval::new(start, end, u)),
        }
    }
    IntervalSet::new(runs)
}

/// Whether `rank(o - b) <= n/2 <= rank(o + b)`.
pub fn covers_median_rank(data: &Dataset, o: i64, b: i64) -> bool {
    let n = data.len();
    2 * data.rank(o.saturating_sub(b)) <= n && n <= 2 * data.rank(o.saturating_add(b))
}

/// Samples the half-width around the stage-one output and maps the interval
/// back to the base domain.
pub fn dp_ri<R: Rng + ?Sized>(
    data: &Dataset,
    map: &DedupMap,
    median: &MedianResult,
    params: &PrivacyParams,
    rng: &mut R,
) -> Result<RIResult> {
    params.validate()?;
    let domain = map.expanded_domain();
    let o = median.o;
    let candidates = build_b_candidates(domain.size(), params.step)?;
    let gamma2 = gamma2(params.eps2, params.beta2, domain.size(), params.step)?;
    let target = ri_target(median.gamma1, gamma2, params.step, params.lipschitz);
    let intervals = build_ri_intervals(data, o, &candidates, target)?;
    let index = expmech::sample(&intervals, params.eps2, params.delta_q, rng)?;
    let b_hat = candidates.b(index);

    let lower_expanded = domain.clamp(o.saturating_sub(b_hat));
    let upper_expanded = domain.clamp(o.saturating_add(b_hat));
    Ok(RIResult {
        lower: map.map_back(lower_expanded),
        center: map.map_back(o),
        upper: map.map_back(upper_expanded),
        b_hat,
        gamma2,
        beta_total: params.beta_total,
        lower_expanded,
        center_expanded: o,
        upper_expanded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::expmech::RngStream;

    fn ds(values: &[i64], size: i64) -> Dataset {
        Dataset::new(values.to_vec(), &DomainSpec::index(size).unwrap()).unwrap()
    }

    fn brute_rank(values: &[i64], y: i64) -> i64 {
        values.iter().filter(|&&v| v <= y).count() as i64
    }

    fn brute_f(values: &[i64], o: i64, b: i64) -> i64 {
        let r = brute_rank(values, o);
        (brute_rank(values, o + b) - r)
            .abs()
            .min((r - brute_rank(values, o - b)).abs())
    }

    #[test]
    fn helper_examples() {
        let d = ds(&[1, 2, 3, 4, 5], 10);
        assert_eq!(helper_f(&d, 3, 1), 1);
        assert_eq!(helper_f(&d, 3, 10), 2);
        let d = ds(&[1, 5, 6, 7, 9], 10);
        assert_eq!(helper_f(&d, 6, 2), 1);
    }

    #[test]
    fn gamma2_examples() {
        let g = gamma2(1.0, 0.005, 100_000_000, 4).unwrap();
        assert!((g - 2.0 * (5e9f64).ln()).abs() < 1e-12);
        assert!((g - 44.67).abs() < 0.01, "{g}");
        let g8 = gamma2(1.0, 0.005, 100_000_000, 8).unwrap();
        assert!((g - g8 - 2.0 * 2f64.ln()).abs() < 1e-9);
        let h = gamma2(2.0, 0.005, 100_000_000, 4).unwrap();
        assert!((g / h - 2.0).abs() < 1e-12);
        assert!(matches!(gamma2(1.0, 0.5, 4, 8), Err(Error::Degenerate(_))));
    }

    #[test]
    fn utility_examples() {
        // f = 2 at o=3, b=10; target 2 gives the maximum
        let d = ds(&[1, 2, 3, 4, 5], 10);
        assert_eq!(ri_utility(&d, 3, 10, 0.5, 0.5, 1, 1.0), 0.0);
        assert_eq!(utility_from_f(10, 10.0), 0.0);
        assert_eq!(utility_from_f(0, 7.25), -7.25);
    }

    #[test]
    fn candidate_examples() {
        let c = build_b_candidates(10, 3).unwrap();
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![3, 6, 9]);
        let c = build_b_candidates(100_000_000, 4).unwrap();
        assert_eq!(c.len(), 25_000_000);
        assert_eq!(c.last(), 100_000_000);
        let c = build_b_candidates(5, 1).unwrap();
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        let c = build_b_candidates(7, 7).unwrap();
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![7]);
        assert!(build_b_candidates(7, 8).is_err());
        assert!(build_b_candidates(7, 0).is_err());
    }

    #[test]
    fn run_count_is_bounded() {
        let values: Vec<i64> = (1..=100).collect();
        let d = ds(&values, 200);
        let c = build_b_candidates(200, 1).unwrap();
        let s = build_ri_intervals(&d, 50, &c, 12.5).unwrap();
        assert!(s.len() <= 2 * d.len() + 1);

        let d = ds(&[17], 200);
        for o in [0, 17, 100, 200] {
            let s = build_ri_intervals(&d, o, &c, 3.0).unwrap();
            assert!(s.len() <= 3);
        }
    }

    #[test]
    fn runs_match_pointwise_utility() {
        let mut rng = RngStream::new(2024);
        for case in 0..100 {
            let size = rng.random_range(1..=1000);
            let n = rng.random_range(1..=30);
            let values: Vec<i64> = (0..n).map(|_| rng.random_range(0..=size)).collect();
            let d = ds(&values, size);
            let o = rng.random_range(0..=size);
            let step = rng.random_range(1..=size.min(10));
            let target = rng.random_range(0.0..20.0);
            let c = build_b_candidates(size, step).unwrap();
            let s = build_ri_intervals(&d, o, &c, target).unwrap();
            assert_eq!((s.lo(), s.hi()), (0, c.len() - 1));
            for i in 0..c.len() {
                let b = c.b(i);
                let expected = -(brute_f(&values, o, b) as f64 - target).abs();
                assert_eq!(s.utility_at(i), Some(expected), "case {case} b={b}");
            }
        }
    }

    #[test]
    fn helper_is_monotone_in_b() {
        let mut rng = RngStream::new(8);
        for _ in 0..50 {
            let values: Vec<i64> = (0..20).map(|_| rng.random_range(0..=300)).collect();
            let d = ds(&values, 300);
            let o = rng.random_range(0..=300);
            let mut prev = 0;
            for b in 1..=320 {
                let f = helper_f(&d, o, b);
                assert!(f >= prev);
                prev = f;
            }
        }
    }

    #[test]
    fn coverage_condition() {
        let d = ds(&[1, 2, 3, 4, 5, 6], 10);
        assert!(covers_median_rank(&d, 3, 1));
        assert!(!covers_median_rank(&d, 5, 1));
        assert!(covers_median_rank(&d, 5, 3));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn helper_has_sensitivity_one(
                values in prop::collection::vec(0i64..=120, 1..30),
                pos in any::<prop::sample::Index>(),
                replacement in 0i64..=120,
                o in 0i64..=120,
                step in 1i64..6,
            ) {
                let d = ds(&values, 120);
                let d2 = d.replace(pos.index(d.len()), replacement, &DomainSpec::index(120).unwrap()).unwrap();
                let c = build_b_candidates(120, step).unwrap();
                for b in c.iter() {
                    let delta_f = (helper_f(&d, o, b) - helper_f(&d2, o, b)).abs();
                    prop_assert!(delta_f <= 1);
                    let q = ri_utility(&d, o, b, 3.7, 2.1, step, 1.0);
                    let q2 = ri_utility(&d2, o, b, 3.7, 2.1, step, 1.0);
                    prop_assert!((q - q2).abs() <= 1.0 + 1e-12);
                }
            }
        }
    }
}
