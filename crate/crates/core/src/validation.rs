//! Small-instance validation of the mechanisms against the brute-force
//! oracle. Each check draws random instances from a seed and reports the
//! worst case it saw.

use rand::Rng;
use rayon::prelude::*;

use crate::domain::{Dataset, DomainSpec};
use crate::error::Result;
use crate::expmech::{self, IntervalSet, RngStream, UtilityInterval};
use crate::hyperparams::optimal_step;
use crate::median::build_median_intervals;
use crate::oracle;
use crate::params::PrivacyParams;
use crate::pipeline::PreparedData;
use crate::ri::{self, build_b_candidates, build_ri_intervals, helper_f, ri_utility};

fn random_dataset(rng: &mut RngStream, max_n: usize, max_size: i64) -> (Dataset, DomainSpec) {
    let size = rng.random_range(1..=max_size);
    let n = rng.random_range(1..=max_n);
    let domain = DomainSpec::index(size).expect("size >= 1");
    let values = (0..n).map(|_| rng.random_range(0..=size)).collect();
    (Dataset::new(values, &domain).expect("values in domain"), domain)
}

fn random_neighbor(rng: &mut RngStream, data: &Dataset, domain: &DomainSpec) -> Dataset {
    let position = rng.random_range(0..data.len());
    let value = rng.random_range(0..=domain.size());
    data.replace(position, value, domain).expect("value in domain")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    pub pairs: usize,
    pub evaluations: usize,
    pub max_f_change: i64,
    pub max_q_change: f64,
    pub violations: usize,
}

/// `|f_b(D) - f_b(D')| <= 1` and `|q(D, b) - q(D', b)| <= 1` for random
/// replace-one neighbors, random centers and every `b` in `1..=N`.
pub fn sensitivity_suite(pairs: usize, max_n: usize, max_size: i64, seed: u64) -> SensitivityReport {
    let per_pair: Vec<(usize, i64, f64, usize)> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::derive(seed, &[i as u64]);
            let (d, dom) = random_dataset(&mut rng, max_n, max_size);
            let d2 = random_neighbor(&mut rng, &d, &dom);
            let o = rng.random_range(0..=dom.size());
            let gamma1 = rng.random_range(0.0..50.0);
            let gamma2 = rng.random_range(0.0..50.0);
            let step = rng.random_range(1..=8);
            let (mut max_f, mut max_q, mut bad) = (0i64, 0f64, 0usize);
            for b in 1..=dom.size() {
                let df = (helper_f(&d, o, b) - helper_f(&d2, o, b)).abs();
                let dq = (ri_utility(&d, o, b, gamma1, gamma2, step, 1.0)
                    - ri_utility(&d2, o, b, gamma1, gamma2, step, 1.0))
                .abs();
                max_f = max_f.max(df);
                max_q = max_q.max(dq);
                if df > 1 || dq > 1.0 + 1e-9 {
                    bad += 1;
                }
            }
            (dom.size() as usize, max_f, max_q, bad)
        })
        .collect();
    SensitivityReport {
        pairs,
        evaluations: per_pair.iter().map(|p| p.0).sum(),
        max_f_change: per_pair.iter().map(|p| p.1).max().unwrap_or(0),
        max_q_change: per_pair.iter().map(|p| p.2).fold(0.0, f64::max),
        violations: per_pair.iter().map(|p| p.3).sum(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerCase {
    pub total_width: i64,
    pub intervals: usize,
    pub eps: f64,
    pub total_variation: f64,
    /// Expected distance of a perfect sampler's empirical distribution from
    /// the truth at this draw count, `0.5 * sum sqrt(2 p (1 - p) / (pi * draws))`.
    pub noise_floor: f64,
    /// Distance between empirical and exact interval-selection frequencies.
    pub interval_total_variation: f64,
}

/// Random interval set with total width in `1..=max_width`.
pub fn random_interval_set(rng: &mut RngStream, max_width: i64, max_intervals: usize) -> IntervalSet {
    let total = rng.random_range(1..=max_width);
    let k = rng.random_range(1..=max_intervals.min(total as usize));
    let mut cuts: Vec<i64> = (0..k - 1).map(|_| rng.random_range(1..total)).collect();
    cuts.push(0);
    cuts.push(total);
    cuts.sort_unstable();
    cuts.dedup();
    let runs = cuts
        .windows(2)
        .map(|w| UtilityInterval::new(w[0], w[1] - 1, -(rng.random_range(0..=40) as f64) / 4.0))
        .collect();
    IntervalSet::new(runs).expect("cuts partition the range")
}

/// Empirical distribution of `draws` samples against the exact one.
pub fn sampler_case(intervals: &IntervalSet, eps: f64, draws: usize, seed: u64) -> Result<SamplerCase> {
    let exact = oracle::exact_distribution(intervals, eps, 1.0)?;
    let mut rng = RngStream::new(seed);
    let mut counts = vec![0u64; intervals.total_width() as usize];
    let lo = intervals.lo();
    for _ in 0..draws {
        let y = expmech::sample(intervals, eps, 1.0, &mut rng)?;
        counts[(y - lo) as usize] += 1;
    }
    let total_variation = exact.total_variation_to_counts(&counts);
    let noise_floor = 0.5
        * oracle::compensated_sum(exact.probabilities().iter().map(|p| {
            (2.0 * p * (1.0 - p) / (std::f64::consts::PI * draws as f64)).sqrt()
        }));

    let mut interval_tv = 0.0;
    for iv in intervals.intervals() {
        let range = (iv.lo - lo) as usize..=(iv.hi - lo) as usize;
        let p: f64 = oracle::compensated_sum(exact.probabilities()[range.clone()].iter().copied());
        let c: u64 = counts[range].iter().sum();
        interval_tv += (p - c as f64 / draws as f64).abs();
    }
    Ok(SamplerCase {
        total_width: intervals.total_width(),
        intervals: intervals.len(),
        eps,
        total_variation,
        noise_floor,
        interval_total_variation: 0.5 * interval_tv,
    })
}

pub fn sampler_suite(cases: usize, max_width: i64, draws: usize, seed: u64) -> Result<Vec<SamplerCase>> {
    (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::derive(seed, &[i as u64]);
            let set = random_interval_set(&mut rng, max_width, 20);
            let eps = rng.random_range(0.1..5.0);
            sampler_case(&set, eps, draws, expmech::derive_seed(seed, &[i as u64, 1]))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyReport {
    pub pairs: usize,
    /// Largest `P_D(y) / P_D'(y) - e^eps1` over all pairs and outputs.
    pub median_excess: f64,
    /// Same for the half-width stage against `e^eps2`.
    pub ri_excess: f64,
    /// Largest gap between the compressed landscapes' exact distributions
    /// and the pointwise brute-force ones.
    pub landscape_mismatch: f64,
}

fn max_ratio_excess(p: &oracle::ExactDistribution, q: &oracle::ExactDistribution, eps: f64) -> f64 {
    p.probabilities()
        .iter()
        .zip(q.probabilities())
        .map(|(a, b)| (a / b).max(b / a) - eps.exp())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn max_abs_diff(p: &oracle::ExactDistribution, q: &oracle::ExactDistribution) -> f64 {
    p.probabilities()
        .iter()
        .zip(q.probabilities())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Exact output-probability ratios of both stages across random neighbor
/// pairs, on the deduplicated data the mechanisms actually see.
pub fn privacy_suite(pairs: usize, max_n: usize, max_size: i64, seed: u64) -> Result<PrivacyReport> {
    let per_pair: Result<Vec<(f64, f64, f64)>> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::derive(seed, &[i as u64]);
            let (d, dom) = random_dataset(&mut rng, max_n, max_size);
            let d2 = random_neighbor(&mut rng, &d, &dom);
            let eps1 = rng.random_range(0.1..3.0);
            let eps2 = rng.random_range(0.1..3.0);
            let step = rng.random_range(1..=3);

            let a = PreparedData::new(&d, &dom)?;
            let b = PreparedData::new(&d2, &dom)?;
            let expanded = *a.map().expanded_domain();
            let size = expanded.size();

            let pa = oracle::exact_distribution(&build_median_intervals(a.expanded(), &expanded), eps1, 1.0)?;
            let pb = oracle::exact_distribution(&build_median_intervals(b.expanded(), &expanded), eps1, 1.0)?;
            let brute = oracle::exact_median_distribution(a.expanded().values(), size, eps1)?;
            let mut mismatch = max_abs_diff(&pa, &brute);
            let median_excess = max_ratio_excess(&pa, &pb, eps1);

            let step = step.min(size);
            let candidates = build_b_candidates(size, step)?;
            let o = rng.random_range(0..=size);
            let target = ri::ri_target(
                oracle::brute_gamma(eps1, 0.01, size, 1),
                oracle::brute_gamma(eps2, 0.01, size, step),
                step,
                1.0,
            );
            let qa = oracle::exact_distribution(&build_ri_intervals(a.expanded(), o, &candidates, target)?, eps2, 1.0)?;
            let qb = oracle::exact_distribution(&build_ri_intervals(b.expanded(), o, &candidates, target)?, eps2, 1.0)?;
            let brute = oracle::exact_ri_distribution(a.expanded().values(), o, step, size, target, eps2)?;
            mismatch = mismatch.max(max_abs_diff(&qa, &brute));
            Ok((median_excess, max_ratio_excess(&qa, &qb, eps2), mismatch))
        })
        .collect();
    let per_pair = per_pair?;
    Ok(PrivacyReport {
        pairs,
        median_excess: per_pair.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        ri_excess: per_pair.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        landscape_mismatch: per_pair.iter().map(|p| p.2).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageCase {
    pub n: usize,
    pub domain_size: i64,
    pub params: PrivacyParams,
    pub coverage: f64,
    pub guarantee: f64,
    /// `gamma1 + gamma2 + s * l` on the expanded domain. The one-sided rank
    /// count `f_b` never exceeds `n / 2`, so when the target is above that no
    /// half-width scores utility 0.
    pub target: f64,
}

impl CoverageCase {
    pub fn target_reachable(&self) -> bool {
        self.target <= self.n as f64 / 2.0
    }
}

/// Exact two-stage coverage on random instances with `n <= max_n` records
/// over `{0..N}`, `N <= max_size`. Each instance draws `eps` from `eps_grid`
/// and `beta` from `betas`, splits both evenly and sets the step from `eps2`.
pub fn coverage_suite(
    instances: usize,
    max_n: usize,
    max_size: i64,
    eps_grid: &[f64],
    betas: &[f64],
    seed: u64,
) -> Result<Vec<CoverageCase>> {
    (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::derive(seed, &[i as u64]);
            let (d, dom) = random_dataset(&mut rng, max_n, max_size);
            let eps = eps_grid[rng.random_range(0..eps_grid.len())];
            let beta = betas[rng.random_range(0..betas.len())];
            let expanded_size = d.len() as i64 * (dom.size() + 1) - 1;
            let step = optimal_step(eps / 2.0, 1.0, 1.0).min(expanded_size);
            let params = PrivacyParams::new(eps / 2.0, eps / 2.0, beta / 2.0, beta / 2.0, step)?;
            let coverage = oracle::exact_coverage(&d, &dom, &params)?;
            let target = oracle::brute_gamma(params.eps1, params.beta1, expanded_size, 1)
                + oracle::brute_gamma(params.eps2, params.beta2, expanded_size, step)
                + step as f64;
            Ok(CoverageCase {
                n: d.len(),
                domain_size: dom.size(),
                params,
                coverage,
                guarantee: 1.0 - params.beta1 - params.beta2,
                target,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianBoundCase {
    pub n: usize,
    pub eps1: f64,
    pub beta1: f64,
    pub violation_probability: f64,
}

/// Exact probability that the median stage falls more than `gamma1` short
/// of the best utility, on small random instances.
pub fn median_bound_suite(instances: usize, seed: u64) -> Result<Vec<MedianBoundCase>> {
    (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::derive(seed, &[i as u64]);
            let (d, dom) = random_dataset(&mut rng, 12, 60);
            let eps1 = rng.random_range(0.05..4.0);
            let beta1 = [0.005, 0.01, 0.05, 0.2, 0.5][rng.random_range(0..5)];
            Ok(MedianBoundCase {
                n: d.len(),
                eps1,
                beta1,
                violation_probability: oracle::exact_median_violation(&d, &dom, eps1, beta1)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_are_clean() {
        let s = sensitivity_suite(50, 40, 100, 1);
        assert_eq!(s.violations, 0);
        assert!(s.max_f_change <= 1);

        let p = privacy_suite(10, 5, 12, 2).unwrap();
        assert!(p.median_excess <= 1e-9 && p.ri_excess <= 1e-9);
        assert!(p.landscape_mismatch < 1e-12);

        let reachable: Vec<CoverageCase> = coverage_suite(8, 7, 40, &[64.0], &[0.05], 3)
            .unwrap()
            .into_iter()
            .filter(CoverageCase::target_reachable)
            .collect();
        assert!(!reachable.is_empty());
        for c in reachable {
            assert!(c.coverage >= c.guarantee, "{c:?}");
        }
        for c in median_bound_suite(5, 4).unwrap() {
            assert!(c.violation_probability <= c.beta1);
        }
    }

    #[test]
    fn coverage_falls_short_when_target_exceeds_half_n() {
        let cases = coverage_suite(4, 5, 20, &[0.5], &[0.05], 5).unwrap();
        assert!(cases.iter().all(|c| !c.target_reachable()));
        assert!(cases.iter().any(|c| c.coverage < c.guarantee));
    }

    #[test]
    fn sampler_case_reports_small_distance_for_small_sets() {
        let mut rng = RngStream::new(9);
        let set = random_interval_set(&mut rng, 30, 5);
        let case = sampler_case(&set, 1.0, 200_000, 10).unwrap();
        assert!(case.total_variation < 0.02, "{case:?}");
        assert!(case.interval_total_variation <= case.total_variation + 1e-12);
    }
}
