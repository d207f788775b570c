//! Exponential mechanism over a piecewise-constant utility landscape.
//!
//! A domain of up to ~10^13 integers is described by a few thousand runs of
//! equal utility. Each run is weighted by its element count, the run is
//! picked with the Gumbel-max trick in log space, and an element is then
//! drawn uniformly inside the run. The resulting element has probability
//! proportional to `exp(eps * u / (2 * delta))`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gumbel};

use crate::error::{Error, Result};

/// Inclusive run `[lo, hi]` of domain elements sharing one utility value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityInterval {
    pub lo: i64,
    pub hi: i64,
    pub utility: f64,
}

impl UtilityInterval {
    pub fn new(lo: i64, hi: i64, utility: f64) -> Self {
        debug_assert!(lo <= hi);
        UtilityInterval { lo, hi, utility }
    }

    pub fn width(&self) -> i64 {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, y: i64) -> bool {
        (self.lo..=self.hi).contains(&y)
    }
}

/// Sorted, gap-free, non-overlapping runs covering a contiguous candidate range.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<UtilityInterval>,
    total_width: i64,
}

impl IntervalSet {
    pub fn new(intervals: Vec<UtilityInterval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::EmptyIntervals);
        }
        let mut total_width: i64 = 0;
        for (i, iv) in intervals.iter().enumerate() {
            if iv.lo > iv.hi {
                return Err(Error::InvalidParameter(format!(
                    "interval [{}, {}] is inverted",
                    iv.lo, iv.hi
                )));
            }
            if i > 0 && intervals[i - 1].hi.checked_add(1) != Some(iv.lo) {
                return Err(Error::InvalidParameter(format!(
                    "intervals not contiguous at [{}, {}] -> [{}, {}]",
                    intervals[i - 1].lo,
                    intervals[i - 1].hi,
                    iv.lo,
                    iv.hi
                )));
            }
            total_width = total_width
                .checked_add(iv.width())
                .ok_or_else(|| Error::Overflow("interval set width".into()))?;
        }
        Ok(IntervalSet {
            intervals,
            total_width,
        })
    }

    pub fn intervals(&self) -> &[UtilityInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_width(&self) -> i64 {
        self.total_width
    }

    pub fn lo(&self) -> i64 {
        self.intervals[0].lo
    }

    pub fn hi(&self) -> i64 {
        self.intervals[self.intervals.len() - 1].hi
    }

    /// Utility of a single element, or `None` outside the covered range.
    pub fn utility_at(&self, y: i64) -> Option<f64> {
        let idx = self.intervals.partition_point(|iv| iv.hi < y);
        self.intervals
            .get(idx)
            .filter(|iv| iv.contains(y))
            .map(|iv| iv.utility)
    }

    /// Adds `c` to every utility.
    pub fn shifted(&self, c: f64) -> IntervalSet {
        IntervalSet {
            intervals: self
                .intervals
                .iter()
                .map(|iv| UtilityInterval::new(iv.lo, iv.hi, iv.utility + c))
                .collect(),
            total_width: self.total_width,
        }
    }
}

/// Reproducible random source. Substreams for parallel trials are derived
/// from a master seed and a path of identifiers.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for `(master, path[0], path[1], ...)`.
    pub fn derive(master: u64, path: &[u64]) -> Self {
        Self::new(derive_seed(master, path))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of identifiers into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &id| splitmix64(acc ^ splitmix64(id)))
}

/// Per-interval log-weights `ln(width) + eps * (u - u_max) / (2 * delta)`.
///
/// Shifting by the maximum utility keeps every exponent `<= ln(width)`.
pub fn log_weights(intervals: &IntervalSet, eps: f64, delta: f64) -> Result<Vec<f64>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be positive, got {delta}"
        )));
    }
    let mut max_u = f64::NEG_INFINITY;
    for iv in intervals.intervals() {
        if !iv.utility.is_finite() {
            return Err(Error::NonFiniteUtility(iv.utility));
        }
        max_u = max_u.max(iv.utility);
    }
    let scale = eps / (2.0 * delta);
    Ok(intervals
        .intervals()
        .iter()
        .map(|iv| (iv.width() as f64).ln() + scale * (iv.utility - max_u))
        .collect())
}

/// Draws one domain element with probability proportional to
/// `exp(eps * u(y) / (2 * delta))`.
pub fn sample<R: Rng + ?Sized>(
    intervals: &IntervalSet,
    eps: f64,
    delta: f64,
    rng: &mut R,
) -> Result<i64> {
    let weights = log_weights(intervals, eps, delta)?;
    let gumbel = Gumbel::new(0.0, 1.0).expect("standard Gumbel");

    let mut best = 0;
    let mut best_key = f64::NEG_INFINITY;
    for (i, w) in weights.iter().enumerate() {
        let key = w + gumbel.sample(rng);
        // strict comparison keeps the lowest index on ties
        if key > best_key {
            best_key = key;
            best = i;
        }
    }
    let chosen = intervals.intervals()[best];
    Ok(rng.random_range(chosen.lo..=chosen.hi))
}
