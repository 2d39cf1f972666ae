//! Joint-order counting and exact ordering density for rational policies.
//!
//! All intervals are first written over a common denominator `Q`, so every
//! order epoch becomes an integer multiple of `1/Q` and comparisons are exact.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{common_denominator, rational_lcm, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// Multiples in `[0, Δ]`.
    Closed,
    /// Multiples in `[0, Δ)`.
    HalfOpen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_points: u64,
    pub max_terms_n: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_points: 10_000_000, max_terms_n: 20 }
    }
}

/// The order epochs `{0, T, 2T, …}` of one interval inside a horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipleSet {
    pub interval: Rational,
    pub horizon: Rational,
    pub convention: Convention,
}

impl MultipleSet {
    pub fn new(interval: Rational, horizon: Rational, convention: Convention) -> Result<Self> {
        if !interval.is_positive() {
            return Err(Error::Domain("interval must be positive".into()));
        }
        if horizon < Rational::zero() {
            return Err(Error::Domain("horizon must be non-negative".into()));
        }
        Ok(MultipleSet { interval, horizon, convention })
    }

    /// Largest multiplier `k` with `k·T` inside the horizon, or `None` when
    /// the set is empty (half-open with a zero horizon).
    pub fn last_multiplier(&self) -> Option<BigInt> {
        let q = &self.horizon / &self.interval;
        match self.convention {
            Convention::Closed => Some(q.floor()),
            Convention::HalfOpen => {
                let k = q.ceil() - BigInt::one();
                (k >= BigInt::zero()).then_some(k)
            }
        }
    }

    pub fn len(&self) -> BigInt {
        self.last_multiplier().map_or_else(BigInt::zero, |k| k + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.last_multiplier().is_none()
    }

    pub fn points(&self) -> impl Iterator<Item = Rational> + '_ {
        let last = self.last_multiplier().and_then(|k| k.to_u64());
        let count = last.map_or(0, |k| k + 1);
        (0..count).map(move |k| self.interval.mul_int(&BigInt::from(k)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityResult {
    pub value: Rational,
    pub term_count: u64,
}

pub fn count_joint_orders(intervals: &[Rational], horizon: &Rational, convention: Convention) -> Result<u64> {
    count_joint_orders_with(intervals, horizon, convention, &OracleLimits::default())
}

/// `|⋃ᵢ Mᵢ|` by a k-way merge of the integer epoch sequences.
pub fn count_joint_orders_with(
    intervals: &[Rational],
    horizon: &Rational,
    convention: Convention,
    limits: &OracleLimits,
) -> Result<u64> {
    if intervals.is_empty() {
        return Ok(0);
    }
    let sets = intervals
        .iter()
        .map(|t| MultipleSet::new(t.clone(), horizon.clone(), convention))
        .collect::<Result<Vec<_>>>()?;
    let total: BigInt = sets.iter().map(MultipleSet::len).sum();
    if total > BigInt::from(limits.max_points) {
        return Err(Error::Budget(format!("{total} points exceed the cap of {}", limits.max_points)));
    }
    let q = common_denominator(intervals);
    let to_u128 = |b: BigInt| b.to_u128().ok_or_else(|| Error::Budget("epoch does not fit in 128 bits".into()));
    let mut heap = BinaryHeap::new();
    for s in &sets {
        if let Some(last) = s.last_multiplier() {
            let step = to_u128((s.interval.numer() * &q) / s.interval.denom())?;
            let end = to_u128(last)?
                .checked_mul(step)
                .ok_or_else(|| Error::Budget("epoch overflow".into()))?;
            heap.push(Reverse((0u128, step, end)));
        }
    }
    let mut count = 0u64;
    let mut last_seen: Option<u128> = None;
    while let Some(Reverse((v, step, end))) = heap.pop() {
        if last_seen != Some(v) {
            count += 1;
            last_seen = Some(v);
        }
        if v < end {
            heap.push(Reverse((v + step, step, end)));
        }
    }
    Ok(count)
}

pub fn exact_density(intervals: &[Rational]) -> Result<DensityResult> {
    exact_density_with(intervals, &OracleLimits::default())
}

/// Inclusion-exclusion `Σ_{∅≠S} (−1)^{|S|+1} / lcm(S)`.
///
/// Duplicates and intervals that are multiples of another interval add no
/// epochs, so they are removed before expanding; the subset cap applies to
/// what remains.
pub fn exact_density_with(intervals: &[Rational], limits: &OracleLimits) -> Result<DensityResult> {
    if intervals.is_empty() {
        return Ok(DensityResult { value: Rational::zero(), term_count: 0 });
    }
    if intervals.iter().any(|t| !t.is_positive()) {
        return Err(Error::Domain("intervals must be positive".into()));
    }
    let kept = reduce_intervals(intervals);
    if kept.len() > limits.max_terms_n {
        return Err(Error::Budget(format!(
            "{} distinct intervals exceed the inclusion-exclusion cap of {}",
            kept.len(),
            limits.max_terms_n
        )));
    }
    let q = common_denominator(&kept);
    let nums: Vec<BigInt> = kept.iter().map(|t| (t.numer() * &q) / t.denom()).collect();
    let full = nums.iter().fold(BigInt::one(), |acc, p| acc.lcm(p));
    let mut acc = BigInt::zero();
    let mut terms = 0u64;
    expand(&nums, 0, &BigInt::one(), false, &full, &mut acc, &mut terms);
    Ok(DensityResult { value: Rational::from_big(acc * q, full), term_count: terms })
}

fn expand(nums: &[BigInt], start: usize, cur: &BigInt, odd: bool, full: &BigInt, acc: &mut BigInt, terms: &mut u64) {
    for j in start..nums.len() {
        let l = cur.lcm(&nums[j]);
        let term = full / &l;
        // `odd` tracks the parity of the subset before adding j.
        if odd {
            *acc -= term;
        } else {
            *acc += term;
        }
        *terms += 1;
        expand(nums, j + 1, &l, !odd, full, acc, terms);
    }
}

fn reduce_intervals(intervals: &[Rational]) -> Vec<Rational> {
    let mut sorted: Vec<Rational> = intervals.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut kept: Vec<Rational> = Vec::with_capacity(sorted.len());
    for t in sorted {
        if !kept.iter().any(|k| t.multiple_of(k).is_some()) {
            kept.push(t);
        }
    }
    kept
}

/// `1/a + 1/b − 1/lcm(a, b)`.
pub fn pair_density(t_min: &Rational, t_f: &Rational) -> Rational {
    let l = rational_lcm(&[t_min.clone(), t_f.clone()]);
    t_min.recip() + t_f.recip() - l.recip()
}

/// Half-open count over `periods` whole common periods, divided by the
/// horizon. Equals [`exact_density`] for every `periods ≥ 1`.
pub fn empirical_density(intervals: &[Rational], periods: u64) -> Result<Rational> {
    empirical_density_with(intervals, periods, &OracleLimits::default())
}

pub fn empirical_density_with(intervals: &[Rational], periods: u64, limits: &OracleLimits) -> Result<Rational> {
    if periods == 0 {
        return Err(Error::Argument("periods must be positive".into()));
    }
    if intervals.is_empty() || intervals.iter().any(|t| !t.is_positive()) {
        return Err(Error::Domain("need at least one positive interval".into()));
    }
    let horizon = rational_lcm(intervals).mul_int(&BigInt::from(periods));
    let count = count_joint_orders_with(intervals, &horizon, Convention::HalfOpen, limits)?;
    Ok(Rational::from(BigInt::from(count)) / horizon)
}
