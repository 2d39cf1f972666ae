//! Power-of-two rounding and the fixed-base algorithm built on it.

use std::collections::HashMap;

use num_bigint::BigInt;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{exact_total_cost, pow2_big, total_cost, CostBreakdown, Instance, Policy};
use crate::oracle::exact_density;
use crate::rational::Rational;
use crate::relax::solve_variable_base;

/// Intervals `2^{qᵢ}·base` with `min qᵢ = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pow2Policy {
    pub base: f64,
    pub exponents: Vec<u32>,
}

impl Pow2Policy {
    pub fn intervals(&self) -> Vec<f64> {
        self.exponents.iter().map(|&q| self.base * 2f64.powi(q as i32)).collect()
    }

    /// Cost with joint orders at every multiple of the base.
    pub fn cost(&self, inst: &Instance) -> f64 {
        inst.k0() / self.base + inst.eoq_sum(&self.intervals())
    }

    /// Common-base policy over the base snapped to a rational.
    pub fn to_policy(&self) -> Result<Policy> {
        let base = Rational::snap_default(self.base)?;
        let mults: Vec<BigInt> = self.exponents.iter().map(|&q| pow2_big(q)).collect();
        Policy::common_base(base, &mults)
    }
}

fn source_min(source: &[f64]) -> Result<f64> {
    if source.is_empty() {
        return Err(Error::Argument("empty source vector".into()));
    }
    if source.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::Argument("source intervals must be positive and finite".into()));
    }
    Ok(source.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Rounds every interval to the nearest (in log scale) point of the grid
/// `T_min·2^{k−y}`, `k ∈ ℤ`.
pub fn pow2_round_at(source: &[f64], y: f64) -> Result<Pow2Policy> {
    let t_min = source_min(source)?;
    if !(0.0..1.0).contains(&y) {
        return Err(Error::Argument(format!("offset must lie in [0, 1), got {y}")));
    }
    let q: Vec<i64> = source.iter().map(|&t| ((t / t_min).log2() + y + 0.5).floor() as i64).collect();
    Ok(normalize(t_min * 2f64.powf(-y), &q))
}

fn normalize(b: f64, q: &[i64]) -> Pow2Policy {
    let q_min = *q.iter().min().expect("non-empty");
    Pow2Policy { base: b * 2f64.powi(q_min as i32), exponents: q.iter().map(|&v| (v - q_min) as u32).collect() }
}

/// Draws the offset uniformly from `[0, 1)`.
pub fn randomized_pow2_round<R: Rng + ?Sized>(source: &[f64], rng: &mut R) -> Result<Pow2Policy> {
    let y: f64 = rng.random();
    pow2_round_at(source, y)
}

/// Scans every offset interval on which the rounded exponents are constant
/// and, on each, picks the cheapest base in closed form. The result costs no
/// more than the average over a uniform offset.
pub fn deterministic_pow2_round(source: &[f64], inst: &Instance) -> Result<Pow2Policy> {
    let t_min = source_min(source)?;
    if source.len() != inst.n() {
        return Err(Error::Argument("source length does not match the instance".into()));
    }
    let logs: Vec<f64> = source.iter().map(|&t| (t / t_min).log2()).collect();
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for &f in &logs {
        let x = f + 0.5;
        let y = x.ceil() - x;
        if y > 0.0 && y < 1.0 {
            cuts.push(y);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let cs = inst.commodities();
    let mut best: Option<(f64, Pow2Policy)> = None;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let q: Vec<i64> = logs.iter().map(|f| (f + mid + 0.5).floor() as i64).collect();
        let q_min = *q.iter().min().expect("non-empty");
        // Cost as a function of s = 2^{-y}: a/s + b·s.
        let mut a = inst.k0() * 2f64.powi(-q_min as i32);
        let mut b = 0.0;
        for (c, &qi) in cs.iter().zip(&q) {
            a += c.k * 2f64.powi(-qi as i32);
            b += c.h * 2f64.powi(qi as i32);
        }
        a /= t_min;
        b *= t_min;
        let s = (a / b).sqrt().clamp(2f64.powf(-hi), 2f64.powf(-lo));
        let cand = normalize(t_min * s, &q);
        let cost = cand.cost(inst);
        if best.as_ref().is_none_or(|(bc, _)| cost < *bc) {
            best = Some((cost, cand));
        }
    }
    Ok(best.expect("at least one offset interval").1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedBaseOptions {
    /// Grids with at most this many points are enumerated in full.
    pub full_enumeration_points: usize,
    /// Subsets tried per guessed minimum on larger grids.
    pub subset_budget: u64,
}

impl Default for FixedBaseOptions {
    fn default() -> Self {
        FixedBaseOptions { full_enumeration_points: 16, subset_budget: 1 << 15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "kebab-case")]
pub enum FixedBaseBranch {
    /// Guessed minimum `ρ·Δ` and the small intervals.
    Guessing { rho: u64 },
    /// Floored relaxation rounded to powers of two over a multiple of `Δ`.
    Rounding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedBaseResult {
    pub policy: Policy,
    pub cost: CostBreakdown,
    pub branch: FixedBaseBranch,
    pub budget_exhausted: bool,
}

pub fn fixed_base_solve(inst: &Instance, delta: &Rational, eps: f64) -> Result<FixedBaseResult> {
    fixed_base_solve_with(inst, delta, eps, &FixedBaseOptions::default())
}

/// Best policy whose intervals are all integer multiples of `delta`.
///
/// The guessing branch tries every minimum `ρΔ` with `ρ ≤ ⌈1/ε⌉` and the
/// subsets of the grid `ρΔ, (ρ+1)Δ, …, ⌈1/ε⌉ρΔ` (smallest subsets first);
/// each commodity then takes the cheapest guessed interval or its EOQ rounded
/// up to a multiple of the minimum. The rounding branch covers minima above
/// `Δ/ε`. The cheaper branch wins.
pub fn fixed_base_solve_with(
    inst: &Instance,
    delta: &Rational,
    eps: f64,
    opts: &FixedBaseOptions,
) -> Result<FixedBaseResult> {
    if !delta.is_positive() {
        return Err(Error::Argument("delta must be positive".into()));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Argument(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    let inv = (1.0 / eps - 1e-9).ceil() as u64;
    let d = delta.to_f64();
    let cs = inst.commodities();
    let mut exhausted = false;
    let mut density_cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut best: Option<(f64, Vec<u64>, u64)> = None;

    for rho in 1..=inv {
        let grid: Vec<u64> = (rho..=inv * rho).collect();
        let large: Vec<u64> = cs
            .iter()
            .map(|c| ((c.eoq() / (rho as f64 * d)).ceil() as u64).max(1) * rho)
            .map(|m| m.max(inv * rho))
            .collect();
        let rest = &grid[1..];
        let full = grid.len() <= opts.full_enumeration_points;
        let mut tried = 0u64;
        'sizes: for size in 0..=rest.len() {
            let mut comb: Vec<usize> = (0..size).collect();
            loop {
                if !full && tried >= opts.subset_budget {
                    exhausted = true;
                    break 'sizes;
                }
                tried += 1;
                let mut chosen_set: Vec<u64> = Vec::with_capacity(size + 1);
                chosen_set.push(grid[0]);
                chosen_set.extend(comb.iter().map(|&k| rest[k]));
                let mut eoq = 0.0;
                let mut mults = Vec::with_capacity(cs.len());
                for (c, &big) in cs.iter().zip(&large) {
                    let (m, v) = chosen_set
                        .iter()
                        .chain(std::iter::once(&big))
                        .map(|&m| (m, c.cost(m as f64 * d)))
                        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
                    eoq += v;
                    mults.push(m);
                }
                let mut key = mults.clone();
                key.sort_unstable();
                key.dedup();
                let dens = match density_cache.get(&key) {
                    Some(v) => *v,
                    None => {
                        let ints: Vec<Rational> = key.iter().map(|&m| Rational::from(BigInt::from(m))).collect();
                        let v = exact_density(&ints)?.value.to_f64();
                        density_cache.insert(key, v);
                        v
                    }
                };
                let cost = inst.k0() * dens / d + eoq;
                if best.as_ref().is_none_or(|(bc, _, _)| cost < *bc) {
                    best = Some((cost, mults, rho));
                }
                if !next_combination(&mut comb, rest.len()) {
                    break;
                }
            }
        }
    }

    let (_, mults, rho) = best.expect("the singleton guess is always evaluated");
    let guess = Policy::general_exact(mults.iter().map(|&m| delta.mul_int(&BigInt::from(m))).collect())?;
    let guess_cost = exact_total_cost(inst, &guess)?;

    let relax = solve_variable_base(inst, Some(inv as f64 * d));
    let p2 = deterministic_pow2_round(&relax.intervals, inst)?;
    let k = Rational::ceil_multiple(p2.base, delta)?;
    let base = delta.mul_int(&k);
    let rounded = Policy::common_base(base, &p2.exponents.iter().map(|&q| pow2_big(q)).collect::<Vec<_>>())?;
    let rounded_cost = total_cost(inst, &rounded)?;

    let out = if guess_cost.total <= rounded_cost.total {
        FixedBaseResult { policy: guess, cost: guess_cost, branch: FixedBaseBranch::Guessing { rho }, budget_exhausted: exhausted }
    } else {
        FixedBaseResult { policy: rounded, cost: rounded_cost, branch: FixedBaseBranch::Rounding, budget_exhausted: exhausted }
    };
    Ok(out)
}

/// Advances `comb` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    for i in (0..k).rev() {
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
