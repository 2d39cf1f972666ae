//! Evenly-spaced policies: every interval an integer multiple of one spacing.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{endpoint_bound, Commodity, Instance, Policy};
use crate::oracle::pair_density;
use crate::pow2::{deterministic_pow2_round, randomized_pow2_round, Pow2Policy};
use crate::rational::Rational;
use crate::relax::solve_variable_base;

/// Mixing weight on the power-of-two policy.
pub const THETA: f64 = 0.89755;

/// Reference threshold separating the two existence cases.
pub const DEFAULT_THRESHOLD: u32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvenlySpacedPolicy {
    pub delta: Rational,
    pub multipliers: Vec<u64>,
}

impl EvenlySpacedPolicy {
    pub fn intervals_f64(&self) -> Vec<f64> {
        let d = self.delta.to_f64();
        self.multipliers.iter().map(|&k| k as f64 * d).collect()
    }

    pub fn joint_cost(&self, k0: f64) -> f64 {
        k0 / self.delta.to_f64()
    }

    pub fn cost(&self, inst: &Instance) -> f64 {
        self.joint_cost(inst.k0()) + inst.eoq_sum(&self.intervals_f64())
    }

    pub fn to_policy(&self) -> Result<Policy> {
        let mults: Vec<BigInt> = self.multipliers.iter().map(|&k| BigInt::from(k)).collect();
        Policy::common_base(self.delta.clone(), &mults)
    }
}

/// The cheaper of `⌊T*/Δ⌋` (at least 1) and `⌈T*/Δ⌉`; ties go down.
fn best_multiplier(c: &Commodity, delta: f64) -> u64 {
    let e = c.eoq() / delta;
    let lo = e.floor().max(1.0);
    let hi = e.ceil().max(1.0);
    let k = if c.cost(hi * delta) < c.cost(lo * delta) { hi } else { lo };
    k as u64
}

fn evaluate(inst: &Instance, delta: f64) -> (f64, Vec<u64>) {
    let mults: Vec<u64> = inst.commodities().iter().map(|c| best_multiplier(c, delta)).collect();
    let cost = inst.k0() / delta
        + inst.commodities().iter().zip(&mults).map(|(c, &k)| c.cost(k as f64 * delta)).sum::<f64>();
    (cost, mults)
}

/// Minimizer of `(K₀ + Σ Kᵢ/κᵢ)/Δ + Δ·Σ Hᵢκᵢ` for fixed multipliers.
fn refine(inst: &Instance, mults: &[u64]) -> f64 {
    let mut a = inst.k0();
    let mut b = 0.0;
    for (c, &k) in inst.commodities().iter().zip(mults) {
        a += c.k / k as f64;
        b += c.h * k as f64;
    }
    (a / b).sqrt()
}

/// Cheapest evenly-spaced policy over a geometric sweep of spacings.
///
/// The sweep covers `[K₀/Õ, K₀/(εÕ)]` with ratio `1+ε`, where `Õ` is the
/// cost of the deterministic power-of-two policy. Inside every bracket the
/// multipliers found at the left end are held fixed and the spacing moved to
/// its closed-form optimum. The power-of-two base itself is also tried, so
/// the result is never worse than that policy.
pub fn best_evenly_spaced(inst: &Instance, eps: f64) -> Result<EvenlySpacedPolicy> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Argument(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    let relax = solve_variable_base(inst, None);
    let p2 = deterministic_pow2_round(&relax.intervals, inst)?;

    if inst.k0() == 0.0 {
        let min_eoq = inst.commodities().iter().map(Commodity::eoq).fold(f64::INFINITY, f64::min);
        let delta = Rational::snap_default(eps * eps * min_eoq)?;
        log::info!("no joint cost: spacing fixed at {delta}, intervals snap to near-EOQ multiples");
        return Ok(snap_result(inst, delta));
    }

    let opt = p2.cost(inst);
    let lo = inst.k0() / opt;
    let hi = lo / eps;
    let mut grid = Vec::new();
    let mut d = lo;
    while d < hi {
        grid.push(d);
        d *= 1.0 + eps;
    }
    grid.push(hi);

    let mut best = (f64::INFINITY, f64::NAN);
    let consider = |delta: f64, best: &mut (f64, f64)| {
        let (cost, _) = evaluate(inst, delta);
        if cost < best.0 || (cost == best.0 && delta < best.1) {
            *best = (cost, delta);
        }
    };
    for (j, &left) in grid.iter().enumerate() {
        consider(left, &mut best);
        let right = grid.get(j + 1).copied().unwrap_or(left);
        let (_, mults) = evaluate(inst, left);
        let star = refine(inst, &mults).clamp(left, right);
        consider(star, &mut best);
    }
    consider(p2.base, &mut best);
    let delta = Rational::snap_default(best.1)?;
    Ok(snap_result(inst, delta))
}

fn snap_result(inst: &Instance, delta: Rational) -> EvenlySpacedPolicy {
    let (_, multipliers) = evaluate(inst, delta.to_f64());
    EvenlySpacedPolicy { delta, multipliers }
}

/// Randomized power-of-two rounding of a reference policy.
pub fn construct_policy_a<R: Rng + ?Sized>(reference: &[f64], rng: &mut R) -> Result<Pow2Policy> {
    randomized_pow2_round(reference, rng)
}

pub fn construct_policy_b(inst: &Instance, reference: &[Rational]) -> Result<EvenlySpacedPolicy> {
    construct_policy_b_with(inst, reference, DEFAULT_THRESHOLD)
}

/// Spacing `T_min/threshold`; each interval moves to the cheaper adjacent
/// multiple. Joint cost is exactly `threshold·K₀/T_min`.
pub fn construct_policy_b_with(inst: &Instance, reference: &[Rational], threshold: u32) -> Result<EvenlySpacedPolicy> {
    let t_min = check_reference(inst, reference)?;
    if threshold == 0 {
        return Err(Error::Argument("threshold must be positive".into()));
    }
    let delta = t_min / Rational::integer(threshold as i64);
    let multipliers = adjacent_multiples(inst, reference, &delta, |_| None)?;
    Ok(EvenlySpacedPolicy { delta, multipliers })
}

/// Policy for references whose first non-multiple of `T_min` lies above
/// `threshold·T_min`: spacing `T_min`, short intervals kept, long ones moved
/// to the cheaper adjacent multiple.
pub fn construct_case1_policy(inst: &Instance, reference: &[Rational], threshold: u32) -> Result<EvenlySpacedPolicy> {
    let t_min = check_reference(inst, reference)?;
    let cap = t_min.mul_int(&BigInt::from(threshold));
    let multipliers = adjacent_multiples(inst, reference, &t_min, |t| {
        if *t <= cap {
            Some(t.multiple_of(&t_min).ok_or_else(|| {
                Error::Argument(format!("{t} is not a multiple of {t_min} but lies below {threshold}·T_min"))
            }))
        } else {
            None
        }
    })?;
    Ok(EvenlySpacedPolicy { delta: t_min, multipliers })
}

fn check_reference(inst: &Instance, reference: &[Rational]) -> Result<Rational> {
    if reference.len() != inst.n() {
        return Err(Error::Argument("reference length does not match the instance".into()));
    }
    if reference.iter().any(|t| !t.is_positive()) {
        return Err(Error::Argument("reference intervals must be positive".into()));
    }
    Ok(reference.iter().min().expect("instance is non-empty").clone())
}

fn adjacent_multiples(
    inst: &Instance,
    reference: &[Rational],
    delta: &Rational,
    fixed: impl Fn(&Rational) -> Option<Result<BigInt>>,
) -> Result<Vec<u64>> {
    let d = delta.to_f64();
    let mut out = Vec::with_capacity(reference.len());
    for (c, t) in inst.commodities().iter().zip(reference) {
        let k = match fixed(t) {
            Some(k) => k?,
            None => {
                let q = t / delta;
                let lo = q.floor().max(BigInt::one());
                let hi = q.ceil().max(BigInt::one());
                let cost = |k: &BigInt| c.cost(k.to_f64().unwrap_or(f64::INFINITY) * d);
                if cost(&hi) < cost(&lo) { hi } else { lo }
            }
        };
        out.push(k.to_u64().ok_or_else(|| Error::Argument("multiplier does not fit in 64 bits".into()))?);
    }
    Ok(out)
}

/// Coefficients on the joint and EOQ parts of the expected mixture cost.
pub fn theta_mixture_coefficients(theta: f64) -> (f64, f64) {
    let tb = 1.0 / (2f64.sqrt() * std::f64::consts::LN_2);
    let b_eoq = endpoint_bound(3.0, 4.0).expect("3 ≤ 4");
    let joint = theta * tb * 5.0 / 6.0 + (1.0 - theta) * 2.5;
    let eoq = theta * tb + (1.0 - theta) * b_eoq;
    (joint, eoq)
}

pub fn theta_mixture_bound() -> f64 {
    let (a, b) = theta_mixture_coefficients(THETA);
    a.max(b)
}

/// Checks `1/T_min + 1/T_f − 1/lcm ≥ (6/5)/T_min` for a fractional `T_f`
/// in `[T_min, 3T_min)`.
pub fn pair_density_floor_holds(t_min: &Rational, t_f: &Rational) -> Result<bool> {
    if !t_min.is_positive() || t_f < t_min {
        return Err(Error::Argument("need 0 < t_min ≤ t_f".into()));
    }
    if *t_f >= t_min.mul_int(&BigInt::from(3)) {
        return Err(Error::Argument("t_f must be below 3·t_min".into()));
    }
    if t_f.multiple_of(t_min).is_some() {
        return Err(Error::Argument("t_f must not be a multiple of t_min".into()));
    }
    Ok(pair_density(t_min, t_f) >= Rational::new(6, 5) / t_min.clone())
}
