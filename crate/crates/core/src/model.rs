//! Instances, policies, and single-commodity EOQ cost.
//!
//! Quantities are dimensionless. Times are `f64` on relaxation and rounding
//! paths and [`Rational`] wherever an exact least common multiple is needed;
//! converting between the two is always an explicit call.

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::eptas;
use crate::error::{Error, Result};
use crate::oracle;
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Commodity {
    pub k: f64,
    pub h: f64,
}

impl Commodity {
    pub fn new(k: f64, h: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite() && h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("commodity needs k > 0 and h > 0, got k={k}, h={h}")));
        }
        Ok(Commodity { k, h })
    }

    /// `K/t + H·t` without the domain check.
    #[inline]
    pub fn cost(&self, t: f64) -> f64 {
        self.k / t + self.h * t
    }

    pub fn eoq(&self) -> f64 {
        (self.k / self.h).sqrt()
    }

    pub fn min_cost(&self) -> f64 {
        2.0 * (self.k * self.h).sqrt()
    }
}

pub fn eoq_cost(c: &Commodity, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("interval must be positive, got {t}")));
    }
    Ok(c.cost(t))
}

pub fn eoq_minimizer(c: &Commodity) -> f64 {
    c.eoq()
}

/// Worst-case factor by which the cheaper endpoint of `[a, b]` can exceed the
/// cost at any interior point: `½(√(b/a) + √(a/b))`.
pub fn endpoint_bound(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("endpoint must be positive, got {a}")));
    }
    if a > b {
        return Err(Error::Argument(format!("need a <= b, got a={a}, b={b}")));
    }
    let r = (b / a).sqrt();
    Ok(0.5 * (r + 1.0 / r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resources {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    k0: f64,
    commodities: Vec<Commodity>,
    resources: Option<Resources>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    k0: f64,
    commodities: Vec<Commodity>,
    #[serde(default)]
    resources: Option<Resources>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;
    fn try_from(r: RawInstance) -> Result<Self> {
        Instance::new(r.k0, r.commodities, r.resources)
    }
}

impl From<Instance> for RawInstance {
    fn from(i: Instance) -> Self {
        RawInstance { k0: i.k0, commodities: i.commodities, resources: i.resources }
    }
}

impl Instance {
    /// Validates every commodity and resource row. Rows whose coefficients
    /// are all zero constrain nothing and are dropped with a warning; an
    /// empty matrix becomes `None`.
    pub fn new(k0: f64, commodities: Vec<Commodity>, resources: Option<Resources>) -> Result<Self> {
        if !(k0 >= 0.0 && k0.is_finite()) {
            return Err(Error::Domain(format!("k0 must be finite and >= 0, got {k0}")));
        }
        if commodities.is_empty() {
            return Err(Error::Domain("instance needs at least one commodity".into()));
        }
        for c in &commodities {
            Commodity::new(c.k, c.h)?;
        }
        let n = commodities.len();
        let resources = match resources {
            None => None,
            Some(r) => {
                if r.alpha.len() != r.beta.len() {
                    return Err(Error::Domain(format!(
                        "{} resource rows but {} capacities",
                        r.alpha.len(),
                        r.beta.len()
                    )));
                }
                let mut alpha = Vec::new();
                let mut beta = Vec::new();
                for (d, (row, &b)) in r.alpha.into_iter().zip(r.beta.iter()).enumerate() {
                    if row.len() != n {
                        return Err(Error::Domain(format!("resource row {d} has {} entries, expected {n}", row.len())));
                    }
                    if row.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
                        return Err(Error::Domain(format!("resource row {d} has a negative or non-finite entry")));
                    }
                    if !(b > 0.0 && b.is_finite()) {
                        return Err(Error::Domain(format!("capacity {d} must be positive, got {b}")));
                    }
                    if row.iter().all(|&a| a == 0.0) {
                        log::warn!("dropping resource row {d}: all coefficients are zero");
                        continue;
                    }
                    alpha.push(row);
                    beta.push(b);
                }
                (!alpha.is_empty()).then_some(Resources { alpha, beta })
            }
        };
        Ok(Instance { k0, commodities, resources })
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn resources(&self) -> Option<&Resources> {
        self.resources.as_ref()
    }

    pub fn n(&self) -> usize {
        self.commodities.len()
    }

    pub fn eoq_intervals(&self) -> Vec<f64> {
        self.commodities.iter().map(Commodity::eoq).collect()
    }

    pub fn eoq_sum(&self, intervals: &[f64]) -> f64 {
        self.commodities.iter().zip(intervals).map(|(c, &t)| c.cost(t)).sum()
    }

    /// Resource consumption `Σᵢ α_id / Tᵢ` for every row.
    pub fn usage(&self, intervals: &[f64]) -> Vec<f64> {
        match &self.resources {
            None => Vec::new(),
            Some(r) => r
                .alpha
                .iter()
                .map(|row| row.iter().zip(intervals).map(|(a, t)| a / t).sum())
                .collect(),
        }
    }

    /// True when every row satisfies `usage ≤ β·(1 + rel_tol)`.
    pub fn is_feasible(&self, intervals: &[f64], rel_tol: f64) -> bool {
        match &self.resources {
            None => true,
            Some(r) => self
                .usage(intervals)
                .iter()
                .zip(&r.beta)
                .all(|(u, b)| *u <= b * (1.0 + rel_tol)),
        }
    }

    pub fn without_resources(&self) -> Instance {
        Instance { k0: self.k0, commodities: self.commodities.clone(), resources: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Interval {
    Exact(Rational),
    Float(f64),
}

impl Interval {
    pub fn to_f64(&self) -> f64 {
        match self {
            Interval::Exact(r) => r.to_f64(),
            Interval::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Interval::Exact(r) => Some(r),
            Interval::Float(_) => None,
        }
    }
}

/// Representatives that a policy's joint orders are aligned to. Commodity `i`
/// orders every `multiplier[i]`-th multiple of `reps[assignment[i]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeLayout {
    pub reps: Vec<Rational>,
    /// Component id of each representative.
    pub components: Vec<usize>,
    pub assignment: Vec<usize>,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Structure {
    General,
    CommonBase { base: Rational },
    RepresentativeSet(RepresentativeLayout),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub structure: Structure,
    pub intervals: Vec<Interval>,
}

impl Policy {
    pub fn general_exact(intervals: Vec<Rational>) -> Result<Self> {
        let p = Policy { structure: Structure::General, intervals: intervals.into_iter().map(Interval::Exact).collect() };
        p.validate()?;
        Ok(p)
    }

    pub fn general_float(intervals: Vec<f64>) -> Result<Self> {
        let p = Policy { structure: Structure::General, intervals: intervals.into_iter().map(Interval::Float).collect() };
        p.validate()?;
        Ok(p)
    }

    /// Intervals `multipliers[i]·base`.
    pub fn common_base(base: Rational, multipliers: &[BigInt]) -> Result<Self> {
        let intervals = multipliers.iter().map(|m| Interval::Exact(base.mul_int(m))).collect();
        let p = Policy { structure: Structure::CommonBase { base }, intervals };
        p.validate()?;
        Ok(p)
    }

    pub fn with_representatives(layout: RepresentativeLayout, multipliers: &[BigInt]) -> Result<Self> {
        if layout.assignment.len() != multipliers.len() {
            return Err(Error::Argument("assignment and multipliers differ in length".into()));
        }
        let intervals = layout
            .assignment
            .iter()
            .zip(multipliers)
            .map(|(&a, m)| {
                layout
                    .reps
                    .get(a)
                    .map(|r| Interval::Exact(r.mul_int(m)))
                    .ok_or_else(|| Error::Argument(format!("assignment points at missing representative {a}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let p = Policy { structure: Structure::RepresentativeSet(layout), intervals };
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals_f64(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::to_f64).collect()
    }

    pub fn exact_intervals(&self) -> Option<Vec<Rational>> {
        self.intervals.iter().map(|i| i.exact().cloned()).collect()
    }

    pub fn min_interval(&self) -> f64 {
        self.intervals_f64().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Replace floating intervals by their best rational approximations.
    pub fn snapped(&self, max_den: u64) -> Result<Policy> {
        let intervals = self
            .intervals
            .iter()
            .map(|i| match i {
                Interval::Exact(r) => Ok(Interval::Exact(r.clone())),
                Interval::Float(x) => Rational::snap(*x, max_den).map(Interval::Exact),
            })
            .collect::<Result<Vec<_>>>()?;
        let p = Policy { structure: self.structure.clone(), intervals };
        p.validate()?;
        Ok(p)
    }

    /// Positivity plus the divisibility promised by the structure tag.
    pub fn validate(&self) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(Error::Domain("policy has no intervals".into()));
        }
        for (i, t) in self.intervals.iter().enumerate() {
            let ok = match t {
                Interval::Exact(r) => r.is_positive(),
                Interval::Float(x) => *x > 0.0 && x.is_finite(),
            };
            if !ok {
                return Err(Error::Domain(format!("interval {i} is not positive")));
            }
        }
        match &self.structure {
            Structure::General => Ok(()),
            Structure::CommonBase { base } => {
                if !base.is_positive() {
                    return Err(Error::Domain("common base must be positive".into()));
                }
                for (i, t) in self.intervals.iter().enumerate() {
                    let r = t.exact().ok_or_else(|| Error::Domain(format!("interval {i} is not exact")))?;
                    if r.multiple_of(base).is_none() {
                        return Err(Error::Domain(format!("interval {i} = {r} is not a multiple of {base}")));
                    }
                }
                Ok(())
            }
            Structure::RepresentativeSet(layout) => {
                if layout.components.len() != layout.reps.len() {
                    return Err(Error::Domain("component list does not match representatives".into()));
                }
                if layout.assignment.len() != self.intervals.len() {
                    return Err(Error::Domain("assignment does not cover every commodity".into()));
                }
                if layout.reps.iter().any(|r| !r.is_positive()) {
                    return Err(Error::Domain("representatives must be positive".into()));
                }
                for (i, (t, &a)) in self.intervals.iter().zip(&layout.assignment).enumerate() {
                    let r = t.exact().ok_or_else(|| Error::Domain(format!("interval {i} is not exact")))?;
                    let rep = layout.reps.get(a).ok_or_else(|| Error::Domain(format!("bad assignment for {i}")))?;
                    if r.multiple_of(rep).is_none() {
                        return Err(Error::Domain(format!("interval {i} = {r} is not a multiple of {rep}")));
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum JointMethod {
    ExactLcm,
    BaseFormula,
    /// Sum of per-component densities; the true joint cost lies in
    /// `[lower, upper]`.
    ComponentEstimate { eps: f64, lower: f64, upper: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub joint: f64,
    pub eoq: f64,
    pub total: f64,
    pub joint_method: JointMethod,
}

impl CostBreakdown {
    fn new(joint: f64, eoq: f64, joint_method: JointMethod) -> Self {
        CostBreakdown { joint, eoq, total: joint + eoq, joint_method }
    }
}

fn check_shape(inst: &Instance, p: &Policy) -> Result<f64> {
    if p.n() != inst.n() {
        return Err(Error::Argument(format!("policy has {} intervals, instance has {} commodities", p.n(), inst.n())));
    }
    p.validate()?;
    Ok(inst.eoq_sum(&p.intervals_f64()))
}

/// `F(T) = J(T) + Σ Cᵢ(Tᵢ)`, with `J` chosen by structure: `K₀/Δ` for a
/// common base, the per-component estimate for representative sets, and the
/// exact inclusion-exclusion density for general rational policies.
pub fn total_cost(inst: &Instance, p: &Policy) -> Result<CostBreakdown> {
    let eoq = check_shape(inst, p)?;
    match &p.structure {
        Structure::CommonBase { base } => Ok(CostBreakdown::new(inst.k0 / base.to_f64(), eoq, JointMethod::BaseFormula)),
        Structure::RepresentativeSet(layout) => {
            let est = eptas::component_cost_estimate(inst.k0, layout)?;
            Ok(CostBreakdown::new(
                est.upper,
                eoq,
                JointMethod::ComponentEstimate { eps: layout.eps, lower: est.lower, upper: est.upper },
            ))
        }
        Structure::General => general_cost(inst, p, eoq),
    }
}

/// Like [`total_cost`] but evaluates the joint cost exactly whenever the
/// relevant times are rational: a representative-set policy orders at every
/// multiple of every representative, so its density is that of the
/// representatives.
pub fn exact_total_cost(inst: &Instance, p: &Policy) -> Result<CostBreakdown> {
    let eoq = check_shape(inst, p)?;
    match &p.structure {
        Structure::CommonBase { base } => Ok(CostBreakdown::new(inst.k0 / base.to_f64(), eoq, JointMethod::BaseFormula)),
        Structure::RepresentativeSet(layout) => {
            if inst.k0 == 0.0 {
                return Ok(CostBreakdown::new(0.0, eoq, JointMethod::ExactLcm));
            }
            let d = oracle::exact_density(&layout.reps)?;
            Ok(CostBreakdown::new(inst.k0 * d.value.to_f64(), eoq, JointMethod::ExactLcm))
        }
        Structure::General => general_cost(inst, p, eoq),
    }
}

fn general_cost(inst: &Instance, p: &Policy, eoq: f64) -> Result<CostBreakdown> {
    if inst.k0 == 0.0 {
        return Ok(CostBreakdown::new(0.0, eoq, JointMethod::ExactLcm));
    }
    let exact = p.exact_intervals().ok_or_else(|| {
        Error::Unsupported("general policy has floating intervals; snap to rationals or attach a structure".into())
    })?;
    let d = oracle::exact_density(&exact)?;
    Ok(CostBreakdown::new(inst.k0 * d.value.to_f64(), eoq, JointMethod::ExactLcm))
}

/// `2^q` as a big integer.
pub(crate) fn pow2_big(q: u32) -> BigInt {
    BigInt::one() << q as usize
}
