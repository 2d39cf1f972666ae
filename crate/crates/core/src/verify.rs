//! Invariant suites run by `jrp verify`: cheap, seeded spot checks of each
//! module's guarantees, plus a per-instance cross-check of every algorithm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eptas::eptas_solve;
use crate::error::Result;
use crate::evenly::{theta_mixture_bound, pair_density_floor_holds};
use crate::harness::{derive_seed, generate_instance, relaxation_lower_bound, solve, Algorithm, GeneratorParams, SolveOptions};
use crate::model::{endpoint_bound, exact_total_cost, total_cost, Commodity, Instance};
use crate::oracle::{empirical_density, exact_density};
use crate::pow2::{deterministic_pow2_round, fixed_base_solve, randomized_pow2_round};
use crate::rational::Rational;
use crate::rc::{rc_ptas_solve, rc_solve, right_shift_bound, right_shift_policy, shift_mixture_coefficients};
use crate::relax::solve_variable_base;

/// Worst ratio of power-of-two rounding to the relaxation.
pub const POW2_BOUND: f64 = 1.02015;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, r: Result<std::result::Result<String, String>>) -> CheckOutcome {
    let (passed, detail) = match r {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome { name: name.to_string(), passed, detail }
}

fn rng_for(seed: u64, suite: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, suite))
}

fn free_instances(seed: u64, count: usize, n_max: usize) -> Result<Vec<Instance>> {
    let params = GeneratorParams { n_min: 1, n_max, ..Default::default() };
    let mut rng = rng_for(seed, 100);
    (0..count).map(|_| generate_instance(&params, &mut rng)).collect()
}

fn random_rational<R: Rng>(rng: &mut R, max_den: i64) -> Rational {
    let den = rng.random_range(1..=max_den);
    Rational::new(rng.random_range(1..=4 * den), den)
}

fn oracle_suite(seed: u64) -> Result<std::result::Result<String, String>> {
    let mut rng = rng_for(seed, 1);
    for k in 0..200 {
        let n = rng.random_range(1..=4);
        let ts: Vec<Rational> = (0..n).map(|_| random_rational(&mut rng, 6)).collect();
        let exact = exact_density(&ts)?.value;
        let counted = empirical_density(&ts, 1)?;
        if exact != counted {
            return Ok(Err(format!("policy {k} {ts:?}: inclusion-exclusion {exact} vs period count {counted}")));
        }
    }
    Ok(Ok("200 policies agree exactly".into()))
}

fn eoq_suite(seed: u64) -> Result<std::result::Result<String, String>> {
    let mut rng = rng_for(seed, 2);
    for _ in 0..1000 {
        let c = Commodity::new(rng.random_range(0.1..10.0), rng.random_range(0.1..10.0))?;
        let star = c.eoq();
        let theta = rng.random_range(0.1..10.0);
        let lhs = c.cost(theta * star);
        let rhs = 0.5 * (theta + 1.0 / theta) * c.cost(star);
        if (lhs - rhs).abs() > 1e-12 * rhs {
            return Ok(Err(format!("scaling identity fails at θ={theta}: {lhs} vs {rhs}")));
        }
        let a = rng.random_range(0.1..10.0);
        let b = a * rng.random_range(1.0..10.0);
        let t = rng.random_range(a..=b);
        let bound = endpoint_bound(a, b)?;
        if c.cost(a).min(c.cost(b)) > bound * c.cost(t) + 1e-12 {
            return Ok(Err(format!("endpoint bound fails on ({a}, {b}, {t})")));
        }
        let m = c.cost(0.5 * (a + b));
        if m > 0.5 * (c.cost(a) + c.cost(b)) + 1e-12 {
            return Ok(Err(format!("midpoint convexity fails on ({a}, {b})")));
        }
    }
    Ok(Ok("1000 triples".into()))
}

fn pow2_suite(seed: u64) -> Result<std::result::Result<String, String>> {
    let mut rng = rng_for(seed, 3);
    let mut worst: f64 = 0.0;
    for inst in free_instances(seed, 50, 8)? {
        let relax = solve_variable_base(&inst, None);
        let p = deterministic_pow2_round(&relax.intervals, &inst)?;
        worst = worst.max(p.cost(&inst) / relax.value);
        let r = randomized_pow2_round(&relax.intervals, &mut rng)?;
        let t = r.intervals();
        for i in 0..t.len() {
            for j in 0..t.len() {
                if relax.intervals[i] <= relax.intervals[j] && t[i] > t[j] {
                    return Ok(Err(format!("randomized rounding reverses the order of {i} and {j}")));
                }
            }
        }
    }
    if worst <= POW2_BOUND {
        Ok(Ok(format!("worst ratio {worst:.6}")))
    } else {
        Ok(Err(format!("worst ratio {worst:.6} exceeds {POW2_BOUND}")))
    }
}

fn fixed_base_suite(seed: u64) -> Result<std::result::Result<String, String>> {
    let delta = Rational::new(1, 2);
    for (k, inst) in free_instances(seed, 10, 3)?.iter().enumerate() {
        let r = fixed_base_solve(inst, &delta, 0.25)?;
        let ts = r.policy.exact_intervals().unwrap_or_default();
        if ts.len() != inst.n() || ts.iter().any(|t| t.multiple_of(&delta).is_none()) {
            return Ok(Err(format!("instance {k}: an interval is not a multiple of {delta}")));
        }
        let lb = relaxation_lower_bound(inst)?;
        if r.cost.total < lb * (1.0 - 1e-9) {
            return Ok(Err(format!("instance {k}: cost {} below relaxation {lb}", r.cost.total)));
        }
    }
    Ok(Ok("10 instances on the 1/2 grid".into()))
}

fn evenly_suite() -> Result<std::result::Result<String, String>> {
    let one = Rational::one();
    for q in 1..=20i64 {
        for p in q + 1..3 * q {
            let t = Rational::new(p, q);
            if !t.is_integer() && !pair_density_floor_holds(&one, &t)? {
                return Ok(Err(format!("pair density below 6/5 at T_f = {t}")));
            }
        }
    }
    let bound = theta_mixture_bound();
    if bound > 1.01915 {
        return Ok(Err(format!("mixture bound {bound}")));
    }
    Ok(Ok(format!("pair sweep q ≤ 20, mixture {bound:.6}")))
}

fn eptas_suite(seed: u64) -> Result<std::result::Result<String, String>> {
    for (k, inst) in free_instances(seed, 5, 3)?.iter().enumerate() {
        let lb = relaxation_lower_bound(inst)?;
        let relax = solve_variable_base(inst, None);
        let pow2 = deterministic_pow2_round(&relax.intervals, inst)?.cost(inst);
        let r = eptas_solve(inst, 0.5, 5_000)?;
        if r.cost.total < lb * (1.0 - 1e-9) || r.cost.total > pow2 * (1.0 + 1e-9) {
            return Ok(Err(format!("instance {k}: cost {} outside [{lb}, {pow2}]", r.cost.total)));
        }
    }
    Ok(Ok("5 instances bracketed".into()))
}

fn rc_suite(seed: u64) -> Result<std::result::Result<String, String>> {
    let params = GeneratorParams { n_min: 1, n_max: 5, resource_rows: 2, ..Default::default() };
    let mut rng = rng_for(seed, 7);
    for k in 0..10 {
        let inst = generate_instance(&params, &mut rng)?;
        let r = rc_solve(&inst, 16, &mut rng)?;
        if !inst.is_feasible(&r.policy.intervals_f64(), 1e-9) {
            return Ok(Err(format!("instance {k}: rc policy infeasible")));
        }
        let a = total_cost(&inst, &right_shift_policy(&r.relaxation)?)?.total;
        let bound = right_shift_bound(&inst, &r.relaxation);
        if a > bound + 1e-9 {
            return Ok(Err(format!("instance {k}: right shift {a} above {bound}")));
        }
    }
    let m = shift_mixture_coefficients();
    if m[0] > 1.394 || m[1] > 1.417 || m[2] > 1.417 {
        return Ok(Err(format!("mixture coefficients {m:?}")));
    }
    let inst = generate_instance(&GeneratorParams { n_min: 3, n_max: 3, resource_rows: 1, ..Default::default() }, &mut rng)?;
    let p = rc_ptas_solve(&inst, 0.5, 50, seed)?;
    if !inst.is_feasible(&p.policy.intervals_f64(), 1e-9) {
        return Ok(Err("rc-ptas policy infeasible".into()));
    }
    Ok(Ok("10 shift instances and one rc-ptas instance feasible".into()))
}

/// Every module suite, in a fixed order.
pub fn run_invariant_suites(seed: u64) -> Vec<CheckOutcome> {
    vec![
        outcome("oracle: inclusion-exclusion equals period counting", oracle_suite(seed)),
        outcome("eoq: scaling, endpoint bound, convexity", eoq_suite(seed)),
        outcome("pow2: ratio and order preservation", pow2_suite(seed)),
        outcome("fixed-base: grid membership and lower bound", fixed_base_suite(seed)),
        outcome("evenly: pair density and mixture bound", evenly_suite()),
        outcome("eptas: bracket between relaxation and pow2", eptas_suite(seed)),
        outcome("rc: feasibility, right-shift bound, mixture", rc_suite(seed)),
    ]
}

/// Runs every algorithm that applies to `inst` and checks its output
/// against the relaxation and, without resources, against pow2.
pub fn verify_instance(inst: &Instance, base: &SolveOptions) -> Vec<CheckOutcome> {
    let algos: Vec<Algorithm> = Algorithm::ALL
        .into_iter()
        .filter(|a| a.handles_resources() || inst.resources().is_none())
        .collect();
    let mut pow2_cost = None;
    let mut out = Vec::new();
    for a in algos {
        let opts = SolveOptions { algorithm: a, ..base.clone() };
        let r = solve(inst, &opts).map(|s| {
            let exact = exact_total_cost(inst, &s.policy).map(|c| c.total).unwrap_or(s.cost.total);
            if a == Algorithm::Pow2 {
                pow2_cost = Some(s.cost.total);
            }
            let mut problems = Vec::new();
            if s.ratio < 1.0 - 1e-9 {
                problems.push(format!("ratio {:.6} below 1", s.ratio));
            }
            if !inst.is_feasible(&s.policy.intervals_f64(), 1e-9) {
                problems.push("policy violates a resource row".to_string());
            }
            if a == Algorithm::Pow2 && s.ratio > POW2_BOUND {
                problems.push(format!("pow2 ratio {:.6} above {POW2_BOUND}", s.ratio));
            }
            if a == Algorithm::Eptas {
                if let Some(p) = pow2_cost {
                    if s.cost.total > p * (1.0 + 1e-9) {
                        problems.push(format!("eptas cost {} above pow2 {p}", s.cost.total));
                    }
                }
            }
            if problems.is_empty() {
                Ok(format!("cost {exact:.6}, ratio {:.6}", s.ratio))
            } else {
                Err(problems.join("; "))
            }
        });
        out.push(outcome(a.name(), r));
    }
    out
}
