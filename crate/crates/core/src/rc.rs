//! Resource-constrained policies: shift rounding of the convex relaxation,
//! and the discretized LP with guessed heavy and expensive pairs.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eptas::{check_eps, derive_configuration, propagate_representatives, t_min_grid, RepresentativeSet};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearRow, LpModel, LpOutcome, LpSolution};
use crate::model::{exact_total_cost, total_cost, CostBreakdown, Instance, Policy, RepresentativeLayout};
use crate::rational::Rational;
use crate::relax::{solve_rc, RelaxationSolution};

/// Rounding retries per guess.
pub const ROUNDING_RETRIES: u32 = 30;

/// Weight on the right-shift policy in the mixture bound.
pub const SHIFT_MIX: f64 = 0.087;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub small: Vec<usize>,
    pub large: Vec<usize>,
    pub c_small: f64,
    pub c_large: f64,
}

/// Small commodities sit within `8/7` of the relaxation's minimum.
pub fn classify(inst: &Instance, relax: &RelaxationSolution) -> Classification {
    let cut = 8.0 / 7.0 * relax.t_min;
    let mut out = Classification { small: vec![], large: vec![], c_small: 0.0, c_large: 0.0 };
    for (i, (c, &t)) in inst.commodities().iter().zip(&relax.intervals).enumerate() {
        if t <= cut {
            out.small.push(i);
            out.c_small += c.cost(t);
        } else {
            out.large.push(i);
            out.c_large += c.cost(t);
        }
    }
    out
}

/// `(7/8)·K₀/T_min + (8/7)·C(small) + 2·C(large)`.
pub fn right_shift_bound(inst: &Instance, relax: &RelaxationSolution) -> f64 {
    let cl = classify(inst, relax);
    7.0 / 8.0 * inst.k0() / relax.t_min + 8.0 / 7.0 * cl.c_small + 2.0 * cl.c_large
}

/// `(1/ln2)·K₀/T_min + (1/ln2)·C(small) + (1 + 1/(4 ln2))·C(large)`.
pub fn random_shift_bound(inst: &Instance, relax: &RelaxationSolution) -> f64 {
    let cl = classify(inst, relax);
    let l2 = std::f64::consts::LN_2;
    (inst.k0() / relax.t_min + cl.c_small) / l2 + (1.0 + 1.0 / (4.0 * l2)) * cl.c_large
}

fn round_up_policy(relax: &RelaxationSolution, base: Rational) -> Result<Policy> {
    let mults = relax
        .intervals
        .iter()
        .map(|&t| Rational::ceil_multiple(t, &base))
        .collect::<Result<Vec<_>>>()?;
    Policy::common_base(base, &mults)
}

/// Base `(8/7)·T_min`; every interval rounded up to a multiple of it, so the
/// policy dominates the relaxation pointwise and stays feasible.
pub fn right_shift_policy(relax: &RelaxationSolution) -> Result<Policy> {
    let base = Rational::snap_default(relax.t_min)? * Rational::new(8, 7);
    round_up_policy(relax, base)
}

/// Base `T_min·e^{−u}` for a given shift `u ∈ [0, ln 2)`.
pub fn shifted_policy(relax: &RelaxationSolution, u: f64) -> Result<Policy> {
    if !(0.0..std::f64::consts::LN_2).contains(&u) {
        return Err(Error::Argument(format!("shift must lie in [0, ln 2), got {u}")));
    }
    round_up_policy(relax, Rational::snap_default(relax.t_min * (-u).exp())?)
}

pub fn randomized_shift_policy<R: Rng + ?Sized>(relax: &RelaxationSolution, rng: &mut R) -> Result<Policy> {
    let u = rng.random::<f64>() * std::f64::consts::LN_2;
    shifted_policy(relax, u)
}

/// Closed form of `E[T̃/T]` for `θ = T/T_min ∈ [1, 2]`.
pub fn expected_shift_ratio(theta: f64) -> Result<f64> {
    let l2 = std::f64::consts::LN_2;
    if (1.0..=1.5).contains(&theta) {
        Ok((1.0 + 1.0 / theta) / (2.0 * l2))
    } else if theta > 1.5 && theta <= 2.0 {
        Ok(5.0 / (6.0 * l2))
    } else {
        Err(Error::Argument(format!("closed form covers θ ∈ [1, 2], got {theta}")))
    }
}

/// Mixture of the two shift bounds on joint, small and large mass.
pub fn shift_mixture_coefficients() -> [f64; 3] {
    let l2 = std::f64::consts::LN_2;
    let a = [7.0 / 8.0, 8.0 / 7.0, 2.0];
    let b = [1.0 / l2, 1.0 / l2, 1.0 + 1.0 / (4.0 * l2)];
    [0, 1, 2].map(|k| SHIFT_MIX * a[k] + (1.0 - SHIFT_MIX) * b[k])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcResult {
    pub policy: Policy,
    pub cost: CostBreakdown,
    pub relaxation: RelaxationSolution,
    pub right_shift_cost: f64,
    pub shift_costs: Vec<f64>,
    /// Mean over trials of `min(right shift, trial)/OPT(RC)`.
    pub mean_min_ratio: f64,
}

/// Right shift plus `trials` randomized shifts; the cheapest wins.
pub fn rc_solve<R: Rng + ?Sized>(inst: &Instance, trials: u32, rng: &mut R) -> Result<RcResult> {
    let relax = solve_rc(inst)?;
    let a = right_shift_policy(&relax)?;
    let a_cost = total_cost(inst, &a)?;
    let mut best = (a, a_cost.clone());
    let mut shift_costs = Vec::with_capacity(trials as usize);
    let mut ratio_sum = 0.0;
    for _ in 0..trials {
        let b = randomized_shift_policy(&relax, rng)?;
        let c = total_cost(inst, &b)?;
        shift_costs.push(c.total);
        ratio_sum += a_cost.total.min(c.total) / relax.value;
        if c.total < best.1.total {
            best = (b, c);
        }
    }
    let mean_min_ratio = if trials == 0 { a_cost.total / relax.value } else { ratio_sum / trials as f64 };
    Ok(RcResult {
        policy: best.0,
        cost: best.1,
        right_shift_cost: a_cost.total,
        relaxation: relax,
        shift_costs,
        mean_min_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Representative { segment: usize },
    Grid { p: usize },
    LargeCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub interval: Rational,
    /// Position of the representative this interval is a multiple of.
    pub rep: usize,
    pub multiple: BigInt,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationSets {
    pub candidates: Vec<Vec<Candidate>>,
    /// `max_d α_id/β_d`, absent without resources or when every `α_id = 0`.
    pub t_lb: Vec<Option<f64>>,
    /// Number of geometric grid points per commodity.
    pub grid_points: usize,
    pub reps: Vec<Rational>,
    pub components: Vec<usize>,
    pub eps: f64,
}

/// Smallest `P` with `(1+ε)^{P−1} ≥ n/ε`.
pub fn grid_point_count(n: usize, eps: f64) -> usize {
    let x = (n as f64 / eps).ln() / eps.ln_1p();
    (x - 1e-9).ceil().max(0.0) as usize + 1
}

/// Candidate intervals per commodity: every representative, each geometric
/// point `(1+ε)^{p−1}·T_LB` that is at least `T_min/ε` rounded up to a
/// multiple of `R̃₁`, and the rounded-up `max(T_min/ε, EOQ)`.
pub fn discretize(inst: &Instance, eps: f64, reps: &RepresentativeSet, t_min: f64) -> Result<DiscretizationSets> {
    check_eps(eps)?;
    let r1_pos = reps.segments.iter().position(|&s| s == 1).ok_or_else(|| Error::Argument("segment 1 missing".into()))?;
    let r1 = reps.reps[r1_pos].clone();
    let p_count = grid_point_count(inst.n(), eps);
    let floor = t_min / eps;
    let mut candidates = Vec::with_capacity(inst.n());
    let mut t_lb = Vec::with_capacity(inst.n());
    for (i, c) in inst.commodities().iter().enumerate() {
        let lb = inst.resources().and_then(|r| {
            let v = r.alpha.iter().zip(&r.beta).map(|(row, b)| row[i] / b).fold(0.0, f64::max);
            (v > 0.0).then_some(v)
        });
        t_lb.push(lb);
        let mut list: Vec<Candidate> = reps
            .reps
            .iter()
            .zip(&reps.segments)
            .enumerate()
            .map(|(j, (r, &s))| Candidate {
                interval: r.clone(),
                rep: j,
                multiple: BigInt::from(1),
                provenance: Provenance::Representative { segment: s },
            })
            .collect();
        let push = |x: f64, provenance: Provenance, list: &mut Vec<Candidate>| -> Result<()> {
            let k = Rational::ceil_multiple(x, &r1)?;
            let interval = r1.mul_int(&k);
            if !list.iter().any(|c| c.interval == interval) {
                list.push(Candidate { interval, rep: r1_pos, multiple: k, provenance });
            }
            Ok(())
        };
        if let Some(lb) = lb {
            for p in 1..=p_count {
                let x = (1.0 + eps).powi(p as i32 - 1) * lb;
                if x >= floor {
                    push(x, Provenance::Grid { p }, &mut list)?;
                }
            }
        }
        push(floor.max(c.eoq()), Provenance::LargeCap, &mut list)?;
        candidates.push(list);
    }
    Ok(DiscretizationSets {
        candidates,
        t_lb,
        grid_points: p_count,
        reps: reps.reps.clone(),
        components: reps.components.clone(),
        eps,
    })
}

/// A representative set with only `R̃₁ = (1+ε)·T_min`.
pub fn single_base_representatives(t_min: f64, eps: f64) -> Result<RepresentativeSet> {
    propagate_representatives(&crate::eptas::Configuration { t_min, active: vec![1], edges: vec![] }, eps)
}

/// Fixed choices for one guess: `(commodity, candidate)` pairs set to 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairGuess {
    pub chosen: Vec<(usize, usize)>,
    /// False for the plain LP, which fixes nothing.
    pub fixes_rest: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairClasses {
    pub delta: f64,
    pub cost_threshold: f64,
    /// Rows in which each `(commodity, candidate)` pair is heavy.
    pub heavy: BTreeMap<(usize, usize), Vec<usize>>,
    pub expensive: Vec<(usize, usize)>,
}

impl PairClasses {
    pub fn is_special(&self, pair: (usize, usize)) -> bool {
        self.heavy.contains_key(&pair) || self.expensive.contains(&pair)
    }
}

/// Heavy pairs use more than `δ·β_d` with `δ = ε⁴/D²`; expensive pairs cost
/// more than `ε⁴·Õ`.
pub fn classify_pairs(inst: &Instance, sets: &DiscretizationSets, opt_estimate: f64) -> PairClasses {
    let eps = sets.eps;
    let d_rows = inst.resources().map_or(0, |r| r.beta.len());
    let delta = if d_rows == 0 { f64::INFINITY } else { eps.powi(4) / (d_rows * d_rows) as f64 };
    let cost_threshold = eps.powi(4) * opt_estimate;
    let mut heavy: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut expensive = Vec::new();
    for (i, (c, list)) in inst.commodities().iter().zip(&sets.candidates).enumerate() {
        for (j, cand) in list.iter().enumerate() {
            let t = cand.interval.to_f64();
            if let Some(r) = inst.resources() {
                for d in 0..r.beta.len() {
                    if r.alpha[d][i] / t > delta * r.beta[d] {
                        heavy.entry((i, j)).or_default().push(d);
                    }
                }
            }
            if c.cost(t) > cost_threshold {
                expensive.push((i, j));
            }
        }
    }
    PairClasses { delta, cost_threshold, heavy, expensive }
}

/// Column offset of each commodity's candidates.
fn offsets(sets: &DiscretizationSets) -> Vec<usize> {
    let mut off = Vec::with_capacity(sets.candidates.len() + 1);
    let mut acc = 0;
    for l in &sets.candidates {
        off.push(acc);
        acc += l.len();
    }
    off.push(acc);
    off
}

/// The assignment LP with capacities relaxed to `(1+ε)·β`.
pub fn build_lp(inst: &Instance, sets: &DiscretizationSets, classes: &PairClasses, guess: &PairGuess) -> LpModel {
    let off = offsets(sets);
    let cols = off[off.len() - 1];
    let mut objective = vec![0.0; cols];
    let mut equalities = Vec::new();
    for (i, (c, list)) in inst.commodities().iter().zip(&sets.candidates).enumerate() {
        let mut row = vec![0.0; cols];
        for (j, cand) in list.iter().enumerate() {
            objective[off[i] + j] = c.cost(cand.interval.to_f64());
            row[off[i] + j] = 1.0;
        }
        equalities.push(LinearRow { coeffs: row, rhs: 1.0 });
    }
    let mut inequalities = Vec::new();
    if let Some(r) = inst.resources() {
        for (alpha, &beta) in r.alpha.iter().zip(&r.beta) {
            let mut row = vec![0.0; cols];
            for (i, list) in sets.candidates.iter().enumerate() {
                for (j, cand) in list.iter().enumerate() {
                    row[off[i] + j] = alpha[i] / cand.interval.to_f64();
                }
            }
            inequalities.push(LinearRow { coeffs: row, rhs: (1.0 + sets.eps) * beta });
        }
    }
    let mut fixings = Vec::new();
    if guess.fixes_rest {
        for (i, list) in sets.candidates.iter().enumerate() {
            for j in 0..list.len() {
                if guess.chosen.contains(&(i, j)) {
                    fixings.push((off[i] + j, true));
                } else if classes.is_special((i, j)) {
                    fixings.push((off[i] + j, false));
                }
            }
        }
    }
    LpModel { objective, equalities, inequalities, fixings, upper_bounds: Vec::new() }
}

/// Draws one candidate per commodity from the LP weights.
pub fn round_lp_solution<R: Rng + ?Sized>(sets: &DiscretizationSets, x: &[f64], rng: &mut R) -> Vec<usize> {
    let off = offsets(sets);
    (0..sets.candidates.len())
        .map(|i| {
            let w: Vec<f64> = x[off[i]..off[i + 1]].iter().map(|v| v.max(0.0)).collect();
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (j, wj) in w.iter().enumerate() {
                if u < *wj {
                    return j;
                }
                u -= wj;
            }
            // Round-off left a sliver; take the last positive weight.
            w.iter().rposition(|v| *v > 0.0).unwrap_or(0)
        })
        .collect()
}

/// EOQ cost and per-row usage of a selection.
pub fn selection_profile(inst: &Instance, sets: &DiscretizationSets, pick: &[usize]) -> (f64, Vec<f64>) {
    let ts: Vec<f64> = pick.iter().enumerate().map(|(i, &j)| sets.candidates[i][j].interval.to_f64()).collect();
    (inst.eoq_sum(&ts), inst.usage(&ts))
}

/// Turns a selection into a policy with every interval scaled by `factor`.
pub fn selection_policy(sets: &DiscretizationSets, pick: &[usize], factor: &Rational) -> Result<Policy> {
    let mut used: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, &j) in pick.iter().enumerate() {
        used.entry(sets.candidates[i][j].rep).or_insert(0);
    }
    for (slot, v) in used.values_mut().enumerate() {
        *v = slot;
    }
    let layout = RepresentativeLayout {
        reps: used.keys().map(|&r| sets.reps[r].clone() * factor.clone()).collect(),
        components: used.keys().map(|&r| sets.components[r]).collect(),
        assignment: pick.iter().enumerate().map(|(i, &j)| used[&sets.candidates[i][j].rep]).collect(),
        eps: sets.eps,
    };
    let mults: Vec<BigInt> = pick.iter().enumerate().map(|(i, &j)| sets.candidates[i][j].multiple.clone()).collect();
    Policy::with_representatives(layout, &mults)
}

fn trial_seed(seed: u64, guess: u64, trial: u64) -> u64 {
    // splitmix64 finalizer over the packed indices.
    let mut z = seed ^ guess.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessRoundResult {
    pub policy: Policy,
    pub cost: CostBreakdown,
    pub guess: PairGuess,
    pub lp: LpSolution,
    /// Factor applied to the rounded selection, at most `1+3ε`.
    pub scale: Rational,
    pub guesses_tried: u64,
    pub successful_trial: u32,
    pub budget_exhausted: bool,
}

/// Guesses in order: the plain LP, then assignments of special pairs by
/// increasing count, where commodities with only special candidates must
/// take one. Pairs the plain LP favours are tried first.
fn guesses(sets: &DiscretizationSets, classes: &PairClasses, plain: Option<&LpSolution>) -> impl Iterator<Item = PairGuess> {
    let off = offsets(sets);
    let mut options: Vec<(usize, Vec<usize>, bool)> = Vec::new();
    for (i, list) in sets.candidates.iter().enumerate() {
        let mut special: Vec<usize> = (0..list.len()).filter(|&j| classes.is_special((i, j))).collect();
        if special.is_empty() {
            continue;
        }
        if let Some(s) = plain {
            special.sort_by(|&a, &b| s.x[off[i] + b].total_cmp(&s.x[off[i] + a]).then(a.cmp(&b)));
        }
        let forced = special.len() == list.len();
        options.push((i, special, forced));
    }
    let forced: Vec<usize> = (0..options.len()).filter(|&k| options[k].2).collect();
    let free: Vec<usize> = (0..options.len()).filter(|&k| !options[k].2).collect();
    let plain_guess = std::iter::once(PairGuess { chosen: vec![], fixes_rest: false });
    let rest = (0..=free.len()).flat_map(move |extra| {
        let options = options.clone();
        let forced = forced.clone();
        let free = free.clone();
        combinations(free.len(), extra).flat_map(move |comb| {
            let members: Vec<usize> = forced.iter().copied().chain(comb.iter().map(|&c| free[c])).collect();
            let radices: Vec<usize> = members.iter().map(|&m| options[m].1.len()).collect();
            let options = options.clone();
            odometer(radices).map(move |digits| PairGuess {
                chosen: members.iter().zip(&digits).map(|(&m, &d)| (options[m].0, options[m].1[d])).collect(),
                fixes_rest: true,
            })
        })
    });
    plain_guess.chain(rest)
}

fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = (k <= n).then(|| (0..k).collect());
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let c = cur.as_mut().expect("present");
        let mut i = k;
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}

fn odometer(radices: Vec<usize>) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = radices.iter().all(|&r| r > 0).then(|| vec![0; radices.len()]);
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let c = cur.as_mut().expect("present");
        let mut i = c.len();
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            c[i] += 1;
            if c[i] < radices[i] {
                break;
            }
            c[i] = 0;
        }
        Some(out)
    })
}

/// Solves the LP for each guess, rounds it up to [`ROUNDING_RETRIES`] times
/// until cost and usage land within `(1+ε)·OPT(LP)` and `(1+3ε)·β`, then
/// scales the accepted selection up until it is truly feasible. The factor is
/// the realized overload, which the acceptance test caps at `1+3ε`. Returns
/// the cheapest feasible result over at most `budget` guesses.
pub fn guess_and_round(
    inst: &Instance,
    sets: &DiscretizationSets,
    budget: u64,
    opt_estimate: f64,
    seed: u64,
) -> Result<GuessRoundResult> {
    let eps = sets.eps;
    if budget == 0 {
        return Err(Error::Argument("budget must be positive".into()));
    }
    let classes = classify_pairs(inst, sets, opt_estimate);
    let plain = match solve_lp(&build_lp(inst, sets, &classes, &PairGuess::default()))? {
        LpOutcome::Optimal(s) => Some(s),
        LpOutcome::Infeasible => None,
    };
    let worst_scale = Rational::from_f64_exact(1.0 + 3.0 * eps)?;
    let beta: Vec<f64> = inst.resources().map_or_else(Vec::new, |r| r.beta.clone());
    let mut best: Option<GuessRoundResult> = None;
    let mut tried = 0u64;
    let mut diagnosis = String::from("no guess produced a feasible LP");
    let mut exhausted = false;
    for (g, guess) in guesses(sets, &classes, plain.as_ref()).enumerate() {
        if tried == budget {
            exhausted = true;
            break;
        }
        tried += 1;
        let sol = if g == 0 {
            match &plain {
                Some(s) => s.clone(),
                None => continue,
            }
        } else {
            match solve_lp(&build_lp(inst, sets, &classes, &guess))? {
                LpOutcome::Optimal(s) => s,
                LpOutcome::Infeasible => continue,
            }
        };
        let mut accepted = None;
        for trial in 0..ROUNDING_RETRIES {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, g as u64, trial as u64));
            let pick = round_lp_solution(sets, &sol.x, &mut rng);
            let (cost, usage) = selection_profile(inst, sets, &pick);
            let cost_ok = cost <= (1.0 + eps) * sol.objective * (1.0 + 1e-12);
            let use_ok = usage.iter().zip(&beta).all(|(u, b)| *u <= (1.0 + 3.0 * eps) * b * (1.0 + 1e-12));
            if cost_ok && use_ok {
                accepted = Some((pick, trial));
                break;
            }
            diagnosis = format!("guess {g}: last rounding cost {cost:.6} vs LP {:.6}, usage {usage:?}", sol.objective);
        }
        let Some((pick, trial)) = accepted else { continue };
        let (_, usage) = selection_profile(inst, sets, &pick);
        let load = usage.iter().zip(&beta).map(|(u, b)| u / b).fold(1.0, f64::max);
        let mut scale = Rational::from_f64_exact(load)?.min(worst_scale.clone());
        let mut policy = selection_policy(sets, &pick, &scale)?;
        if !inst.is_feasible(&policy.intervals_f64(), 1e-9) {
            scale = worst_scale.clone();
            policy = selection_policy(sets, &pick, &scale)?;
        }
        if !inst.is_feasible(&policy.intervals_f64(), 1e-9) {
            diagnosis = format!("guess {g}: scaled selection still violates a row");
            continue;
        }
        let cost = exact_total_cost(inst, &policy)?;
        if best.as_ref().is_none_or(|b| cost.total < b.cost.total) {
            best = Some(GuessRoundResult {
                policy,
                cost,
                guess,
                lp: sol,
                scale,
                guesses_tried: 0,
                successful_trial: trial,
                budget_exhausted: false,
            });
        }
    }
    let mut out = best.ok_or(Error::Infeasible(diagnosis))?;
    out.guesses_tried = tried;
    out.budget_exhausted = exhausted;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingStats {
    pub trials: u32,
    /// Fraction of draws with EOQ cost above `(1+ε)·OPT(LP)`.
    pub cost_exceeded: f64,
    /// Per row, fraction of draws with usage above `(1+3ε)·β_d`.
    pub row_violated: Vec<f64>,
    /// Fraction of draws where both events are avoided.
    pub success: f64,
}

/// Repeats the categorical rounding of one LP solution and tallies how often
/// each acceptance event fails.
pub fn rounding_statistics(inst: &Instance, sets: &DiscretizationSets, lp: &LpSolution, trials: u32, seed: u64) -> RoundingStats {
    let eps = sets.eps;
    let beta: Vec<f64> = inst.resources().map_or_else(Vec::new, |r| r.beta.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut over = 0u32;
    let mut ok = 0u32;
    let mut rows = vec![0u32; beta.len()];
    for _ in 0..trials {
        let pick = round_lp_solution(sets, &lp.x, &mut rng);
        let (cost, usage) = selection_profile(inst, sets, &pick);
        let c_bad = cost > (1.0 + eps) * lp.objective * (1.0 + 1e-12);
        let mut u_bad = false;
        for (d, (u, b)) in usage.iter().zip(&beta).enumerate() {
            if *u > (1.0 + 3.0 * eps) * b * (1.0 + 1e-12) {
                rows[d] += 1;
                u_bad = true;
            }
        }
        over += c_bad as u32;
        ok += (!c_bad && !u_bad) as u32;
    }
    let f = |k: u32| k as f64 / trials.max(1) as f64;
    RoundingStats { trials, cost_exceeded: f(over), row_violated: rows.into_iter().map(f).collect(), success: f(ok) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcPtasResult {
    pub policy: Policy,
    pub cost: CostBreakdown,
    pub opt_estimate: f64,
    /// The winner came from a single-representative set.
    pub fallback_used: bool,
    pub guesses_tried: u64,
    pub budget_exhausted: bool,
}

/// Candidate representative sets: one read off the relaxation, then the
/// single-base fallback over a geometric grid of minimum guesses. The guess
/// budget is shared evenly; the cheapest feasible policy wins, and the shift
/// policy from [`rc_solve`] is kept whenever it is cheaper.
pub fn rc_ptas_solve(inst: &Instance, eps: f64, budget: u64, seed: u64) -> Result<RcPtasResult> {
    check_eps(eps)?;
    if budget == 0 {
        return Err(Error::Argument("budget must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = rc_solve(inst, 16, &mut rng)?;
    let opt = base.cost.total;
    let relax = &base.relaxation;

    let mut sources: Vec<(RepresentativeSet, f64, bool)> = Vec::new();
    let reference = relax
        .intervals
        .iter()
        .map(|&t| Rational::snap_default(t))
        .collect::<Result<Vec<_>>>()?;
    let t_ref = reference.iter().min().expect("non-empty").to_f64() * (1.0 - eps / 2.0);
    let derived = derive_configuration(&reference, eps, t_ref)?;
    sources.push((propagate_representatives(&derived.configuration, eps)?, t_ref, false));
    if inst.k0() > 0.0 {
        let lo = inst.k0() / opt;
        for t in t_min_grid(lo, inst.n() as f64 / (eps * eps) * lo, eps) {
            sources.push((single_base_representatives(t, eps)?, t, true));
        }
    }
    let per = (budget / sources.len() as u64).max(1);
    let mut best: Option<RcPtasResult> = None;
    let mut tried = 0u64;
    let mut exhausted = false;
    for (k, (reps, t, fallback)) in sources.iter().enumerate() {
        let sets = discretize(inst, eps, reps, *t)?;
        match guess_and_round(inst, &sets, per, opt, seed ^ (k as u64).wrapping_mul(0x2545_F491_4F6C_DD1D)) {
            Ok(r) => {
                tried += r.guesses_tried;
                exhausted |= r.budget_exhausted;
                if best.as_ref().is_none_or(|b| r.cost.total < b.cost.total) {
                    best = Some(RcPtasResult {
                        policy: r.policy,
                        cost: r.cost,
                        opt_estimate: opt,
                        fallback_used: *fallback,
                        guesses_tried: 0,
                        budget_exhausted: false,
                    });
                }
            }
            Err(Error::Infeasible(msg)) => log::debug!("representative set {k}: {msg}"),
            Err(e) => return Err(e),
        }
    }
    let mut out = match best {
        Some(b) if b.cost.total <= base.cost.total => b,
        _ => RcPtasResult {
            policy: base.policy.clone(),
            cost: base.cost.clone(),
            opt_estimate: opt,
            fallback_used: true,
            guesses_tried: 0,
            budget_exhausted: false,
        },
    };
    out.guesses_tried = tried;
    out.budget_exhausted = exhausted;
    Ok(out)
}

/// Largest usage-to-capacity ratio.
pub fn max_load(inst: &Instance, intervals: &[f64]) -> f64 {
    match inst.resources() {
        None => 0.0,
        Some(r) => inst.usage(intervals).iter().zip(&r.beta).map(|(u, b)| u / b).fold(0.0, f64::max),
    }
}
