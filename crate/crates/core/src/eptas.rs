//! Approximation scheme over Ψ-pairwise aligned representatives.
//!
//! A configuration guesses a lower estimate of the smallest interval, the set
//! of active `(1+ε)`-geometric segments above it, a forest on those segments
//! and, per forest edge, the pair of integer multiples at which the two
//! representatives meet. Propagating exact ratios along the forest fixes every
//! representative; each commodity then picks its cheapest option.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evenly::best_evenly_spaced;
use crate::model::{exact_total_cost, total_cost, CostBreakdown, Instance, Policy, RepresentativeLayout};
use crate::oracle::exact_density;
use crate::pow2::deterministic_pow2_round;
use crate::rational::{rational_lcm, Rational};
use crate::relax::solve_variable_base;

/// Denominator cap applied to source representatives.
const SNAP_DEN: u64 = 1_000_000;

pub fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 0.5 {
        Ok(())
    } else {
        Err(Error::Argument(format!("eps must lie in (0, 1/2], got {eps}")))
    }
}

/// Smallest `L` with `(1+ε)^L ≥ 1/ε`.
pub fn segment_count(eps: f64) -> usize {
    let x = (1.0 / eps).ln() / eps.ln_1p();
    // Guard against 1.9999999 style round-off at exact powers.
    (x - 1e-9).ceil().max(1.0) as usize
}

/// Alignment parameter `(2/ε³)·ln²(1/ε)`.
pub fn psi(eps: f64) -> f64 {
    2.0 / eps.powi(3) * (1.0 / eps).ln().powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentStructure {
    pub t_min_estimate: f64,
    pub eps: f64,
    pub segments: usize,
    pub psi: f64,
}

impl SegmentStructure {
    pub fn new(t_min_estimate: f64, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if !(t_min_estimate > 0.0) {
            return Err(Error::Argument("segment origin must be positive".into()));
        }
        Ok(SegmentStructure { t_min_estimate, eps, segments: segment_count(eps), psi: psi(eps) })
    }

    /// Segment `ℓ ∈ 1..=L` with `(1+ε)^{ℓ−1} ≤ t/T_min < (1+ε)^ℓ`.
    pub fn segment_of(&self, t: f64) -> Option<usize> {
        let r = t / self.t_min_estimate;
        if r < 1.0 {
            return None;
        }
        let mut l = (r.ln() / self.eps.ln_1p()).floor() as usize + 1;
        // Nudge across boundaries missed by the logarithm.
        let lower = |l: usize| (1.0 + self.eps).powi(l as i32 - 1);
        while l > 1 && r < lower(l) {
            l -= 1;
        }
        while r >= lower(l + 1) {
            l += 1;
        }
        (l <= self.segments).then_some(l)
    }
}

/// Forest edge: `mult_a·R_a = mult_b·R_b` for segments `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub mult_a: u64,
    pub mult_b: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub t_min: f64,
    /// Active segments in increasing order; always starts with 1.
    pub active: Vec<usize>,
    pub edges: Vec<Edge>,
}

/// Ordered pairs in `[1, ⌊Ψ⌋]²` with gcd 1.
pub fn coprime_pairs(psi: f64) -> Vec<(u64, u64)> {
    let m = psi.floor().max(1.0) as u64;
    let mut out = Vec::new();
    for a in 1..=m {
        for b in 1..=m {
            if a.gcd(&b) == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn is_forest(k: usize, edges: &[(usize, usize)], mask: u64) -> bool {
    let mut parent: Vec<usize> = (0..k).collect();
    for (j, &(u, v)) in edges.iter().enumerate() {
        if mask >> j & 1 == 1 {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return false;
            }
            parent[ru] = rv;
        }
    }
    true
}

/// Every acyclic edge subset of the complete graph on `k` labelled vertices.
pub fn labelled_forests(k: usize) -> Vec<Vec<(usize, usize)>> {
    let edges = complete_edges(k);
    (0..1u64 << edges.len())
        .filter(|&m| is_forest(k, &edges, m))
        .map(|m| edges.iter().enumerate().filter(|(j, _)| m >> j & 1 == 1).map(|(_, e)| *e).collect())
        .collect()
}

fn complete_edges(k: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for u in 0..k {
        for v in u + 1..k {
            e.push((u, v));
        }
    }
    e
}

/// Descending grid `top·(1−ε)^j` that ends with the first point below `bottom`.
pub fn t_min_grid(bottom: f64, top: f64, eps: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = top;
    loop {
        out.push(t);
        if t < bottom {
            break;
        }
        t *= 1.0 - eps;
    }
    out
}

/// Lexicographic stream over (T_min guess, active set, forest, multiples),
/// capped at a budget.
pub struct ConfigurationStream {
    grid: Vec<f64>,
    segments: usize,
    pairs: Vec<(u64, u64)>,
    t_idx: usize,
    mask: u64,
    active: Vec<usize>,
    edges: Vec<(usize, usize)>,
    forest_mask: u64,
    forest: Vec<(usize, usize)>,
    digits: Vec<usize>,
    budget: u64,
    emitted: u64,
    truncated: bool,
    done: bool,
}

impl ConfigurationStream {
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    fn set_active(&mut self) {
        self.active = std::iter::once(1)
            .chain((0..self.segments - 1).filter(|b| self.mask >> b & 1 == 1).map(|b| b + 2))
            .collect();
        self.edges = complete_edges(self.active.len());
        self.set_forest(0);
    }

    fn set_forest(&mut self, m: u64) {
        self.forest_mask = m;
        self.forest = self.edges.iter().enumerate().filter(|(j, _)| m >> j & 1 == 1).map(|(_, e)| *e).collect();
        self.digits = vec![0; self.forest.len()];
    }

    fn current(&self) -> Configuration {
        let edges = self
            .forest
            .iter()
            .zip(&self.digits)
            .map(|(&(u, v), &d)| {
                let (ma, mb) = self.pairs[d];
                Edge { a: self.active[u], b: self.active[v], mult_a: ma, mult_b: mb }
            })
            .collect();
        Configuration { t_min: self.grid[self.t_idx], active: self.active.clone(), edges }
    }

    fn step(&mut self) {
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.pairs.len() {
                return;
            }
            *d = 0;
        }
        let limit = 1u64 << self.edges.len();
        let mut m = self.forest_mask + 1;
        while m < limit && !is_forest(self.active.len(), &self.edges, m) {
            m += 1;
        }
        if m < limit {
            self.set_forest(m);
            return;
        }
        self.mask += 1;
        if self.mask < 1u64 << (self.segments - 1) {
            self.set_active();
            return;
        }
        self.mask = 0;
        self.t_idx += 1;
        if self.t_idx < self.grid.len() {
            self.set_active();
        } else {
            self.done = true;
        }
    }
}

impl Iterator for ConfigurationStream {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.done {
            return None;
        }
        if self.emitted == self.budget {
            self.truncated = true;
            self.done = true;
            return None;
        }
        let c = self.current();
        self.emitted += 1;
        self.step();
        Some(c)
    }
}

/// Configurations for `T_min` guesses on `[K₀/Õ, (n/ε²)·K₀/Õ]`.
pub fn enumerate_configurations(inst: &Instance, eps: f64, opt_estimate: f64, budget: u64) -> Result<ConfigurationStream> {
    check_eps(eps)?;
    if budget == 0 {
        return Err(Error::Argument("budget must be positive".into()));
    }
    if !(opt_estimate > 0.0) {
        return Err(Error::Argument("cost estimate must be positive".into()));
    }
    let bottom = inst.k0() / opt_estimate;
    let top = inst.n() as f64 / (eps * eps) * bottom;
    let grid = if inst.k0() > 0.0 { t_min_grid(bottom, top, eps) } else { Vec::new() };
    let segments = segment_count(eps);
    let mut s = ConfigurationStream {
        done: grid.is_empty(),
        grid,
        segments,
        pairs: coprime_pairs(psi(eps)),
        t_idx: 0,
        mask: 0,
        active: Vec::new(),
        edges: Vec::new(),
        forest_mask: 0,
        forest: Vec::new(),
        digits: Vec::new(),
        budget,
        emitted: 0,
        truncated: false,
    };
    if !s.done {
        s.set_active();
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeSet {
    /// Active segments, increasing.
    pub segments: Vec<usize>,
    pub reps: Vec<Rational>,
    /// Component id per representative.
    pub components: Vec<usize>,
    /// Position of each component's source.
    pub sources: Vec<usize>,
    pub eps: f64,
}

impl RepresentativeSet {
    pub fn rep(&self, segment: usize) -> Option<&Rational> {
        self.segments.iter().position(|&s| s == segment).map(|j| &self.reps[j])
    }

    pub fn component_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sources.len()];
        for (j, &c) in self.components.iter().enumerate() {
            out[c].push(j);
        }
        out
    }

    /// Each component's lcm over its source is at most `Ψ^{k−1}`.
    pub fn lcm_within_bound(&self) -> bool {
        let bound = psi(self.eps);
        self.component_members().iter().zip(&self.sources).all(|(members, &s)| {
            let vals: Vec<Rational> = members.iter().map(|&j| self.reps[j].clone()).collect();
            let ratio = (rational_lcm(&vals) / self.reps[s].clone()).to_f64();
            ratio <= bound.powi(members.len() as i32 - 1) * (1.0 + 1e-12)
        })
    }
}

/// Sources get `(1+ε)^σ·T_min` snapped to a rational; every other
/// representative follows from the exact edge ratios.
pub fn propagate_representatives(cfg: &Configuration, eps: f64) -> Result<RepresentativeSet> {
    check_eps(eps)?;
    let l = segment_count(eps);
    let cap = psi(eps);
    let k = cfg.active.len();
    if k == 0 || cfg.active[0] != 1 {
        return Err(Error::Argument("segment 1 must be active".into()));
    }
    if cfg.active.windows(2).any(|w| w[0] >= w[1]) || cfg.active[k - 1] > l {
        return Err(Error::Argument("active segments must be increasing and within range".into()));
    }
    let pos = |s: usize| cfg.active.iter().position(|&x| x == s);
    let mut adj: Vec<Vec<(usize, u64, u64)>> = vec![Vec::new(); k];
    let mut parent: Vec<usize> = (0..k).collect();
    for e in &cfg.edges {
        let (Some(u), Some(v)) = (pos(e.a), pos(e.b)) else {
            return Err(Error::Argument(format!("edge ({}, {}) leaves the active set", e.a, e.b)));
        };
        if e.mult_a == 0 || e.mult_b == 0 || e.mult_a as f64 > cap || e.mult_b as f64 > cap {
            return Err(Error::Argument(format!("edge multiples ({}, {}) outside [1, Ψ]", e.mult_a, e.mult_b)));
        }
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return Err(Error::Argument("edges contain a cycle".into()));
        }
        parent[ru] = rv;
        adj[u].push((v, e.mult_a, e.mult_b));
        adj[v].push((u, e.mult_b, e.mult_a));
    }

    let mut reps: Vec<Option<Rational>> = vec![None; k];
    let mut components = vec![usize::MAX; k];
    let mut sources = Vec::new();
    for s in 0..k {
        if reps[s].is_some() {
            continue;
        }
        let c = sources.len();
        sources.push(s);
        let sigma = cfg.active[s] as i32;
        reps[s] = Some(Rational::snap((1.0 + eps).powi(sigma) * cfg.t_min, SNAP_DEN)?);
        components[s] = c;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let ru = reps[u].clone().expect("visited");
            for &(v, mu, mv) in &adj[u] {
                if reps[v].is_none() {
                    reps[v] = Some(ru.clone() * Rational::new(mu as i64, mv as i64));
                    components[v] = c;
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(RepresentativeSet {
        segments: cfg.active.clone(),
        reps: reps.into_iter().map(|r| r.expect("every vertex reached")).collect(),
        components,
        sources,
        eps,
    })
}

/// Each commodity takes the cheapest representative or
/// `⌈max(T_min/ε, √(K/H))⌉` rounded up to a multiple of `R̃₁`.
/// Representatives nobody uses are dropped from the layout.
pub fn assemble_policy(inst: &Instance, reps: &RepresentativeSet, t_min: f64, eps: f64) -> Result<Policy> {
    let r1_pos = reps.segments.iter().position(|&s| s == 1).ok_or_else(|| Error::Argument("segment 1 missing".into()))?;
    let r1 = &reps.reps[r1_pos];
    let rep_f: Vec<f64> = reps.reps.iter().map(Rational::to_f64).collect();
    let r1_f = rep_f[r1_pos];
    let mut choice: Vec<(usize, BigInt)> = Vec::with_capacity(inst.n());
    for c in inst.commodities() {
        let t_max = (t_min / eps).max(c.eoq());
        let k = Rational::ceil_multiple(t_max, r1)?;
        let kf = num_traits::ToPrimitive::to_f64(&k).unwrap_or(f64::INFINITY);
        let mut best = (r1_pos, k, c.cost(kf * r1_f));
        for (j, &r) in rep_f.iter().enumerate() {
            let v = c.cost(r);
            if v < best.2 {
                best = (j, BigInt::from(1), v);
            }
        }
        choice.push((best.0, best.1));
    }
    let mut used: BTreeMap<usize, usize> = BTreeMap::new();
    for (j, _) in &choice {
        let next = used.len();
        used.entry(*j).or_insert(next);
    }
    // Keep the original order so component sources stay first.
    let kept: Vec<usize> = used.keys().copied().collect();
    let remap: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let layout = RepresentativeLayout {
        reps: kept.iter().map(|&j| reps.reps[j].clone()).collect(),
        components: kept.iter().map(|&j| reps.components[j]).collect(),
        assignment: choice.iter().map(|(j, _)| remap[j]).collect(),
        eps,
    };
    let mults: Vec<BigInt> = choice.into_iter().map(|(_, m)| m).collect();
    Policy::with_representatives(layout, &mults)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentEstimate {
    /// `K₀·Σ_λ density_λ`.
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Sum of exact per-component densities. The union bound makes the sum an
/// upper bound on the true joint cost; `(1−ε)` of it is the matching lower
/// end for components that are not Ψ-aligned with each other.
pub fn component_cost_estimate(k0: f64, layout: &RepresentativeLayout) -> Result<ComponentEstimate> {
    let mut groups: BTreeMap<usize, Vec<Rational>> = BTreeMap::new();
    for (r, &c) in layout.reps.iter().zip(&layout.components) {
        groups.entry(c).or_default().push(r.clone());
    }
    let mut sum = 0.0;
    for g in groups.values() {
        sum += exact_density(g)?.value.to_f64();
    }
    let estimate = k0 * sum;
    Ok(ComponentEstimate { estimate, lower: (1.0 - layout.eps) * estimate, upper: estimate })
}

/// Common base `K₀/(ε·Õ)`, every EOQ rounded up to a multiple of it.
pub fn cheap_regime_policy(inst: &Instance, eps: f64, opt_estimate: f64) -> Result<Policy> {
    check_eps(eps)?;
    if inst.k0() == 0.0 {
        let eoq = inst
            .commodities()
            .iter()
            .map(|c| Rational::snap_default(c.eoq()))
            .collect::<Result<Vec<_>>>()?;
        return Policy::general_exact(eoq);
    }
    if !(opt_estimate > 0.0) {
        return Err(Error::Argument("cost estimate must be positive".into()));
    }
    let base = Rational::snap_default(inst.k0() / (eps * opt_estimate))?;
    let mults = inst
        .commodities()
        .iter()
        .map(|c| Rational::ceil_multiple(c.eoq(), &base))
        .collect::<Result<Vec<_>>>()?;
    Policy::common_base(base, &mults)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Origin {
    Pow2,
    Evenly,
    CheapRegime,
    Configuration { index: u64, configuration: Configuration },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EptasResult {
    pub policy: Policy,
    pub cost: CostBreakdown,
    pub origin: Origin,
    pub configurations_evaluated: u64,
    pub budget_exhausted: bool,
}

const CHUNK: usize = 4096;

type Candidate = (f64, u64, Policy, CostBreakdown, Origin);

fn offer(cost: CostBreakdown, idx: u64, policy: Policy, origin: Origin, best: &mut Option<Candidate>) {
    let better = match best {
        None => true,
        Some((c, i, ..)) => (cost.total, idx) < (*c, *i),
    };
    if better {
        *best = Some((cost.total, idx, policy, cost, origin));
    }
}

/// Runs both regimes, seeds the pool with the power-of-two and best
/// evenly-spaced policies, and returns the cheapest candidate. Ties go to the
/// earlier candidate.
pub fn eptas_solve(inst: &Instance, eps: f64, budget: u64) -> Result<EptasResult> {
    check_eps(eps)?;
    let relax = solve_variable_base(inst, None);
    let p2 = deterministic_pow2_round(&relax.intervals, inst)?;
    let opt = p2.cost(inst);

    let mut best: Option<Candidate> = None;
    let pp = p2.to_policy()?;
    offer(total_cost(inst, &pp)?, 0, pp, Origin::Pow2, &mut best);
    let ev = best_evenly_spaced(inst, eps)?.to_policy()?;
    offer(total_cost(inst, &ev)?, 1, ev, Origin::Evenly, &mut best);
    let cheap = cheap_regime_policy(inst, eps, opt)?;
    offer(exact_total_cost(inst, &cheap)?, 2, cheap, Origin::CheapRegime, &mut best);

    let mut stream = enumerate_configurations(inst, eps, opt, budget)?;
    let mut index = 3u64;
    loop {
        let chunk: Vec<(u64, Configuration)> = stream.by_ref().take(CHUNK).map(|c| (0, c)).collect();
        if chunk.is_empty() {
            break;
        }
        let chunk: Vec<(u64, Configuration)> =
            chunk.into_iter().enumerate().map(|(j, (_, c))| (index + j as u64, c)).collect();
        index += chunk.len() as u64;
        let local = chunk
            .into_par_iter()
            .filter_map(|(idx, cfg)| {
                let reps = propagate_representatives(&cfg, eps).ok()?;
                let policy = assemble_policy(inst, &reps, cfg.t_min, eps).ok()?;
                let cost = exact_total_cost(inst, &policy).ok()?;
                Some((cost.total, idx, policy, cost, cfg))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((_, idx, policy, cost, cfg)) = local {
            offer(cost, idx, policy, Origin::Configuration { index: idx - 3, configuration: cfg }, &mut best);
        }
    }
    let (_, _, policy, cost, origin) = best.expect("seed candidates always present");
    Ok(EptasResult {
        policy,
        cost,
        origin,
        configurations_evaluated: stream.emitted(),
        budget_exhausted: stream.truncated(),
    })
}

/// A configuration read off a rational reference policy, together with the
/// representatives it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedConfiguration {
    pub configuration: Configuration,
    /// Smallest reference interval in each active segment.
    pub reference_reps: Vec<Rational>,
    /// Component of each active segment in the alignment graph.
    pub components: Vec<usize>,
}

/// Builds the configuration the enumeration would guess for `reference`:
/// segments relative to the reference minimum, Ψ-aligned pairs as edges, a
/// spanning forest of that graph, and the exact multiples on every edge.
pub fn derive_configuration(reference: &[Rational], eps: f64, t_min_estimate: f64) -> Result<DerivedConfiguration> {
    check_eps(eps)?;
    let t_min = reference.iter().min().ok_or_else(|| Error::Argument("empty reference".into()))?.clone();
    if !t_min.is_positive() {
        return Err(Error::Argument("reference intervals must be positive".into()));
    }
    let seg = SegmentStructure::new(t_min.to_f64(), eps)?;
    let mut by_segment: BTreeMap<usize, Rational> = BTreeMap::new();
    for t in reference {
        if let Some(l) = segment_of_exact(&seg, t, &t_min) {
            let e = by_segment.entry(l).or_insert_with(|| t.clone());
            if t < e {
                *e = t.clone();
            }
        }
    }
    let active: Vec<usize> = by_segment.keys().copied().collect();
    let reps: Vec<Rational> = by_segment.values().cloned().collect();
    let cap = psi(eps);
    let k = active.len();
    let mut parent: Vec<usize> = (0..k).collect();
    let mut edges = Vec::new();
    let mut aligned = Vec::new();
    for u in 0..k {
        for v in u + 1..k {
            let l = rational_lcm(&[reps[u].clone(), reps[v].clone()]);
            let mu = (l.clone() / reps[u].clone()).to_f64();
            let mv = (l / reps[v].clone()).to_f64();
            if mu <= cap && mv <= cap {
                aligned.push((u, v, mu as u64, mv as u64));
            }
        }
    }
    for &(u, v, mu, mv) in &aligned {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            edges.push(Edge { a: active[u], b: active[v], mult_a: mu, mult_b: mv });
        }
    }
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    let components = (0..k)
        .map(|u| {
            let r = find(&mut parent, u);
            let next = ids.len();
            *ids.entry(r).or_insert(next)
        })
        .collect();
    Ok(DerivedConfiguration {
        configuration: Configuration { t_min: t_min_estimate, active, edges },
        reference_reps: reps,
        components,
    })
}

/// Exact segment membership, using a rational power of `1+ε` when `ε` is a
/// short decimal and the floating test otherwise.
fn segment_of_exact(seg: &SegmentStructure, t: &Rational, t_min: &Rational) -> Option<usize> {
    let Ok(step) = Rational::snap(1.0 + seg.eps, 1000) else {
        return seg.segment_of(t.to_f64());
    };
    if (step.to_f64() - (1.0 + seg.eps)).abs() > 1e-15 {
        return seg.segment_of(t.to_f64());
    }
    let r = t.clone() / t_min.clone();
    let mut upper = step.clone();
    for l in 1..=seg.segments {
        if r < upper {
            return Some(l);
        }
        upper = upper * step.clone();
    }
    None
}

/// `max Σ_{λ<μ} x_λ x_μ` over `x ≥ 0`, `Σx = size`, with `parts` coordinates.
pub fn crossing_pair_bound(parts: usize, size: f64) -> f64 {
    if parts == 0 {
        return 0.0;
    }
    let p = parts as f64;
    (p - 1.0) / (2.0 * p) * size * size
}
