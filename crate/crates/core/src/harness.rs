//! Instance generation, algorithm dispatch, Monte-Carlo estimators and the
//! benchmark sweep behind `jrp bench`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eptas::eptas_solve;
use crate::error::{Error, Result};
use crate::evenly::best_evenly_spaced;
use crate::model::{total_cost, Commodity, CostBreakdown, Instance, Policy, Resources};
use crate::pow2::{deterministic_pow2_round, fixed_base_solve};
use crate::rational::Rational;
use crate::rc::{rc_ptas_solve, rc_solve};
use crate::relax::{solve_rc, solve_variable_base};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Pow2,
    FixedBase,
    Evenly,
    Eptas,
    Rc,
    RcPtas,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::Pow2, Algorithm::FixedBase, Algorithm::Evenly, Algorithm::Eptas, Algorithm::Rc, Algorithm::RcPtas];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pow2 => "pow2",
            Algorithm::FixedBase => "fixed-base",
            Algorithm::Evenly => "evenly",
            Algorithm::Eptas => "eptas",
            Algorithm::Rc => "rc",
            Algorithm::RcPtas => "rc-ptas",
        }
    }

    pub fn uses_eps(self) -> bool {
        !matches!(self, Algorithm::Pow2 | Algorithm::Rc)
    }

    pub fn handles_resources(self) -> bool {
        matches!(self, Algorithm::Rc | Algorithm::RcPtas)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm {s:?}; expected one of pow2, fixed-base, evenly, eptas, rc, rc-ptas")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub algorithm: Algorithm,
    pub eps: f64,
    /// Base for the fixed-base algorithm.
    pub delta: Rational,
    pub seed: u64,
    /// Randomized shifts drawn by `rc`.
    pub trials: u32,
    /// Configuration budget for `eptas`, guess budget for `rc-ptas`.
    pub budget: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { algorithm: Algorithm::Pow2, eps: 0.5, delta: Rational::one(), seed: 0, trials: 64, budget: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub algorithm: Algorithm,
    pub eps: Option<f64>,
    pub policy: Policy,
    pub cost: CostBreakdown,
    pub lower_bound: f64,
    pub ratio: f64,
    pub budget_truncated: bool,
    pub fallback_used: bool,
}

/// Optimum of the relaxation that matches the instance: the variable-base
/// program without resources, the resource-constrained one otherwise.
pub fn relaxation_lower_bound(inst: &Instance) -> Result<f64> {
    if inst.resources().is_some() {
        Ok(solve_rc(inst)?.value)
    } else {
        Ok(solve_variable_base(inst, None).value)
    }
}

pub fn solve(inst: &Instance, opts: &SolveOptions) -> Result<Solution> {
    let algo = opts.algorithm;
    if inst.resources().is_some() && !algo.handles_resources() {
        return Err(Error::Unsupported(format!("{algo} ignores resource constraints; use rc or rc-ptas")));
    }
    let (policy, cost, truncated, fallback) = match algo {
        Algorithm::Pow2 => {
            let relax = solve_variable_base(inst, None);
            let p = deterministic_pow2_round(&relax.intervals, inst)?.to_policy()?;
            let c = total_cost(inst, &p)?;
            (p, c, false, false)
        }
        Algorithm::FixedBase => {
            let r = fixed_base_solve(inst, &opts.delta, opts.eps)?;
            (r.policy, r.cost, r.budget_exhausted, false)
        }
        Algorithm::Evenly => {
            let p = best_evenly_spaced(inst, opts.eps)?.to_policy()?;
            let c = total_cost(inst, &p)?;
            (p, c, false, false)
        }
        Algorithm::Eptas => {
            let r = eptas_solve(inst, opts.eps, opts.budget)?;
            (r.policy, r.cost, r.budget_exhausted, false)
        }
        Algorithm::Rc => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let r = rc_solve(inst, opts.trials, &mut rng)?;
            (r.policy, r.cost, false, false)
        }
        Algorithm::RcPtas => {
            let r = rc_ptas_solve(inst, opts.eps, opts.budget, opts.seed)?;
            (r.policy, r.cost, r.budget_exhausted, r.fallback_used)
        }
    };
    let lower_bound = relaxation_lower_bound(inst)?;
    Ok(Solution {
        algorithm: algo,
        eps: algo.uses_eps().then_some(opts.eps),
        ratio: cost.total / lower_bound,
        policy,
        cost,
        lower_bound,
        budget_truncated: truncated,
        fallback_used: fallback,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    pub n_min: usize,
    pub n_max: usize,
    pub k_range: (f64, f64),
    pub h_range: (f64, f64),
    pub k0_range: (f64, f64),
    /// Number of resource rows; 0 generates resource-free instances.
    pub resource_rows: usize,
    /// Probability that a coefficient `α_id` is nonzero.
    pub resource_density: f64,
    /// Probability that a row is violated by the unconstrained optimum.
    pub violation_probability: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n_min: 2,
            n_max: 6,
            k_range: (0.1, 10.0),
            h_range: (0.1, 10.0),
            k0_range: (0.1, 10.0),
            resource_rows: 0,
            resource_density: 1.0,
            violation_probability: 0.5,
        }
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if lo > 0.0 && hi >= lo && hi.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} range must be positive and ordered, got ({lo}, {hi})")))
    }
}

/// Draws an instance. Rows, when requested, get capacities scaled off the
/// unconstrained optimum's usage: below it with the violation probability,
/// above it otherwise.
pub fn generate_instance<R: Rng + ?Sized>(params: &GeneratorParams, rng: &mut R) -> Result<Instance> {
    check_range("k", params.k_range)?;
    check_range("h", params.h_range)?;
    check_range("k0", params.k0_range)?;
    if params.n_min == 0 || params.n_max < params.n_min {
        return Err(Error::Argument(format!("bad commodity range {}..={}", params.n_min, params.n_max)));
    }
    let n = rng.random_range(params.n_min..=params.n_max);
    let k0 = log_uniform(rng, params.k0_range);
    let commodities = (0..n)
        .map(|_| {
            let k = log_uniform(rng, params.k_range);
            let h = log_uniform(rng, params.h_range);
            Commodity::new(k, h)
        })
        .collect::<Result<Vec<_>>>()?;
    if params.resource_rows == 0 {
        return Instance::new(k0, commodities, None);
    }
    let free = Instance::new(k0, commodities.clone(), None)?;
    let unconstrained = solve_variable_base(&free, None).intervals;
    let mut alpha = Vec::with_capacity(params.resource_rows);
    let mut beta = Vec::with_capacity(params.resource_rows);
    for _ in 0..params.resource_rows {
        let mut row: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < params.resource_density { log_uniform(rng, (0.5, 2.0)) } else { 0.0 })
            .collect();
        if row.iter().all(|&a| a == 0.0) {
            let i = rng.random_range(0..n);
            row[i] = log_uniform(rng, (0.5, 2.0));
        }
        let usage: f64 = row.iter().zip(&unconstrained).map(|(a, t)| a / t).sum();
        let scale = if rng.random::<f64>() < params.violation_probability {
            0.3 + 0.6 * rng.random::<f64>()
        } else {
            1.1 + 0.9 * rng.random::<f64>()
        };
        alpha.push(row);
        beta.push(usage * scale);
    }
    Instance::new(k0, commodities, Some(Resources { alpha, beta }))
}

/// Independent child seed for stream `index` of a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub generator: GeneratorParams,
    pub instances: usize,
    pub algorithms: Vec<Algorithm>,
    pub epsilons: Vec<f64>,
    pub seed: u64,
    pub trials: u32,
    pub budget: u64,
    pub delta: Rational,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            generator: GeneratorParams::default(),
            instances: 10,
            algorithms: vec![Algorithm::Pow2, Algorithm::Evenly],
            epsilons: vec![0.5],
            seed: 0,
            trials: 64,
            budget: 10_000,
            delta: Rational::one(),
        }
    }
}

/// One CSV row. Columns, in order: `instance, algorithm, epsilon, cost,
/// lower_bound, ratio, runtime_ms, budget_truncated, fallback_used, error`.
/// `epsilon` is empty for algorithms without one; a failed solve leaves the
/// numeric columns empty and fills `error`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance: usize,
    pub algorithm: Algorithm,
    pub epsilon: Option<f64>,
    pub cost: Option<f64>,
    pub lower_bound: Option<f64>,
    pub ratio: Option<f64>,
    pub runtime_ms: f64,
    pub budget_truncated: bool,
    pub fallback_used: bool,
    pub error: Option<String>,
}

impl ResultRow {
    /// Same row with the runtime zeroed, for reproducibility comparisons.
    pub fn without_runtime(&self) -> ResultRow {
        ResultRow { runtime_ms: 0.0, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub rows: usize,
    pub errors: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<AlgorithmSummary>,
}

fn run_one(inst: &Instance, id: usize, algo: Algorithm, eps: Option<f64>, spec: &ExperimentSpec) -> ResultRow {
    let opts = SolveOptions {
        algorithm: algo,
        eps: eps.unwrap_or(0.5),
        delta: spec.delta.clone(),
        seed: derive_seed(spec.seed ^ 0xA5A5_A5A5, id as u64),
        trials: spec.trials,
        budget: spec.budget,
    };
    let start = Instant::now();
    let out = solve(inst, &opts);
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    match out {
        Ok(s) => ResultRow {
            instance: id,
            algorithm: algo,
            epsilon: eps,
            cost: Some(s.cost.total),
            lower_bound: Some(s.lower_bound),
            ratio: Some(s.ratio),
            runtime_ms,
            budget_truncated: s.budget_truncated,
            fallback_used: s.fallback_used,
            error: None,
        },
        Err(e) => ResultRow {
            instance: id,
            algorithm: algo,
            epsilon: eps,
            cost: None,
            lower_bound: None,
            ratio: None,
            runtime_ms,
            budget_truncated: false,
            fallback_used: false,
            error: Some(e.to_string()),
        },
    }
}

/// Generates `spec.instances` instances and runs every algorithm (and every
/// ε for those that take one) on each. Instances run in parallel; rows come
/// back ordered by instance, algorithm, then ε. A failed solve becomes a row
/// with `error` set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    for &e in &spec.epsilons {
        if !(e > 0.0 && e <= 0.5) {
            return Err(Error::Argument(format!("eps must lie in (0, 1/2], got {e}")));
        }
    }
    let instances = (0..spec.instances)
        .map(|id| generate_instance(&spec.generator, &mut ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, id as u64))))
        .collect::<Result<Vec<_>>>()?;
    let mut algos = spec.algorithms.clone();
    algos.sort();
    algos.dedup();
    let mut eps = spec.epsilons.clone();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let rows: Vec<ResultRow> = instances
        .par_iter()
        .enumerate()
        .flat_map_iter(|(id, inst)| {
            let mut out = Vec::new();
            for &a in &algos {
                if a.uses_eps() {
                    for &e in &eps {
                        out.push(run_one(inst, id, a, Some(e), spec));
                    }
                } else {
                    out.push(run_one(inst, id, a, None, spec));
                }
            }
            out
        })
        .collect();
    let summary = algos
        .iter()
        .map(|&a| {
            let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.algorithm == a).collect();
            let ratios: Vec<f64> = mine.iter().filter_map(|r| r.ratio).collect();
            AlgorithmSummary {
                algorithm: a,
                rows: mine.len(),
                errors: mine.len() - ratios.len(),
                max_ratio: ratios.iter().copied().fold(f64::NAN, f64::max),
                mean_ratio: if ratios.is_empty() { f64::NAN } else { ratios.iter().sum::<f64>() / ratios.len() as f64 },
            }
        })
        .collect();
    Ok(Report { rows, summary })
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wr.write_record([
            "instance",
            "algorithm",
            "epsilon",
            "cost",
            "lower_bound",
            "ratio",
            "runtime_ms",
            "budget_truncated",
            "fallback_used",
            "error",
        ])
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    wr.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Writes `<out>.csv` and `<out>.json`.
pub fn write_report(report: &Report, out: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Argument(format!("{}: {e}", out.display()));
    let csv_file = std::fs::File::create(out.with_extension("csv")).map_err(io)?;
    write_csv(&report.rows, csv_file)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(out.with_extension("json"), json).map_err(io)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub draws: u64,
}

impl MeanEstimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> MeanEstimate {
        // Welford.
        let (mut n, mut mean, mut m2) = (0u64, 0.0, 0.0);
        for x in samples {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        MeanEstimate { mean, std_err: (var / n.max(1) as f64).sqrt(), draws: n }
    }

    /// `|mean − target| ≤ k·SE`, with a floor for zero-variance samples.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err + 1e-12 * target.abs().max(1.0)
    }
}

/// `T̃/T` for an interval at `θ·T_min` rounded up to a multiple of the base
/// `T_min·e^{−u}`.
pub fn shift_ratio(theta: f64, u: f64) -> f64 {
    let base = (-u).exp();
    (theta / base).ceil() * base / theta
}

pub fn sample_shift_ratio<R: Rng + ?Sized>(theta: f64, draws: u64, rng: &mut R) -> MeanEstimate {
    MeanEstimate::from_samples((0..draws).map(|_| shift_ratio(theta, rng.random::<f64>() * std::f64::consts::LN_2)))
}

/// `e^U` for `U ~ U(0, ln 2)`.
pub fn sample_exp_shift<R: Rng + ?Sized>(draws: u64, rng: &mut R) -> MeanEstimate {
    MeanEstimate::from_samples((0..draws).map(|_| (rng.random::<f64>() * std::f64::consts::LN_2).exp()))
}
