//! One line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::f64::consts::{LN_2, SQRT_2};
use std::time::{Duration, Instant};

use common::{
    check_reference_configuration, crossing_pairs_on_grid, eoq_cost, integer_images, lcm_all, quarter_reference,
    shift_ratio_integral, Structural,
};
use jrp::eptas::{assemble_policy, crossing_pair_bound, derive_configuration, eptas_solve, propagate_representatives};
use jrp::evenly::{theta_mixture_coefficients, pair_density_floor_holds, THETA};
use jrp::harness::{generate_instance, relaxation_lower_bound, sample_exp_shift, sample_shift_ratio, GeneratorParams, MeanEstimate};
use jrp::model::{endpoint_bound, eoq_minimizer, exact_total_cost, total_cost, Commodity, Instance, Structure};
use jrp::oracle::{empirical_density, exact_density, pair_density};
use jrp::pow2::{deterministic_pow2_round, fixed_base_solve, randomized_pow2_round};
use jrp::rational::Rational;
use jrp::rc::{
    discretize, guess_and_round, random_shift_bound, randomized_shift_policy, rc_ptas_solve, rc_solve, right_shift_bound,
    right_shift_policy, rounding_statistics,
};
use jrp::relax::{solve_rc, solve_variable_base};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (u32, fn() -> Check, Duration);

/// `1/(√2·ln 2)`.
fn tb() -> f64 {
    1.0 / (SQRT_2 * LN_2)
}

fn instances(seed: u64, count: usize, params: &GeneratorParams) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| generate_instance(params, &mut rng).unwrap()).collect()
}

fn free(n_max: usize) -> GeneratorParams {
    GeneratorParams { n_min: 1, n_max, ..Default::default() }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut done = 0;
    let mut largest = 0;
    while done < 1000 {
        let n = rng.random_range(1..=6);
        let ts: Vec<Rational> = (0..n)
            .map(|_| {
                let d = rng.random_range(1..=12);
                Rational::new(rng.random_range(1..=3 * d), d)
            })
            .collect();
        // Keep the period small enough to walk.
        let (ints, _) = integer_images(&ts).unwrap();
        let Some(period) = lcm_all(&ints).filter(|&p| p <= 200_000) else { continue };
        let ie = exact_density(&ts).map_err(|e| e.to_string())?.value;
        let counted = empirical_density(&ts, 1).map_err(|e| e.to_string())?;
        ensure(ie == counted, || format!("{ts:?}: inclusion-exclusion {ie} vs counting {counted}"))?;
        // Independent walk on the integer scale.
        let hits = (0..period).filter(|x| ints.iter().any(|a| x % a == 0)).count() as i64;
        let (_, den) = integer_images(&ts).unwrap();
        let walked = Rational::new(hits * den as i64, period as i64);
        ensure(ie == walked, || format!("{ts:?}: inclusion-exclusion {ie} vs walk {walked}"))?;
        largest = largest.max(period);
        done += 1;
    }
    Ok(format!("1000 policies exact, longest period {largest} grid steps"))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..10_000 {
        let (k, h) = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
        let c = Commodity::new(k, h).unwrap();
        let a = rng.random_range(0.05..10.0);
        let b = a * rng.random_range(1.0..10.0);
        let mid = eoq_cost(k, h, 0.5 * (a + b));
        let chord = 0.5 * (eoq_cost(k, h, a) + eoq_cost(k, h, b));
        ensure(mid <= chord + 1e-12, || format!("midpoint above chord on ({a}, {b})"))?;
        if b > a * (1.0 + 1e-6) {
            ensure(mid < chord, || format!("not strict on ({a}, {b})"))?;
        }
        let star = eoq_minimizer(&c);
        ensure((star - (k / h).sqrt()).abs() <= 1e-12 * star, || format!("minimizer {star} for ({k}, {h})"))?;
        let t = rng.random_range(0.01..20.0);
        ensure(c.cost(star) <= eoq_cost(k, h, t) + 1e-12, || format!("{t} beats the minimizer"))?;
        let theta = rng.random_range(0.1..10.0);
        let lhs = c.cost(theta * star);
        let rhs = 0.5 * (theta + 1.0 / theta) * 2.0 * (k * h).sqrt();
        ensure((lhs - rhs).abs() <= 1e-12 * rhs, || format!("scaling at θ = {theta}: {lhs} vs {rhs}"))?;
        let t = rng.random_range(a..=b);
        let bound = 0.5 * ((b / a).sqrt() + (a / b).sqrt());
        let lib = endpoint_bound(a, b).map_err(|e| e.to_string())?;
        ensure((lib - bound).abs() <= 1e-12 * bound, || format!("endpoint bound {lib} vs {bound}"))?;
        ensure(c.cost(a).min(c.cost(b)) <= bound * c.cost(t) + 1e-12, || format!("endpoint bound fails on ({a}, {b}, {t})"))?;
    }
    Ok("10000 triples: convexity, minimizer, scaling, endpoint bound".into())
}

fn criterion_3() -> Check {
    let mut worst: f64 = 0.0;
    for (k, inst) in instances(103, 100, &free(8)).iter().enumerate() {
        let relax = solve_variable_base(inst, None);
        let p = deterministic_pow2_round(&relax.intervals, inst).map_err(|e| e.to_string())?;
        let ratio = p.cost(inst) / relax.value;
        ensure(ratio >= 1.0 - 1e-9, || format!("instance {k}: ratio {ratio} below 1"))?;
        worst = worst.max(ratio);
    }
    ensure(worst <= 1.02015, || format!("worst ratio {worst:.6}"))?;
    Ok(format!("worst ratio {worst:.6} ≤ 1.02015"))
}

fn criterion_4() -> Check {
    let pool = instances(104, 50, &free(6));
    let sources: Vec<Vec<f64>> = pool.iter().map(|i| solve_variable_base(i, None).intervals).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1104);
    let draws = 100_000;
    let mut up = Vec::with_capacity(draws);
    let mut down = Vec::with_capacity(draws);
    for d in 0..draws {
        let src = &sources[d % sources.len()];
        let p = randomized_pow2_round(src, &mut rng).map_err(|e| e.to_string())?;
        let t = p.intervals();
        ensure(p.exponents.iter().min() == Some(&0), || format!("draw {d}: smallest exponent not zero"))?;
        for i in 0..t.len() {
            ensure(t[i] == p.base * 2f64.powi(p.exponents[i] as i32), || format!("draw {d}: not a power of two"))?;
            for j in 0..t.len() {
                ensure(src[i] > src[j] || t[i] <= t[j], || format!("draw {d}: order of {i}, {j} reversed"))?;
            }
        }
        let i = (d / sources.len()) % src.len();
        up.push(t[i] / src[i]);
        down.push(src[i] / t[i]);
    }
    let (mu, md) = (MeanEstimate::from_samples(up), MeanEstimate::from_samples(down));
    ensure(mu.within(tb(), 3.0), || format!("E[T̃/T] = {:.6} ± {:.6}", mu.mean, mu.std_err))?;
    ensure(md.within(tb(), 3.0), || format!("E[T/T̃] = {:.6} ± {:.6}", md.mean, md.std_err))?;
    Ok(format!(
        "E[T̃/T] = {:.5} ± {:.5}, E[T/T̃] = {:.5} ± {:.5}, target {:.5}",
        mu.mean, mu.std_err, md.mean, md.std_err, tb()
    ))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact density of multiples of positive integers, by inclusion-exclusion.
fn integer_density(ts: &[u64]) -> f64 {
    let n = ts.len();
    let mut d = 0.0;
    for mask in 1u32..1 << n {
        let mut l = 1u64;
        for (i, &t) in ts.iter().enumerate() {
            if mask & (1 << i) != 0 {
                l = l / gcd(l, t) * t;
            }
        }
        let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        d += sign / l as f64;
    }
    d
}

fn integer_cost(inst: &Instance, ts: &[u64]) -> f64 {
    inst.k0() * integer_density(ts) + inst.commodities().iter().zip(ts).map(|(c, &t)| eoq_cost(c.k, c.h, t as f64)).sum::<f64>()
}

fn grid_optimum(inst: &Instance, m: u64) -> f64 {
    let n = inst.n();
    let mut idx = vec![1u64; n];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(integer_cost(inst, &idx));
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            idx[i] += 1;
            if idx[i] <= m {
                break;
            }
            idx[i] = 1;
            i += 1;
        }
    }
}

fn criterion_5() -> Check {
    let bound = tb() + 0.25 * SQRT_2 * 1.021;
    let mut worst: f64 = 0.0;
    for (k, inst) in instances(105, 30, &free(3)).iter().enumerate() {
        let r = fixed_base_solve(inst, &Rational::one(), 0.25).map_err(|e| e.to_string())?;
        let ts = r.policy.exact_intervals().ok_or("fixed-base policy is not rational")?;
        let ints: Vec<u64> = ts
            .iter()
            .map(|t| t.is_integer().then(|| num_traits::ToPrimitive::to_u64(t.numer())).flatten())
            .collect::<Option<_>>()
            .ok_or_else(|| format!("instance {k}: interval off the unit grid"))?;
        let oracle = integer_cost(inst, &ints);
        ensure(oracle <= r.cost.total * (1.0 + 1e-9), || format!("instance {k}: reported {} below true {oracle}", r.cost.total))?;
        let opt = grid_optimum(inst, 64);
        let ratio = r.cost.total / opt;
        ensure(ratio <= bound, || format!("instance {k}: {} vs grid optimum {opt}", r.cost.total))?;
        worst = worst.max(ratio);
    }
    Ok(format!("worst ratio to grid optimum {worst:.6} ≤ {bound:.6}"))
}

fn criterion_6() -> Check {
    let one = Rational::one();
    let mut checked = 0;
    for q in 1..=50i64 {
        for p in q + 1..3 * q {
            if p % q == 0 || num_integer::gcd(p, q) != 1 {
                continue;
            }
            // With gcd(p, q) = 1, lcm(1, p/q) = p: density 1 + q/p − 1/p.
            let by_hand = Rational::new(p + q - 1, p);
            let t = Rational::new(p, q);
            ensure(pair_density(&one, &t) == by_hand, || format!("pair density at {t}"))?;
            ensure(by_hand >= Rational::new(6, 5), || format!("density {by_hand} below 6/5 at {t}"))?;
            ensure(pair_density_floor_holds(&one, &t).map_err(|e| e.to_string())?, || format!("library rejects {t}"))?;
            checked += 1;
        }
    }
    ensure(pair_density(&one, &Rational::new(5, 2)) == Rational::new(6, 5), || "no equality at 5/2".into())?;
    Ok(format!("{checked} fractions, minimum 6/5 attained at 5/2"))
}

fn criterion_7() -> Check {
    let (a, b) = theta_mixture_coefficients(THETA);
    let three_four = 0.5 * ((4.0f64 / 3.0).sqrt() + (3.0f64 / 4.0).sqrt());
    let a_hand = THETA * tb() * 5.0 / 6.0 + (1.0 - THETA) * 2.5;
    let b_hand = THETA * tb() + (1.0 - THETA) * three_four;
    ensure((a - a_hand).abs() < 1e-12 && (b - b_hand).abs() < 1e-12, || format!("({a}, {b}) vs ({a_hand}, {b_hand})"))?;
    for v in [a, b] {
        ensure(v <= 1.01915, || format!("coefficient {v} above 1.01915"))?;
        ensure((v - 1.01915).abs() <= 1e-4, || format!("coefficient {v} more than 1e-4 from 1.01915"))?;
    }
    Ok(format!("coefficients {a:.6}, {b:.6}"))
}

fn criterion_8() -> Check {
    let eps = 0.5;
    let pool = instances(108, 20, &free(4));
    let mut truncated = 0;
    let mut worst: f64 = 0.0;
    for (k, inst) in pool.iter().enumerate() {
        let lb = relaxation_lower_bound(inst).map_err(|e| e.to_string())?;
        let relax = solve_variable_base(inst, None);
        let pow2 = deterministic_pow2_round(&relax.intervals, inst).map_err(|e| e.to_string())?.cost(inst);
        let r = eptas_solve(inst, eps, 100_000).map_err(|e| e.to_string())?;
        ensure(r.cost.total >= lb * (1.0 - 1e-9) && r.cost.total <= pow2 * (1.0 + 1e-9), || {
            format!("instance {k}: {} outside [{lb}, {pow2}]", r.cost.total)
        })?;
        truncated += r.budget_exhausted as usize;
        worst = worst.max(r.cost.total / lb);
    }

    // Structure on reference-derived configurations.
    let mut rng = ChaCha8Rng::seed_from_u64(1108);
    let mut counted = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=5);
        let reference = quarter_reference(&mut rng, n, 2.4);
        let est = [1.0, 0.75, 0.5][rng.random_range(0..3)];
        if let Structural::Passed = check_reference_configuration(&reference, eps, est, 50)? {
            counted += 1;
        }
    }
    ensure(counted >= 60, || format!("only {counted} configurations countable"))?;

    // Per-commodity ratio against references built from each instance.
    for inst in &pool {
        for _ in 0..5 {
            let reference: Vec<Rational> = inst
                .commodities()
                .iter()
                .map(|c| Rational::snap(c.eoq() * rng.random_range(0.5..2.0), 8).unwrap())
                .map(|t| if t.is_positive() { t } else { Rational::new(1, 8) })
                .collect();
            let t_star = reference.iter().min().unwrap().to_f64();
            let t_est = t_star * rng.random_range(1.0 - eps..=1.0);
            let d = derive_configuration(&reference, eps, t_est).map_err(|e| e.to_string())?;
            let reps = propagate_representatives(&d.configuration, eps).map_err(|e| e.to_string())?;
            let p = assemble_policy(inst, &reps, t_est, eps).map_err(|e| e.to_string())?;
            for ((c, t), r) in inst.commodities().iter().zip(p.intervals_f64()).zip(&reference) {
                let bound = (1.0 + 5.0 * eps) * eoq_cost(c.k, c.h, r.to_f64());
                ensure(eoq_cost(c.k, c.h, t) <= bound * (1.0 + 1e-12), || format!("{t} against reference {r}"))?;
            }
        }
    }

    for parts in 1..=5usize {
        for size in parts..=8 {
            let size = size as f64;
            let grid = crossing_pairs_on_grid(parts, size, 200);
            let formula = crossing_pair_bound(parts, size);
            ensure(grid <= formula + 1e-12 && formula - grid <= 1e-4 * size * size, || {
                format!("Λ = {parts}, |A| = {size}: grid {grid} vs {formula}")
            })?;
        }
    }
    Ok(format!(
        "20 instances bracketed (worst ratio to relaxation {worst:.5}, {truncated} budget-truncated); \
         {counted} configurations counted; per-commodity ratio and crossing-pair grid hold"
    ))
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut min_ratios = Vec::new();
    let mut normalized = Vec::new();
    for k in 0..50 {
        let params = GeneratorParams { n_min: 1, n_max: 6, resource_rows: 1 + k % 3, ..Default::default() };
        let inst = generate_instance(&params, &mut rng).map_err(|e| e.to_string())?;
        let r = rc_solve(&inst, 64, &mut rng).map_err(|e| e.to_string())?;
        let feasible = |ts: &[f64]| inst.is_feasible(ts, 1e-9);
        ensure(feasible(&r.policy.intervals_f64()), || format!("instance {k}: returned policy infeasible"))?;
        let a = right_shift_policy(&r.relaxation).map_err(|e| e.to_string())?;
        ensure(feasible(&a.intervals_f64()), || format!("instance {k}: right shift infeasible"))?;
        for _ in 0..16 {
            let b = randomized_shift_policy(&r.relaxation, &mut rng).map_err(|e| e.to_string())?;
            ensure(feasible(&b.intervals_f64()), || format!("instance {k}: a randomized shift is infeasible"))?;
        }
        let fa = total_cost(&inst, &a).map_err(|e| e.to_string())?.total;
        let shift_cap = right_shift_bound(&inst, &r.relaxation);
        ensure(fa <= shift_cap + 1e-9, || format!("instance {k}: right shift {fa} above {shift_cap}"))?;
        let bound = random_shift_bound(&inst, &r.relaxation);
        normalized.extend(r.shift_costs.iter().map(|c| c / bound));
        min_ratios.push(r.mean_min_ratio);
    }
    let agg = MeanEstimate::from_samples(normalized);
    ensure(agg.mean <= 1.0 + 3.0 * agg.std_err, || format!("mean F(B)/bound {:.6} ± {:.6}", agg.mean, agg.std_err))?;
    let mean_min = min_ratios.iter().sum::<f64>() / min_ratios.len() as f64;
    ensure(mean_min <= 1.437, || format!("mean min(F_A, F_B)/OPT(RC) = {mean_min:.6}"))?;

    let draws = 100_000;
    let e_up = sample_exp_shift(draws, &mut rng);
    ensure(e_up.within(1.0 / LN_2, 3.0), || format!("E[e^U] = {:.6} ± {:.6}", e_up.mean, e_up.std_err))?;
    let e_down = MeanEstimate::from_samples((0..draws).map(|_| (-rng.random::<f64>() * LN_2).exp()));
    ensure(e_down.within(1.0 / (2.0 * LN_2), 3.0), || format!("E[e^-U] = {:.6}", e_down.mean))?;
    let large = 1.0 + 1.0 / (4.0 * LN_2);
    for theta in [1.0, 8.0 / 7.0, 1.3, 1.5, 1.7, 2.0, 2.5, 5.0] {
        let m = sample_shift_ratio(theta, draws, &mut rng);
        let target = if theta <= 1.5 {
            (1.0 + 1.0 / theta) / (2.0 * LN_2)
        } else if theta <= 2.0 {
            5.0 / (6.0 * LN_2)
        } else {
            shift_ratio_integral(theta)
        };
        ensure((shift_ratio_integral(theta) - target).abs() < 1e-12, || format!("θ = {theta}: closed form off the integral"))?;
        ensure(m.within(target, 3.0), || format!("θ = {theta}: {:.6} ± {:.6} vs {target:.6}", m.mean, m.std_err))?;
        if theta > 2.0 {
            ensure(m.mean < large + 3.0 * m.std_err, || format!("θ = {theta}: {:.6} not below {large:.6}", m.mean))?;
        }
    }
    Ok(format!(
        "50 instances feasible, right-shift bound per instance; F(B)/bound {:.4} ± {:.4}; mean min ratio {mean_min:.4}; shift expectations within 3 SE",
        agg.mean, agg.std_err
    ))
}

fn criterion_10() -> Check {
    let eps = 0.25;
    let params = GeneratorParams { n_min: 6, n_max: 6, resource_rows: 1, violation_probability: 1.0, ..Default::default() };
    let inst = generate_instance(&params, &mut ChaCha8Rng::seed_from_u64(110)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1110);
    let base = rc_solve(&inst, 16, &mut rng).map_err(|e| e.to_string())?;
    let relax = solve_rc(&inst).map_err(|e| e.to_string())?;
    let reference: Vec<Rational> = relax.intervals.iter().map(|&t| Rational::snap_default(t).unwrap()).collect();
    let t_ref = reference.iter().min().unwrap().to_f64() * (1.0 - eps / 2.0);
    let d = derive_configuration(&reference, eps, t_ref).map_err(|e| e.to_string())?;
    let reps = propagate_representatives(&d.configuration, eps).map_err(|e| e.to_string())?;
    let sets = discretize(&inst, eps, &reps, t_ref).map_err(|e| e.to_string())?;
    let g = guess_and_round(&inst, &sets, 200, base.cost.total, 7).map_err(|e| e.to_string())?;
    ensure(inst.is_feasible(&g.policy.intervals_f64(), 1e-9), || "scaled selection infeasible".into())?;
    let trials = 400;
    let s = rounding_statistics(&inst, &sets, &g.lp, trials, 11);
    let limit = 1.0 / 3.0 + 0.1;
    ensure(s.cost_exceeded <= limit, || format!("P[cost > (1+ε)·OPT(LP)] = {:.3}", s.cost_exceeded))?;
    ensure(s.row_violated[0] <= limit, || format!("P[usage > (1+3ε)·β] = {:.3}", s.row_violated[0]))?;
    let full = rc_ptas_solve(&inst, eps, 200, 3).map_err(|e| e.to_string())?;
    ensure(inst.is_feasible(&full.policy.intervals_f64(), 1e-9), || "final policy infeasible".into())?;
    let exact = exact_total_cost(&inst, &full.policy).map_err(|e| e.to_string())?.total;
    ensure(exact <= base.cost.total * (1.0 + 1e-9), || format!("final {exact} above rc {}", base.cost.total))?;
    let kind = match full.policy.structure {
        Structure::General => "general",
        Structure::CommonBase { .. } => "common base",
        Structure::RepresentativeSet(_) => "representative set",
    };
    Ok(format!(
        "{trials} roundings: cost exceeded {:.3}, row violated {:.3}; final {kind} policy feasible at {exact:.4} (rc {:.4})",
        s.cost_exceeded, s.row_violated[0], base.cost.total
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, criterion_1, Duration::from_secs(10)),
        (2, criterion_2, Duration::from_secs(60)),
        (3, criterion_3, Duration::from_secs(5)),
        (4, criterion_4, Duration::from_secs(60)),
        (5, criterion_5, Duration::from_secs(120)),
        (6, criterion_6, Duration::from_secs(60)),
        (7, criterion_7, Duration::from_secs(60)),
        (8, criterion_8, Duration::from_secs(300)),
        (9, criterion_9, Duration::from_secs(120)),
        (10, criterion_10, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (id, run, limit) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let out = match out {
            Ok(d) if took > limit => Err(format!("{d}; took {took:.1?}, limit {limit:?}")),
            other => other,
        };
        match out {
            Ok(d) => println!("criterion {id} PASS ({:.2}s): {d}", took.as_secs_f64()),
            Err(d) => {
                failed += 1;
                println!("criterion {id} FAIL ({:.2}s): {d}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
