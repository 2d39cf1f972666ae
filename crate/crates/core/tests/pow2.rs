use jrp::harness::{generate_instance, GeneratorParams};
use jrp::model::{exact_total_cost, Commodity, Instance, Structure};
use jrp::pow2::{deterministic_pow2_round, fixed_base_solve, pow2_round_at, randomized_pow2_round};
use jrp::rational::Rational;
use jrp::relax::solve_variable_base;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TB: f64 = 1.020_141_6;

fn instances(seed: u64, count: usize, n_max: usize) -> Vec<Instance> {
    let p = GeneratorParams { n_min: 1, n_max, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| generate_instance(&p, &mut rng).unwrap()).collect()
}

#[test]
fn nearest_in_log_scale() {
    let p = pow2_round_at(&[1.0, 3.0], 0.0).unwrap();
    assert_eq!(p.intervals(), vec![1.0, 4.0]);
    let same = pow2_round_at(&[2.0, 4.0, 16.0], 0.0).unwrap();
    assert_eq!(same.intervals(), vec![2.0, 4.0, 16.0]);
}

#[test]
fn one_commodity_deterministic() {
    let inst = Instance::new(1.0, vec![Commodity::new(1.0, 1.0).unwrap()], None).unwrap();
    let relax = solve_variable_base(&inst, None);
    let c = deterministic_pow2_round(&relax.intervals, &inst).unwrap().cost(&inst);
    assert!(c <= TB * 2.0 * 2f64.sqrt() + 1e-12 && c >= 2.0 * 2f64.sqrt() - 1e-12, "{c}");
}

#[test]
fn equal_sources_keep_cost() {
    let inst = Instance::new(2.0, vec![Commodity::new(1.0, 1.0).unwrap(); 3], None).unwrap();
    let p = deterministic_pow2_round(&[1.5, 1.5, 1.5], &inst).unwrap();
    assert_eq!(p.exponents, vec![0, 0, 0]);
    assert!(p.intervals().iter().all(|&t| t == p.base));
}

#[test]
fn randomized_draws_keep_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for inst in instances(1, 40, 6) {
        let src = solve_variable_base(&inst, None).intervals;
        for _ in 0..50 {
            let p = randomized_pow2_round(&src, &mut rng).unwrap();
            assert_eq!(p.exponents.iter().min(), Some(&0));
            let t = p.intervals();
            for i in 0..t.len() {
                let ratio = t[i] / src[i];
                assert!((0.5f64.sqrt() - 1e-12..=2f64.sqrt() + 1e-12).contains(&ratio));
                assert_eq!(t[i], p.base * 2f64.powi(p.exponents[i] as i32));
                for j in 0..t.len() {
                    if src[i] <= src[j] {
                        assert!(t[i] <= t[j]);
                    }
                }
            }
            let exact = p.to_policy().unwrap();
            let Structure::CommonBase { base } = &exact.structure else { panic!("expected a common base") };
            for (k, iv) in exact.exact_intervals().unwrap().iter().enumerate() {
                assert_eq!(iv.multiple_of(base), Some(num_bigint::BigInt::from(1u64 << p.exponents[k])));
            }
        }
    }
}

#[test]
fn deterministic_ratio_bound() {
    for inst in instances(2, 50, 6) {
        let relax = solve_variable_base(&inst, None);
        let p = deterministic_pow2_round(&relax.intervals, &inst).unwrap();
        let ratio = p.cost(&inst) / relax.value;
        assert!((1.0 - 1e-12..=1.02015).contains(&ratio), "{ratio}");
        let exact = exact_total_cost(&inst, &p.to_policy().unwrap()).unwrap().total;
        assert!((exact - p.cost(&inst)).abs() <= 1e-5 * exact);
    }
}

#[test]
fn fixed_base_tiny_instance() {
    let inst = Instance::new(1.0, vec![Commodity::new(1.0, 1.0).unwrap()], None).unwrap();
    let r = fixed_base_solve(&inst, &Rational::one(), 0.5).unwrap();
    assert!((r.cost.total - 3.0).abs() < 1e-12);
}

/// Grid optimum over `{1..m}ⁿ` multiples of `Δ`, with the exact joint cost.
fn grid_optimum(inst: &Instance, delta: &Rational, m: i64) -> f64 {
    let n = inst.n();
    let mut idx = vec![1i64; n];
    let mut best = f64::INFINITY;
    loop {
        let ts: Vec<Rational> = idx.iter().map(|&k| delta.clone() * Rational::integer(k)).collect();
        let p = jrp::model::Policy::general_exact(ts).unwrap();
        best = best.min(exact_total_cost(inst, &p).unwrap().total);
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

#[test]
fn fixed_base_against_small_grid() {
    let bound = TB + 0.25 * 2f64.sqrt() * 1.021;
    for (k, inst) in instances(3, 12, 2).iter().enumerate() {
        let delta = Rational::new(1, 2);
        let r = fixed_base_solve(inst, &delta, 0.25).unwrap();
        for t in r.policy.exact_intervals().unwrap() {
            assert!(t.multiple_of(&delta).is_some());
        }
        let opt = grid_optimum(inst, &delta, 40);
        assert!(r.cost.total <= bound * opt + 1e-9, "instance {k}: {} vs {opt}", r.cost.total);
        assert!(r.cost.total >= solve_variable_base(inst, None).value - 1e-9);
    }
}

#[test]
fn fixed_base_rejects_bad_arguments() {
    let inst = Instance::new(1.0, vec![Commodity::new(1.0, 1.0).unwrap()], None).unwrap();
    assert!(fixed_base_solve(&inst, &Rational::zero(), 0.25).is_err());
    assert!(fixed_base_solve(&inst, &Rational::one(), 0.0).is_err());
    assert!(fixed_base_solve(&inst, &Rational::one(), 0.75).is_err());
}
