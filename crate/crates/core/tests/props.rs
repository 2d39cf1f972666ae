use jrp::evenly::best_evenly_spaced;
use jrp::harness::relaxation_lower_bound;
use jrp::model::{total_cost, Commodity, Instance, Resources};
use jrp::oracle::{empirical_density, exact_density};
use jrp::pow2::{deterministic_pow2_round, pow2_round_at};
use jrp::rational::Rational;
use jrp::rc::right_shift_policy;
use jrp::relax::{solve_rc, solve_variable_base};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (1i64..=6).prop_flat_map(|d| (1i64..=4 * d).prop_map(move |n| Rational::new(n, d)))
}

fn policy(max: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(rational(), 1..=max)
}

fn commodity() -> impl Strategy<Value = Commodity> {
    (0.1f64..10.0, 0.1f64..10.0).prop_map(|(k, h)| Commodity::new(k, h).unwrap())
}

fn instance(max: usize) -> impl Strategy<Value = Instance> {
    (0.1f64..10.0, prop::collection::vec(commodity(), 1..=max)).prop_map(|(k0, cs)| Instance::new(k0, cs, None).unwrap())
}

fn constrained(max: usize) -> impl Strategy<Value = Instance> {
    (instance(max), 0.2f64..3.0).prop_map(|(inst, cap)| {
        let n = inst.n();
        Instance::new(inst.k0(), inst.commodities().to_vec(), Some(Resources { alpha: vec![vec![1.0; n]], beta: vec![cap] })).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_between_max_and_sum(ts in policy(4)) {
        let d = exact_density(&ts).unwrap().value;
        let sum = ts.iter().fold(Rational::zero(), |a, t| a + t.recip());
        let max = ts.iter().map(Rational::recip).max().unwrap();
        prop_assert!(max <= d && d <= sum);
    }

    #[test]
    fn density_matches_period_count(ts in policy(4)) {
        prop_assert_eq!(exact_density(&ts).unwrap().value, empirical_density(&ts, 1).unwrap());
    }

    #[test]
    fn adding_an_interval_never_lowers_density(ts in policy(3), extra in rational()) {
        let before = exact_density(&ts).unwrap().value;
        let mut more = ts.clone();
        more.push(extra);
        prop_assert!(exact_density(&more).unwrap().value >= before);
    }

    #[test]
    fn density_scales_inversely(ts in policy(3), c in rational()) {
        let scaled: Vec<Rational> = ts.iter().map(|t| t.clone() * c.clone()).collect();
        let lhs = exact_density(&scaled).unwrap().value * c;
        prop_assert_eq!(lhs, exact_density(&ts).unwrap().value);
    }

    #[test]
    fn eoq_scaling_identity(c in commodity(), theta in 0.05f64..20.0) {
        let star = c.eoq();
        let lhs = c.cost(theta * star);
        let rhs = 0.5 * (theta + 1.0 / theta) * c.cost(star);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn eoq_cost_is_convex(c in commodity(), a in 0.05f64..10.0, b in 0.05f64..10.0, w in 0.0f64..1.0) {
        let mid = c.cost(w * a + (1.0 - w) * b);
        prop_assert!(mid <= w * c.cost(a) + (1.0 - w) * c.cost(b) + 1e-12);
    }

    #[test]
    fn pow2_ratio_bounds(inst in instance(8)) {
        let relax = solve_variable_base(&inst, None);
        let ratio = deterministic_pow2_round(&relax.intervals, &inst).unwrap().cost(&inst) / relax.value;
        prop_assert!((1.0 - 1e-9..=1.02015).contains(&ratio), "{}", ratio);
    }

    #[test]
    fn pow2_rounding_stays_within_root_two(ts in prop::collection::vec(0.01f64..100.0, 1..6), y in 0.0f64..1.0) {
        let p = pow2_round_at(&ts, y).unwrap();
        for (r, t) in p.intervals().iter().zip(&ts) {
            prop_assert!(*r >= t / 2f64.sqrt() * (1.0 - 1e-12) && *r <= t * 2f64.sqrt() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn evenly_spaced_above_relaxation(inst in instance(5)) {
        let lb = relaxation_lower_bound(&inst).unwrap();
        let p = best_evenly_spaced(&inst, 0.5).unwrap();
        prop_assert!(p.cost(&inst) >= lb * (1.0 - 1e-9));
    }

    #[test]
    fn right_shift_is_feasible(inst in constrained(5)) {
        let relax = solve_rc(&inst).unwrap();
        let p = right_shift_policy(&relax).unwrap();
        prop_assert!(inst.is_feasible(&p.intervals_f64(), 1e-9));
        prop_assert!(total_cost(&inst, &p).unwrap().total >= relax.value * (1.0 - 1e-9));
    }
}
