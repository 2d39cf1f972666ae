//! Shift rounding under resource constraints: the relaxation, the
//! deterministic right shift, random shifts, and the bounds they meet.

use jrp::harness::{generate_instance, GeneratorParams};
use jrp::model::total_cost;
use jrp::rc::{classify, random_shift_bound, rc_solve, right_shift_bound, right_shift_policy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jrp::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = GeneratorParams { n_min: 5, n_max: 5, resource_rows: 2, violation_probability: 1.0, ..Default::default() };
    let inst = generate_instance(&params, &mut rng)?;
    let r = rc_solve(&inst, 200, &mut rng)?;
    let relax = &r.relaxation;
    let cl = classify(&inst, relax);
    println!("relaxation {:.6}, T_min {:.4}, small {:?}, large {:?}", relax.value, relax.t_min, cl.small, cl.large);

    let a = total_cost(&inst, &right_shift_policy(relax)?)?.total;
    println!("right shift {a:.6} (bound {:.6})", right_shift_bound(&inst, relax));
    let mean_b = r.shift_costs.iter().sum::<f64>() / r.shift_costs.len() as f64;
    println!("random shifts: mean {mean_b:.6} (bound on the mean {:.6})", random_shift_bound(&inst, relax));
    println!("best {:.6}, mean min(A, B)/relaxation {:.6}", r.cost.total, r.mean_min_ratio);
    println!("feasible: {}", inst.is_feasible(&r.policy.intervals_f64(), 1e-9));
    Ok(())
}
