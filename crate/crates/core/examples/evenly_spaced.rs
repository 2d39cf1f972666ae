//! Evenly spaced policies: the best single-base policy, the two policies the
//! θ-mixture argument combines, and the constants behind it.

use jrp::evenly::{best_evenly_spaced, construct_policy_a, construct_policy_b, theta_mixture_coefficients, pair_density_floor_holds, THETA};
use jrp::model::{Commodity, Instance};
use jrp::rational::Rational;
use jrp::relax::solve_variable_base;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jrp::error::Result<()> {
    let inst = Instance::new(
        5.0,
        vec![Commodity::new(1.0, 1.0)?, Commodity::new(1.0, 0.45)?, Commodity::new(2.0, 0.1)?],
        None,
    )?;
    let relax = solve_variable_base(&inst, None);
    let best = best_evenly_spaced(&inst, 0.1)?;
    println!(
        "best evenly spaced: Δ = {}, multipliers {:?}, ratio {:.6}",
        best.delta,
        best.multipliers,
        best.cost(&inst) / relax.value
    );

    let reference: Vec<Rational> = vec![Rational::new(1, 1), Rational::new(3, 2), Rational::new(9, 2)];
    let b = construct_policy_b(&inst, &reference)?;
    println!("policy B on (1, 3/2, 9/2): Δ = {}, multipliers {:?}", b.delta, b.multipliers);
    let a = construct_policy_a(&[1.0, 1.5, 4.5], &mut ChaCha8Rng::seed_from_u64(3))?;
    println!("policy A on the same reference: base {:.4}, exponents {:?}", a.base, a.exponents);

    let (joint, eoq) = theta_mixture_coefficients(THETA);
    println!("θ = {THETA}: joint coefficient {joint:.6}, EOQ coefficient {eoq:.6}");
    for t in [Rational::new(3, 2), Rational::new(5, 2), Rational::new(7, 3)] {
        println!("pair (1, {t}) density at least 6/5: {}", pair_density_floor_holds(&Rational::one(), &t)?);
    }
    Ok(())
}
