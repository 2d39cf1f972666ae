//! Discretized LP rounding under one resource row: candidate sets, the
//! rounding statistics of one LP solution, and the final scaled policy.

use jrp::eptas::{derive_configuration, propagate_representatives};
use jrp::harness::{generate_instance, GeneratorParams};
use jrp::rational::Rational;
use jrp::rc::{discretize, guess_and_round, rc_ptas_solve, rc_solve, rounding_statistics};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jrp::error::Result<()> {
    let eps = 0.25;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let params = GeneratorParams { n_min: 6, n_max: 6, resource_rows: 1, violation_probability: 1.0, ..Default::default() };
    let inst = generate_instance(&params, &mut rng)?;

    let shift = rc_solve(&inst, 64, &mut rng)?;
    let reference = shift.relaxation.intervals.iter().map(|&t| Rational::snap_default(t)).collect::<jrp::error::Result<Vec<_>>>()?;
    let t_ref = shift.relaxation.t_min * (1.0 - eps / 2.0);
    let reps = propagate_representatives(&derive_configuration(&reference, eps, t_ref)?.configuration, eps)?;
    let sets = discretize(&inst, eps, &reps, t_ref)?;
    let sizes: Vec<usize> = sets.candidates.iter().map(Vec::len).collect();
    println!("{} representatives, candidates per commodity {sizes:?}", sets.reps.len());

    let g = guess_and_round(&inst, &sets, 64, shift.cost.total, 1)?;
    let stats = rounding_statistics(&inst, &sets, &g.lp, 1000, 2);
    println!(
        "LP {:.6}; over 1000 draws cost overshoot {:.3}, row overshoot {:?}, joint success {:.3}",
        g.lp.objective, stats.cost_exceeded, stats.row_violated, stats.success
    );
    println!("accepted after {} retries, scaled by {:.4}, cost {:.6}", g.successful_trial, g.scale.to_f64(), g.cost.total);

    let full = rc_ptas_solve(&inst, eps, 2_000, 3)?;
    println!(
        "rc-ptas {:.6} vs shift rounding {:.6} vs relaxation {:.6}; feasible {}",
        full.cost.total,
        shift.cost.total,
        shift.relaxation.value,
        inst.is_feasible(&full.policy.intervals_f64(), 1e-9)
    );
    Ok(())
}
