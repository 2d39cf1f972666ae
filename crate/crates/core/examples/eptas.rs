//! The approximation scheme on a small instance, next to the simpler
//! policies it is seeded with.

use jrp::eptas::{eptas_solve, segment_count, psi, Origin};
use jrp::evenly::best_evenly_spaced;
use jrp::model::{Commodity, Instance};
use jrp::pow2::deterministic_pow2_round;
use jrp::relax::solve_variable_base;

fn main() -> jrp::error::Result<()> {
    let inst = Instance::new(
        3.0,
        vec![Commodity::new(1.0, 2.0)?, Commodity::new(2.0, 0.7)?, Commodity::new(1.0, 0.15)?, Commodity::new(0.2, 1.0)?],
        None,
    )?;
    let relax = solve_variable_base(&inst, None);
    let pow2 = deterministic_pow2_round(&relax.intervals, &inst)?.cost(&inst);
    println!("relaxation {:.6}", relax.value);
    println!("pow2       {:.6}", pow2);
    for eps in [0.5, 0.4] {
        let evenly = best_evenly_spaced(&inst, eps)?.cost(&inst);
        let r = eptas_solve(&inst, eps, 200_000)?;
        let origin = match &r.origin {
            Origin::Configuration { index, .. } => format!("configuration #{index}"),
            o => format!("{o:?}"),
        };
        println!(
            "ε = {eps}: {} segments, Ψ = {:.1}, evenly {evenly:.6}, scheme {:.6} from {origin} ({} configurations{})",
            segment_count(eps),
            psi(eps),
            r.cost.total,
            r.configurations_evaluated,
            if r.budget_exhausted { ", budget hit" } else { "" }
        );
    }
    Ok(())
}
