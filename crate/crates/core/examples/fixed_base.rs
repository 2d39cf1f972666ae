//! Policies restricted to integer multiples of a fixed base.

use jrp::model::{Commodity, Instance};
use jrp::pow2::{fixed_base_solve, FixedBaseBranch};
use jrp::rational::Rational;
use jrp::relax::solve_variable_base;

fn main() -> jrp::error::Result<()> {
    let inst = Instance::new(
        2.0,
        vec![Commodity::new(1.0, 1.0)?, Commodity::new(3.0, 0.2)?, Commodity::new(0.5, 4.0)?],
        None,
    )?;
    let lb = solve_variable_base(&inst, None).value;
    for delta in [Rational::new(1, 4), Rational::new(1, 1), Rational::new(3, 1)] {
        let r = fixed_base_solve(&inst, &delta, 0.25)?;
        let branch = match r.branch {
            FixedBaseBranch::Guessing { rho } => format!("guessing, minimum {rho}·Δ"),
            FixedBaseBranch::Rounding => "rounding".to_string(),
        };
        let ts: Vec<String> = r.policy.exact_intervals().unwrap_or_default().iter().map(|t| t.to_string()).collect();
        println!(
            "Δ = {delta}: T = ({})  cost {:.5}  vs relaxation {:.3}x  [{branch}]",
            ts.join(", "),
            r.cost.total,
            r.cost.total / lb
        );
    }
    Ok(())
}
