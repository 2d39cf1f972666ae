//! Rounds the relaxation of a random instance to powers of two, both with
//! the best shift and with random shifts, and compares to the relaxation.

use jrp::harness::{generate_instance, GeneratorParams};
use jrp::pow2::{deterministic_pow2_round, randomized_pow2_round};
use jrp::relax::solve_variable_base;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jrp::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inst = generate_instance(&GeneratorParams { n_min: 6, n_max: 6, ..Default::default() }, &mut rng)?;
    let relax = solve_variable_base(&inst, None);
    println!("relaxation: T_min {:.4}, value {:.6}", relax.t_min, relax.value);

    let best = deterministic_pow2_round(&relax.intervals, &inst)?;
    println!("best shift: base {:.4}, exponents {:?}, ratio {:.6}", best.base, best.exponents, best.cost(&inst) / relax.value);

    let ratios: Vec<f64> = (0..1000)
        .map(|_| randomized_pow2_round(&relax.intervals, &mut rng).map(|p| p.cost(&inst) / relax.value))
        .collect::<jrp::error::Result<_>>()?;
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    println!("random shifts: mean ratio {mean:.6}, worst {worst:.6}");
    Ok(())
}
