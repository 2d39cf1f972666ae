//! Runs a small sweep over every algorithm and prints the per-algorithm
//! ratio summary. Pass an output prefix to also write CSV and JSON.

use jrp::harness::{run_experiment, write_report, Algorithm, ExperimentSpec, GeneratorParams};

fn main() -> jrp::error::Result<()> {
    let free = ExperimentSpec {
        generator: GeneratorParams { n_min: 2, n_max: 4, ..Default::default() },
        instances: 6,
        algorithms: vec![Algorithm::Pow2, Algorithm::FixedBase, Algorithm::Evenly, Algorithm::Eptas],
        epsilons: vec![0.5],
        seed: 7,
        budget: 20_000,
        ..Default::default()
    };
    let constrained = ExperimentSpec {
        generator: GeneratorParams { n_min: 2, n_max: 5, resource_rows: 2, ..Default::default() },
        algorithms: vec![Algorithm::Rc, Algorithm::RcPtas],
        epsilons: vec![0.5],
        budget: 200,
        ..free.clone()
    };
    for spec in [free, constrained] {
        let report = run_experiment(&spec)?;
        for r in &report.rows {
            if let Some(e) = &r.error {
                println!("instance {} {}: {e}", r.instance, r.algorithm);
            }
        }
        for s in &report.summary {
            println!(
                "{:<10} rows {:>3}  errors {:>2}  max ratio {:.5}  mean ratio {:.5}",
                s.algorithm.name(),
                s.rows,
                s.errors,
                s.max_ratio,
                s.mean_ratio
            );
        }
        if let Some(out) = std::env::args().nth(1) {
            write_report(&report, std::path::Path::new(&out))?;
        }
    }
    Ok(())
}
