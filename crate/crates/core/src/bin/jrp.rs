use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jrp::error::{Error, Result};
use jrp::harness::{read_instance, run_experiment, solve, write_report, Algorithm, ExperimentSpec, GeneratorParams, SolveOptions};
use jrp::model::{total_cost, Policy};
use jrp::oracle::exact_density;
use jrp::rational::Rational;
use jrp::verify::{run_invariant_suites, verify_instance, CheckOutcome};

#[derive(Parser)]
#[command(name = "jrp", version, about = "Joint replenishment policies")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Solve one instance with one algorithm and print the policy as JSON.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact joint-order density of a rational policy.
    Density {
        /// Comma-separated intervals such as `1,5/2`, or a policy JSON file.
        #[arg(long)]
        policy: String,
        /// Also report the total cost on this instance.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Run the invariant suites, or cross-check every algorithm on one instance.
    Verify {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep generated instances and write `<out>.csv` and `<out>.json`.
    Bench {
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',', default_value = "pow2,evenly,eptas")]
        algo: Vec<Algorithm>,
        /// Comma-separated ε values.
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = Rational::one())]
        delta: Rational,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        trials: u32,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Resource rows per generated instance.
        #[arg(long, default_value_t = 0)]
        rows: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "pow2")]
    algo: Algorithm,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Fixed base as `num/den`.
    #[arg(long, default_value_t = Rational::one())]
    delta: Rational,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    trials: u32,
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
}

impl Common {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            algorithm: self.algo,
            eps: self.epsilon,
            delta: self.delta.clone(),
            seed: self.seed,
            trials: self.trials,
            budget: self.budget,
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Argument(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_policy(arg: &str) -> Result<Policy> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Argument(format!("{arg}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{arg}: {e}")));
    }
    let ts = arg.split(',').map(|s| s.trim().parse()).collect::<Result<Vec<Rational>>>()?;
    Policy::general_exact(ts)
}

fn report(checks: &[CheckOutcome]) -> bool {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.passed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.verb {
        Verb::Solve { instance, common, out } => {
            let inst = read_instance(&instance)?;
            let sol = solve(&inst, &common.options())?;
            emit(&to_json(&sol)?, out.as_deref())?;
            Ok(true)
        }
        Verb::Density { policy, instance } => {
            let p = parse_policy(&policy)?;
            let ts = p
                .exact_intervals()
                .ok_or_else(|| Error::Unsupported("density needs rational intervals".into()))?;
            let d = exact_density(&ts)?;
            println!("density {} ({:.12}) from {} inclusion-exclusion terms", d.value, d.value.to_f64(), d.term_count);
            if let Some(path) = instance {
                let c = total_cost(&read_instance(&path)?, &p)?;
                println!("{}", to_json(&c)?);
            }
            Ok(true)
        }
        Verb::Verify { instance, common } => match instance {
            Some(path) => Ok(report(&verify_instance(&read_instance(&path)?, &common.options()))),
            None => Ok(report(&run_invariant_suites(common.seed))),
        },
        Verb::Bench { algo, epsilon, delta, seed, trials, budget, instances, n_max, rows, out } => {
            let spec = ExperimentSpec {
                generator: GeneratorParams { n_max, resource_rows: rows, ..Default::default() },
                instances,
                algorithms: algo,
                epsilons: epsilon,
                seed,
                trials,
                budget,
                delta,
            };
            let rep = run_experiment(&spec)?;
            for s in &rep.summary {
                println!(
                    "{:<10} rows {:>4}  errors {:>3}  max ratio {:.6}  mean ratio {:.6}",
                    s.algorithm.name(),
                    s.rows,
                    s.errors,
                    s.max_ratio,
                    s.mean_ratio
                );
            }
            match out {
                Some(p) => write_report(&rep, &p)?,
                None => jrp::harness::write_csv(&rep.rows, std::io::stdout())?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    if let Some(n) = std::env::var("JRP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("JRP_THREADS ignored: {e}");
        }
    }
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
