//! Single-commodity economic order quantity: the optimal interval, the cost
//! curve around it, and how far off the better endpoint of a bracket can be.

use jrp::model::{endpoint_bound, Commodity};

fn main() -> jrp::error::Result<()> {
    let c = Commodity::new(4.0, 1.0)?;
    let star = c.eoq();
    println!("K=4, H=1: EOQ interval {star}, cost {}", c.min_cost());
    for theta in [0.5, 0.8, 1.0, 1.25, 2.0] {
        let t = theta * star;
        // Cost relative to the optimum is (θ + 1/θ)/2 whatever K and H are.
        println!("  T = {t:>5.2}  C(T) = {:.4}  ratio {:.4}", c.cost(t), c.cost(t) / c.min_cost());
    }
    for (a, b) in [(1.0, 2.0), (1.0, 4.0), (1.0, 16.0)] {
        println!("bracket [{a}, {b}]: better endpoint within {:.4} of any interior T", endpoint_bound(a, b)?);
    }
    Ok(())
}
