//! Exact joint-order density of rational policies, checked against direct
//! counting of order epochs over one common period.

use jrp::oracle::{count_joint_orders, exact_density, Convention};
use jrp::rational::{rational_lcm, Rational};

fn main() -> jrp::error::Result<()> {
    let policies: Vec<Vec<Rational>> = vec![
        vec![Rational::new(1, 1), Rational::new(5, 2)],
        vec![Rational::new(2, 3), Rational::new(3, 4), Rational::new(5, 6)],
        vec![Rational::new(1, 1), Rational::new(2, 1), Rational::new(4, 1)],
    ];
    for ts in policies {
        let d = exact_density(&ts)?;
        let period = rational_lcm(&ts);
        let count = count_joint_orders(&ts, &period, Convention::HalfOpen)?;
        let shown: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
        println!(
            "T = ({})  density {}  period {}  orders in [0, period) {}  terms {}",
            shown.join(", "),
            d.value,
            period,
            count,
            d.term_count
        );
        assert_eq!(d.value * period, Rational::from(count as i64));
    }
    Ok(())
}
