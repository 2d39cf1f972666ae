//! Continuous relaxations: the variable-base program with an optional floor
//! on the smallest interval, and its resource-constrained extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSolution {
    pub t_min: f64,
    pub intervals: Vec<f64>,
    pub value: f64,
    pub kkt_residual: f64,
}

/// Minimizes `K₀/T_min + Σ Cᵢ(Tᵢ)` subject to `Tᵢ ≥ T_min ≥ floor`.
///
/// For a fixed `T_min` each `Tᵢ = max(T_min, √(Kᵢ/Hᵢ))`, which leaves a
/// convex one-dimensional problem. Between consecutive EOQ breakpoints the
/// set of commodities pinned to `T_min` is fixed and the optimum is the
/// clamped stationary point `√((K₀ + ΣK)/ΣH)`.
pub fn solve_variable_base(inst: &Instance, floor: Option<f64>) -> RelaxationSolution {
    let cs = inst.commodities();
    let k0 = inst.k0();
    let lo = floor.filter(|f| *f > 0.0).unwrap_or(0.0);
    let mut order: Vec<(f64, usize)> = cs.iter().enumerate().map(|(i, c)| (c.eoq(), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let objective = |x: f64| -> f64 { k0 / x + cs.iter().map(|c| c.cost(x.max(c.eoq()))).sum::<f64>() };

    // Commodities whose EOQ is at or below the floor are pinned from the start.
    let mut num = k0;
    let mut den = 0.0;
    let mut next = 0;
    while next < order.len() && order[next].0 <= lo {
        let c = cs[order[next].1];
        num += c.k;
        den += c.h;
        next += 1;
    }
    let mut best_x = f64::NAN;
    let mut best_v = f64::INFINITY;
    let mut a = lo;
    loop {
        let b = if next < order.len() { order[next].0 } else { f64::INFINITY };
        let x = if den == 0.0 {
            b
        } else {
            let s = (num / den).sqrt();
            if b.is_finite() { s.clamp(a, b) } else { s.max(a) }
        };
        if x > 0.0 && x.is_finite() {
            let v = objective(x);
            if v < best_v {
                best_v = v;
                best_x = x;
            }
        }
        if next >= order.len() {
            break;
        }
        let c = cs[order[next].1];
        num += c.k;
        den += c.h;
        next += 1;
        a = b;
    }

    let intervals: Vec<f64> = cs.iter().map(|c| best_x.max(c.eoq())).collect();
    let mut t_min = best_x;
    if k0 == 0.0 {
        // T_min is free when there is no joint cost; report the smallest interval.
        t_min = intervals.iter().copied().fold(f64::INFINITY, f64::min).max(lo);
    }
    // One-sided derivative at the optimum; zero when stationary or blocked by the floor.
    let pinned: (f64, f64) = cs
        .iter()
        .filter(|c| c.eoq() < best_x)
        .fold((k0, 0.0), |(n, d), c| (n + c.k, d + c.h));
    let slope = -pinned.0 / (best_x * best_x) + pinned.1;
    let at_floor = lo > 0.0 && (best_x - lo).abs() <= 1e-12 * lo;
    let kkt = if k0 == 0.0 || (at_floor && slope >= 0.0) {
        0.0
    } else {
        (slope.abs() * best_x / best_v).max(0.0)
    };
    RelaxationSolution { t_min, intervals, value: best_v, kkt_residual: kkt }
}

/// Barrier parameters for [`solve_rc_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierOptions {
    pub mu0: f64,
    pub shrink: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub gap_tol: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions { mu0: 1.0, shrink: 0.2, newton_tol: 1e-10, max_newton: 500, gap_tol: 1e-11 }
    }
}

pub fn solve_rc(inst: &Instance) -> Result<RelaxationSolution> {
    solve_rc_with(inst, &BarrierOptions::default())
}

/// Solves the resource-constrained relaxation in the reciprocal variables
/// `yᵢ = 1/Tᵢ`, where every constraint is linear and the objective
/// `K₀y₀ + Σ(Kᵢyᵢ + Hᵢ/yᵢ)` is convex. A log barrier keeps `yᵢ ≤ y₀` and
/// every capacity strictly satisfied; each barrier stage is centred by damped
/// Newton steps.
pub fn solve_rc_with(inst: &Instance, opts: &BarrierOptions) -> Result<RelaxationSolution> {
    let Some(res) = inst.resources() else {
        return Ok(solve_variable_base(inst, None));
    };
    let cs = inst.commodities();
    let n = cs.len();
    let k0 = inst.k0();
    let joint = k0 > 0.0;
    let off = usize::from(joint);
    let dim = n + off;

    // Constraints b - a·z > 0, stored densely.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    if joint {
        for i in 0..n {
            let mut a = vec![0.0; dim];
            a[0] = -1.0;
            a[off + i] = 1.0;
            rows.push((a, 0.0));
        }
    }
    for (alpha, &beta) in res.alpha.iter().zip(&res.beta) {
        let mut a = vec![0.0; dim];
        a[off..].copy_from_slice(alpha);
        rows.push((a, beta));
    }
    let m = rows.len() as f64;

    // Strictly feasible start: every row uses at most half its capacity.
    let mut z = vec![0.0; dim];
    for i in 0..n {
        let mut y = 1.0 / cs[i].eoq();
        for (alpha, &beta) in res.alpha.iter().zip(&res.beta) {
            if alpha[i] > 0.0 {
                y = y.min(beta / (2.0 * n as f64 * alpha[i]));
            }
        }
        z[off + i] = y;
    }
    if joint {
        z[0] = 2.0 * z[off..].iter().copied().fold(0.0, f64::max);
    }

    let f = |z: &[f64]| -> f64 {
        let mut v = if joint { k0 * z[0] } else { 0.0 };
        for (i, c) in cs.iter().enumerate() {
            let y = z[off + i];
            v += c.k * y + c.h / y;
        }
        v
    };
    let slacks = |z: &[f64]| -> Vec<f64> {
        rows.iter().map(|(a, b)| b - a.iter().zip(z).map(|(x, y)| x * y).sum::<f64>()).collect()
    };
    let in_domain = |z: &[f64]| z[off..].iter().all(|&y| y > 0.0) && slacks(z).iter().all(|&s| s > 0.0);
    let phi = |z: &[f64], mu: f64| f(z) - mu * slacks(z).iter().map(|s| s.ln()).sum::<f64>();

    let mut mu = opts.mu0;
    let mut newton_total = 0usize;
    // The last stage is re-centred with a much tighter tolerance so the
    // reported multipliers are accurate.
    let mut polish = false;
    loop {
        let mut steps = 0usize;
        let tol = if polish { opts.newton_tol * 1e-12 } else { opts.newton_tol };
        loop {
            let s = slacks(&z);
            let mut g = vec![0.0; dim];
            let mut hess = vec![vec![0.0; dim]; dim];
            if joint {
                g[0] = k0;
            }
            for (i, c) in cs.iter().enumerate() {
                let y = z[off + i];
                g[off + i] = c.k - c.h / (y * y);
                hess[off + i][off + i] = 2.0 * c.h / (y * y * y);
            }
            for ((a, _), &sj) in rows.iter().zip(&s) {
                for p in 0..dim {
                    if a[p] == 0.0 {
                        continue;
                    }
                    g[p] += mu * a[p] / sj;
                    for q in 0..dim {
                        if a[q] != 0.0 {
                            hess[p][q] += mu * a[p] * a[q] / (sj * sj);
                        }
                    }
                }
            }
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let step = solve_dense(hess, neg_g)
                .ok_or_else(|| Error::Solver(format!("singular Newton system at mu={mu:e}")))?;
            let decrement: f64 = -g.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
            if decrement / 2.0 <= tol || (polish && steps >= 50) {
                break;
            }
            steps += 1;
            newton_total += 1;
            if steps > opts.max_newton {
                return Err(Error::Solver(format!(
                    "Newton did not converge in {} steps (mu={mu:e}, decrement={decrement:e}, {newton_total} steps total)",
                    opts.max_newton
                )));
            }
            let base = phi(&z, mu);
            let mut t = 1.0;
            let trial = |t: f64| -> Vec<f64> { z.iter().zip(&step).map(|(a, b)| a + t * b).collect() };
            while !in_domain(&trial(t)) {
                t *= 0.5;
                if t < 1e-30 {
                    return Err(Error::Solver("line search cannot stay inside the domain".into()));
                }
            }
            while phi(&trial(t), mu) > base - 0.25 * t * decrement && t > 1e-16 {
                t *= 0.5;
            }
            z = trial(t);
        }
        if polish {
            break;
        }
        let value = f(&z);
        if m * mu <= opts.gap_tol * value.abs().max(f64::MIN_POSITIVE) {
            polish = true;
            continue;
        }
        mu *= opts.shrink;
    }

    let value = f(&z);
    let s = slacks(&z);
    let mut grad = vec![0.0; dim];
    let mut scale = 0.0f64;
    if joint {
        grad[0] = k0;
        scale = scale.max(k0);
    }
    for (i, c) in cs.iter().enumerate() {
        let y = z[off + i];
        grad[off + i] = c.k - c.h / (y * y);
        scale = scale.max(c.k).max(c.h / (y * y));
    }
    // Multipliers for the nearly active rows by least squares on the
    // stationarity condition, clipped at zero. A row counts as active when
    // its slack is tiny or its barrier multiplier `μ/s` is not.
    let active: Vec<usize> = (0..rows.len())
        .filter(|&j| {
            let used: f64 = rows[j].0.iter().zip(&z).map(|(a, y)| (a * y).abs()).sum();
            let norm = rows[j].0.iter().fold(0.0f64, |acc, a| acc.max(a.abs()));
            s[j] <= 1e-7 * used.max(rows[j].1.abs()).max(f64::MIN_POSITIVE) || mu / s[j] * norm >= 1e-9 * scale
        })
        .collect();
    let mut lambda = vec![0.0; rows.len()];
    if !active.is_empty() {
        let gram: Vec<Vec<f64>> = active
            .iter()
            .map(|&p| active.iter().map(|&q| dot(&rows[p].0, &rows[q].0)).collect())
            .collect();
        let rhs: Vec<f64> = active.iter().map(|&p| -dot(&rows[p].0, &grad)).collect();
        if let Some(l) = solve_dense(gram, rhs) {
            for (&j, v) in active.iter().zip(l) {
                lambda[j] = v.max(0.0);
            }
        }
    }
    let mut resid = grad.clone();
    for ((a, _), l) in rows.iter().zip(&lambda) {
        for p in 0..dim {
            resid[p] += l * a[p];
        }
    }
    let stationarity = resid.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) / scale.max(f64::MIN_POSITIVE);
    let complementarity =
        lambda.iter().zip(&s).map(|(l, sj)| l * sj).sum::<f64>() / value.abs().max(f64::MIN_POSITIVE);

    let intervals: Vec<f64> = z[off..].iter().map(|y| 1.0 / y).collect();
    let t_min = if joint { 1.0 / z[0] } else { intervals.iter().copied().fold(f64::INFINITY, f64::min) };
    Ok(RelaxationSolution { t_min, intervals, value, kkt_residual: stationarity.max(complementarity) })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
