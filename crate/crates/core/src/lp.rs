//! Small dense linear programs: two-phase tableau simplex with Bland's rule.
//!
//! The solver runs in `f64` first. If pivoting stalls on degenerate steps or
//! the float answer fails the row check, the same tableau is rerun over exact
//! rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// Minimize `objective·x` subject to equality rows, `≤` rows, `x ≥ 0`,
/// optional upper bounds, and variables fixed to 0 or 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LpModel {
    pub objective: Vec<f64>,
    pub equalities: Vec<LinearRow>,
    pub inequalities: Vec<LinearRow>,
    /// `(variable, true)` fixes to 1, `(variable, false)` to 0.
    pub fixings: Vec<(usize, bool)>,
    /// Empty, or one entry per variable.
    pub upper_bounds: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// True when the exact-rational fallback produced this answer.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
}

const DEGENERATE_LIMIT: usize = 10_000;
const PIVOT_LIMIT: usize = 200_000;
const ROW_TOL: f64 = 1e-9;

pub fn solve_lp(model: &LpModel) -> Result<LpOutcome> {
    let std = StandardForm::build(model)?;
    match run::<f64>(&std) {
        Ok(Some(x)) => {
            let sol = std.finish(model, x, false);
            if satisfies(model, &sol.x) {
                return Ok(LpOutcome::Optimal(sol));
            }
            log::debug!("float simplex answer violates a row; rerunning exactly");
        }
        Ok(None) => return Ok(LpOutcome::Infeasible),
        Err(Halt::Unbounded) => return Err(Error::Solver("objective is unbounded below".into())),
        Err(Halt::Stall) => log::debug!("float simplex stalled; rerunning exactly"),
    }
    match run::<BigRational>(&std) {
        Ok(Some(x)) => Ok(LpOutcome::Optimal(std.finish(model, x, true))),
        Ok(None) => Ok(LpOutcome::Infeasible),
        Err(Halt::Unbounded) => Err(Error::Solver("objective is unbounded below".into())),
        Err(Halt::Stall) => Err(Error::Solver("exact simplex exceeded its pivot limit".into())),
    }
}

/// Row and bound check at the documented tolerance.
pub fn satisfies(model: &LpModel, x: &[f64]) -> bool {
    let dot = |r: &LinearRow| r.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    x.iter().all(|v| *v >= -ROW_TOL)
        && model.equalities.iter().all(|r| (dot(r) - r.rhs).abs() <= ROW_TOL * (1.0 + r.rhs.abs()))
        && model.inequalities.iter().all(|r| dot(r) <= r.rhs + ROW_TOL * (1.0 + r.rhs.abs()))
        && model.fixings.iter().all(|&(j, one)| x[j] == if one { 1.0 } else { 0.0 })
        && model
            .upper_bounds
            .iter()
            .zip(x)
            .all(|(u, v)| u.is_none_or(|u| *v <= u + ROW_TOL))
}

enum Halt {
    Stall,
    Unbounded,
}

trait Scalar: Clone {
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_nonzero(&self) -> bool;
    /// `Less` / `Equal` / `Greater` with the scalar's own tie tolerance.
    fn cmp_tol(&self, o: &Self) -> std::cmp::Ordering;
}

const EPS: f64 = 1e-9;

impl Scalar for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_pos(&self) -> bool {
        *self > EPS
    }
    fn is_neg(&self) -> bool {
        *self < -EPS
    }
    fn is_nonzero(&self) -> bool {
        self.abs() > EPS
    }
    fn cmp_tol(&self, o: &Self) -> std::cmp::Ordering {
        if (self - o).abs() <= 1e-12 * (1.0 + self.abs().max(o.abs())) {
            std::cmp::Ordering::Equal
        } else {
            self.total_cmp(o)
        }
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn is_nonzero(&self) -> bool {
        !self.is_zero()
    }
    fn cmp_tol(&self, o: &Self) -> std::cmp::Ordering {
        self.cmp(o)
    }
}

/// Rows `coeffs·x (≤|=|≥) rhs` with `rhs ≥ 0` over the free variables.
struct StandardForm {
    free: Vec<usize>,
    rows: Vec<(Vec<f64>, f64, Sense)>,
    cost: Vec<f64>,
    constant: f64,
    fixed: Vec<Option<f64>>,
}

#[derive(Clone, Copy, PartialEq)]
enum Sense {
    Le,
    Eq,
    Ge,
}

impl StandardForm {
    fn build(m: &LpModel) -> Result<Self> {
        let n = m.objective.len();
        let check = |r: &LinearRow| {
            if r.coeffs.len() != n {
                Err(Error::Argument(format!("row has {} coefficients, expected {n}", r.coeffs.len())))
            } else {
                Ok(())
            }
        };
        m.equalities.iter().try_for_each(check)?;
        m.inequalities.iter().try_for_each(check)?;
        if !m.upper_bounds.is_empty() && m.upper_bounds.len() != n {
            return Err(Error::Argument("upper bounds must cover every variable".into()));
        }
        let mut fixed = vec![None; n];
        for &(j, one) in &m.fixings {
            if j >= n {
                return Err(Error::Argument(format!("fixing refers to variable {j} of {n}")));
            }
            let v = if one { 1.0 } else { 0.0 };
            if fixed[j].is_some_and(|old| old != v) {
                return Err(Error::Argument(format!("variable {j} fixed to both 0 and 1")));
            }
            fixed[j] = Some(v);
        }
        let free: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
        let reduce = |r: &LinearRow| -> (Vec<f64>, f64) {
            let shift: f64 = (0..n).filter_map(|j| fixed[j].map(|v| r.coeffs[j] * v)).sum();
            (free.iter().map(|&j| r.coeffs[j]).collect(), r.rhs - shift)
        };
        let mut rows = Vec::new();
        let mut push = |coeffs: Vec<f64>, rhs: f64, sense: Sense| {
            if rhs < 0.0 {
                let flipped = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                rows.push((coeffs.iter().map(|c| -c).collect(), -rhs, flipped));
            } else {
                rows.push((coeffs, rhs, sense));
            }
        };
        for r in &m.equalities {
            let (c, b) = reduce(r);
            push(c, b, Sense::Eq);
        }
        for r in &m.inequalities {
            let (c, b) = reduce(r);
            push(c, b, Sense::Le);
        }
        for (j, u) in m.upper_bounds.iter().enumerate() {
            if let (Some(u), None) = (u, fixed[j]) {
                let mut c = vec![0.0; free.len()];
                let pos = free.iter().position(|&f| f == j).expect("free variable");
                c[pos] = 1.0;
                push(c, *u, Sense::Le);
            }
        }
        let constant = (0..n).filter_map(|j| fixed[j].map(|v| m.objective[j] * v)).sum();
        let cost = free.iter().map(|&j| m.objective[j]).collect();
        Ok(StandardForm { free, rows, cost, constant, fixed })
    }

    fn finish<S: Scalar>(&self, m: &LpModel, xs: Vec<S>, exact: bool) -> LpSolution {
        let mut x: Vec<f64> = self.fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        for (k, &j) in self.free.iter().enumerate() {
            x[j] = xs[k].to_f64().max(0.0);
        }
        let objective = m.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
        debug_assert!((objective - (self.constant + self.cost.iter().zip(&xs).map(|(c, v)| c * v.to_f64()).sum::<f64>())).abs() < 1e-6 * (1.0 + objective.abs()));
        LpSolution { x, objective, exact }
    }
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    obj: Vec<S>,
    basis: Vec<usize>,
    width: usize,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.div(&p);
        }
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<S>| {
            let f = row[c].clone();
            if f.is_nonzero() {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v = v.sub(&f.mul(pv));
                }
            }
            row[c] = S::zero();
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = c;
    }

    /// Bland's rule until optimal.
    fn optimize(&mut self, allowed: &[bool]) -> std::result::Result<(), Halt> {
        let mut degenerate = 0usize;
        for _ in 0..PIVOT_LIMIT {
            let Some(c) = (0..self.width).find(|&j| allowed[j] && self.obj[j].is_neg()) else {
                return Ok(());
            };
            let mut best: Option<(usize, S)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[c].is_pos() {
                    continue;
                }
                let ratio = row[self.width].div(&row[c]);
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => match ratio.cmp_tol(&bratio) {
                        std::cmp::Ordering::Less => Some((r, ratio)),
                        std::cmp::Ordering::Equal if self.basis[r] < self.basis[br] => Some((r, ratio)),
                        _ => Some((br, bratio)),
                    },
                };
            }
            let Some((r, ratio)) = best else { return Err(Halt::Unbounded) };
            if !ratio.is_pos() {
                degenerate += 1;
                if degenerate > DEGENERATE_LIMIT {
                    return Err(Halt::Stall);
                }
            }
            self.pivot(r, c);
        }
        Err(Halt::Stall)
    }
}

/// `Ok(None)` means infeasible.
fn run<S: Scalar>(sf: &StandardForm) -> std::result::Result<Option<Vec<S>>, Halt> {
    let nv = sf.free.len();
    let n_slack = sf.rows.iter().filter(|r| r.2 != Sense::Eq).count();
    let n_art = sf.rows.iter().filter(|r| r.2 != Sense::Le).count();
    let width = nv + n_slack + n_art;
    let art_start = nv + n_slack;
    let mut rows = Vec::with_capacity(sf.rows.len());
    let mut basis = Vec::with_capacity(sf.rows.len());
    let (mut s_idx, mut a_idx) = (nv, art_start);
    for (coeffs, rhs, sense) in &sf.rows {
        let mut row: Vec<S> = vec![S::zero(); width + 1];
        for (k, c) in coeffs.iter().enumerate() {
            row[k] = S::from_f64(*c);
        }
        row[width] = S::from_f64(*rhs);
        match sense {
            Sense::Le => {
                row[s_idx] = S::one();
                basis.push(s_idx);
                s_idx += 1;
            }
            Sense::Ge => {
                row[s_idx] = S::zero().sub(&S::one());
                s_idx += 1;
                row[a_idx] = S::one();
                basis.push(a_idx);
                a_idx += 1;
            }
            Sense::Eq => {
                row[a_idx] = S::one();
                basis.push(a_idx);
                a_idx += 1;
            }
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, obj: vec![S::zero(); width + 1], basis, width };

    if n_art > 0 {
        for r in 0..t.rows.len() {
            if t.basis[r] >= art_start {
                for j in 0..=width {
                    if j < art_start || j == width {
                        t.obj[j] = t.obj[j].sub(&t.rows[r][j]);
                    }
                }
            }
        }
        let allowed = vec![true; width];
        t.optimize(&allowed)?;
        let infeasibility = S::zero().sub(&t.obj[width]);
        let scale = 1.0 + sf.rows.iter().map(|r| r.1.abs()).sum::<f64>();
        if (S::EXACT && infeasibility.is_pos()) || infeasibility.to_f64() > 1e-9 * scale {
            return Ok(None);
        }
        // Drive artificials out of the basis; drop rows that turn out redundant.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art_start {
                match (0..art_start).find(|&j| t.rows[r][j].is_nonzero()) {
                    Some(j) => {
                        t.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    t.obj = vec![S::zero(); width + 1];
    for (j, c) in sf.cost.iter().enumerate() {
        t.obj[j] = S::from_f64(*c);
    }
    for r in 0..t.rows.len() {
        let b = t.basis[r];
        let cb = t.obj[b].clone();
        let row = t.rows[r].clone();
        for (o, v) in t.obj.iter_mut().zip(&row) {
            *o = o.sub(&cb.mul(v));
        }
    }
    let allowed: Vec<bool> = (0..width).map(|j| j < art_start).collect();
    t.optimize(&allowed)?;
    let mut x = vec![S::zero(); nv];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < nv {
            x[b] = t.rows[r][width].clone();
        }
    }
    Ok(Some(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(c: &[f64], rhs: f64) -> LinearRow {
        LinearRow { coeffs: c.to_vec(), rhs }
    }

    fn optimal(m: &LpModel) -> LpSolution {
        match solve_lp(m).unwrap() {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => panic!("unexpectedly infeasible"),
        }
    }

    #[test]
    fn single_column() {
        let m = LpModel { objective: vec![3.0], equalities: vec![row(&[1.0], 1.0)], ..Default::default() };
        let s = optimal(&m);
        assert_eq!(s.x, vec![1.0]);
        assert_eq!(s.objective, 3.0);
    }

    #[test]
    fn cheapest_column_wins() {
        let m = LpModel { objective: vec![2.0, 2.5], equalities: vec![row(&[1.0, 1.0], 1.0)], ..Default::default() };
        let s = optimal(&m);
        assert_eq!(s.x, vec![1.0, 0.0]);
        assert_eq!(s.objective, 2.0);
    }

    #[test]
    fn resource_row_forces_second_column() {
        let m = LpModel {
            objective: vec![2.0, 2.5],
            equalities: vec![row(&[1.0, 1.0], 1.0)],
            inequalities: vec![row(&[2.0, 1.0], 1.0)],
            ..Default::default()
        };
        let s = optimal(&m);
        assert!(s.x[0].abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        assert!((s.objective - 2.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_is_reported() {
        let m = LpModel {
            objective: vec![1.0, 1.0],
            equalities: vec![row(&[1.0, 1.0], 1.0)],
            inequalities: vec![row(&[2.0, 2.0], 1.0)],
            ..Default::default()
        };
        assert_eq!(solve_lp(&m).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn fixings_are_exact() {
        let m = LpModel {
            objective: vec![1.0, 5.0, 2.0],
            equalities: vec![row(&[1.0, 1.0, 1.0], 1.0)],
            fixings: vec![(0, false), (1, true)],
            ..Default::default()
        };
        let s = optimal(&m);
        assert_eq!(s.x, vec![0.0, 1.0, 0.0]);
        assert_eq!(s.objective, 5.0);
    }

    #[test]
    fn upper_bounds_apply() {
        let m = LpModel {
            objective: vec![-1.0, -2.0],
            inequalities: vec![row(&[1.0, 1.0], 4.0)],
            upper_bounds: vec![None, Some(1.5)],
            ..Default::default()
        };
        let s = optimal(&m);
        assert!((s.x[1] - 1.5).abs() < 1e-12 && (s.x[0] - 2.5).abs() < 1e-12);
    }
}
