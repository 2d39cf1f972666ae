//! Oracles shared by the integration targets. Nothing here calls into the
//! library's counting or density code.

#![allow(dead_code)]

use jrp::rational::Rational;
use num_traits::ToPrimitive;
use rand::Rng;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

/// Integer images of positive rationals over their common denominator,
/// with that denominator.
pub fn integer_images(values: &[Rational]) -> Option<(Vec<u64>, u64)> {
    let mut den = 1u64;
    for v in values {
        den = lcm(den, v.denom().to_u64()?)?;
    }
    let ints = values
        .iter()
        .map(|v| v.numer().to_u64()?.checked_mul(den / v.denom().to_u64()?))
        .collect::<Option<Vec<_>>>()?;
    Some((ints, den))
}

pub fn lcm_all(ints: &[u64]) -> Option<u64> {
    ints.iter().try_fold(1u64, |acc, &a| lcm(acc, a))
}

/// Order counts in `[0, Δ)` for `Δ = k·period`, `k = 1..=periods`, both for
/// the whole set and per group. Intervals are integers on a common scale.
pub struct PeriodCounts {
    pub union: Vec<u64>,
    pub groups: Vec<Vec<u64>>,
}

pub fn count_by_period(ints: &[u64], groups: &[usize], period: u64, periods: u64) -> PeriodCounts {
    let g = groups.iter().copied().max().map_or(0, |m| m + 1);
    assert!(g <= 8);
    let horizon = (period * periods) as usize;
    let mut mask = vec![0u8; horizon];
    for (&a, &c) in ints.iter().zip(groups) {
        for x in (0..horizon).step_by(a as usize) {
            mask[x] |= 1 << c;
        }
    }
    let mut union = Vec::with_capacity(periods as usize);
    let mut per = vec![Vec::with_capacity(periods as usize); g];
    let (mut u, mut c) = (0u64, vec![0u64; g]);
    for (x, m) in mask.iter().enumerate() {
        if *m != 0 {
            u += 1;
        }
        for (j, cj) in c.iter_mut().enumerate() {
            if m & (1 << j) != 0 {
                *cj += 1;
            }
        }
        if (x + 1) % period as usize == 0 {
            union.push(u);
            for j in 0..g {
                per[j].push(c[j]);
            }
        }
    }
    PeriodCounts { union, groups: per }
}

/// Number of acyclic edge subsets of the complete graph on `k` vertices.
pub fn brute_force_forests(k: usize) -> usize {
    let edges: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let mut count = 0;
    for mask in 0u32..1 << edges.len() {
        let mut parent: Vec<usize> = (0..k).collect();
        fn root(p: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                x = p[x];
            }
            x
        }
        let mut ok = true;
        for (i, &(a, b)) in edges.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                if ra == rb {
                    ok = false;
                    break;
                }
                parent[ra] = rb;
            }
        }
        if ok {
            count += 1;
        }
    }
    count
}

/// Smallest `Σ kᵢ²` over compositions of `total` into `parts` non-negative
/// integers, by exhaustive search.
pub fn min_square_sum(parts: usize, total: u64) -> u64 {
    fn go(parts: usize, left: u64, acc: u64, best: &mut u64) {
        if parts == 1 {
            *best = (*best).min(acc + left * left);
            return;
        }
        for k in 0..=left {
            let a = acc + k * k;
            if a >= *best {
                break;
            }
            go(parts - 1, left - k, a, best);
        }
    }
    let mut best = u64::MAX;
    go(parts, total, 0, &mut best);
    best
}

/// Grid maximum of `Σ_{λ<μ} x_λ x_μ` on the simplex `Σx = size`, step `size/steps`.
pub fn crossing_pairs_on_grid(parts: usize, size: f64, steps: u64) -> f64 {
    let s = min_square_sum(parts, steps) as f64 / (steps * steps) as f64;
    0.5 * size * size * (1.0 - s)
}

/// Reference intervals on a quarter grid: the first is 1, the rest lie in
/// `[1, top]`.
pub fn quarter_reference<R: Rng>(rng: &mut R, n: usize, top: f64) -> Vec<Rational> {
    let mut out = vec![Rational::one()];
    while out.len() < n {
        let den = rng.random_range(1..=4i64);
        let hi = (top * den as f64).floor() as i64;
        out.push(Rational::new(rng.random_range(den..=hi), den));
    }
    out
}

/// `K/T + H·T` written out for the tests.
pub fn eoq_cost(k: f64, h: f64, t: f64) -> f64 {
    k / t + h * t
}

/// Largest integer-scale horizon the counting checks will allocate.
pub const COUNT_CAP: u64 = 2_000_000;

/// Grid size over which a set of rationals repeats, on its integer scale.
pub fn period_of(values: &[Rational], cap: u64) -> Option<(Vec<u64>, u64)> {
    let (ints, _) = integer_images(values)?;
    let p = lcm_all(&ints)?;
    (p <= cap).then_some((ints, p))
}

/// `(1−ε)·Σ_λ N(R^λ,Δ) − |A|² ≤ N(R,Δ) ≤ Σ_λ N(R^λ,Δ)` at every full period
/// `Δ = k·P`, `k = 1..=periods`.
pub fn check_sandwich(reps: &[Rational], components: &[usize], eps: f64, periods: u64) -> Result<(), String> {
    let (ints, p) = period_of(reps, COUNT_CAP / periods).ok_or("period too long")?;
    let counts = count_by_period(&ints, components, p, periods);
    let a2 = (reps.len() * reps.len()) as f64;
    for k in 0..periods as usize {
        let total: u64 = counts.groups.iter().map(|g| g[k]).sum();
        let n = counts.union[k];
        if n > total || (n as f64) < (1.0 - eps) * total as f64 - a2 {
            return Err(format!("Δ = {} periods: N = {n}, component sum {total}", k + 1));
        }
    }
    Ok(())
}

/// `N(R̃,Δ) ≤ (1+4ε)·N(R*,Δ) + 4|A|²` at every full common period.
pub fn check_density_bound(tilde: &[Rational], star: &[Rational], eps: f64, periods: u64) -> Result<(), String> {
    let all: Vec<Rational> = tilde.iter().chain(star).cloned().collect();
    let (ints, p) = period_of(&all, COUNT_CAP / periods).ok_or("period too long")?;
    let groups: Vec<usize> = (0..all.len()).map(|j| usize::from(j >= tilde.len())).collect();
    let counts = count_by_period(&ints, &groups, p, periods);
    let a2 = (star.len() * star.len()) as f64;
    for k in 0..periods as usize {
        let (nt, ns) = (counts.groups[0][k], counts.groups[1][k]);
        if nt as f64 > (1.0 + 4.0 * eps) * ns as f64 + 4.0 * a2 {
            return Err(format!("Δ = {} periods: N(R̃) = {nt}, N(R*) = {ns}", k + 1));
        }
    }
    Ok(())
}

/// `lcm(component)/source ≤ Ψ^{size−1}` for each component.
pub fn check_lcm_bound(reps: &[Rational], components: &[usize], sources: &[usize], psi: f64) -> Result<(), String> {
    for (c, &s) in sources.iter().enumerate() {
        let members: Vec<Rational> = reps.iter().zip(components).filter(|(_, &x)| x == c).map(|(r, _)| r.clone()).collect();
        let mut with_source = members.clone();
        with_source.push(reps[s].clone());
        let (ints, _) = integer_images(&with_source).ok_or("overflow")?;
        let l = lcm_all(&ints[..members.len()]).ok_or("overflow")?;
        let ratio = l as f64 / *ints.last().unwrap() as f64;
        if ratio > psi.powi(members.len() as i32 - 1) * (1.0 + 1e-12) {
            return Err(format!("component {c}: lcm ratio {ratio}"));
        }
    }
    Ok(())
}

/// Outcome of the structural checks on one reference-derived configuration.
pub enum Structural {
    Passed,
    /// The common period is too long to count.
    Skipped,
}

/// Derives a configuration from `reference`, propagates it, and checks the
/// component scaling, both sandwiches, the density bound and the LCM bound.
pub fn check_reference_configuration(reference: &[Rational], eps: f64, t_est: f64, periods: u64) -> Result<Structural, String> {
    use jrp::eptas::{derive_configuration, propagate_representatives, psi};
    let d = derive_configuration(reference, eps, t_est).map_err(|e| e.to_string())?;
    let rs = propagate_representatives(&d.configuration, eps).map_err(|e| e.to_string())?;
    let star = &d.reference_reps;
    let tilde = &rs.reps;
    if rs.components != d.components {
        return Err(format!("components {:?} vs reference {:?}", rs.components, d.components));
    }
    let mut gamma: Vec<Option<Rational>> = vec![None; rs.sources.len()];
    for j in 0..star.len() {
        let g = tilde[j].clone() / star[j].clone();
        let slot = &mut gamma[rs.components[j]];
        match slot {
            None => *slot = Some(g.clone()),
            Some(h) if *h != g => return Err(format!("scale varies within component: {h} vs {g}")),
            _ => {}
        }
        let gf = g.to_f64();
        if gf < 1.0 - eps - 1e-9 || gf > 1.0 + eps + 1e-9 {
            return Err(format!("scale {gf} outside 1 ± ε"));
        }
    }
    check_lcm_bound(tilde, &rs.components, &rs.sources, psi(eps))?;
    let both: Vec<Rational> = tilde.iter().chain(star).cloned().collect();
    if period_of(&both, COUNT_CAP / periods).is_none() {
        return Ok(Structural::Skipped);
    }
    check_sandwich(star, &d.components, eps, periods).map_err(|e| format!("reference sandwich: {e}"))?;
    check_density_bound(tilde, star, eps, periods)?;
    Ok(Structural::Passed)
}

/// `E[⌈θe^U⌉·e^{−U}/θ]` for `U ~ U(0, ln 2)`, integrated piece by piece over
/// the ranges where the ceiling is constant.
pub fn shift_ratio_integral(theta: f64) -> f64 {
    let l2 = std::f64::consts::LN_2;
    let mut total = 0.0;
    let mut a = 0.0;
    while a < l2 {
        let mut k = (theta * a.exp()).floor() + 1.0;
        let mut b = (k / theta).ln();
        if b <= a {
            // Round-off left `a` a hair below the breakpoint it sits on.
            k += 1.0;
            b = (k / theta).ln();
        }
        let b = b.min(l2);
        total += k * ((-a).exp() - (-b).exp());
        a = b;
    }
    total / (theta * l2)
}
