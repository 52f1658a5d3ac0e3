//! Independent oracles shared by the acceptance and property targets.

#![allow(dead_code)]

use macicmac::lp::LpOutcome;
use macicmac::polytope::{LinearInequality, Polytope};
use macicmac::rational::{int, zero, Rational};
use num_traits::ToPrimitive;
use rand::Rng;

/// Small polytope with integer data: `[0, 3]^dim` cut by `extra` random rows
/// whose right-hand sides are nonnegative (so the origin stays inside).
pub fn random_small_polytope(rng: &mut impl Rng, dim: usize, extra: usize) -> Polytope {
    let mut rows: Vec<LinearInequality> = (0..dim)
        .map(|j| {
            let mut c = vec![zero(); dim];
            c[j] = int(1);
            LinearInequality::new(c, int(3))
        })
        .collect();
    for _ in 0..extra {
        rows.push(random_row(rng, dim));
    }
    Polytope::new(dim, rows, true).expect("consistent dimension")
}

pub fn random_row(rng: &mut impl Rng, dim: usize) -> LinearInequality {
    let c = (0..dim).map(|_| int(rng.gen_range(-2..=2))).collect();
    LinearInequality::new(c, int(rng.gen_range(0..=6)))
}

/// Membership of every point of the grid `(1/steps) Z^dim` inside `[0, 3]^dim`,
/// evaluated in integer arithmetic.
pub fn grid_membership(p: &Polytope, steps: i64) -> Vec<bool> {
    let rows: Vec<(Vec<i64>, i64)> = p
        .inequalities
        .iter()
        .map(|q| {
            let c = q.coeffs.iter().map(integer).collect();
            (c, integer(&q.rhs))
        })
        .collect();
    let side = (3 * steps + 1) as usize;
    let total = side.pow(p.dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut point = vec![0i64; p.dim];
    for mut n in 0..total {
        for x in point.iter_mut() {
            *x = (n % side) as i64;
            n /= side;
        }
        out.push(
            rows.iter()
                .all(|(c, r)| c.iter().zip(&point).map(|(a, x)| a * x).sum::<i64>() <= r * steps),
        );
    }
    out
}

fn integer(r: &Rational) -> i64 {
    assert!(r.is_integer(), "grid oracle needs integer data");
    r.to_integer().to_i64().expect("small integer")
}

/// Largest common value `d` with `(d, ..., d)` in `p`, from a fresh LP whose
/// coordinates are tied by equality rows.
pub fn tied_lp_optimum(p: &Polytope) -> Option<Rational> {
    let n = p.dim;
    let mut rows = p.inequalities.clone();
    for j in 1..n {
        let mut c = vec![zero(); n];
        c[0] = int(1);
        c[j] = int(-1);
        rows.push(LinearInequality::new(c.clone(), zero()));
        rows.push(LinearInequality::new(c.iter().map(|v| -v).collect(), zero()));
    }
    let tied = Polytope::new(n, rows, p.nonneg).ok()?;
    let mut objective = vec![zero(); n];
    objective[0] = int(1);
    match tied.maximize(&objective).ok()? {
        LpOutcome::Optimal { value, .. } => Some(value),
        _ => None,
    }
}
