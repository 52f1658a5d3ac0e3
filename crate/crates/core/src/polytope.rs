//! Rational H-polytopes: membership, implication, equality, vertices.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};
use crate::rational::{int, serde_fraction, serde_fraction_vec, to_f64, zero, Rational};

/// Largest dimension accepted by [`Polytope::vertices`].
pub const MAX_VERTEX_DIM: usize = 6;

/// `coeffs . x <= rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearInequality {
    #[serde(with = "serde_fraction_vec")]
    pub coeffs: Vec<Rational>,
    #[serde(with = "serde_fraction")]
    pub rhs: Rational,
}

impl LinearInequality {
    pub fn new(coeffs: Vec<Rational>, rhs: Rational) -> Self {
        LinearInequality { coeffs, rhs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(x)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, v)| c * v)
            .sum()
    }

    pub fn holds_at(&self, x: &[Rational]) -> bool {
        self.lhs(x) <= self.rhs
    }

    pub fn coeff_sum(&self) -> Rational {
        self.coeffs.iter().sum()
    }

    /// Scales so that the first nonzero coefficient has magnitude one.
    /// Rows with all-zero coefficients are returned unchanged.
    pub fn normalized(&self) -> LinearInequality {
        match self.coeffs.iter().find(|c| !c.is_zero()) {
            None => self.clone(),
            Some(lead) => {
                let s = lead.abs();
                LinearInequality {
                    coeffs: self.coeffs.iter().map(|c| c / &s).collect(),
                    rhs: &self.rhs / &s,
                }
            }
        }
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }
}

/// A rate tuple, one exact coordinate per user.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatePoint(#[serde(with = "serde_fraction_vec")] pub Vec<Rational>);

impl RatePoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub dim: usize,
    pub inequalities: Vec<LinearInequality>,
    /// Adds `x_j >= 0` for every coordinate.
    pub nonneg: bool,
}

impl Polytope {
    pub fn new(dim: usize, inequalities: Vec<LinearInequality>, nonneg: bool) -> Result<Self> {
        for q in &inequalities {
            check_dim(dim, q.dim())?;
        }
        Ok(Polytope {
            dim,
            inequalities,
            nonneg,
        })
    }

    /// Axis-aligned box `[0, hi_j]`.
    pub fn unit_box(dim: usize) -> Self {
        let rows = (0..dim)
            .map(|j| LinearInequality::new(unit(dim, j, 1), int(1)))
            .collect();
        Polytope {
            dim,
            inequalities: rows,
            nonneg: true,
        }
    }

    /// All constraints, with the nonnegativity rows written out as `-x_j <= 0`.
    pub fn all_rows(&self) -> Vec<LinearInequality> {
        let mut rows = self.inequalities.clone();
        if self.nonneg {
            rows.extend((0..self.dim).map(|j| LinearInequality::new(unit(self.dim, j, -1), zero())));
        }
        rows
    }

    pub fn contains(&self, x: &RatePoint) -> Result<bool> {
        check_dim(self.dim, x.dim())?;
        if self.nonneg && x.0.iter().any(Signed::is_negative) {
            return Ok(false);
        }
        Ok(self.inequalities.iter().all(|q| q.holds_at(&x.0)))
    }

    /// Membership for a floating-point point, each constraint relaxed by `tol`.
    pub fn contains_within(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        if self.nonneg && x.iter().any(|&v| v < -tol) {
            return Ok(false);
        }
        Ok(self.inequalities.iter().all(|q| {
            let lhs: f64 = q.coeffs.iter().zip(x).map(|(c, v)| to_f64(c) * v).sum();
            lhs <= to_f64(&q.rhs) + tol
        }))
    }

    pub fn maximize(&self, objective: &[Rational]) -> Result<LpOutcome> {
        check_dim(self.dim, objective.len())?;
        Ok(solve(objective, &self.inequalities, self.dim, self.nonneg))
    }

    /// Whether `q` holds on all of `self`.
    ///
    /// ```
    /// use macicmac::polytope::{LinearInequality, Polytope};
    /// use macicmac::rational::int;
    /// let square = Polytope::unit_box(2);
    /// assert!(square.implies(&LinearInequality::new(vec![int(1), int(1)], int(2))).unwrap());
    /// assert!(!square.implies(&LinearInequality::new(vec![int(1), int(1)], int(1))).unwrap());
    /// ```
    pub fn implies(&self, q: &LinearInequality) -> Result<bool> {
        check_dim(self.dim, q.dim())?;
        match self.maximize(&q.coeffs)? {
            LpOutcome::Optimal { value, .. } => Ok(value <= q.rhs),
            LpOutcome::Unbounded => Err(Error::Unbounded),
            LpOutcome::Infeasible => Err(Error::Infeasible),
        }
    }

    /// The first row of `other` not implied by `self`, if any.
    pub fn first_unimplied(&self, other: &Polytope) -> Result<Option<LinearInequality>> {
        check_dim(self.dim, other.dim)?;
        let own = self.all_rows();
        for q in other.all_rows() {
            if own.iter().any(|p| dominates(p, &q, self.nonneg)) {
                continue;
            }
            if q.is_trivial() {
                if q.rhs.is_negative() && !self.is_empty()? {
                    return Ok(Some(q));
                }
                continue;
            }
            let implied = match self.implies(&q) {
                Ok(b) => b,
                Err(Error::Unbounded) => false,
                Err(Error::Infeasible) => true,
                Err(e) => return Err(e),
            };
            if !implied {
                return Ok(Some(q));
            }
        }
        Ok(None)
    }

    /// Set equality by mutual implication.
    pub fn equal(&self, other: &Polytope) -> Result<bool> {
        Ok(self.first_unimplied(other)?.is_none() && other.first_unimplied(self)?.is_none())
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(matches!(self.maximize(&vec![zero(); self.dim])?, LpOutcome::Infeasible))
    }

    /// Same point set, implied rows removed.
    pub fn pruned(&self) -> Polytope {
        let kept = remove_implied_rows(&self.inequalities, self.dim, self.nonneg);
        Polytope {
            dim: self.dim,
            inequalities: kept,
            nonneg: self.nonneg,
        }
    }

    /// Whether some row with nonnegative coefficients bounds coordinate `j`
    /// from above (only meaningful with `nonneg`).
    fn caps(&self, j: usize) -> bool {
        self.inequalities
            .iter()
            .any(|q| q.coeffs[j].is_positive() && q.coeffs.iter().all(|c| !c.is_negative()))
    }

    /// Exact extreme points, sorted and deduplicated.
    pub fn vertices(&self) -> Result<Vec<RatePoint>> {
        if self.dim > MAX_VERTEX_DIM {
            return Err(Error::DimensionTooLarge {
                dim: self.dim,
                max: MAX_VERTEX_DIM,
            });
        }
        let origin_inside = self.nonneg && self.inequalities.iter().all(|q| !q.rhs.is_negative());
        if !origin_inside && self.is_empty()? {
            return Ok(Vec::new());
        }
        for j in 0..self.dim {
            if self.nonneg && self.caps(j) {
                continue;
            }
            for sign in [1, -1] {
                if let LpOutcome::Unbounded = self.maximize(&unit(self.dim, j, sign))? {
                    return Err(Error::Unbounded);
                }
            }
        }
        let rows = self.pruned().all_rows();
        let approx: Vec<(Vec<f64>, f64)> = rows
            .iter()
            .map(|q| (q.coeffs.iter().map(to_f64).collect(), to_f64(&q.rhs)))
            .collect();
        let mut found = BTreeSet::new();
        for_each_subset(rows.len(), self.dim, &mut |idx| {
            if !worth_exact_solve(&approx, idx) {
                return;
            }
            let a: Vec<&LinearInequality> = idx.iter().map(|&i| &rows[i]).collect();
            if let Some(x) = solve_square(&a) {
                if rows.iter().all(|q| q.holds_at(&x)) {
                    found.insert(RatePoint(x));
                }
            }
        });
        Ok(found.into_iter().collect())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn unit(dim: usize, j: usize, value: i64) -> Vec<Rational> {
    let mut v = vec![zero(); dim];
    v[j] = int(value);
    v
}

pub(crate) fn solve(objective: &[Rational], rows: &[LinearInequality], dim: usize, nonneg: bool) -> LpOutcome {
    let refs: Vec<(&[Rational], &Rational)> = rows.iter().map(|q| (q.coeffs.as_slice(), &q.rhs)).collect();
    lp::maximize(objective, &refs, &vec![nonneg; dim])
}

/// Greedy redundancy removal. Each dropped row is certified implied by the
/// rows kept at that moment, so the point set is unchanged.
pub(crate) fn remove_implied_rows(rows: &[LinearInequality], dim: usize, nonneg: bool) -> Vec<LinearInequality> {
    // Parallel duplicates first: keep the tightest rhs per direction.
    let mut best: Vec<LinearInequality> = Vec::new();
    for q in rows {
        if q.is_trivial() {
            if q.rhs.is_negative() {
                best.push(q.clone());
            }
            continue;
        }
        let n = q.normalized();
        match best.iter_mut().find(|b| b.coeffs == n.coeffs) {
            Some(b) if n.rhs < b.rhs => *b = n,
            Some(_) => {}
            None => best.push(n),
        }
    }

    let mut kept = best;
    let mut i = 0;
    while i < kept.len() {
        let candidate = kept.remove(i);
        let implied = !candidate.is_trivial()
            && (kept.iter().any(|p| dominates(p, &candidate, nonneg))
                || match solve(&candidate.coeffs, &kept, dim, nonneg) {
                    LpOutcome::Optimal { value, .. } => value <= candidate.rhs,
                    LpOutcome::Infeasible => true,
                    LpOutcome::Unbounded => false,
                });
        if !implied {
            kept.insert(i, candidate);
            i += 1;
        }
    }
    kept
}

/// Whether `p` alone implies `q`: same coefficients with a tighter bound,
/// or, on the nonnegative orthant, larger coefficients with a tighter bound.
fn dominates(p: &LinearInequality, q: &LinearInequality, nonneg: bool) -> bool {
    if p.rhs > q.rhs {
        return false;
    }
    if nonneg {
        p.coeffs.iter().zip(&q.coeffs).all(|(a, b)| a >= b)
    } else {
        p.coeffs == q.coeffs
    }
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Float screen of a vertex candidate. False only when the square system
/// is well conditioned and its solution clearly violates some row; the
/// exact path decides every other case.
fn worth_exact_solve(rows: &[(Vec<f64>, f64)], idx: &[usize]) -> bool {
    const PIVOT_MIN: f64 = 1e-6;
    const SLACK: f64 = 1e-7;
    let n = idx.len();
    let mut m: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let mut r = rows[i].0.clone();
            r.push(rows[i].1);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("nonempty range");
        if m[piv][col].abs() < PIVOT_MIN {
            return true;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                let (head, tail) = m.split_at_mut(r.max(col));
                let (row, pivot) = if r > col {
                    (&mut tail[0], &head[col])
                } else {
                    (&mut head[r], &tail[0])
                };
                for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    let x: Vec<f64> = (0..n).map(|r| m[r][n] / m[r][r]).collect();
    rows.iter().all(|(c, b)| {
        let lhs: f64 = c.iter().zip(&x).map(|(a, v)| a * v).sum();
        let scale = 1.0 + b.abs() + c.iter().zip(&x).map(|(a, v)| (a * v).abs()).sum::<f64>();
        lhs - b <= SLACK * scale
    })
}

/// Solves `rows[i].coeffs . x = rows[i].rhs`, `None` if singular.
fn solve_square(rows: &[&LinearInequality]) -> Option<Vec<Rational>> {
    let n = rows.len();
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|q| {
            let mut r = q.coeffs.clone();
            r.push(q.rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}
