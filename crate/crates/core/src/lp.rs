//! Exact rational linear programming.
//!
//! Dictionary-form simplex with Bland's rule, so every pivot sequence
//! terminates. Infeasible starting dictionaries go through the auxiliary
//! problem (maximize `-x0` over `Ax - x0 <= b`). The dictionary is
//! `m x n`, which keeps the many-rows/few-columns programs produced by
//! implication checks cheap.

use num_traits::{Signed, Zero};

use crate::rational::{zero, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rational, point: Vec<Rational> },
    Unbounded,
    Infeasible,
}

impl LpOutcome {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

/// Maximize `objective . x` subject to `rows[i].0 . x <= rows[i].1`.
///
/// `nonneg[j]` marks `x_j >= 0`; unmarked variables are free.
pub fn maximize(objective: &[Rational], rows: &[(&[Rational], &Rational)], nonneg: &[bool]) -> LpOutcome {
    let n = objective.len();
    debug_assert_eq!(nonneg.len(), n);
    // Free variables are split as x = x+ - x-.
    let mut columns: Vec<(usize, bool)> = Vec::with_capacity(2 * n);
    for (j, &nn) in nonneg.iter().enumerate() {
        columns.push((j, true));
        if !nn {
            columns.push((j, false));
        }
    }
    let signed = |coeff: &Rational, positive: bool| {
        if positive {
            coeff.clone()
        } else {
            -coeff.clone()
        }
    };

    let m = rows.len();
    let ncols = columns.len();
    let mut dict = Dictionary {
        rows: rows
            .iter()
            .map(|(a, _)| columns.iter().map(|&(j, pos)| -signed(&a[j], pos)).collect())
            .collect(),
        consts: rows.iter().map(|(_, b)| (*b).clone()).collect(),
        obj: vec![zero(); ncols],
        obj_const: zero(),
        basic: (ncols..ncols + m).collect(),
        nonbasic: (0..ncols).collect(),
    };

    if dict.consts.iter().any(|b| b.is_negative()) && !dict.phase_one(ncols + m) {
        return LpOutcome::Infeasible;
    }

    // Install the real objective in terms of the current nonbasic variables.
    let cost = |label: usize| -> Rational {
        if label < ncols {
            let (j, pos) = columns[label];
            signed(&objective[j], pos)
        } else {
            zero()
        }
    };
    dict.obj_const = zero();
    for (r, &b) in dict.basic.iter().enumerate() {
        let c = cost(b);
        if !c.is_zero() {
            dict.obj_const += &c * &dict.consts[r];
        }
    }
    dict.obj = dict.nonbasic.iter().map(|&l| cost(l)).collect();
    for (r, &b) in dict.basic.iter().enumerate() {
        let c = cost(b);
        if c.is_zero() {
            continue;
        }
        for (col, coef) in dict.rows[r].iter().enumerate() {
            if !coef.is_zero() {
                dict.obj[col] += &c * coef;
            }
        }
    }

    if !dict.optimize() {
        return LpOutcome::Unbounded;
    }

    let mut values = vec![zero(); ncols];
    for (r, &b) in dict.basic.iter().enumerate() {
        if b < ncols {
            values[b] = dict.consts[r].clone();
        }
    }
    let mut point = vec![zero(); n];
    for (label, &(j, pos)) in columns.iter().enumerate() {
        if pos {
            point[j] += &values[label];
        } else {
            point[j] -= &values[label];
        }
    }
    LpOutcome::Optimal {
        value: dict.obj_const,
        point,
    }
}

struct Dictionary {
    /// basic[r] = consts[r] + sum_c rows[r][c] * nonbasic[c]
    rows: Vec<Vec<Rational>>,
    consts: Vec<Rational>,
    obj: Vec<Rational>,
    obj_const: Rational,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

impl Dictionary {
    /// Runs Bland-rule pivots to optimality. Returns false if unbounded.
    fn optimize(&mut self) -> bool {
        loop {
            let entering = (0..self.nonbasic.len())
                .filter(|&c| self.obj[c].is_positive())
                .min_by_key(|&c| self.nonbasic[c]);
            let Some(col) = entering else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if !a.is_negative() {
                    continue;
                }
                let ratio = &self.consts[r] / -a;
                let better = match &best {
                    None => true,
                    Some((br, bratio)) => ratio < *bratio || (ratio == *bratio && self.basic[r] < self.basic[*br]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            let Some((row, _)) = best else {
                return false;
            };
            self.pivot(row, col);
        }
    }

    /// Auxiliary problem. Returns false if the original is infeasible.
    fn phase_one(&mut self, x0_label: usize) -> bool {
        for row in &mut self.rows {
            row.push(Rational::from_integer(1.into()));
        }
        self.nonbasic.push(x0_label);
        let x0_col = self.nonbasic.len() - 1;
        self.obj = vec![zero(); self.nonbasic.len()];
        self.obj[x0_col] = Rational::from_integer((-1).into());
        self.obj_const = zero();

        let worst = (0..self.consts.len())
            .min_by(|&a, &b| self.consts[a].cmp(&self.consts[b]))
            .expect("at least one row");
        self.pivot(worst, x0_col);
        let bounded = self.optimize();
        debug_assert!(bounded, "auxiliary problem is bounded by construction");
        if self.obj_const.is_negative() {
            return false;
        }

        if let Some(r) = self.basic.iter().position(|&b| b == x0_label) {
            // Degenerate: x0 basic at zero. Swap it out along any nonzero entry.
            if let Some(c) = (0..self.nonbasic.len()).find(|&c| !self.rows[r][c].is_zero()) {
                self.pivot(r, c);
            } else {
                // Row is identically x0 = 0; drop it.
                self.rows.remove(r);
                self.consts.remove(r);
                self.basic.remove(r);
            }
        }
        if let Some(c) = self.nonbasic.iter().position(|&l| l == x0_label) {
            for row in &mut self.rows {
                row.remove(c);
            }
            self.nonbasic.remove(c);
            self.obj.remove(c);
        }
        true
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let a = self.rows[row][col].clone();
        debug_assert!(!a.is_zero());
        // Solve the pivot row for the entering variable.
        let inv = a.recip();
        let mut prow = std::mem::take(&mut self.rows[row]);
        let pconst = -&self.consts[row] * &inv;
        for (c, v) in prow.iter_mut().enumerate() {
            if c == col {
                *v = inv.clone();
            } else if !v.is_zero() {
                *v = -&*v * &inv;
            }
        }

        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let f = self.rows[r][col].clone();
            if f.is_zero() {
                continue;
            }
            self.consts[r] += &f * &pconst;
            let target = &mut self.rows[r];
            for (c, pv) in prow.iter().enumerate() {
                if c == col {
                    target[c] = &f * pv;
                } else if !pv.is_zero() {
                    target[c] += &f * pv;
                }
            }
        }
        let f = self.obj[col].clone();
        if !f.is_zero() {
            self.obj_const += &f * &pconst;
            for (c, pv) in prow.iter().enumerate() {
                if c == col {
                    self.obj[c] = &f * pv;
                } else if !pv.is_zero() {
                    self.obj[c] += &f * pv;
                }
            }
        }

        self.rows[row] = prow;
        self.consts[row] = pconst;
        std::mem::swap(&mut self.basic[row], &mut self.nonbasic[col]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn solve(c: &[i64], a: &[&[i64]], b: &[i64], nonneg: bool) -> LpOutcome {
        let c: Vec<Rational> = c.iter().map(|&v| int(v)).collect();
        let a: Vec<Vec<Rational>> = a.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect();
        let b: Vec<Rational> = b.iter().map(|&v| int(v)).collect();
        let rows: Vec<(&[Rational], &Rational)> = a.iter().zip(&b).map(|(r, v)| (r.as_slice(), v)).collect();
        maximize(&c, &rows, &vec![nonneg; c.len()])
    }

    #[test]
    fn textbook_optimum() {
        // max 5x + 4y + 3z; Chvatal's first example, optimum 13 at (2, 0, 1).
        let out = solve(&[5, 4, 3], &[&[2, 3, 1], &[4, 1, 2], &[3, 4, 2]], &[5, 11, 8], true);
        assert_eq!(
            out,
            LpOutcome::Optimal {
                value: int(13),
                point: vec![int(2), int(0), int(1)]
            }
        );
    }

    #[test]
    fn needs_phase_one() {
        // x + y >= 2 (as -x - y <= -2), x <= 3, y <= 1; max -x (i.e. min x) = -1.
        let out = solve(&[-1, 0], &[&[-1, -1], &[1, 0], &[0, 1]], &[-2, 3, 1], true);
        assert_eq!(out.value(), Some(&int(-1)));
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        assert_eq!(solve(&[1], &[&[1], &[-1]], &[1, -2], true), LpOutcome::Infeasible);
        assert_eq!(solve(&[1, 1], &[&[1, -1]], &[1], true), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variables() {
        // max -x with x >= -3 free.
        let out = solve(&[-1], &[&[-1]], &[3], false);
        assert_eq!(out.value(), Some(&int(3)));
        // max x + y, x + y <= 1/2 style with fractions, free vars bounded by box.
        let c = vec![int(1), int(1)];
        let a = [
            vec![int(2), int(1)],
            vec![int(1), int(3)],
            vec![int(-1), int(0)],
            vec![int(0), int(-1)],
        ];
        let b = [int(1), int(1), int(1), int(1)];
        let rows: Vec<(&[Rational], &Rational)> = a.iter().zip(&b).map(|(r, v)| (r.as_slice(), v)).collect();
        let out = maximize(&c, &rows, &[false, false]);
        assert_eq!(out.value(), Some(&rat(3, 5)));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's cycling example; Bland's rule must terminate (optimum 1/20).
        let c = vec![rat(3, 4), int(-150), rat(1, 50), int(-6)];
        let a = [
            vec![rat(1, 4), int(-60), rat(-1, 25), int(9)],
            vec![rat(1, 2), int(-90), rat(-1, 50), int(3)],
            vec![int(0), int(0), int(1), int(0)],
        ];
        let b = [int(0), int(0), int(1)];
        let rows: Vec<(&[Rational], &Rational)> = a.iter().zip(&b).map(|(r, v)| (r.as_slice(), v)).collect();
        let out = maximize(&c, &rows, &[true; 4]);
        assert_eq!(out.value(), Some(&rat(1, 20)));
    }
}
