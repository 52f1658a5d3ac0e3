//! Fourier-Motzkin elimination of the split-rate variables.
//!
//! The rate-split achievability argument produces a system over
//! `(R_a, R_b, B_a0, B_b0)`, where `B_i0` is the common-message rate of
//! transmitter `i0`. Projecting out `B_a0` and `B_b0` gives a closed-form
//! region with nine families; [`projection_verdict`] checks that claim
//! exactly for a given table.

use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{remove_implied_rows, LinearInequality, Polytope};
use crate::rational::{int, rat, zero, Rational};
use crate::region::{build_generic_region, coord, row, SetFn, SetFunctionTable};
use crate::subsets::{Cell, SubsetMask};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    pub dim: usize,
    pub var_names: Vec<String>,
    pub inequalities: Vec<LinearInequality>,
}

impl LinearSystem {
    pub fn new(var_names: Vec<String>, inequalities: Vec<LinearInequality>) -> Result<Self> {
        let dim = var_names.len();
        for q in &inequalities {
            if q.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: q.dim(),
                });
            }
        }
        Ok(LinearSystem {
            dim,
            var_names,
            inequalities,
        })
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.var_names
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// The system as a polytope, optionally intersected with `x >= 0`.
    pub fn to_polytope(&self, nonneg: bool) -> Polytope {
        Polytope {
            dim: self.dim,
            inequalities: self.inequalities.clone(),
            nonneg,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LinearSystem = serde_json::from_str(text)?;
        if raw.dim != raw.var_names.len() {
            return Err(Error::DimensionMismatch {
                expected: raw.dim,
                found: raw.var_names.len(),
            });
        }
        LinearSystem::new(raw.var_names, raw.inequalities)
    }

    /// Renders one row as `R_a0 + 2 R_b1 - B_a0 <= 3/2`.
    pub fn render(&self, q: &LinearInequality) -> String {
        let mut terms = Vec::new();
        for (c, name) in q.coeffs.iter().zip(&self.var_names) {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            let body = if mag == int(1) {
                name.clone()
            } else {
                format!("{mag} {name}")
            };
            terms.push(format!("{sign} {body}"));
        }
        let lhs = if terms.is_empty() {
            "0".to_string()
        } else {
            let joined = terms.join(" ");
            joined.strip_prefix("+ ").map(str::to_string).unwrap_or(joined)
        };
        format!("{lhs} <= {}", q.rhs)
    }
}

/// Rate coordinates `R_a0.., R_b0..` followed by `B_a0, B_b0`.
pub fn var_names(ka: usize, kb: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..ka).map(|j| format!("R_a{j}")).collect();
    names.extend((0..kb).map(|j| format!("R_b{j}")));
    names.push("B_a0".into());
    names.push("B_b0".into());
    names
}

/// The split-rate system before elimination.
///
/// Per cell `i`, in this order: `R_Ups - B_i0 <= A_Ups`, `R_Om <= B_Om`,
/// `R_Ups - B_i0 + B_i'0 <= E_Ups`, `R_Om + B_i'0 <= G_Om`, `-B_i0 <= 0`,
/// `B_i0 - R_Ups <= 0`.
pub fn build_initial_system(t: &SetFunctionTable) -> Result<LinearSystem> {
    let (ka, kb) = (t.ka(), t.kb());
    let dim = ka + kb + 2;
    let split = |cell: Cell| ka + kb + cell.index();
    let mut rows = Vec::new();
    for cell in Cell::BOTH {
        let own = split(cell);
        let other = split(cell.other());
        let with = |masks: &[SubsetMask], rhs: Rational, terms: &[(usize, i64)]| {
            let mut q = row(dim, ka, masks, rhs);
            for &(j, c) in terms {
                q.coeffs[j] += int(c);
            }
            q
        };
        let ups = t.masks(cell, SetFn::A);
        let oms = t.masks(cell, SetFn::B);
        for &u in &ups {
            rows.push(with(&[u], t.get(SetFn::A, u)?.clone(), &[(own, -1)]));
        }
        for &o in &oms {
            rows.push(with(&[o], t.get(SetFn::B, o)?.clone(), &[]));
        }
        for &u in &ups {
            rows.push(with(&[u], t.get(SetFn::E, u)?.clone(), &[(own, -1), (other, 1)]));
        }
        for &o in &oms {
            rows.push(with(&[o], t.get(SetFn::G, o)?.clone(), &[(other, 1)]));
        }
        rows.push(with(&[], zero(), &[(own, -1)]));
        for &u in &ups {
            let mut q = with(&[], zero(), &[(own, 1)]);
            for j in u.users() {
                q.coeffs[coord(cell, j, ka)] -= int(1);
            }
            rows.push(q);
        }
    }
    LinearSystem::new(var_names(ka, kb), rows)
}

/// Projects out `var`: every (lower, upper) pair is combined and the
/// variable-free rows are carried over. The result describes exactly the
/// projection.
///
/// ```
/// use macicmac::fme::{fme_eliminate, LinearSystem};
/// use macicmac::polytope::LinearInequality;
/// use macicmac::rational::int;
/// let row = |x: i64, y: i64, b: i64| LinearInequality::new(vec![int(x), int(y)], int(b));
/// // y >= 0, y <= 1, x <= y + 1
/// let sys = LinearSystem::new(
///     vec!["x".into(), "y".into()],
///     vec![row(0, -1, 0), row(0, 1, 1), row(1, -1, 1)],
/// ).unwrap();
/// let out = fme_eliminate(&sys, "y").unwrap();
/// assert_eq!(out.var_names, vec!["x".to_string()]);
/// let rendered: Vec<String> = out.inequalities.iter().map(|q| out.render(q)).collect();
/// assert_eq!(rendered, vec!["0 <= 1", "x <= 2"]);
/// ```
pub fn fme_eliminate(sys: &LinearSystem, var: &str) -> Result<LinearSystem> {
    let k = sys.index_of(var)?;
    let drop = |q: &LinearInequality| {
        let mut c = q.coeffs.clone();
        c.remove(k);
        c
    };
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut out = Vec::new();
    for q in &sys.inequalities {
        let c = &q.coeffs[k];
        if c.is_zero() {
            out.push(LinearInequality::new(drop(q), q.rhs.clone()));
        } else if c.is_positive() {
            upper.push(q);
        } else {
            lower.push(q);
        }
    }
    for lo in &lower {
        for up in &upper {
            // up.c * lo + (-lo.c) * up cancels the variable.
            let wl = up.coeffs[k].clone();
            let wu = -lo.coeffs[k].clone();
            let coeffs: Vec<Rational> = lo
                .coeffs
                .iter()
                .zip(&up.coeffs)
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, (a, b))| &wl * a + &wu * b)
                .collect();
            let rhs = &wl * &lo.rhs + &wu * &up.rhs;
            out.push(LinearInequality::new(coeffs, rhs));
        }
    }
    let mut names = sys.var_names.clone();
    names.remove(k);
    LinearSystem::new(names, out)
}

/// Drops rows implied by the rest, one at a time, each with an exact LP
/// certificate. Parallel rows keep only the tightest, and rows are rescaled
/// so the leading coefficient has magnitude one.
pub fn remove_redundant(sys: &LinearSystem) -> LinearSystem {
    LinearSystem {
        dim: sys.dim,
        var_names: sys.var_names.clone(),
        inequalities: remove_implied_rows(&sys.inequalities, sys.dim, false),
    }
}

/// Eliminates `B_a0` then `B_b0`, pruning after each step.
pub fn project_split_rates(t: &SetFunctionTable) -> Result<LinearSystem> {
    let mut sys = build_initial_system(t)?;
    for v in ["B_a0", "B_b0"] {
        sys = remove_redundant(&fme_eliminate(&sys, v)?);
    }
    Ok(sys)
}

/// The generic region plus `R_Ups_a <= A_Ups_a + E_Ups_b` and its mirror.
pub fn region_nine_family(t: &SetFunctionTable) -> Result<Polytope> {
    let mut p = build_generic_region(t)?;
    let ka = t.ka();
    for cell in Cell::BOTH {
        for u in t.masks(cell, SetFn::A) {
            for v in t.masks(cell.other(), SetFn::E) {
                let rhs = t.get(SetFn::A, u)? + t.get(SetFn::E, v)?;
                p.inequalities.push(row(p.dim, ka, &[u], rhs));
            }
        }
    }
    Ok(p)
}

/// Checks nonnegativity and the chain-rule facts `A <= E`, `B <= G`.
pub fn check_table_preconditions(t: &SetFunctionTable) -> Result<()> {
    t.check_complete()?;
    if t.has_negative_entry() {
        return Err(Error::PreconditionViolated("table has a negative entry".into()));
    }
    if let Some((f, m)) = t.chain_rule_violations().first() {
        return Err(Error::PreconditionViolated(format!(
            "{f}{m} exceeds its conditional counterpart"
        )));
    }
    Ok(())
}

/// Outcome of comparing the projection with the nine-family region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProjectionVerdict {
    Equal,
    /// A row of the nine-family region that the projection does not imply.
    ProjectionLarger(LinearInequality),
    /// A row of the projection that the nine-family region does not imply.
    ProjectionSmaller(LinearInequality),
}

/// Compares the exact projection of the split-rate system (restricted to
/// nonnegative rates) with [`region_nine_family`].
pub fn projection_verdict(t: &SetFunctionTable) -> Result<ProjectionVerdict> {
    check_table_preconditions(t)?;
    let projected = project_split_rates(t)?.to_polytope(true);
    let target = region_nine_family(t)?;
    if let Some(q) = projected.first_unimplied(&target)? {
        return Ok(ProjectionVerdict::ProjectionLarger(q));
    }
    if let Some(q) = target.first_unimplied(&projected)? {
        return Ok(ProjectionVerdict::ProjectionSmaller(q));
    }
    Ok(ProjectionVerdict::Equal)
}

/// `true` iff the projection equals the nine-family region.
pub fn verify_projection(t: &SetFunctionTable) -> Result<bool> {
    Ok(projection_verdict(t)? == ProjectionVerdict::Equal)
}

/// Whether dropping the two `R_Ups <= A + E` families changes the region.
pub fn seven_family_differs(t: &SetFunctionTable) -> Result<bool> {
    Ok(!build_generic_region(t)?.equal(&region_nine_family(t)?)?)
}

/// Masks `Ups` with `B[Ups \ {i0}] > A[Ups]` or `G[Ups \ {i0}] > E[Ups]`.
///
/// Both inequalities follow from the chain rule for tables built from
/// mutual informations, and the projection needs them whenever `K_i >= 2`:
/// pairing the `A` row of one mask with the `B_i0 <= R_i0` row yields
/// `R_{Ups \ i0} <= A_Ups`, which the nine families only imply through
/// `B[Ups \ {i0}]`.
pub fn cross_mask_violations(t: &SetFunctionTable) -> Result<Vec<(SetFn, SubsetMask)>> {
    let mut bad = Vec::new();
    for cell in Cell::BOTH {
        for u in t.masks(cell, SetFn::A) {
            let rest = u.without_interferer();
            if rest.is_empty() {
                continue;
            }
            if t.get(SetFn::B, rest)? > t.get(SetFn::A, u)? {
                bad.push((SetFn::A, u));
            }
            if t.get(SetFn::G, rest)? > t.get(SetFn::E, u)? {
                bad.push((SetFn::E, u));
            }
        }
    }
    Ok(bad)
}

fn small_rational(rng: &mut impl Rng) -> Rational {
    rat(rng.gen_range(0..32), rng.gen_range(1..=4))
}

/// Random nonnegative table with `A <= E` and `B <= G`, nothing more.
pub fn random_chain_rule_table(rng: &mut impl Rng, ka: usize, kb: usize) -> Result<SetFunctionTable> {
    let base = SetFunctionTable::from_fn(ka, kb, |_, _| small_rational(rng))?;
    SetFunctionTable::try_from_fn(ka, kb, |f, m| {
        Ok(match f {
            SetFn::A | SetFn::B => base.get(f, m)?.clone(),
            SetFn::E => base.get(SetFn::A, m)? + small_rational(rng),
            SetFn::G => base.get(SetFn::B, m)? + small_rational(rng),
        })
    })
}

/// Random table shaped like one built from mutual informations: besides
/// `A <= E` and `B <= G` it satisfies the cross-mask facts checked by
/// [`cross_mask_violations`].
pub fn random_structured_table(rng: &mut impl Rng, ka: usize, kb: usize) -> Result<SetFunctionTable> {
    let mut t = SetFunctionTable::empty(ka, kb)?;
    for cell in Cell::BOTH {
        for m in t.masks(cell, SetFn::B) {
            let b = small_rational(rng);
            let g = &b + small_rational(rng);
            t.set(SetFn::B, m, b)?;
            t.set(SetFn::G, m, g)?;
        }
        for u in t.masks(cell, SetFn::A) {
            let rest = u.without_interferer();
            let (b, g) = if rest.is_empty() {
                (zero(), zero())
            } else {
                (t.get(SetFn::B, rest)?.clone(), t.get(SetFn::G, rest)?.clone())
            };
            let a = b + small_rational(rng);
            let e = a.clone().max(g) + small_rational(rng);
            t.set(SetFn::A, u, a)?;
            t.set(SetFn::E, u, e)?;
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::RatePoint;
    use crate::rational::one;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(c: &[i64], b: i64) -> LinearInequality {
        LinearInequality::new(c.iter().map(|&v| int(v)).collect(), int(b))
    }

    #[test]
    fn initial_system_shape() {
        let t = SetFunctionTable::from_fn(1, 1, |_, _| one()).unwrap();
        let s = build_initial_system(&t).unwrap();
        assert_eq!((s.inequalities.len(), s.dim), (12, 4));
        let t = SetFunctionTable::from_fn(2, 2, |_, _| one()).unwrap();
        let s = build_initial_system(&t).unwrap();
        assert_eq!((s.inequalities.len(), s.dim), (26, 6));
        let rendered: Vec<String> = s.inequalities.iter().map(|q| s.render(q)).collect();
        assert!(rendered.contains(&"- R_a0 + B_a0 <= 0".to_string()));
        assert!(rendered.contains(&"R_a0 + R_a1 - B_a0 + B_b0 <= 1".to_string()));
        assert_eq!(s.var_names[4], "B_a0");
    }

    #[test]
    fn unknown_variable() {
        let s = LinearSystem::new(vec!["x".into()], vec![q(&[1], 1)]).unwrap();
        assert!(matches!(fme_eliminate(&s, "z"), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn first_elimination_pairs_the_expected_rows() {
        // Lower bounds on B_a0 come from the A, E (cell a) and -B_a0 rows;
        // upper bounds from the D (cell a), E (cell b) and G (cell b) rows.
        let t = SetFunctionTable::from_fn(1, 1, |_, _| one()).unwrap();
        let s = build_initial_system(&t).unwrap();
        let k = s.index_of("B_a0").unwrap();
        let lower = s.inequalities.iter().filter(|q| q.coeffs[k].is_negative()).count();
        let upper = s.inequalities.iter().filter(|q| q.coeffs[k].is_positive()).count();
        assert_eq!((lower, upper), (3, 3));
        let out = fme_eliminate(&s, "B_a0").unwrap();
        assert_eq!(out.inequalities.len(), 12 - 6 + 9);
    }

    #[test]
    fn redundancy_examples() {
        let s = LinearSystem::new(vec!["x".into()], vec![q(&[1], 1), q(&[1], 2)]).unwrap();
        assert_eq!(remove_redundant(&s).inequalities, vec![q(&[1], 1)]);
        let corner = LinearSystem::new(
            vec!["x".into(), "y".into()],
            vec![q(&[1, 1], 2), q(&[1, 0], 1), q(&[0, 1], 1)],
        )
        .unwrap();
        let pruned = remove_redundant(&corner);
        assert!(corner.to_polytope(true).equal(&pruned.to_polytope(true)).unwrap());
    }

    #[test]
    fn projection_matches_sampling_oracle() {
        // 3-variable systems, eliminate z, compare membership on a grid.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut rows = vec![q(&[0, 0, 1], 3), q(&[0, 0, -1], 0)];
            for _ in 0..4 {
                let c: Vec<i64> = (0..3).map(|_| rng.gen_range(-2..=2)).collect();
                rows.push(q(&c, rng.gen_range(0..6)));
            }
            let s = LinearSystem::new(vec!["x".into(), "y".into(), "z".into()], rows).unwrap();
            let p = fme_eliminate(&s, "z").unwrap();
            for xi in -4..=4 {
                for yi in -4..=4 {
                    let (x, y) = (rat(xi, 2), rat(yi, 2));
                    let lifted = (0..=12).any(|zi| {
                        let pt = [x.clone(), y.clone(), rat(zi, 4)];
                        s.inequalities.iter().all(|q| q.holds_at(&pt))
                    });
                    let pt = [x.clone(), y.clone()];
                    let projected = p.inequalities.iter().all(|q| q.holds_at(&pt));
                    // the z grid is finite, so only "lifted => projected" is exact
                    if lifted {
                        assert!(projected);
                    }
                    if projected {
                        let mut rows = s.inequalities.clone();
                        rows.push(LinearInequality::new(vec![one(), zero(), zero()], x.clone()));
                        rows.push(LinearInequality::new(vec![-one(), zero(), zero()], -x.clone()));
                        rows.push(LinearInequality::new(vec![zero(), one(), zero()], y.clone()));
                        rows.push(LinearInequality::new(vec![zero(), -one(), zero()], -y.clone()));
                        let slice = Polytope::new(3, rows, false).unwrap();
                        assert!(!slice.is_empty().unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn structured_tables_project_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (ka, kb) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            for _ in 0..5 {
                let t = random_structured_table(&mut rng, ka, kb).unwrap();
                assert!(cross_mask_violations(&t).unwrap().is_empty());
                assert!(t.chain_rule_violations().is_empty());
                assert_eq!(projection_verdict(&t).unwrap(), ProjectionVerdict::Equal);
            }
        }
    }

    #[test]
    fn single_user_cells_need_only_the_chain_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let t = random_chain_rule_table(&mut rng, 1, 1).unwrap();
            assert!(verify_projection(&t).unwrap());
        }
    }

    #[test]
    fn precondition_errors_are_distinct() {
        let mut t = SetFunctionTable::from_fn(1, 1, |_, _| one()).unwrap();
        t.set(SetFn::A, SubsetMask::new(Cell::A, 1), int(2)).unwrap();
        assert!(matches!(verify_projection(&t), Err(Error::PreconditionViolated(_))));
        let mut t = SetFunctionTable::from_fn(1, 1, |_, _| one()).unwrap();
        t.set(SetFn::B, SubsetMask::new(Cell::B, 1), int(-1)).unwrap();
        assert!(matches!(verify_projection(&t), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn json_round_trip() {
        let t = SetFunctionTable::from_fn(2, 1, |_, m| rat(m.bits as i64, 3)).unwrap();
        let s = build_initial_system(&t).unwrap();
        assert_eq!(LinearSystem::from_json(&s.to_json()).unwrap(), s);
        assert!(LinearSystem::from_json(r#"{"dim":2,"var_names":["x"],"inequalities":[]}"#).is_err());
    }

    #[test]
    fn nine_family_point_check() {
        let t = SetFunctionTable::from_fn(1, 1, |_, _| one()).unwrap();
        let p = region_nine_family(&t).unwrap();
        assert_eq!(p.inequalities.len(), 7 + 2);
        assert!(p.contains(&RatePoint(vec![rat(1, 2), rat(1, 2)])).unwrap());
    }
}
