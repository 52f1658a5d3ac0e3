//! Set-function tables and the generic seven-family rate region.
//!
//! A [`SetFunctionTable`] holds four set functions per cell: `A` and `E` on
//! Upsilon-masks, `B` and `G` on Omega-masks. Every region in this crate,
//! whether inner, outer, or GDoF, is [`build_generic_region`] applied to some
//! table.

use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{LinearInequality, Polytope};
use crate::rational::{format_fraction, int, parse_fraction, zero, Rational};
use crate::subsets::{check_user_count, enum_subsets, Cell, SubsetKind, SubsetMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetFn {
    A,
    B,
    E,
    G,
}

impl SetFn {
    pub const ALL: [SetFn; 4] = [SetFn::A, SetFn::B, SetFn::E, SetFn::G];

    /// `A` and `E` live on Upsilon-masks, `B` and `G` on Omega-masks.
    pub fn kind(self) -> SubsetKind {
        match self {
            SetFn::A | SetFn::E => SubsetKind::Upsilon,
            SetFn::B | SetFn::G => SubsetKind::Omega,
        }
    }

    pub fn label(self) -> char {
        match self {
            SetFn::A => 'A',
            SetFn::B => 'B',
            SetFn::E => 'E',
            SetFn::G => 'G',
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    fn parse(c: &str) -> Result<SetFn> {
        match c {
            "A" => Ok(SetFn::A),
            "B" => Ok(SetFn::B),
            "E" => Ok(SetFn::E),
            "G" => Ok(SetFn::G),
            other => Err(Error::Parse(format!("unknown set function `{other}`"))),
        }
    }
}

impl fmt::Display for SetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Values of `A, B, E, G` on the admissible masks of both cells.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFunctionTable<T = Rational> {
    k: [usize; 2],
    // values[cell][fn][mask bits]
    values: [[Vec<Option<T>>; 4]; 2],
}

impl<T: Clone> SetFunctionTable<T> {
    /// An empty table; entries are filled with [`set`](Self::set).
    pub fn empty(ka: usize, kb: usize) -> Result<Self> {
        check_user_count(ka)?;
        check_user_count(kb)?;
        let blank = |k: usize| std::array::from_fn(|_| vec![None; 1 << k]);
        Ok(SetFunctionTable {
            k: [ka, kb],
            values: [blank(ka), blank(kb)],
        })
    }

    /// A complete table with `value(f, mask)` on every admissible mask.
    pub fn from_fn(ka: usize, kb: usize, mut value: impl FnMut(SetFn, SubsetMask) -> T) -> Result<Self> {
        let mut t = Self::empty(ka, kb)?;
        for cell in Cell::BOTH {
            for f in SetFn::ALL {
                for m in t.masks(cell, f) {
                    let v = value(f, m);
                    t.values[cell.index()][f.index()][m.bits as usize] = Some(v);
                }
            }
        }
        Ok(t)
    }

    /// Fallible variant of [`from_fn`](Self::from_fn).
    pub fn try_from_fn(ka: usize, kb: usize, mut value: impl FnMut(SetFn, SubsetMask) -> Result<T>) -> Result<Self> {
        let mut t = Self::empty(ka, kb)?;
        for cell in Cell::BOTH {
            for f in SetFn::ALL {
                for m in t.masks(cell, f) {
                    let v = value(f, m)?;
                    t.values[cell.index()][f.index()][m.bits as usize] = Some(v);
                }
            }
        }
        Ok(t)
    }

    pub fn k(&self, cell: Cell) -> usize {
        self.k[cell.index()]
    }

    pub fn ka(&self) -> usize {
        self.k[0]
    }

    pub fn kb(&self) -> usize {
        self.k[1]
    }

    /// Admissible masks of `f` in `cell`, ascending.
    pub fn masks(&self, cell: Cell, f: SetFn) -> Vec<SubsetMask> {
        enum_subsets(cell, self.k(cell), f.kind()).expect("user count checked at construction")
    }

    pub fn get(&self, f: SetFn, mask: SubsetMask) -> Result<&T> {
        let missing = || Error::MissingEntry {
            cell: mask.cell,
            function: f.label(),
            mask: mask.bits,
        };
        self.values[mask.cell.index()][f.index()]
            .get(mask.bits as usize)
            .and_then(Option::as_ref)
            .ok_or_else(missing)
    }

    pub fn set(&mut self, f: SetFn, mask: SubsetMask, value: T) -> Result<()> {
        let admissible = match f.kind() {
            SubsetKind::Upsilon => mask.is_upsilon(),
            SubsetKind::Omega => !mask.is_empty(),
        };
        let k = self.k(mask.cell);
        if !admissible || (mask.bits as usize) >= (1 << k) {
            return Err(Error::Parse(format!(
                "mask {mask} is not admissible for {f} with K={k}"
            )));
        }
        self.values[mask.cell.index()][f.index()][mask.bits as usize] = Some(value);
        Ok(())
    }

    /// Every present entry as `(f, mask, value)`.
    pub fn entries(&self) -> Vec<(SetFn, SubsetMask, &T)> {
        let mut out = Vec::new();
        for cell in Cell::BOTH {
            for f in SetFn::ALL {
                for (bits, v) in self.values[cell.index()][f.index()].iter().enumerate() {
                    if let Some(v) = v {
                        out.push((f, SubsetMask::new(cell, bits as u32), v));
                    }
                }
            }
        }
        out
    }

    pub fn map<U: Clone>(&self, mut f: impl FnMut(&T) -> U) -> SetFunctionTable<U> {
        SetFunctionTable {
            k: self.k,
            values: self.values.each_ref().map(|per_fn| {
                per_fn
                    .each_ref()
                    .map(|v| v.iter().map(|x| x.as_ref().map(&mut f)).collect())
            }),
        }
    }

    /// Checks completeness over every admissible mask.
    pub fn check_complete(&self) -> Result<()> {
        for cell in Cell::BOTH {
            for f in SetFn::ALL {
                for m in self.masks(cell, f) {
                    self.get(f, m)?;
                }
            }
        }
        Ok(())
    }
}

impl<T: Clone + PartialOrd> SetFunctionTable<T> {
    /// Masks where `A > E` or `B > G`.
    pub fn chain_rule_violations(&self) -> Vec<(SetFn, SubsetMask)> {
        self.chain_rule_by(|x, y| x > y)
    }

    /// Pairs `(f, mask)` whose value exceeds that of some one-user enlargement.
    pub fn monotonicity_violations(&self) -> Vec<(SetFn, SubsetMask)> {
        self.monotonicity_by(|x, y| x > y)
    }
}

impl SetFunctionTable<f64> {
    /// [`chain_rule_violations`](Self::chain_rule_violations) with slack `tol`.
    pub fn chain_rule_violations_within(&self, tol: f64) -> Vec<(SetFn, SubsetMask)> {
        self.chain_rule_by(|x, y| x > &(y + tol))
    }

    /// [`monotonicity_violations`](Self::monotonicity_violations) with slack `tol`.
    pub fn monotonicity_violations_within(&self, tol: f64) -> Vec<(SetFn, SubsetMask)> {
        self.monotonicity_by(|x, y| x > &(y + tol))
    }
}

impl<T: Clone> SetFunctionTable<T> {
    fn chain_rule_by(&self, gt: impl Fn(&T, &T) -> bool) -> Vec<(SetFn, SubsetMask)> {
        let mut bad = Vec::new();
        for cell in Cell::BOTH {
            for (lo, hi) in [(SetFn::A, SetFn::E), (SetFn::B, SetFn::G)] {
                for m in self.masks(cell, lo) {
                    if let (Ok(x), Ok(y)) = (self.get(lo, m), self.get(hi, m)) {
                        if gt(x, y) {
                            bad.push((lo, m));
                        }
                    }
                }
            }
        }
        bad
    }

    fn monotonicity_by(&self, gt: impl Fn(&T, &T) -> bool) -> Vec<(SetFn, SubsetMask)> {
        let mut bad = Vec::new();
        for cell in Cell::BOTH {
            let k = self.k(cell);
            for f in SetFn::ALL {
                for m in self.masks(cell, f) {
                    let Ok(v) = self.get(f, m) else { continue };
                    for j in 0..k {
                        if m.contains(j) {
                            continue;
                        }
                        let bigger = SubsetMask::new(cell, m.bits | 1 << j);
                        if let Ok(w) = self.get(f, bigger) {
                            if gt(v, w) {
                                bad.push((f, m));
                                break;
                            }
                        }
                    }
                }
            }
        }
        bad
    }
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    #[serde(rename = "Ka")]
    ka: usize,
    #[serde(rename = "Kb")]
    kb: usize,
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    cell: Cell,
    function: String,
    mask: u32,
    value: String,
}

impl SetFunctionTable<Rational> {
    pub fn to_json(&self) -> String {
        let file = TableFile {
            ka: self.ka(),
            kb: self.kb(),
            entries: self
                .entries()
                .into_iter()
                .map(|(f, m, v)| EntryFile {
                    cell: m.cell,
                    function: f.label().to_string(),
                    mask: m.bits,
                    value: format_fraction(v),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("table serializes")
    }

    /// Parses the format written by [`to_json`](Self::to_json). Missing
    /// entries are allowed here and reported when the table is used.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text)?;
        let mut t = Self::empty(file.ka, file.kb)?;
        for e in file.entries {
            let f = SetFn::parse(&e.function)?;
            t.set(f, SubsetMask::new(e.cell, e.mask), parse_fraction(&e.value)?)?;
        }
        Ok(t)
    }

    pub fn has_negative_entry(&self) -> bool {
        self.entries().iter().any(|(_, _, v)| v.is_negative())
    }
}

/// Coordinate of user `j` of `cell` in a rate vector `(R_a, R_b)`.
pub fn coord(cell: Cell, user: usize, ka: usize) -> usize {
    match cell {
        Cell::A => user,
        Cell::B => ka + user,
    }
}

pub(crate) fn add_mask(coeffs: &mut [Rational], mask: SubsetMask, ka: usize) {
    for j in mask.users() {
        coeffs[coord(mask.cell, j, ka)] += int(1);
    }
}

pub(crate) fn row(dim: usize, ka: usize, masks: &[SubsetMask], rhs: Rational) -> LinearInequality {
    let mut coeffs = vec![zero(); dim];
    for &m in masks {
        add_mask(&mut coeffs, m, ka);
    }
    LinearInequality::new(coeffs, rhs)
}

fn sum(values: &[&Rational]) -> Rational {
    values.iter().copied().sum()
}

/// The generic region: seven inequality families plus nonnegativity.
///
/// Rows are emitted family by family in a fixed order, one per mask
/// combination, without deduplication.
///
/// ```
/// use macicmac::region::{build_generic_region, SetFunctionTable};
/// use macicmac::rational::int;
/// let t = SetFunctionTable::from_fn(2, 2, |_, _| int(1)).unwrap();
/// assert_eq!(build_generic_region(&t).unwrap().inequalities.len(), 46);
/// ```
pub fn build_generic_region(t: &SetFunctionTable<Rational>) -> Result<Polytope> {
    let (ka, kb) = (t.ka(), t.kb());
    let dim = ka + kb;
    let ups = |c| t.masks(c, SetFn::A);
    let oms = |c| t.masks(c, SetFn::B);
    let (ua, ub, oa, ob) = (ups(Cell::A), ups(Cell::B), oms(Cell::A), oms(Cell::B));
    let mut rows = Vec::new();

    for o in [&oa, &ob] {
        for &m in o {
            rows.push(row(dim, ka, &[m], t.get(SetFn::B, m)?.clone()));
        }
    }
    for &u in &ua {
        for &o in &ob {
            let rhs = sum(&[t.get(SetFn::A, u)?, t.get(SetFn::G, o)?]);
            rows.push(row(dim, ka, &[u, o], rhs));
        }
    }
    for &o in &oa {
        for &u in &ub {
            let rhs = sum(&[t.get(SetFn::A, u)?, t.get(SetFn::G, o)?]);
            rows.push(row(dim, ka, &[o, u], rhs));
        }
    }
    for &u in &ua {
        for &v in &ub {
            let rhs = sum(&[t.get(SetFn::E, u)?, t.get(SetFn::E, v)?]);
            rows.push(row(dim, ka, &[u, v], rhs));
        }
    }
    for &u in &ua {
        for &o in &oa {
            for &v in &ub {
                let rhs = sum(&[t.get(SetFn::A, u)?, t.get(SetFn::G, o)?, t.get(SetFn::E, v)?]);
                rows.push(row(dim, ka, &[u, o, v], rhs));
            }
        }
    }
    for &u in &ua {
        for &o in &ob {
            for &v in &ub {
                let rhs = sum(&[t.get(SetFn::A, v)?, t.get(SetFn::G, o)?, t.get(SetFn::E, u)?]);
                rows.push(row(dim, ka, &[u, o, v], rhs));
            }
        }
    }
    Polytope::new(dim, rows, true)
}

/// Number of rows [`build_generic_region`] emits for cell sizes `ka`, `kb`.
pub fn generic_row_count(ka: usize, kb: usize) -> usize {
    let (ua, oa) = ((1usize << (ka - 1)), (1usize << ka) - 1);
    let (ub, ob) = ((1usize << (kb - 1)), (1usize << kb) - 1);
    oa + ob + ua * ob + oa * ub + ua * ub + ua * oa * ub + ua * ob * ub
}

/// Largest `d` with `(d, ..., d)` in `p`: the minimum of `rhs / sum(coeffs)`
/// over rows with positive coefficient sum.
///
/// ```
/// use macicmac::polytope::{LinearInequality, Polytope};
/// use macicmac::rational::{int, rat};
/// use macicmac::region::symmetric_max;
/// let p = Polytope::new(2, vec![
///     LinearInequality::new(vec![int(2), int(1)], int(4)),
///     LinearInequality::new(vec![int(1), int(1)], int(3)),
/// ], true).unwrap();
/// assert_eq!(symmetric_max(&p).unwrap(), rat(4, 3));
/// ```
pub fn symmetric_max(p: &Polytope) -> Result<Rational> {
    if p.inequalities.is_empty() {
        return Err(Error::EmptySystem);
    }
    p.inequalities
        .iter()
        .filter_map(|q| {
            let s = q.coeff_sum();
            s.is_positive().then(|| &q.rhs / s)
        })
        .min()
        .ok_or(Error::Unbounded)
}

/// [`symmetric_max`] of `build_generic_region(t)` without building it.
///
/// Along the diagonal every row reduces to `rhs / (sum of mask sizes)`, and
/// each family's rhs is a sum of one value per mask, so it suffices to take
/// the minimum of each set function per mask size.
pub fn symmetric_max_of_table(t: &SetFunctionTable<Rational>) -> Result<Rational> {
    // by_size[cell][fn][s] = min value over admissible masks of size s
    let mut by_size: [[Vec<Option<Rational>>; 4]; 2] = Default::default();
    for cell in Cell::BOTH {
        let k = t.k(cell);
        for f in SetFn::ALL {
            let mut best: Vec<Option<Rational>> = vec![None; k + 1];
            for m in t.masks(cell, f) {
                let v = t.get(f, m)?;
                let slot = &mut best[m.len()];
                if slot.as_ref().is_none_or(|b| v < b) {
                    *slot = Some(v.clone());
                }
            }
            by_size[cell.index()][f.index()] = best;
        }
    }
    let sized = |cell: Cell, f: SetFn| -> Vec<(usize, Rational)> {
        by_size[cell.index()][f.index()]
            .iter()
            .enumerate()
            .filter_map(|(s, v)| v.clone().map(|v| (s, v)))
            .collect()
    };
    let (a_a, b_a, e_a, g_a) = (
        sized(Cell::A, SetFn::A),
        sized(Cell::A, SetFn::B),
        sized(Cell::A, SetFn::E),
        sized(Cell::A, SetFn::G),
    );
    let (a_b, b_b, e_b, g_b) = (
        sized(Cell::B, SetFn::A),
        sized(Cell::B, SetFn::B),
        sized(Cell::B, SetFn::E),
        sized(Cell::B, SetFn::G),
    );

    let mut best: Option<Rational> = None;
    let mut offer = |num: Rational, den: usize| {
        let r = num / int(den as i64);
        if best.as_ref().is_none_or(|b| &r < b) {
            best = Some(r);
        }
    };
    for (s, v) in b_a.iter().chain(&b_b) {
        offer(v.clone(), *s);
    }
    for (x, y) in [(&a_a, &g_b), (&a_b, &g_a), (&e_a, &e_b)] {
        for (s1, v1) in x {
            for (s2, v2) in y {
                offer(v1 + v2, s1 + s2);
            }
        }
    }
    for (x, y, z) in [(&a_a, &g_a, &e_b), (&a_b, &g_b, &e_a)] {
        for (s1, v1) in x {
            for (s2, v2) in y {
                for (s3, v3) in z {
                    offer(v1 + v2 + v3, s1 + s2 + s3);
                }
            }
        }
    }
    best.ok_or(Error::EmptySystem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LpOutcome;
    use crate::rational::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(ka: usize, kb: usize, rng: &mut ChaCha8Rng) -> SetFunctionTable {
        SetFunctionTable::from_fn(ka, kb, |_, _| rat(rng.gen_range(0..40), rng.gen_range(1..8))).unwrap()
    }

    /// Maximize `d` over `(x, d)` with `x_j = d` for every coordinate.
    fn tied_lp_oracle(p: &Polytope) -> Rational {
        let n = p.dim;
        let mut obj = vec![zero(); n + 1];
        obj[n] = int(1);
        let mut rows: Vec<LinearInequality> = p
            .all_rows()
            .into_iter()
            .map(|mut q| {
                q.coeffs.push(zero());
                q
            })
            .collect();
        for j in 0..n {
            for s in [1, -1] {
                let mut c = vec![zero(); n + 1];
                c[j] = int(s);
                c[n] = int(-s);
                rows.push(LinearInequality::new(c, zero()));
            }
        }
        match crate::polytope::solve(&obj, &rows, n + 1, false) {
            LpOutcome::Optimal { value, .. } => value,
            other => panic!("oracle LP failed: {other:?}"),
        }
    }

    #[test]
    fn row_counts() {
        let t = SetFunctionTable::from_fn(1, 1, |_, _| int(1)).unwrap();
        assert_eq!(build_generic_region(&t).unwrap().inequalities.len(), 7);
        for (ka, kb) in [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)] {
            let t = SetFunctionTable::from_fn(ka, kb, |_, _| int(1)).unwrap();
            let p = build_generic_region(&t).unwrap();
            assert_eq!(p.inequalities.len(), generic_row_count(ka, kb));
            assert_eq!(p.dim, ka + kb);
        }
        assert_eq!(generic_row_count(2, 2), 46);
    }

    #[test]
    fn doubled_coefficient_when_user_in_both_masks() {
        let t = SetFunctionTable::from_fn(2, 2, |_, _| int(1)).unwrap();
        let p = build_generic_region(&t).unwrap();
        // Upsilon_a = {a0,a1}, Omega_a = {a0}, Upsilon_b = {b0}.
        let want = vec![int(2), int(1), int(1), int(0)];
        assert!(p.inequalities.iter().any(|q| q.coeffs == want && q.rhs == int(3)));
    }

    #[test]
    fn missing_entry_is_reported() {
        let mut t = SetFunctionTable::<Rational>::empty(1, 1).unwrap();
        t.set(SetFn::A, SubsetMask::new(Cell::A, 1), int(1)).unwrap();
        match build_generic_region(&t) {
            Err(Error::MissingEntry { .. }) => {}
            other => panic!("expected missing entry, got {other:?}"),
        }
        assert!(t.set(SetFn::A, SubsetMask::new(Cell::A, 0b10), int(1)).is_err());
    }

    #[test]
    fn symmetric_max_examples() {
        let p = Polytope::new(2, vec![LinearInequality::new(vec![int(1), int(1)], int(1))], true).unwrap();
        assert_eq!(symmetric_max(&p).unwrap(), rat(1, 2));
        let empty = Polytope::new(2, vec![], true).unwrap();
        assert!(matches!(symmetric_max(&empty), Err(Error::EmptySystem)));
    }

    #[test]
    fn symmetric_max_matches_tied_lp_and_streaming_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (ka, kb) in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 2)] {
            for _ in 0..5 {
                let t = random_table(ka, kb, &mut rng);
                let p = build_generic_region(&t).unwrap();
                let d = symmetric_max(&p).unwrap();
                assert_eq!(d, tied_lp_oracle(&p));
                assert_eq!(d, symmetric_max_of_table(&t).unwrap());
            }
        }
    }

    #[test]
    fn enlarging_the_table_never_shrinks_the_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let t = random_table(2, 2, &mut rng);
            let bigger = t.map(|v| v + rat(rng.gen_range(0..5), 3));
            let small = build_generic_region(&t).unwrap();
            let large = build_generic_region(&bigger).unwrap();
            // small is contained in large iff small implies every row of large
            assert!(small.first_unimplied(&large).unwrap().is_none());
        }
    }

    #[test]
    fn chain_rule_and_monotonicity_detectors() {
        let mut t = SetFunctionTable::from_fn(2, 1, |f, m| match f {
            SetFn::A | SetFn::B => int(m.len() as i64),
            SetFn::E | SetFn::G => int(m.len() as i64 + 1),
        })
        .unwrap();
        assert!(t.chain_rule_violations().is_empty());
        assert!(t.monotonicity_violations().is_empty());
        t.set(SetFn::A, SubsetMask::new(Cell::A, 0b1), int(9)).unwrap();
        assert_eq!(t.chain_rule_violations().len(), 1);
        assert_eq!(t.monotonicity_violations().len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_table(2, 1, &mut rng);
        assert_eq!(SetFunctionTable::from_json(&t.to_json()).unwrap(), t);
    }
}
