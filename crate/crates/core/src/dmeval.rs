//! Set functions of finite-alphabet channels, evaluated by enumerating the
//! joint law.
//!
//! Probabilities are exact rationals; each atom of the joint law is
//! converted to `f64` once, and entropies are sums of `-p log2 p` over
//! marginals. Only semi-deterministic channels are modelled: receiver `i`
//! sees `Y_i = Φ_i(X_i, S_i')`, where `S_i'` is produced by the other
//! cell's interfering transmitter through `p(s_i' | x_i'0)`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::rationalized;
use crate::rational::{rat, serde_fraction_rows, serde_fraction_vec, to_f64, Rational};
use crate::region::{build_generic_region, SetFn, SetFunctionTable};
use crate::subsets::{Cell, SubsetMask, MAX_USERS};

/// Largest joint alphabet the evaluator will enumerate.
pub const MAX_STATES: usize = 1_000_000;

/// Conditional law `p(u_i0, x_i | q)` of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellLaw {
    pub users: usize,
    pub x_alphabet: usize,
    pub u_alphabet: usize,
    /// `pmf[q][u * x_alphabet^users + x]`, where `x = Σ_j x_j x_alphabet^j`.
    #[serde(with = "serde_fraction_rows")]
    pub pmf: Vec<Vec<Rational>>,
}

impl CellLaw {
    pub fn x_states(&self) -> usize {
        self.x_alphabet.pow(self.users as u32)
    }

    pub fn width(&self) -> usize {
        self.u_alphabet * self.x_states()
    }

    /// Law with independent users: `head[q]` is over `(u, x_0)` as
    /// `u * x_alphabet + x_0`, `tails[j][q]` is the law of user `j + 1`.
    pub fn product(
        x_alphabet: usize,
        u_alphabet: usize,
        head: &[Vec<Rational>],
        tails: &[Vec<Vec<Rational>>],
    ) -> Result<Self> {
        let users = tails.len() + 1;
        let xs = x_alphabet.pow(users as u32);
        let mut pmf = Vec::with_capacity(head.len());
        for (q, h) in head.iter().enumerate() {
            let mut row = vec![Rational::zero(); u_alphabet * xs];
            for (idx, p) in row.iter_mut().enumerate() {
                let (u, x) = (idx / xs, idx % xs);
                let mut v = h
                    .get(u * x_alphabet + x % x_alphabet)
                    .cloned()
                    .ok_or_else(|| Error::InvalidDistribution("head row too short".into()))?;
                for (j, t) in tails.iter().enumerate() {
                    let xj = x / x_alphabet.pow(j as u32 + 1) % x_alphabet;
                    let row = t
                        .get(q)
                        .and_then(|r| r.get(xj))
                        .ok_or_else(|| Error::InvalidDistribution("tail row too short".into()))?;
                    v *= row;
                }
                *p = v;
            }
            pmf.push(row);
        }
        let law = CellLaw {
            users,
            x_alphabet,
            u_alphabet,
            pmf,
        };
        law.validate(head.len())?;
        Ok(law)
    }

    /// Uniform independent inputs and a constant auxiliary.
    pub fn uniform(users: usize, x_alphabet: usize) -> Result<Self> {
        let xs = x_alphabet.pow(users as u32);
        let law = CellLaw {
            users,
            x_alphabet,
            u_alphabet: 1,
            pmf: vec![vec![rat(1, xs as i64); xs]],
        };
        law.validate(1)?;
        Ok(law)
    }

    fn validate(&self, q_states: usize) -> Result<()> {
        if self.users == 0 {
            return Err(Error::EmptyCell);
        }
        if self.users > MAX_USERS {
            return Err(Error::TooManyUsers {
                users: self.users,
                max: MAX_USERS,
            });
        }
        if self.x_alphabet == 0 || self.u_alphabet == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if self.pmf.len() != q_states {
            return Err(Error::InvalidDistribution(format!(
                "{} conditional rows for {} values of Q",
                self.pmf.len(),
                q_states
            )));
        }
        for row in &self.pmf {
            check_pmf(row, self.width())?;
        }
        Ok(())
    }

    /// Value of user `j` inside the joint input index `x`.
    pub fn user_input(&self, x: usize, j: usize) -> usize {
        x / self.x_alphabet.pow(j as u32) % self.x_alphabet
    }
}

fn check_pmf(row: &[Rational], len: usize) -> Result<()> {
    if row.len() != len {
        return Err(Error::InvalidDistribution(format!(
            "pmf has {} entries, expected {}",
            row.len(),
            len
        )));
    }
    if row.iter().any(|p| p.is_negative()) {
        return Err(Error::InvalidDistribution("negative probability".into()));
    }
    let total: Rational = row.iter().sum();
    if !total.is_one() {
        return Err(Error::InvalidDistribution(format!("pmf sums to {total}")));
    }
    Ok(())
}

/// Input law `p(q) p(u_a0, x_a | q) p(u_b0, x_b | q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmDistribution {
    #[serde(with = "serde_fraction_vec")]
    pub q: Vec<Rational>,
    pub a: CellLaw,
    pub b: CellLaw,
}

impl DmDistribution {
    pub fn new(q: Vec<Rational>, a: CellLaw, b: CellLaw) -> Result<Self> {
        let d = DmDistribution { q, a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() {
            return Err(Error::InvalidDistribution("Q has an empty alphabet".into()));
        }
        check_pmf(&self.q, self.q.len())?;
        self.a.validate(self.q.len())?;
        self.b.validate(self.q.len())
    }

    pub fn cell(&self, c: Cell) -> &CellLaw {
        match c {
            Cell::A => &self.a,
            Cell::B => &self.b,
        }
    }

    pub fn k(&self, c: Cell) -> usize {
        self.cell(c).users
    }
}

/// Semi-deterministic map of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMap {
    pub users: usize,
    pub x_alphabet: usize,
    /// Law of the interference `S_i` caused by `X_i0`: `s_law[x_i0][s]`.
    #[serde(with = "serde_fraction_rows")]
    pub s_law: Vec<Vec<Rational>>,
    pub y_alphabet: usize,
    /// `output[x][s']` is `Y_i` for joint input index `x` and incoming interference `s'`.
    pub output: Vec<Vec<usize>>,
}

impl CellMap {
    pub fn s_alphabet(&self) -> usize {
        self.s_law.first().map_or(0, Vec::len)
    }

    fn x_states(&self) -> usize {
        self.x_alphabet.pow(self.users as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdChannel {
    pub a: CellMap,
    pub b: CellMap,
}

impl SdChannel {
    pub fn new(a: CellMap, b: CellMap) -> Result<Self> {
        let ch = SdChannel { a, b };
        ch.validate()?;
        Ok(ch)
    }

    pub fn cell(&self, c: Cell) -> &CellMap {
        match c {
            Cell::A => &self.a,
            Cell::B => &self.b,
        }
    }

    /// Checks shapes, the interference laws, and invertibility of every
    /// `s' -> Φ_i(x, s')`.
    pub fn validate(&self) -> Result<()> {
        for c in Cell::BOTH {
            let m = self.cell(c);
            let incoming = self.cell(c.other()).s_alphabet();
            if m.users == 0 {
                return Err(Error::EmptyCell);
            }
            if m.users > MAX_USERS {
                return Err(Error::TooManyUsers {
                    users: m.users,
                    max: MAX_USERS,
                });
            }
            if m.s_law.len() != m.x_alphabet || m.s_alphabet() == 0 {
                return Err(Error::InvalidChannel(format!(
                    "cell {c}: interference law needs one row per input symbol"
                )));
            }
            for row in &m.s_law {
                check_pmf(row, m.s_alphabet()).map_err(|e| Error::InvalidChannel(format!("cell {c}: {e}")))?;
            }
            if m.output.len() != m.x_states() {
                return Err(Error::InvalidChannel(format!(
                    "cell {c}: output map has {} rows, expected {}",
                    m.output.len(),
                    m.x_states()
                )));
            }
            for (x, row) in m.output.iter().enumerate() {
                if row.len() != incoming {
                    return Err(Error::InvalidChannel(format!(
                        "cell {c}: output row {x} has {} entries, expected {incoming}",
                        row.len()
                    )));
                }
                let mut seen = vec![false; m.y_alphabet];
                for &y in row {
                    if y >= m.y_alphabet {
                        return Err(Error::InvalidChannel(format!("cell {c}: output {y} out of range")));
                    }
                    if std::mem::replace(&mut seen[y], true) {
                        return Err(Error::InvalidChannel(format!(
                            "cell {c}: output is not invertible in the interference for input {x}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `Y_i = (Σ_j X_ij + S_i') mod m_i` with inputs in `Z_{m_i}`.
    pub fn modular_additive(users: [usize; 2], modulus: [usize; 2], s_law: [Vec<Vec<Rational>>; 2]) -> Result<Self> {
        let [law_a, law_b] = s_law;
        let map = |c: Cell, law: Vec<Vec<Rational>>, incoming: usize| {
            let (k, m) = (users[c.index()], modulus[c.index()]);
            let xs = m.pow(k as u32);
            let output = (0..xs)
                .map(|x| {
                    let sum: usize = (0..k).map(|j| x / m.pow(j as u32) % m).sum();
                    (0..incoming).map(|s| (sum + s) % m).collect()
                })
                .collect();
            CellMap {
                users: k,
                x_alphabet: m,
                s_law: law,
                y_alphabet: m,
                output,
            }
        };
        let (sa, sb) = (law_a.first().map_or(0, Vec::len), law_b.first().map_or(0, Vec::len));
        SdChannel::new(map(Cell::A, law_a, sb), map(Cell::B, law_b, sa))
    }
}

/// A distribution and channel stored together, the unit of serialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmInstance {
    pub distribution: DmDistribution,
    pub channel: SdChannel,
}

impl DmInstance {
    pub fn new(distribution: DmDistribution, channel: SdChannel) -> Result<Self> {
        check_compatible(&distribution, &channel)?;
        Ok(DmInstance { distribution, channel })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: DmInstance = serde_json::from_str(text)?;
        inst.distribution.validate()?;
        inst.channel.validate()?;
        DmInstance::new(inst.distribution, inst.channel)
    }

    /// Random modular-additive instance with at most `max_users` per cell
    /// and binary or ternary alphabets. All generated pmfs have
    /// denominators at most 64.
    pub fn random(rng: &mut impl Rng, max_users: usize) -> Self {
        let users = [rng.gen_range(1..=max_users), rng.gen_range(1..=max_users)];
        let modulus = [rng.gen_range(2..=3), rng.gen_range(2..=3)];
        let s_law = [Cell::A, Cell::B].map(|c| {
            let s = rng.gen_range(2..=modulus[c.other().index()]);
            (0..modulus[c.index()]).map(|_| random_pmf(rng, s)).collect::<Vec<_>>()
        });
        let channel = SdChannel::modular_additive(users, modulus, s_law).expect("modulus covers interference");
        let nq = rng.gen_range(1..=2);
        let q = random_pmf(rng, nq);
        let [a, b] = Cell::BOTH.map(|c| {
            let (k, m) = (users[c.index()], modulus[c.index()]);
            let nu = rng.gen_range(1..=2);
            let head: Vec<_> = (0..nq).map(|_| random_pmf(rng, nu * m)).collect();
            let tails: Vec<Vec<_>> = (1..k).map(|_| (0..nq).map(|_| random_pmf(rng, m)).collect()).collect();
            CellLaw::product(m, nu, &head, &tails).expect("generated law is valid")
        });
        let distribution = DmDistribution::new(q, a, b).expect("generated distribution is valid");
        DmInstance { distribution, channel }
    }
}

/// Multinomial pmf: `d <= 64` units dropped into `n` bins.
fn random_pmf(rng: &mut impl Rng, n: usize) -> Vec<Rational> {
    let d = rng.gen_range(1..=64i64);
    let mut counts = vec![0i64; n];
    for _ in 0..d {
        counts[rng.gen_range(0..n)] += 1;
    }
    counts.into_iter().map(|c| rat(c, d)).collect()
}

fn check_compatible(d: &DmDistribution, ch: &SdChannel) -> Result<()> {
    for c in Cell::BOTH {
        let (law, map) = (d.cell(c), ch.cell(c));
        if law.users != map.users || law.x_alphabet != map.x_alphabet {
            return Err(Error::InvalidDistribution(format!(
                "cell {c}: distribution has {} users over {} symbols, channel expects {} over {}",
                law.users, law.x_alphabet, map.users, map.x_alphabet
            )));
        }
    }
    Ok(())
}

// Variable slots of the joint law.
const Q: usize = 0;
const U: [usize; 2] = [1, 2];
const S: [usize; 2] = [3, 4];
const T: [usize; 2] = [5, 6];
const Y: [usize; 2] = [7, 8];
const X0: usize = 9;

type VarSet = u64;

fn bit(v: usize) -> VarSet {
    1 << v
}

/// Enumerated joint law of `(Q, U, S, T, Y, X)`.
struct Joint {
    k: [usize; 2],
    radix: Vec<u64>,
    atoms: Vec<(f64, Vec<u32>)>,
    cache: RefCell<HashMap<VarSet, f64>>,
}

impl Joint {
    fn build(d: &DmDistribution, ch: &SdChannel, genie: bool) -> Result<Self> {
        check_compatible(d, ch)?;
        let (la, lb) = (&d.a, &d.b);
        let (sa, sb) = (ch.a.s_alphabet(), ch.b.s_alphabet());
        let (ta, tb) = if genie { (sa, sb) } else { (1, 1) };
        let states = [d.q.len(), la.width(), lb.width(), sa, sb, ta, tb]
            .iter()
            .fold(1usize, |acc, &n| acc.saturating_mul(n));
        if states > MAX_STATES {
            return Err(Error::AlphabetTooLarge {
                states,
                max: MAX_STATES,
            });
        }
        let k = [la.users, lb.users];
        let mut radix = vec![
            d.q.len() as u64,
            la.u_alphabet as u64,
            lb.u_alphabet as u64,
            sa as u64,
            sb as u64,
            ta as u64,
            tb as u64,
            ch.a.y_alphabet as u64,
            ch.b.y_alphabet as u64,
        ];
        radix.extend(std::iter::repeat_n(la.x_alphabet as u64, k[0]));
        radix.extend(std::iter::repeat_n(lb.x_alphabet as u64, k[1]));

        let (xsa, xsb) = (la.x_states(), lb.x_states());
        let mut atoms = Vec::new();
        for (q, pq) in d.q.iter().enumerate() {
            if pq.is_zero() {
                continue;
            }
            for (ia, pa) in la.pmf[q].iter().enumerate() {
                if pa.is_zero() {
                    continue;
                }
                let (ua, xa) = (ia / xsa, ia % xsa);
                let xa0 = la.user_input(xa, 0);
                let pqa = pq * pa;
                for (ib, pb) in lb.pmf[q].iter().enumerate() {
                    if pb.is_zero() {
                        continue;
                    }
                    let (ub, xb) = (ib / xsb, ib % xsb);
                    let xb0 = lb.user_input(xb, 0);
                    let pqab = &pqa * pb;
                    for (s_a, ps_a) in ch.a.s_law[xa0].iter().enumerate() {
                        for (s_b, ps_b) in ch.b.s_law[xb0].iter().enumerate() {
                            let p_s = &pqab * ps_a * ps_b;
                            if p_s.is_zero() {
                                continue;
                            }
                            for t_a in 0..ta {
                                for t_b in 0..tb {
                                    let mut p = p_s.clone();
                                    if genie {
                                        p = p * &ch.a.s_law[xa0][t_a] * &ch.b.s_law[xb0][t_b];
                                        if p.is_zero() {
                                            continue;
                                        }
                                    }
                                    let mut v = vec![
                                        q as u32,
                                        ua as u32,
                                        ub as u32,
                                        s_a as u32,
                                        s_b as u32,
                                        t_a as u32,
                                        t_b as u32,
                                        ch.a.output[xa][s_b] as u32,
                                        ch.b.output[xb][s_a] as u32,
                                    ];
                                    v.extend((0..k[0]).map(|j| la.user_input(xa, j) as u32));
                                    v.extend((0..k[1]).map(|j| lb.user_input(xb, j) as u32));
                                    atoms.push((to_f64(&p), v));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(Joint {
            k,
            radix,
            atoms,
            cache: RefCell::new(HashMap::new()),
        })
    }

    fn x(&self, c: Cell, bits: u32) -> VarSet {
        let base = X0 + if c == Cell::A { 0 } else { self.k[0] };
        (0..self.k[c.index()])
            .filter(|j| bits & (1 << j) != 0)
            .fold(0, |acc, j| acc | bit(base + j))
    }

    fn x_all(&self, c: Cell) -> VarSet {
        self.x(c, (1u32 << self.k[c.index()]) - 1)
    }

    fn x_rest(&self, m: SubsetMask) -> VarSet {
        self.x_all(m.cell) & !self.x(m.cell, m.bits)
    }

    fn entropy(&self, vars: VarSet) -> f64 {
        if vars == 0 {
            return 0.0;
        }
        if let Some(&h) = self.cache.borrow().get(&vars) {
            return h;
        }
        let slots: Vec<usize> = (0..self.radix.len()).filter(|&v| vars & bit(v) != 0).collect();
        let mut marginal: BTreeMap<u64, f64> = BTreeMap::new();
        for (p, v) in &self.atoms {
            let key = slots.iter().fold(0u64, |acc, &s| acc * self.radix[s] + v[s] as u64);
            *marginal.entry(key).or_insert(0.0) += p;
        }
        let h = marginal.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
        self.cache.borrow_mut().insert(vars, h);
        h
    }

    /// `H(a | b)`.
    fn cond(&self, a: VarSet, b: VarSet) -> f64 {
        self.entropy(a | b) - self.entropy(b)
    }

    /// `I(a; b | c)`.
    fn mi(&self, a: VarSet, b: VarSet, c: VarSet) -> f64 {
        self.entropy(a | c) + self.entropy(b | c) - self.entropy(a | b | c) - self.entropy(c)
    }
}

/// Inner-bound set functions of a fixed input law:
/// `A_Υ = I(X_Υ; Y_i | X_Ῡ, U_i0, U_i'0, Q)`, `B_Ω = I(X_Ω; Y_i | X_Ω̄, U_i'0, Q)`,
/// `E_Υ = I(X_Υ, U_i'0; Y_i | X_Ῡ, U_i0, Q)`, `G_Ω = I(X_Ω, U_i'0; Y_i | X_Ω̄, Q)`.
pub fn dm_inner_table(d: &DmDistribution, ch: &SdChannel) -> Result<SetFunctionTable<f64>> {
    let j = Joint::build(d, ch, false)?;
    SetFunctionTable::try_from_fn(d.a.users, d.b.users, |f, m| {
        let (i, o) = (m.cell.index(), m.cell.other().index());
        let (xs, rest, y) = (j.x(m.cell, m.bits), j.x_rest(m), bit(Y[i]));
        Ok(match f {
            SetFn::A => j.mi(xs, y, rest | bit(U[i]) | bit(U[o]) | bit(Q)),
            SetFn::B => j.mi(xs, y, rest | bit(U[o]) | bit(Q)),
            SetFn::E => j.mi(xs | bit(U[o]), y, rest | bit(U[i]) | bit(Q)),
            SetFn::G => j.mi(xs | bit(U[o]), y, rest | bit(Q)),
        })
    })
}

/// Outer-bound set functions with the genie `T_i`, an independent copy of
/// `S_i` given `X_i0`. The auxiliaries of `d` are ignored.
pub fn sd_outer_table(d: &DmDistribution, ch: &SdChannel) -> Result<SetFunctionTable<f64>> {
    let j = Joint::build(d, ch, true)?;
    let x0 = |c: Cell| j.x(c, 1);
    SetFunctionTable::try_from_fn(d.a.users, d.b.users, |f, m| {
        let (c, i) = (m.cell, m.cell.index());
        let o = c.other();
        let noise = j.cond(bit(S[o.index()]), j.x_all(o) | bit(Q));
        let (rest, y) = (j.x_rest(m), bit(Y[i]));
        let h = match f {
            SetFn::A => j.cond(y, rest | bit(T[i]) | x0(o) | bit(Q)),
            SetFn::B => j.cond(y, rest | x0(o) | bit(Q)),
            SetFn::E => j.cond(y, rest | bit(T[i]) | bit(Q)),
            SetFn::G => j.cond(y, rest | bit(Q)),
        };
        Ok(h - noise)
    })
}

/// `(I(X_b0; S_b | T_b), I(X_a0; S_a | T_a))`: the amounts by which the
/// cell-a and cell-b rates are lowered.
pub fn sd_gap_shift(d: &DmDistribution, ch: &SdChannel) -> Result<(f64, f64)> {
    let j = Joint::build(d, ch, true)?;
    let shift = |c: Cell| j.mi(j.x(c, 1), bit(S[c.index()]), bit(T[c.index()]));
    Ok((shift(Cell::B), shift(Cell::A)))
}

/// `H(T_i | X_i0)` and `H(S_i | X_i0)` for both cells.
pub fn genie_entropies(d: &DmDistribution, ch: &SdChannel) -> Result<[(f64, f64); 2]> {
    let j = Joint::build(d, ch, true)?;
    Ok(Cell::BOTH.map(|c| {
        let x0 = j.x(c, 1);
        (j.cond(bit(T[c.index()]), x0), j.cond(bit(S[c.index()]), x0))
    }))
}

/// Replaces each `U_i0` by a fresh variable with law `p(s_i | x_i0)`.
pub fn with_genie_auxiliary(d: &DmDistribution, ch: &SdChannel) -> Result<DmDistribution> {
    check_compatible(d, ch)?;
    let cell = |c: Cell| {
        let (law, map) = (d.cell(c), ch.cell(c));
        let xs = law.x_states();
        let nu = map.s_alphabet();
        let pmf = law
            .pmf
            .iter()
            .map(|row| {
                let mut out = vec![Rational::zero(); nu * xs];
                for (idx, p) in row.iter().enumerate() {
                    let x = idx % xs;
                    for (u, pu) in map.s_law[law.user_input(x, 0)].iter().enumerate() {
                        out[u * xs + x] += p * pu;
                    }
                }
                out
            })
            .collect();
        CellLaw {
            users: law.users,
            x_alphabet: law.x_alphabet,
            u_alphabet: nu,
            pmf,
        }
    };
    DmDistribution::new(d.q.clone(), cell(Cell::A), cell(Cell::B))
}

/// Outcome of the gap-shift containment check.
#[derive(Clone, Debug, Serialize)]
pub struct GapShiftReport {
    pub shift_on_ra: f64,
    pub shift_on_rb: f64,
    pub vertices: usize,
    /// Unshifted outer vertex whose shifted image leaves the inner region.
    pub witness: Option<Vec<f64>>,
    /// Largest `lhs - rhs` over inner rows at unclamped shifted outer
    /// vertices, rows of both regions paired by position.
    pub worst_row_excess: f64,
    pub chain_rule_ok: bool,
}

impl GapShiftReport {
    pub fn contained(&self) -> bool {
        self.witness.is_none()
    }
}

/// Tolerance of the containment test, in bits.
pub const CONTAINMENT_TOL: f64 = 1e-6;
const TABLE_TOL: f64 = 1e-9;

/// Builds the outer region from [`sd_outer_table`] and the inner region
/// from [`dm_inner_table`] with `U_i0` distributed as `T_i`, then checks
/// that every outer vertex, lowered by the [`sd_gap_shift`] amounts and
/// clamped at zero, lies in the inner region.
pub fn gap_shift_report(d: &DmDistribution, ch: &SdChannel) -> Result<GapShiftReport> {
    let outer_t = sd_outer_table(d, ch)?;
    let inner_t = dm_inner_table(&with_genie_auxiliary(d, ch)?, ch)?;
    let (shift_on_ra, shift_on_rb) = sd_gap_shift(d, ch)?;
    let chain_rule_ok = outer_t.chain_rule_violations_within(TABLE_TOL).is_empty()
        && inner_t.chain_rule_violations_within(TABLE_TOL).is_empty();
    let outer = build_generic_region(&rationalized(&outer_t))?;
    let inner = build_generic_region(&rationalized(&inner_t))?;
    let ka = d.a.users;
    let vertices = outer.vertices()?;
    let mut witness = None;
    let mut worst_row_excess = f64::NEG_INFINITY;
    for v in &vertices {
        let shifted: Vec<f64> = v
            .to_f64()
            .iter()
            .enumerate()
            .map(|(n, x)| x - if n < ka { shift_on_ra } else { shift_on_rb })
            .collect();
        for q in &inner.inequalities {
            let lhs: f64 = q.coeffs.iter().zip(&shifted).map(|(c, x)| to_f64(c) * x).sum();
            worst_row_excess = worst_row_excess.max(lhs - to_f64(&q.rhs));
        }
        let clamped: Vec<f64> = shifted.iter().map(|x| x.max(0.0)).collect();
        if witness.is_none() && !inner.contains_within(&clamped, CONTAINMENT_TOL)? {
            witness = Some(v.to_f64());
        }
    }
    Ok(GapShiftReport {
        shift_on_ra,
        shift_on_rb,
        vertices: vertices.len(),
        witness,
        worst_row_excess,
        chain_rule_ok,
    })
}

pub fn verify_gap_shift_containment(d: &DmDistribution, ch: &SdChannel) -> Result<bool> {
    Ok(gap_shift_report(d, ch)?.contained())
}

/// Triples `(Υ, Ω, slack)` with `Ω ⊆ Υ` where
/// `I(X_Ω; Y_i | X_Ω̄, Q) >= G_Ω - E_Υ` fails by more than `tol`.
pub fn inclusion_chain_violations(
    d: &DmDistribution,
    ch: &SdChannel,
    tol: f64,
) -> Result<Vec<(SubsetMask, SubsetMask, f64)>> {
    let t = dm_inner_table(d, ch)?;
    let j = Joint::build(d, ch, false)?;
    let mut bad = Vec::new();
    for c in Cell::BOTH {
        for u in t.masks(c, SetFn::E) {
            for w in t.masks(c, SetFn::G) {
                if w.bits & !u.bits != 0 {
                    continue;
                }
                let lhs = j.mi(j.x(c, w.bits), bit(Y[c.index()]), j.x_rest(w) | bit(Q));
                let rhs = t.get(SetFn::G, w)? - t.get(SetFn::E, u)?;
                if lhs < rhs - tol {
                    bad.push((u, w, rhs - lhs));
                }
            }
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {

    use super::*;
    use crate::rational::{int, one};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(c: Cell, bits: u32) -> SubsetMask {
        SubsetMask::new(c, bits)
    }

    fn xor_instance() -> (DmDistribution, SdChannel) {
        let quiet = vec![vec![one()], vec![one()]];
        let ch = SdChannel::modular_additive([2, 1], [2, 2], [quiet.clone(), quiet]).unwrap();
        let d = DmDistribution::new(
            vec![one()],
            CellLaw::uniform(2, 2).unwrap(),
            CellLaw::uniform(1, 2).unwrap(),
        )
        .unwrap();
        (d, ch)
    }

    fn close(x: f64, y: f64) -> bool {
        (x - y).abs() < 1e-12
    }

    #[test]
    fn xor_channel_carries_one_bit() {
        let (d, ch) = xor_instance();
        let t = dm_inner_table(&d, &ch).unwrap();
        assert!(close(*t.get(SetFn::B, m(Cell::A, 0b11)).unwrap(), 1.0));
        assert!(close(*t.get(SetFn::B, m(Cell::A, 0b01)).unwrap(), 1.0));
        assert!(close(*t.get(SetFn::A, m(Cell::A, 0b11)).unwrap(), 1.0));
    }

    #[test]
    fn constant_auxiliary_makes_a_equal_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut inst = DmInstance::random(&mut rng, 2);
        for c in [&mut inst.distribution.a, &mut inst.distribution.b] {
            let xs = c.x_states();
            c.pmf = c
                .pmf
                .iter()
                .map(|row| {
                    (0..xs)
                        .map(|x| (0..c.u_alphabet).map(|u| &row[u * xs + x]).sum())
                        .collect()
                })
                .collect();
            c.u_alphabet = 1;
        }
        let t = dm_inner_table(&inst.distribution, &inst.channel).unwrap();
        for c in Cell::BOTH {
            for u in t.masks(c, SetFn::A) {
                assert!(close(*t.get(SetFn::A, u).unwrap(), *t.get(SetFn::B, u).unwrap()));
            }
        }
    }

    #[test]
    fn full_common_message_leaves_nothing_private() {
        // U_a0 = X_a0 on a single-user cell
        let quiet = vec![vec![one()], vec![one()]];
        let ch = SdChannel::modular_additive([1, 1], [2, 2], [quiet.clone(), quiet]).unwrap();
        let half = rat(1, 2);
        let a = CellLaw {
            users: 1,
            x_alphabet: 2,
            u_alphabet: 2,
            pmf: vec![vec![half.clone(), int(0), int(0), half]],
        };
        let d = DmDistribution::new(vec![one()], a, CellLaw::uniform(1, 2).unwrap()).unwrap();
        let t = dm_inner_table(&d, &ch).unwrap();
        assert!(close(*t.get(SetFn::A, m(Cell::A, 1)).unwrap(), 0.0));
        assert!(close(*t.get(SetFn::B, m(Cell::A, 1)).unwrap(), 1.0));
    }

    /// Exact marginalization over explicit tuples, independent of `Joint`.
    fn oracle_entropy(d: &DmDistribution, ch: &SdChannel, pick: impl Fn(&[usize]) -> Vec<usize>) -> f64 {
        let mut marg: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        let (xsa, xsb) = (d.a.x_states(), d.b.x_states());
        for (q, pq) in d.q.iter().enumerate() {
            for (ia, pa) in d.a.pmf[q].iter().enumerate() {
                for (ib, pb) in d.b.pmf[q].iter().enumerate() {
                    let (xa, xb) = (ia % xsa, ib % xsb);
                    for (sa, psa) in ch.a.s_law[xa % d.a.x_alphabet].iter().enumerate() {
                        for (sb, psb) in ch.b.s_law[xb % d.b.x_alphabet].iter().enumerate() {
                            let ya = ch.a.output[xa][sb];
                            let yb = ch.b.output[xb][sa];
                            let key = pick(&[q, ia / xsa, xa, ib / xsb, xb, sa, sb, ya, yb]);
                            *marg.entry(key).or_insert_with(Rational::zero) += pq * pa * pb * psa * psb;
                        }
                    }
                }
            }
        }
        marg.values()
            .map(to_f64)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }

    #[test]
    fn entropies_match_full_table_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let inst = DmInstance::random(&mut rng, 2);
            let (d, ch) = (&inst.distribution, &inst.channel);
            let t = dm_inner_table(d, ch).unwrap();
            // G for the full cell-a mask: H(Y_a | Q) - H(Y_a | X_a, U_b0, Q)
            let h = |f: &dyn Fn(&[usize]) -> Vec<usize>| oracle_entropy(d, ch, f);
            let g = h(&|v| vec![v[0], v[7]]) - h(&|v| vec![v[0]]) - h(&|v| vec![v[0], v[2], v[3], v[7]])
                + h(&|v| vec![v[0], v[2], v[3]]);
            let full = m(Cell::A, (1 << d.a.users) - 1);
            assert!((t.get(SetFn::G, full).unwrap() - g).abs() < 1e-12);
            // B for cell b, user b0 only: I(X_b0; Y_b | X_b\b0, U_a0, Q)
            let xb0 = |v: &[usize]| v[4] % d.b.x_alphabet;
            let xbr = |v: &[usize]| v[4] / d.b.x_alphabet;
            let b = h(&|v| vec![v[0], v[1], xbr(v), xb0(v)]) + h(&|v| vec![v[0], v[1], xbr(v), v[8]])
                - h(&|v| vec![v[0], v[1], xbr(v), xb0(v), v[8]])
                - h(&|v| vec![v[0], v[1], xbr(v)]);
            assert!((t.get(SetFn::B, m(Cell::B, 1)).unwrap() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tables_respect_the_chain_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let inst = DmInstance::random(&mut rng, 2);
            let (d, ch) = (&inst.distribution, &inst.channel);
            for t in [dm_inner_table(d, ch).unwrap(), sd_outer_table(d, ch).unwrap()] {
                assert!(t.chain_rule_violations_within(1e-12).is_empty());
                assert!(t.monotonicity_violations_within(1e-12).is_empty());
                assert!(t.entries().iter().all(|(_, _, &v)| v > -1e-12));
            }
            assert!(inclusion_chain_violations(d, ch, 1e-12).unwrap().is_empty());
        }
    }

    #[test]
    fn genie_has_the_interference_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let inst = DmInstance::random(&mut rng, 2);
            for (ht, hs) in genie_entropies(&inst.distribution, &inst.channel).unwrap() {
                assert!(close(ht, hs));
            }
        }
    }

    #[test]
    fn deterministic_interference_needs_no_shift() {
        let det = |m: usize, s: usize| {
            (0..m)
                .map(|x| (0..s).map(|v| int((v == x % s) as i64)).collect())
                .collect()
        };
        let ch = SdChannel::modular_additive([1, 2], [2, 3], [det(2, 2), det(3, 2)]).unwrap();
        let d = DmDistribution::new(
            vec![one()],
            CellLaw::uniform(1, 2).unwrap(),
            CellLaw::uniform(2, 3).unwrap(),
        )
        .unwrap();
        let (sa, sb) = sd_gap_shift(&d, &ch).unwrap();
        assert!(close(sa, 0.0) && close(sb, 0.0));
        assert!(verify_gap_shift_containment(&d, &ch).unwrap());
    }

    #[test]
    fn binary_symmetric_interference_shift() {
        // S_a = X_a0 xor N with N ~ Bern(1/4): I(X_a0; S_a | T_a) by hand.
        let bsc = vec![vec![rat(3, 4), rat(1, 4)], vec![rat(1, 4), rat(3, 4)]];
        let quiet = vec![vec![one()], vec![one()]];
        let ch = SdChannel::modular_additive([1, 1], [2, 2], [bsc, quiet]).unwrap();
        let d = DmDistribution::new(
            vec![one()],
            CellLaw::uniform(1, 2).unwrap(),
            CellLaw::uniform(1, 2).unwrap(),
        )
        .unwrap();
        let h2 = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        // S and T are two looks at X through BSC(1/4): S xor T ~ Bern(3/8).
        let expected = h2(0.375) - h2(0.25);
        let (on_ra, on_rb) = sd_gap_shift(&d, &ch).unwrap();
        assert!(close(on_ra, 0.0));
        assert!(close(on_rb, expected));
    }

    #[test]
    fn unclamped_shift_lands_inside_row_by_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let inst = DmInstance::random(&mut rng, 2);
            let r = gap_shift_report(&inst.distribution, &inst.channel).unwrap();
            assert!(r.worst_row_excess <= 1e-9, "{}", r.worst_row_excess);
            assert!(r.chain_rule_ok);
        }
    }

    #[test]
    fn invertibility_is_enforced() {
        let quiet = vec![vec![one()], vec![one()]];
        let mut ch = SdChannel::modular_additive([1, 1], [2, 2], [quiet.clone(), quiet]).unwrap();
        ch.a.s_law = vec![vec![rat(1, 2), rat(1, 2)]; 2];
        ch.b.output = vec![vec![0, 0], vec![1, 1]];
        assert!(matches!(ch.validate(), Err(Error::InvalidChannel(_))));
        let bad = vec![vec![rat(1, 3); 3]; 2];
        assert!(SdChannel::modular_additive([1, 1], [2, 2], [bad, vec![vec![one()]; 2]]).is_err());
    }

    #[test]
    fn alphabet_limit() {
        let quiet = vec![vec![one()]; 3];
        let ch = SdChannel::modular_additive([8, 8], [3, 3], [quiet.clone(), quiet]).unwrap();
        let d = DmDistribution::new(
            vec![one()],
            CellLaw::uniform(8, 3).unwrap(),
            CellLaw::uniform(8, 3).unwrap(),
        )
        .unwrap();
        assert!(matches!(dm_inner_table(&d, &ch), Err(Error::AlphabetTooLarge { .. })));
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = DmInstance::random(&mut rng, 2);
        assert_eq!(DmInstance::from_json(&inst.to_json()).unwrap(), inst);
        let mut broken = inst.clone();
        broken.distribution.q[0] += rat(1, 7);
        assert!(DmInstance::from_json(&broken.to_json()).is_err());
    }
}
