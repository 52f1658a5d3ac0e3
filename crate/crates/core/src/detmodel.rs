//! Linear deterministic model of the symmetric network.
//!
//! Every direct link carries `q` levels and each cross link `n_cross`.
//! A transmitter sends a binary vector whose level 0 is the most
//! significant; a link of strength `m` delivers the top `m` levels to the
//! bottom `m` levels of a receiver that has `max(q, n_cross)` levels, and
//! contributions add over GF(2). Levels that fall below the floor are lost.

use num_traits::{One, Signed, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gdof::dsym_region;
use crate::rational::{int, rat, serde_fraction, Rational};
use crate::subsets::Cell;

/// Receiver words are stored as `u128` bitsets.
pub const MAX_LEVELS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetChannel {
    pub q: usize,
    pub n_direct: usize,
    pub n_cross: usize,
}

impl DetChannel {
    pub fn new(q: usize, n_cross: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::PreconditionViolated("q must be positive".into()));
        }
        let ch = DetChannel {
            q,
            n_direct: q,
            n_cross,
        };
        if ch.rx_levels() > MAX_LEVELS {
            return Err(Error::PreconditionViolated(format!(
                "{} receiver levels exceed the limit of {MAX_LEVELS}",
                ch.rx_levels()
            )));
        }
        Ok(ch)
    }

    /// Channel with `n_cross = alpha q`.
    pub fn with_alpha(q: usize, alpha: &Rational) -> Result<Self> {
        let n = alpha * int(q as i64);
        if !n.is_integer() || n.is_negative() {
            return Err(Error::Divisibility {
                q,
                reason: format!("alpha q = {n} is not a nonnegative integer"),
            });
        }
        DetChannel::new(q, n.to_integer().to_usize().unwrap_or(usize::MAX))
    }

    pub fn alpha(&self) -> Rational {
        rat(self.n_cross as i64, self.q as i64)
    }

    pub fn rx_levels(&self) -> usize {
        self.q.max(self.n_cross)
    }

    /// Receiver level reached by transmit level `l` over a link of strength `m`.
    fn land(&self, m: usize, l: usize) -> Option<usize> {
        (l < m).then(|| self.rx_levels() - m + l)
    }
}

/// Occupied transmit levels, `levels[cell][user]`, one payload bit per
/// level per channel use. User 0 of each cell is the interferer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetAllocation {
    #[serde(rename = "K")]
    pub k: usize,
    pub channel: DetChannel,
    pub levels: [Vec<Vec<usize>>; 2],
}

impl DetAllocation {
    pub fn new(channel: DetChannel, levels: [Vec<Vec<usize>>; 2]) -> Result<Self> {
        let k = levels[0].len();
        if k == 0 || levels[1].len() != k {
            return Err(Error::PreconditionViolated(
                "both cells need the same positive number of users".into(),
            ));
        }
        for cell in &levels {
            for user in cell {
                let mut sorted = user.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != user.len() {
                    return Err(Error::PreconditionViolated("repeated level in one transmitter".into()));
                }
                if let Some(&l) = sorted.iter().find(|&&l| l >= channel.q) {
                    return Err(Error::PreconditionViolated(format!(
                        "level {l} is not visible over a direct link with {} levels",
                        channel.q
                    )));
                }
            }
        }
        Ok(DetAllocation { k, channel, levels })
    }

    pub fn users(&self, cell: Cell) -> &[Vec<usize>] {
        &self.levels[cell.index()]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("allocation serializes")
    }

    /// Bits a receiver sees: every occupied level of its own cell and of the
    /// other cell's interferer, with the receiver level it lands on.
    fn columns(&self, rx: Cell) -> Vec<Column> {
        let ch = &self.channel;
        let mut cols = Vec::new();
        for (j, lv) in self.users(rx).iter().enumerate() {
            for (slot, &l) in lv.iter().enumerate() {
                cols.push(Column {
                    cell: rx,
                    user: j,
                    slot,
                    rx_level: ch.land(ch.n_direct, l),
                });
            }
        }
        for (slot, &l) in self.users(rx.other())[0].iter().enumerate() {
            cols.push(Column {
                cell: rx.other(),
                user: 0,
                slot,
                rx_level: ch.land(ch.n_cross, l),
            });
        }
        cols
    }
}

#[derive(Clone, Copy, Debug)]
struct Column {
    cell: Cell,
    user: usize,
    slot: usize,
    rx_level: Option<usize>,
}

/// Per-user GDoF `|levels| / q`.
pub fn achieved_gdof(alloc: &DetAllocation) -> [Vec<Rational>; 2] {
    let q = alloc.channel.q as i64;
    Cell::BOTH.map(|c| alloc.users(c).iter().map(|lv| rat(lv.len() as i64, q)).collect())
}

/// Allocation realizing the symmetric GDoF of `K` users per cell at
/// interference level `alpha`.
///
/// * `alpha <= 1 - 1/K`: the interferer takes the bottom `q/K` levels,
///   which fall below the other receiver's floor; the rest share the top.
/// * `alpha = 1`: `K + 1` blocks of `q/(K+1)` levels; the two interferers
///   take different blocks and every receiver decodes both.
/// * `alpha >= 1 + 1/K`: the interferer takes the top `q/K` levels, which
///   land above the other receiver's own signals.
pub fn build_allocation(k: usize, alpha: &Rational, q: usize) -> Result<DetAllocation> {
    if k == 0 {
        return Err(Error::EmptyCell);
    }
    let ki = int(k as i64);
    let unsupported = || Error::UnsupportedAlpha {
        k,
        alpha: alpha.to_string(),
    };
    if alpha.is_negative() {
        return Err(unsupported());
    }
    let ch = DetChannel::with_alpha(q, alpha)?;
    let blocks = |count: usize| -> Result<usize> {
        if !q.is_multiple_of(count) {
            return Err(Error::Divisibility {
                q,
                reason: format!("needs {count} equal blocks"),
            });
        }
        Ok(q / count)
    };
    let range = |from: usize, len: usize| (from..from + len).collect::<Vec<_>>();
    let weak_edge = Rational::one() - Rational::one() / &ki;
    let strong_edge = Rational::one() + Rational::one() / &ki;

    let cell = if *alpha <= weak_edge {
        let w = blocks(k)?;
        let mut users = vec![range(q - w, w)];
        users.extend((1..k).map(|j| range((j - 1) * w, w)));
        [users.clone(), users]
    } else if alpha.is_one() {
        let w = blocks(k + 1)?;
        let rest: Vec<Vec<usize>> = (1..k).map(|j| range((j + 1) * w, w)).collect();
        let mut a = vec![range(0, w)];
        a.extend(rest.iter().cloned());
        let mut b = vec![range(w, w)];
        b.extend(rest);
        [a, b]
    } else if *alpha >= strong_edge {
        let w = blocks(k)?;
        let users: Vec<Vec<usize>> = (0..k).map(|j| range(j * w, w)).collect();
        [users.clone(), users]
    } else {
        return Err(unsupported());
    };
    DetAllocation::new(ch, cell)
}

/// Linear decoder of one receiver: for each wanted bit, the receiver
/// levels whose XOR recovers it.
#[derive(Clone, Debug)]
pub struct Decoder {
    pub receiver: Cell,
    wanted: Vec<(usize, usize, u128)>,
}

impl Decoder {
    /// Gaussian elimination over GF(2); fails when some own-cell bit is
    /// not determined by the received word.
    pub fn new(alloc: &DetAllocation, receiver: Cell) -> Result<Self> {
        let cols = alloc.columns(receiver);
        if cols.len() > MAX_LEVELS {
            return Err(Error::PreconditionViolated(format!(
                "{} occupied levels exceed the limit of {MAX_LEVELS}",
                cols.len()
            )));
        }
        // rows[r] = (columns present at level r, levels combined so far)
        let mut rows: Vec<(u128, u128)> = (0..alloc.channel.rx_levels()).map(|r| (0, 1u128 << r)).collect();
        for (c, col) in cols.iter().enumerate() {
            if let Some(r) = col.rx_level {
                rows[r].0 |= 1 << c;
            }
        }
        let mut pivot_of = vec![None; cols.len()];
        let mut next = 0;
        for c in 0..cols.len() {
            let Some(p) = (next..rows.len()).find(|&r| rows[r].0 >> c & 1 == 1) else {
                continue;
            };
            rows.swap(next, p);
            for r in 0..rows.len() {
                if r != next && rows[r].0 >> c & 1 == 1 {
                    rows[r].0 ^= rows[next].0;
                    rows[r].1 ^= rows[next].1;
                }
            }
            pivot_of[c] = Some(next);
            next += 1;
        }
        let mut wanted = Vec::new();
        let mut bad = Vec::new();
        for (c, col) in cols.iter().enumerate() {
            if col.cell != receiver {
                continue;
            }
            match pivot_of[c].map(|r| rows[r]) {
                Some((mask, combo)) if mask == 1 << c => wanted.push((col.user, col.slot, combo)),
                _ => bad.extend(col.rx_level),
            }
        }
        if !bad.is_empty() {
            bad.sort_unstable();
            bad.dedup();
            return Err(Error::DecodingFailure { receiver, levels: bad });
        }
        Ok(Decoder { receiver, wanted })
    }

    /// Own-cell payload recovered from a received word.
    pub fn decode(&self, k: usize, slots: &[usize], y: u128) -> Vec<Vec<bool>> {
        let mut out: Vec<Vec<bool>> = (0..k).map(|j| vec![false; slots[j]]).collect();
        for &(user, slot, combo) in &self.wanted {
            out[user][slot] = (y & combo).count_ones() % 2 == 1;
        }
        out
    }
}

/// Payload bits `[cell][user][slot]`, one per occupied level.
pub type Payload = [Vec<Vec<bool>>; 2];

/// Received words at both receivers.
pub fn transmit(alloc: &DetAllocation, payload: &Payload) -> [u128; 2] {
    Cell::BOTH.map(|rx| {
        alloc.columns(rx).iter().fold(0u128, |y, col| {
            let bit = payload[col.cell.index()][col.user][col.slot];
            match col.rx_level {
                Some(r) if bit => y ^ (1 << r),
                _ => y,
            }
        })
    })
}

/// One channel use: transmit and decode at both receivers.
pub fn simulate_use(alloc: &DetAllocation, payload: &Payload) -> Result<Payload> {
    let y = transmit(alloc, payload);
    let mut out: Payload = [Vec::new(), Vec::new()];
    for rx in Cell::BOTH {
        let dec = Decoder::new(alloc, rx)?;
        out[rx.index()] = dec.decode(alloc.k, &slots(alloc, rx), y[rx.index()]);
    }
    Ok(out)
}

fn slots(alloc: &DetAllocation, c: Cell) -> Vec<usize> {
    alloc.users(c).iter().map(Vec::len).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub uses: usize,
    pub bits_sent: usize,
    pub bit_errors: usize,
}

/// `uses` channel uses with uniform random payloads.
pub fn simulate(alloc: &DetAllocation, rng: &mut impl Rng, uses: usize) -> Result<SimReport> {
    let decoders = [Decoder::new(alloc, Cell::A)?, Decoder::new(alloc, Cell::B)?];
    let sl = [slots(alloc, Cell::A), slots(alloc, Cell::B)];
    let mut report = SimReport {
        uses,
        bits_sent: 0,
        bit_errors: 0,
    };
    for _ in 0..uses {
        let payload: Payload = Cell::BOTH.map(|c| {
            sl[c.index()]
                .iter()
                .map(|&n| (0..n).map(|_| rng.gen()).collect())
                .collect()
        });
        let y = transmit(alloc, &payload);
        for rx in Cell::BOTH {
            let i = rx.index();
            let got = decoders[i].decode(alloc.k, &sl[i], y[i]);
            for (sent, recv) in payload[i].iter().flatten().zip(got.iter().flatten()) {
                report.bits_sent += 1;
                report.bit_errors += usize::from(sent != recv);
            }
        }
    }
    Ok(report)
}

/// Time sharing between the interferers, which run a two-user
/// interference-channel code, and the user-1 transmitters, which run alone.
#[derive(Clone, Debug, Serialize)]
pub struct TimeShareSchedule {
    #[serde(with = "serde_fraction")]
    pub alpha: Rational,
    /// Allocation of the interference-channel phase (one user per cell).
    pub ic_phase: DetAllocation,
    /// Symmetric GDoF of the interference-channel phase.
    #[serde(with = "serde_fraction")]
    pub d_ic: Rational,
    #[serde(with = "serde_fraction")]
    pub fraction_ic: Rational,
    #[serde(with = "serde_fraction")]
    pub fraction_solo: Rational,
    /// Per-user GDoF of `i0` and `i1`; equal by construction.
    #[serde(with = "serde_fraction")]
    pub per_user: Rational,
    #[serde(with = "serde_fraction")]
    pub cell_sum: Rational,
}

/// Even split between `i0` and `i1`: the phases get `1/(d+1)` and
/// `d/(d+1)` of the time.
pub fn timeshare_schedule(alpha: &Rational, q: usize) -> Result<TimeShareSchedule> {
    let ic_phase = build_allocation(1, alpha, q)?;
    let d_ic = achieved_gdof(&ic_phase)[0][0].clone();
    if d_ic != dsym_region(1, alpha)? {
        return Err(Error::UnsupportedAlpha {
            k: 1,
            alpha: alpha.to_string(),
        });
    }
    let fraction_ic = Rational::one() / (&d_ic + int(1));
    let fraction_solo = Rational::one() - &fraction_ic;
    let per_user = &fraction_ic * &d_ic;
    debug_assert_eq!(per_user, fraction_solo);
    let cell_sum = int(2) * &per_user;
    Ok(TimeShareSchedule {
        alpha: alpha.clone(),
        ic_phase,
        d_ic,
        fraction_ic,
        fraction_solo,
        per_user,
        cell_sum,
    })
}

impl TimeShareSchedule {
    /// Simulates `uses` uses of the interference-channel phase; the solo
    /// phase is a noiseless point-to-point link.
    pub fn simulate(&self, rng: &mut impl Rng, uses: usize) -> Result<SimReport> {
        simulate(&self.ic_phase, rng, uses)
    }
}

pub fn is_zero_payload(p: &Payload) -> bool {
    p.iter().flatten().flatten().all(|b| !b)
}
