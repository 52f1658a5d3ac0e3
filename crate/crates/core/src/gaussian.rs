//! Gaussian channel: closed-form inner and outer tables and their gap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::rational::{rationalize, to_f64, Rational};
use crate::region::{build_generic_region, SetFn, SetFunctionTable};
use crate::subsets::{check_user_count, Cell, SubsetMask};

/// Unit-noise Gaussian channel in linear SNR/INR units.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianChannel {
    /// `snr[i][j] = P_ij |h_ij,i|^2`.
    pub snr: [Vec<f64>; 2],
    /// `INR_{a0,b}`.
    pub inr_a0_to_b: f64,
    /// `INR_{b0,a}`.
    pub inr_b0_to_a: f64,
}

#[derive(Serialize, Deserialize)]
struct DbFile {
    #[serde(rename = "Ka")]
    ka: usize,
    #[serde(rename = "Kb")]
    kb: usize,
    snr_db: PerCell,
    inr_db: CrossPair,
}

#[derive(Serialize, Deserialize)]
struct GainFile {
    #[serde(rename = "Ka")]
    ka: usize,
    #[serde(rename = "Kb")]
    kb: usize,
    /// Direct gains `|h_ij,i|`.
    gain: PerCell,
    /// Transmit powers `P_ij`.
    power: PerCell,
    /// Cross gains `|h_i0,i'|`.
    cross_gain: CrossPair,
}

#[derive(Serialize, Deserialize)]
struct PerCell {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CrossPair {
    a0_to_b: f64,
    b0_to_a: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ChannelFile {
    Db(DbFile),
    Gain(GainFile),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `log2(1 + x)`.
pub fn cap(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Power-split factor `min(1, 1/inr)`.
///
/// ```
/// use macicmac::gaussian::mu;
/// assert_eq!(mu(4.0).unwrap(), 0.25);
/// assert_eq!(mu(0.5).unwrap(), 1.0);
/// assert!(mu(0.0).is_err());
/// ```
pub fn mu(inr: f64) -> Result<f64> {
    if inr > 0.0 && inr.is_finite() {
        Ok((1.0 / inr).min(1.0))
    } else {
        Err(Error::NonPositiveInr(inr))
    }
}

impl GaussianChannel {
    pub fn new(snr_a: Vec<f64>, snr_b: Vec<f64>, inr_a0_to_b: f64, inr_b0_to_a: f64) -> Result<Self> {
        let ch = GaussianChannel {
            snr: [snr_a, snr_b],
            inr_a0_to_b,
            inr_b0_to_a,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// All SNRs `snr`, both INRs `inr`, `k` users per cell.
    pub fn symmetric(k: usize, snr: f64, inr: f64) -> Result<Self> {
        Self::new(vec![snr; k], vec![snr; k], inr, inr)
    }

    /// Folds gains and powers into SNRs and INRs.
    pub fn from_gains(gain: [&[f64]; 2], power: [&[f64]; 2], cross_gain_a0b: f64, cross_gain_b0a: f64) -> Result<Self> {
        let fold = |g: &[f64], p: &[f64]| -> Result<Vec<f64>> {
            if g.len() != p.len() {
                return Err(Error::DimensionMismatch {
                    expected: g.len(),
                    found: p.len(),
                });
            }
            Ok(g.iter().zip(p).map(|(g, p)| p * g * g).collect())
        };
        let snr_a = fold(gain[0], power[0])?;
        let snr_b = fold(gain[1], power[1])?;
        let p_a0 = power[0].first().copied().unwrap_or(0.0);
        let p_b0 = power[1].first().copied().unwrap_or(0.0);
        Self::new(
            snr_a,
            snr_b,
            p_a0 * cross_gain_a0b * cross_gain_a0b,
            p_b0 * cross_gain_b0a * cross_gain_b0a,
        )
    }

    /// Accepts the dB form or the gain/power form.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(text)?;
        let (ka, kb, ch) = match file {
            ChannelFile::Db(f) => {
                let lin = |v: &[f64]| v.iter().map(|&d| db_to_linear(d)).collect();
                let ch = GaussianChannel {
                    snr: [lin(&f.snr_db.a), lin(&f.snr_db.b)],
                    inr_a0_to_b: db_to_linear(f.inr_db.a0_to_b),
                    inr_b0_to_a: db_to_linear(f.inr_db.b0_to_a),
                };
                (f.ka, f.kb, ch)
            }
            ChannelFile::Gain(f) => {
                let ch = Self::from_gains(
                    [&f.gain.a, &f.gain.b],
                    [&f.power.a, &f.power.b],
                    f.cross_gain.a0_to_b,
                    f.cross_gain.b0_to_a,
                )?;
                (f.ka, f.kb, ch)
            }
        };
        for (declared, cell) in [(ka, Cell::A), (kb, Cell::B)] {
            if declared != ch.k(cell) {
                return Err(Error::DimensionMismatch {
                    expected: declared,
                    found: ch.k(cell),
                });
            }
        }
        ch.validate()?;
        Ok(ch)
    }

    /// dB form.
    pub fn to_json(&self) -> String {
        let db = |v: &[f64]| v.iter().map(|&x| linear_to_db(x)).collect();
        let file = DbFile {
            ka: self.k(Cell::A),
            kb: self.k(Cell::B),
            snr_db: PerCell {
                a: db(&self.snr[0]),
                b: db(&self.snr[1]),
            },
            inr_db: CrossPair {
                a0_to_b: linear_to_db(self.inr_a0_to_b),
                b0_to_a: linear_to_db(self.inr_b0_to_a),
            },
        };
        serde_json::to_string_pretty(&file).expect("channel serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for cell in Cell::BOTH {
            check_user_count(self.k(cell))?;
        }
        for &s in self.snr.iter().flatten() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidChannel(format!("SNR must be positive, got {s}")));
            }
        }
        mu(self.inr_a0_to_b)?;
        mu(self.inr_b0_to_a)?;
        Ok(())
    }

    pub fn k(&self, cell: Cell) -> usize {
        self.snr[cell.index()].len()
    }

    pub fn snr(&self, cell: Cell, user: usize) -> f64 {
        self.snr[cell.index()][user]
    }

    /// `INR_{i0,i'}`.
    pub fn inr_out(&self, cell: Cell) -> f64 {
        match cell {
            Cell::A => self.inr_a0_to_b,
            Cell::B => self.inr_b0_to_a,
        }
    }

    /// `INR_{i'0,i}`.
    pub fn inr_in(&self, cell: Cell) -> f64 {
        self.inr_out(cell.other())
    }

    fn snr_sum(&self, mask: SubsetMask) -> f64 {
        mask.users().map(|j| self.snr(mask.cell, j)).sum()
    }

    /// Draws `K_a, K_b` uniformly from `1..=max_k` and every SNR/INR
    /// uniformly in dB over `[db_lo, db_hi]`.
    pub fn random(rng: &mut impl Rng, max_k: usize, db_lo: f64, db_hi: f64) -> Self {
        let ka = rng.gen_range(1..=max_k);
        let kb = rng.gen_range(1..=max_k);
        let mut draw = || db_to_linear(rng.gen_range(db_lo..=db_hi));
        let snr_a = (0..ka).map(|_| draw()).collect();
        let snr_b = (0..kb).map(|_| draw()).collect();
        let inr_ab = draw();
        let inr_ba = draw();
        GaussianChannel {
            snr: [snr_a, snr_b],
            inr_a0_to_b: inr_ab,
            inr_b0_to_a: inr_ba,
        }
    }
}

/// Inner-bound set functions in bits, before rationalization.
///
/// The private part of `i0` is scaled by `mu_i = min(1, 1/INR_{i0,i'})` so
/// that it reaches receiver `i'` at noise level; the residual interference at
/// receiver `i` is then `mu_{i'} INR_{i'0,i} = min(1, INR_{i'0,i})`.
pub fn inner_table_f64(ch: &GaussianChannel) -> Result<SetFunctionTable<f64>> {
    ch.validate()?;
    SetFunctionTable::try_from_fn(ch.k(Cell::A), ch.k(Cell::B), |f, m| {
        let cell = m.cell;
        let mu_own = mu(ch.inr_out(cell))?;
        let mu_other = mu(ch.inr_in(cell))?;
        let inr = ch.inr_in(cell);
        let denom = 1.0 + mu_other * inr;
        let private = mu_own * ch.snr(cell, 0) + ch.snr_sum(m.without_interferer());
        Ok(match f {
            SetFn::A => cap(private / denom),
            SetFn::B => cap(ch.snr_sum(m) / denom),
            SetFn::E => cap((private + (1.0 - mu_other) * inr) / denom),
            SetFn::G => cap((ch.snr_sum(m) + inr) / denom),
        })
    })
}

/// Outer-bound set functions in bits, before rationalization.
pub fn outer_table_f64(ch: &GaussianChannel) -> Result<SetFunctionTable<f64>> {
    ch.validate()?;
    SetFunctionTable::try_from_fn(ch.k(Cell::A), ch.k(Cell::B), |f, m| {
        let cell = m.cell;
        let inr = ch.inr_in(cell);
        let upsilon = ch.snr_sum(m.without_interferer()) + ch.snr(cell, 0) / (1.0 + ch.inr_out(cell));
        Ok(match f {
            SetFn::A => cap(upsilon),
            SetFn::B => cap(ch.snr_sum(m)),
            SetFn::E => cap(upsilon + inr),
            SetFn::G => cap(ch.snr_sum(m) + inr),
        })
    })
}

pub fn inner_table(ch: &GaussianChannel) -> Result<SetFunctionTable> {
    Ok(inner_table_f64(ch)?.map(|&v| rationalize(v)))
}

pub fn outer_table(ch: &GaussianChannel) -> Result<SetFunctionTable> {
    Ok(outer_table_f64(ch)?.map(|&v| rationalize(v)))
}

/// Tolerances and limits for [`gap_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapOptions {
    /// Slack on the per-mask bounds `0 <= gap <= 1`.
    pub mask_tol: f64,
    /// Slack on membership of shifted vertices.
    pub vertex_tol: f64,
    /// The vertex check runs only when `K_a + K_b` is at most this.
    pub vertex_max_dim: usize,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            mask_tol: 1e-9,
            vertex_tol: 1e-6,
            vertex_max_dim: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskGap {
    pub function: SetFn,
    pub cell: Cell,
    pub mask: u32,
    /// Outer minus inner, bits.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Largest outer-minus-inner value per function, in `A, B, E, G` order.
    pub max_gap: [f64; 4],
    /// Smallest outer-minus-inner value per function.
    pub min_gap: [f64; 4],
    /// Masks whose gap leaves `[0, 1]`.
    pub mask_violations: Vec<MaskGap>,
    /// Largest `rhs_out - rhs_in - sum(coeffs)` over matched rows; `<= 0` passes.
    pub worst_row_excess: f64,
    /// Whether the outer region contains the inner one (exact, after rationalization).
    pub outer_contains_inner: bool,
    /// `None` when the dimension exceeds [`GapOptions::vertex_max_dim`].
    pub vertex_shift_ok: Option<bool>,
    /// First outer vertex whose 1-bit-per-user shift left the inner region.
    pub vertex_witness: Option<Vec<f64>>,
}

impl GapReport {
    pub fn masks_ok(&self) -> bool {
        self.mask_violations.is_empty()
    }

    pub fn masks_upper_ok(&self, tol: f64) -> bool {
        self.max_gap.iter().all(|&g| g <= 1.0 + tol)
    }

    pub fn all_ok(&self) -> bool {
        self.masks_ok()
            && self.worst_row_excess <= 0.0
            && self.outer_contains_inner
            && self.vertex_shift_ok != Some(false)
    }
}

/// Checks the three gap properties between the inner and outer regions.
pub fn gap_report(ch: &GaussianChannel, opts: &GapOptions) -> Result<GapReport> {
    let inner_f = inner_table_f64(ch)?;
    let outer_f = outer_table_f64(ch)?;
    let mut max_gap = [f64::NEG_INFINITY; 4];
    let mut min_gap = [f64::INFINITY; 4];
    let mut mask_violations = Vec::new();
    for (i, f) in SetFn::ALL.into_iter().enumerate() {
        for cell in Cell::BOTH {
            for m in inner_f.masks(cell, f) {
                let gap = outer_f.get(f, m)? - inner_f.get(f, m)?;
                max_gap[i] = max_gap[i].max(gap);
                min_gap[i] = min_gap[i].min(gap);
                if gap < -opts.mask_tol || gap > 1.0 + opts.mask_tol {
                    mask_violations.push(MaskGap {
                        function: f,
                        cell,
                        mask: m.bits,
                        gap,
                    });
                }
            }
        }
    }

    let inner = build_generic_region(&inner_f.map(|&v| rationalize(v)))?;
    let outer = build_generic_region(&outer_f.map(|&v| rationalize(v)))?;
    let worst_row_excess = outer
        .inequalities
        .iter()
        .zip(&inner.inequalities)
        .map(|(o, i)| to_f64(&(&o.rhs - &i.rhs - o.coeff_sum())))
        .fold(f64::NEG_INFINITY, f64::max);
    let outer_contains_inner = inner.first_unimplied(&outer)?.is_none();

    let (vertex_shift_ok, vertex_witness) = if inner.dim <= opts.vertex_max_dim {
        match shifted_vertex_outside(&outer, &inner, opts.vertex_tol)? {
            None => (Some(true), None),
            Some(v) => (Some(false), Some(v)),
        }
    } else {
        (None, None)
    };

    Ok(GapReport {
        max_gap,
        min_gap,
        mask_violations,
        worst_row_excess,
        outer_contains_inner,
        vertex_shift_ok,
        vertex_witness,
    })
}

/// First vertex `v` of `outer` with `max(v - 1, 0)` outside `inner`.
pub fn shifted_vertex_outside(outer: &Polytope, inner: &Polytope, tol: f64) -> Result<Option<Vec<f64>>> {
    for v in outer.vertices()? {
        let shifted: Vec<f64> = v.0.iter().map(|x| (to_f64(x) - 1.0).max(0.0)).collect();
        if !inner.contains_within(&shifted, tol)? {
            return Ok(Some(v.to_f64()));
        }
    }
    Ok(None)
}

/// Rationalized copy of `t`.
pub fn rationalized(t: &SetFunctionTable<f64>) -> SetFunctionTable<Rational> {
    t.map(|&v| rationalize(v))
}
