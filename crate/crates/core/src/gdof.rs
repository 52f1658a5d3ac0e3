//! Generalized degrees of freedom.
//!
//! With `SNR_ij = rho^alpha_ij` and `INR = rho^alpha`, the set functions are
//! piecewise-linear in the exponents and everything here is exact.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::rational::{int, one, positive_part, rat, serde_fraction, zero, Rational};
use crate::region::{build_generic_region, symmetric_max_of_table, SetFn, SetFunctionTable};
use crate::subsets::{check_user_count, Cell, SubsetMask};

/// Channel exponents of a GDoF instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdofSpec {
    /// `alpha_direct[i][j]`: exponent of user `j` of cell `i` at its own receiver.
    #[serde(with = "per_cell")]
    pub alpha_direct: [Vec<Rational>; 2],
    /// Exponent of `a0` at receiver `b`.
    #[serde(with = "serde_fraction")]
    pub alpha_cross_a0b: Rational,
    /// Exponent of `b0` at receiver `a`.
    #[serde(with = "serde_fraction")]
    pub alpha_cross_b0a: Rational,
}

mod per_cell {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::rational::{serde_fraction_vec, Rational};

    #[derive(Serialize, Deserialize)]
    struct Wire {
        #[serde(with = "serde_fraction_vec")]
        a: Vec<Rational>,
        #[serde(with = "serde_fraction_vec")]
        b: Vec<Rational>,
    }

    pub fn serialize<S: Serializer>(v: &[Vec<Rational>; 2], s: S) -> Result<S::Ok, S::Error> {
        Wire {
            a: v[0].clone(),
            b: v[1].clone(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Vec<Rational>; 2], D::Error> {
        let w = Wire::deserialize(d)?;
        Ok([w.a, w.b])
    }
}

impl GdofSpec {
    /// Symmetric instance: `K` users per cell, direct exponents 1, cross `alpha`.
    pub fn symmetric(k: usize, alpha: &Rational) -> Self {
        GdofSpec {
            alpha_direct: [vec![one(); k], vec![one(); k]],
            alpha_cross_a0b: alpha.clone(),
            alpha_cross_b0a: alpha.clone(),
        }
    }

    pub fn k(&self, cell: Cell) -> usize {
        self.alpha_direct[cell.index()].len()
    }

    /// `alpha_{i0,i'}`: how strongly cell `i`'s interferer reaches the other receiver.
    pub fn cross_out(&self, cell: Cell) -> &Rational {
        match cell {
            Cell::A => &self.alpha_cross_a0b,
            Cell::B => &self.alpha_cross_b0a,
        }
    }

    /// `alpha_{i'0,i}`: interference arriving at receiver `i`.
    pub fn cross_in(&self, cell: Cell) -> &Rational {
        self.cross_out(cell.other())
    }

    pub fn validate(&self) -> Result<()> {
        for cell in Cell::BOTH {
            check_user_count(self.k(cell))?;
        }
        let all = self
            .alpha_direct
            .iter()
            .flatten()
            .chain([&self.alpha_cross_a0b, &self.alpha_cross_b0a]);
        for a in all {
            if a.is_negative() {
                return Err(Error::InvalidChannel(format!("negative exponent {a}")));
            }
        }
        Ok(())
    }

    fn direct_max(&self, mask: SubsetMask) -> Rational {
        mask.users()
            .map(|j| self.alpha_direct[mask.cell.index()][j].clone())
            .max()
            .unwrap_or_else(zero)
    }
}

/// The GDoF set functions `a, b, e, g`, exactly. An empty inner maximum is 0.
///
/// ```
/// use macicmac::gdof::{gdof_table, GdofSpec};
/// use macicmac::rational::rat;
/// use macicmac::{Cell, SetFn, SubsetMask};
/// let t = gdof_table(&GdofSpec::symmetric(2, &rat(1, 2))).unwrap();
/// assert_eq!(*t.get(SetFn::A, SubsetMask::new(Cell::A, 0b01)).unwrap(), rat(1, 2));
/// ```
pub fn gdof_table(s: &GdofSpec) -> Result<SetFunctionTable> {
    s.validate()?;
    SetFunctionTable::from_fn(s.k(Cell::A), s.k(Cell::B), |f, m| {
        let cell = m.cell;
        let private = positive_part(&(&s.alpha_direct[cell.index()][0] - s.cross_out(cell)));
        let incoming = s.cross_in(cell).clone();
        match f {
            SetFn::A => s.direct_max(m.without_interferer()).max(private),
            SetFn::B => s.direct_max(m),
            SetFn::E => s.direct_max(m.without_interferer()).max(private).max(incoming),
            SetFn::G => s.direct_max(m).max(incoming),
        }
    })
}

pub fn gdof_region(s: &GdofSpec) -> Result<Polytope> {
    build_generic_region(&gdof_table(s)?)
}

/// Per-user symmetric GDoF from the piecewise closed form, `K >= 2`.
///
/// The shoulders carry `1/K` per user (one GDoF per cell), which keeps the
/// curve continuous at `1 - 1/K` and `1 + 1/K`.
///
/// ```
/// use macicmac::gdof::dsym_closed_form;
/// use macicmac::rational::{int, rat};
/// assert_eq!(dsym_closed_form(3, &rat(9, 10)).unwrap(), rat(11, 40));
/// assert_eq!(dsym_closed_form(2, &int(1)).unwrap(), rat(1, 3));
/// assert!(dsym_closed_form(1, &int(1)).is_err());
/// ```
pub fn dsym_closed_form(k: usize, alpha: &Rational) -> Result<Rational> {
    if k < 2 {
        return Err(Error::PreconditionViolated(format!(
            "closed-form symmetric GDoF needs K >= 2, got {k}"
        )));
    }
    check_alpha(alpha)?;
    let kk = int(k as i64);
    let inv_k = rat(1, k as i64);
    let k1 = &kk + int(1);
    let lo = one() - &inv_k;
    let hi = one() + &inv_k;
    Ok(if *alpha < lo {
        inv_k
    } else if *alpha < one() {
        (int(2) - alpha) / k1
    } else if *alpha < hi {
        alpha / k1
    } else {
        inv_k
    })
}

/// `K * dsym_closed_form(K, alpha)`.
pub fn sum_dsym_closed_form(k: usize, alpha: &Rational) -> Result<Rational> {
    Ok(dsym_closed_form(k, alpha)? * int(k as i64))
}

/// Symmetric GDoF read off the GDoF region of the symmetric `K`-user channel.
pub fn dsym_region(k: usize, alpha: &Rational) -> Result<Rational> {
    check_alpha(alpha)?;
    symmetric_max_of_table(&gdof_table(&GdofSpec::symmetric(k, alpha))?)
}

/// Cell sum GDoF when `i0` and `i1` time-share a two-user-IC code:
/// `2 d / (d + 1)` with `d = dsym_region(1, alpha)`.
pub fn timeshare_sum_gdof(alpha: &Rational) -> Result<Rational> {
    let d = dsym_region(1, alpha)?;
    Ok(int(2) * &d / (d + int(1)))
}

fn check_alpha(alpha: &Rational) -> Result<()> {
    if alpha.is_negative() {
        Err(Error::PreconditionViolated(format!("alpha must be >= 0, got {alpha}")))
    } else {
        Ok(())
    }
}

/// `0, step, 2 step, ..., <= max`.
pub fn alpha_grid(max: &Rational, step: &Rational) -> Result<Vec<Rational>> {
    if !step.is_positive() || max.is_negative() {
        return Err(Error::PreconditionViolated(format!(
            "grid needs step > 0 and max >= 0, got step {step}, max {max}"
        )));
    }
    let mut out = Vec::new();
    let mut a = zero();
    while a <= *max {
        out.push(a.clone());
        a += step;
    }
    Ok(out)
}

pub fn default_grid() -> Vec<Rational> {
    alpha_grid(&int(3), &rat(1, 100)).expect("valid default grid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub k: usize,
    #[serde(with = "serde_fraction")]
    pub alpha: Rational,
    #[serde(with = "serde_fraction")]
    pub dsym: Rational,
    #[serde(with = "serde_fraction")]
    pub sum_dsym: Rational,
}

/// `dsym_region` over every `(K, alpha)` pair, `K` outermost.
pub fn dsym_curve(ks: &[usize], grid: &[Rational]) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::with_capacity(ks.len() * grid.len());
    for &k in ks {
        for a in grid {
            let d = dsym_region(k, a)?;
            rows.push(CurveRow {
                k,
                alpha: a.clone(),
                sum_dsym: &d * int(k as i64),
                dsym: d,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeshareRow {
    #[serde(with = "serde_fraction")]
    pub alpha: Rational,
    /// Two-user IC symmetric GDoF `d(1, alpha)`.
    #[serde(with = "serde_fraction")]
    pub d1: Rational,
    #[serde(with = "serde_fraction")]
    pub timeshare_sum: Rational,
    /// `2 * dsym_region(2, alpha)`.
    #[serde(with = "serde_fraction")]
    pub superposition_sum: Rational,
}

impl TimeshareRow {
    pub fn is_tight(&self) -> bool {
        self.timeshare_sum == self.superposition_sum
    }
}

pub fn timeshare_curve(grid: &[Rational]) -> Result<Vec<TimeshareRow>> {
    grid.iter()
        .map(|a| {
            let d1 = dsym_region(1, a)?;
            Ok(TimeshareRow {
                alpha: a.clone(),
                timeshare_sum: int(2) * &d1 / (&d1 + int(1)),
                d1,
                superposition_sum: int(2) * dsym_region(2, a)?,
            })
        })
        .collect()
}

/// Per-user exponents as a rate vector `(d_a, d_b)` with common value `d`.
pub fn diagonal(spec: &GdofSpec, d: &Rational) -> Vec<Rational> {
    vec![d.clone(); spec.k(Cell::A) + spec.k(Cell::B)]
}

/// Whether every exponent of `spec` is zero except the direct links.
pub fn is_interference_free(spec: &GdofSpec) -> bool {
    spec.alpha_cross_a0b.is_zero() && spec.alpha_cross_b0a.is_zero()
}
