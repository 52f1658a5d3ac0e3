//! Cells and user subsets.
//!
//! Users of cell `i` are numbered `0..K_i`; user 0 is the interfering
//! transmitter `i0`. A subset is a bitmask over those users. Upsilon-subsets
//! always contain user 0, Omega-subsets are arbitrary nonempty subsets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of users per cell.
pub const MAX_USERS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    A,
    B,
}

impl Cell {
    pub const BOTH: [Cell; 2] = [Cell::A, Cell::B];

    pub fn other(self) -> Cell {
        match self {
            Cell::A => Cell::B,
            Cell::B => Cell::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Cell::A => 0,
            Cell::B => 1,
        }
    }

    pub fn label(self) -> char {
        match self {
            Cell::A => 'a',
            Cell::B => 'b',
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetKind {
    /// Contains the interfering user `i0`.
    Upsilon,
    /// Any nonempty subset.
    Omega,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetMask {
    pub cell: Cell,
    pub bits: u32,
}

impl SubsetMask {
    pub fn new(cell: Cell, bits: u32) -> Self {
        SubsetMask { cell, bits }
    }

    pub fn contains(&self, user: usize) -> bool {
        self.bits >> user & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_upsilon(&self) -> bool {
        self.contains(0)
    }

    /// The mask with user `i0` removed.
    pub fn without_interferer(&self) -> SubsetMask {
        SubsetMask::new(self.cell, self.bits & !1)
    }

    pub fn users(&self) -> impl Iterator<Item = usize> + '_ {
        (0..32).filter(move |&j| self.contains(j))
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.users().map(|j| format!("{}{}", self.cell.label(), j)).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

pub(crate) fn check_user_count(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::EmptyCell);
    }
    if k > MAX_USERS {
        return Err(Error::TooManyUsers {
            users: k,
            max: MAX_USERS,
        });
    }
    Ok(())
}

/// All admissible masks of a cell with `k` users, in ascending bit order.
///
/// ```
/// use macicmac::subsets::{enum_subsets, Cell, SubsetKind};
/// let ups: Vec<u32> = enum_subsets(Cell::A, 2, SubsetKind::Upsilon)
///     .unwrap()
///     .iter()
///     .map(|m| m.bits)
///     .collect();
/// assert_eq!(ups, vec![0b01, 0b11]);
/// ```
pub fn enum_subsets(cell: Cell, k: usize, kind: SubsetKind) -> Result<Vec<SubsetMask>> {
    check_user_count(k)?;
    let full = 1u32 << k;
    let masks = match kind {
        SubsetKind::Upsilon => (1..full).step_by(2).collect::<Vec<_>>(),
        SubsetKind::Omega => (1..full).collect(),
    };
    Ok(masks.into_iter().map(|b| SubsetMask::new(cell, b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(cell: Cell, k: usize, kind: SubsetKind) -> Vec<u32> {
        enum_subsets(cell, k, kind)
            .unwrap()
            .into_iter()
            .map(|m| m.bits)
            .collect()
    }

    #[test]
    fn small_cases() {
        assert_eq!(bits(Cell::A, 1, SubsetKind::Upsilon), vec![0b1]);
        assert_eq!(bits(Cell::A, 2, SubsetKind::Upsilon), vec![0b01, 0b11]);
        assert_eq!(bits(Cell::B, 2, SubsetKind::Omega), vec![0b01, 0b10, 0b11]);
    }

    #[test]
    fn counts_match_closed_forms() {
        for k in 1..=6 {
            let ups = enum_subsets(Cell::A, k, SubsetKind::Upsilon).unwrap();
            let oms = enum_subsets(Cell::A, k, SubsetKind::Omega).unwrap();
            assert_eq!(ups.len(), 1 << (k - 1));
            assert_eq!(oms.len(), (1 << k) - 1);
            assert!(ups.iter().all(SubsetMask::is_upsilon));
            assert!(oms.iter().all(|m| !m.is_empty()));
        }
    }

    #[test]
    fn zero_users_rejected() {
        assert!(matches!(
            enum_subsets(Cell::A, 0, SubsetKind::Omega),
            Err(Error::EmptyCell)
        ));
        assert!(enum_subsets(Cell::A, MAX_USERS + 1, SubsetKind::Omega).is_err());
    }

    #[test]
    fn complement_is_an_involution() {
        for c in Cell::BOTH {
            assert_eq!(c.other().other(), c);
            assert_ne!(c.other(), c);
        }
    }

    #[test]
    fn display_lists_users() {
        assert_eq!(SubsetMask::new(Cell::B, 0b101).to_string(), "{b0,b2}");
    }
}
