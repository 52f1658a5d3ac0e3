//! Exact rate-region algebra for two interfering multiple-access cells.
//!
//! Each cell `i` in `{a, b}` has `K_i` transmitters and one receiver. Only
//! transmitter `i0` of each cell reaches the other cell's receiver. Every
//! region in this crate is parameterized by a [`SetFunctionTable`] and built
//! by [`build_generic_region`]:
//!
//! - [`gaussian`]: finite-SNR inner and outer tables and their one-bit gap.
//! - [`gdof`]: the GDoF region and symmetric GDoF, exactly.
//! - [`dmeval`]: entropy-based tables for discrete memoryless channels.
//! - [`fme`]: Fourier-Motzkin projection of the rate-split system.
//! - [`detmodel`]: linear deterministic constructions and their simulation.
//!
//! Polytope algebra is exact ([`Rational`]); real-valued inputs are rounded
//! to the `2^-40` grid on entry.
//!
//! ```
//! use macicmac::gdof::{dsym_closed_form, dsym_region};
//! use macicmac::rational::rat;
//! assert_eq!(dsym_region(2, &rat(1, 1)).unwrap(), rat(1, 3));
//! assert_eq!(dsym_closed_form(2, &rat(1, 1)).unwrap(), rat(1, 3));
//! ```

pub mod detmodel;
pub mod dmeval;
pub mod error;
pub mod fme;
pub mod gaussian;
pub mod gdof;
pub mod lp;
pub mod polytope;
pub mod rational;
pub mod region;
pub mod subsets;

pub use error::{Error, Result};
pub use polytope::{LinearInequality, Polytope, RatePoint};
pub use rational::Rational;
pub use region::{build_generic_region, symmetric_max, SetFn, SetFunctionTable};
pub use subsets::{enum_subsets, Cell, SubsetKind, SubsetMask};
