//! Compiles every Rust listing of the book in `book/src` as a doc-test, so the
//! guide breaks the build when the API drifts.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/regions.md")]
pub mod regions {}
#[doc = include_str!("../../../book/src/polytopes.md")]
pub mod polytopes {}
#[doc = include_str!("../../../book/src/gaussian.md")]
pub mod gaussian {}
#[doc = include_str!("../../../book/src/gdof.md")]
pub mod gdof {}
#[doc = include_str!("../../../book/src/projection.md")]
pub mod projection {}
#[doc = include_str!("../../../book/src/discrete.md")]
pub mod discrete {}
#[doc = include_str!("../../../book/src/deterministic.md")]
pub mod deterministic {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
