//! Exact-arithmetic toolkit for low-distortion embeddings of Hamming-cube
//! segments into tree-space norms.
//!
//! The crate models finite subsets of the positive integers under the
//! symmetric-difference metric ([`hamming`]), finitely supported integer
//! vectors on countably branching trees with the sup-of-branch-sums norm
//! ([`treespace`]), the three embedding families that carry cube segments
//! into those trees ([`embeddings`]), Cantor normal form ordinals with the
//! Cantor-Bendixson derivation ([`ordinals`]), and an auditor that measures
//! realized distortion exactly and produces packing-style refutation
//! certificates ([`audit`]).
//!
//! Everything is integer or rational arithmetic end to end: distances are
//! integers, norms of embedded differences are integers, and distortion
//! ratios are normalized rationals. There are no floating-point tolerances
//! anywhere.
//!
//! The [`suite`] module bundles the repository's verification checks; it
//! backs both the `verify` CLI subcommand and the acceptance test target.

pub mod audit;
pub mod embeddings;
pub mod error;
pub mod hamming;
pub mod ordinals;
pub mod rational;
pub mod suite;
pub mod treespace;

pub use error::{Error, Result};
