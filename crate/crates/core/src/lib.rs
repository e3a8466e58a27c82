//! Numerics for parabolic BMO on space-time lattices.
//!
//! The crate is `no_std` (with `alloc`). It covers parabolic rectangles and
//! their past/future parts, sampled fields with double-double prefix sums,
//! the forward/backward parabolic maximal operators, PBMO-type seminorm
//! estimators, the approximate parabolic dyadic grid, forward-in-time
//! Calderón–Zygmund decompositions, chain constructions, an empirical
//! John–Nirenberg scanner, the one-dimensional one-sided toolkit and a
//! corpus of closed-form test functions.
//!
//! Enable the `std` feature for std-backed float math, `parallel` for
//! rayon-backed evaluation (results are schedule independent) and `serde`
//! for serializable value types.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > y)` is used on purpose so NaN inputs take the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod chains;
pub mod corpus;
pub mod czdecomp;
pub mod dyadic;
mod error;
pub mod field;
pub mod geometry;
pub mod jn;
pub mod maximal;
pub mod numeric;
pub mod oneside;
pub mod seminorms;

pub use error::{Error, Result};
pub use field::{AveragePart, BoxAverageReport, GridSpec, SampledField};
pub use geometry::{Box, Cylinder, Exponent, ParabolicRectangle, ShapeParams};
pub use maximal::{Direction, Ladder, MaximalConfig, SplitCutoff};
pub use seminorms::{PbmoDirection, RectangleFamily, SeminormEstimate, VariantSide};
pub use chains::{build_chain, chain_oscillation, Chain, ChainSpec};
pub use czdecomp::{decompose, CzConfig, CzDecomposition};
pub use dyadic::{build_grid, DyadicBoxId, DyadicGrid};
pub use jn::{jn_scan, JnReport};
pub use oneside::{interval_chain, os_bmo_norm, os_cz, os_double_norm, os_maximal, IntervalFamily, Signal};
pub use corpus::{evaluate_entry, list_entries, CorpusEntry};

/// Minimum number of lattice planes a box must cover on every axis.
pub const MIN_SAMPLES_PER_AXIS: usize = 2;
