//! Layout-aware VCO metamodels and the flows built on them: sampling and
//! fitting polynomial response surfaces against an expensive parasitic
//! oracle, behavioural charge-pump PLL simulation with swappable VCO views,
//! differential-evolution sizing, and a run-time cost model.

// `!(a < b)` is used on purpose so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costmodel;
pub mod metamodel;
pub mod optimize;
pub mod oracle;
pub mod pllsim;
