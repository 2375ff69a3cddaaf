//! Finite-volume model of natural convection and conjugate heat transfer in
//! the sealed cavity of a layered MEMS thermal gyroscope.

// `!(x > 0.0)` is the NaN-rejecting form used by every validator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod materials;
pub mod mms;
pub mod numerics;
pub mod output;
pub mod solver;
pub mod sweep;
pub mod analysis;
pub mod benchmark;
