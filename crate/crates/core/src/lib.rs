//! Numerical constructions on surfaces with cone points: rotationally
//! symmetric gradient Ricci solitons found by shooting, the normalized Ricci
//! flow and the linear heat equation on truncated cone surfaces, and weighted
//! Hölder norms measured on dyadic annuli.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coords;
pub mod error;
pub mod flow;
pub mod heat;
pub mod holder;
pub mod soliton;
pub mod surface;

pub use error::{Error, Result};
