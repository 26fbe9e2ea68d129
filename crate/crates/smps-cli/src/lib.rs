//! CSV front end for the [`smps`] library.
//!
//! Every command writes a comment header (lines starting with `#`) holding
//! the crate version and full parameter set, then comma-separated rows.
//! Output depends only on the arguments and the seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod grid;
pub mod verify;

pub use commands::{ising, mc, phase_sweep, spectrum, truncate, McSpec, Quantity, SweepSpec};
pub use grid::{Grid, GridError};
