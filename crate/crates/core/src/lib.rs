//! Bit-accurate model of an approximate radix-16 maximally redundant
//! signed-digit (MRSD) multiplier.
//!
//! The crate covers the whole flow: operand encoding ([`mrsd`]), polarity
//! typed partial-product generation ([`ppgen`]), the exact and approximate
//! full-adder cell library ([`cells`]), branch-and-bound assignment of
//! approximate cells to reduction columns ([`dse`]), materialization and
//! evaluation of the Wallace reduction tree ([`tree`]), and accuracy
//! measurement ([`evalkit`]).

pub mod cells;
pub mod cli;
pub mod doc;
pub mod dse;
mod error;
pub mod evalkit;
pub mod logic;
pub mod mrsd;
pub mod ppgen;
pub mod tree;
pub mod units;
pub mod verify;

pub use error::{Error, Result};

/// Widest operand supported by the model.
///
/// Products of 14-digit operands still fit comfortably in `i128`.
pub const MAX_DIGITS: usize = 14;
