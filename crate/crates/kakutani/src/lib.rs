//! Combinatorial machinery for Kakutani-equivalence constructions.
//!
//! The crate computes the f̄ match metric exactly, generates Feldman patterns,
//! builds tree-indexed construction sequences with involution-group actions,
//! samples the shaded shift space, audits stationary codes and implements the
//! circular-system functor. Every module is usable on its own; the `fbar`
//! binary wires them into a command line tool.

pub mod error;
pub mod trees;
pub mod fbar;
pub mod feldman;
pub mod io;
pub mod involutions;
pub mod circular;
pub mod construction;
pub mod shiftspace;
pub mod codes;
pub mod cli;

pub use error::{Error, Result};
