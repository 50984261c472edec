//! Finite-scale workbench for Fraïssé amalgamation classes, the theory of
//! equivalence relations on n-tuples, one-sorted interpretations of
//! many-sorted structures, and tree-property witnesses.

pub mod cli;
pub mod error;
pub mod fraisse;
pub mod interpret;
pub mod logic;
pub mod report;
pub mod structure;
pub mod te;
pub mod trees;

pub use error::{Error, Result};

use rand::SeedableRng;

/// The generator behind every seeded operation.
pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
