//! GMI-optimal LLR quantization and fixed-budget lossy compression for
//! BICM receivers with long symbol interleavers.
//!
//! The crate designs per-bit uniform quantizers for min-distance LLRs of
//! Gray-mapped square QAM, allocates quantizer bits under a total budget,
//! Huffman-codes the quantizer indices and greedily compresses each
//! symbol's LLR word to a fixed bit budget, and verifies the designs via
//! closed-form statistics, Monte Carlo simulation and memory accounting.

pub mod artifact;
pub mod compress;
pub mod constellation;
pub mod design;
pub mod error;
pub mod memory;
pub mod numerics;
pub mod sim;
pub mod stats;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
