//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by quantizer design, compression and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Constellation size outside the supported set.
    #[error("unsupported constellation size {0} (expected 16, 64, 256, 1024 or 4096)")]
    UnsupportedSize(usize),

    /// A piecewise-linear LLR segment with zero slope was asked to invert a
    /// nonzero LLR range. Cannot occur for valid Gray-mapped square QAM.
    #[error("degenerate zero-slope LLR segment")]
    DegenerateSegment,

    /// The fading quadrature did not stabilize below the cell tolerance.
    #[error("fading quadrature not converged at max order {max_order} (worst cell delta {worst_delta:.3e})")]
    QuadratureNotConverged { max_order: usize, worst_delta: f64 },

    /// A bit or word budget that no allocation / substitution can satisfy.
    #[error("infeasible budget: need at least {needed} bits, budget is {budget}")]
    InfeasibleBudget { needed: usize, budget: usize },

    /// Exhaustive allocation requested on an instance beyond the enumeration bound.
    #[error("instance too large for exhaustive search ({0})")]
    TooLarge(String),

    /// A compressed word failed to decode within its bit budget.
    #[error("malformed compressed word at bit position {0}")]
    MalformedWord(usize),

    /// Interleaver geometry does not match the number of words.
    #[error("shape mismatch: {rows} x {cols} grid cannot hold {words} words")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        words: usize,
    },

    /// A GMI target that the design never attains on the scanned C/N grid.
    #[error("target GMI {target:.4} not reachable on the scanned C/N grid (max {max_reached:.4})")]
    TargetUnreachable { target: f64, max_reached: f64 },

    /// Malformed or unsupported serialized artifact.
    #[error("artifact error: {0}")]
    Artifact(String),
}
