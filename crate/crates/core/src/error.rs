use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside [0, 1)")]
    Domain { what: &'static str, value: f64 },

    #[error("dyadic level {0} is out of range (expected 0..={max})", max = crate::dyadic::Level::MAX)]
    InvalidLevel(u32),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// `cell` is the 1-based dyadic interval index.
    #[error("cell {cell} is undefined (its defining integral did not converge)")]
    UndefinedCell { cell: usize },

    #[error("no level n <= {n_max} satisfies max|p_n|/2^n < 1/2 (smallest value seen {best})")]
    ThresholdNotReached { n_max: u32, best: f64 },

    #[error("recursion divisor {divisor} at cell {cell} is not above 1/4 in magnitude; the level is below n*")]
    SmallDivisor { cell: usize, divisor: f64 },

    #[error("linear system is numerically singular (|det| = {det:e}, scale {scale:e})")]
    Singular { det: f64, scale: f64 },

    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(&'static str),
}
