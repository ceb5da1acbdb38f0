//! Error type shared across the simulator.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building rings, plans, fabrics, or
/// cost reports.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Ring parameters violate a structural requirement (degree not a power
    /// of two, out-of-range bit width, and so on).
    InvalidRing(String),
    /// Modulus is even or does not fit the declared bit width.
    InvalidModulus { q: u64, k: u32 },
    /// Parameters are structurally valid but unsupported by the requested
    /// operation (for example no NTT root exists for this modulus).
    UnsupportedParameters(String),
    /// A matrix, vector, or tile has the wrong dimensions for the operation.
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// A value exceeds the documented admissible range of an operation.
    RangeExceeded { value: u128, bound: u128 },
    /// Array budget must be at least one.
    InvalidBudget(usize),
    /// Operand does not belong to the ring the fabric was built for.
    RingMismatch(String),
    /// Batch simulation needs at least one operation.
    EmptyBatch,
    /// Cost configuration file is malformed.
    CostConfig { line: usize, message: String },
    /// A component entry is missing from the cost configuration.
    MissingCost(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidRing(msg) => write!(f, "invalid ring parameters: {msg}"),
            Error::InvalidModulus { q, k } => {
                write!(f, "invalid modulus {q} for bit width {k} (must be odd and in (2^(k-1), 2^k))")
            }
            Error::UnsupportedParameters(msg) => write!(f, "unsupported parameters: {msg}"),
            Error::ShapeMismatch {
                context,
                expected,
                got,
            } => write!(f, "shape mismatch in {context}: expected {expected}, got {got}"),
            Error::RangeExceeded { value, bound } => {
                write!(f, "value {value} exceeds admissible range (< {bound})")
            }
            Error::InvalidBudget(b) => write!(f, "array budget must be >= 1, got {b}"),
            Error::RingMismatch(msg) => write!(f, "operand does not match fabric ring: {msg}"),
            Error::EmptyBatch => write!(f, "batch must contain at least one operation"),
            Error::CostConfig { line, message } => {
                write!(f, "cost config error on line {line}: {message}")
            }
            Error::MissingCost(key) => write!(f, "cost config is missing entry {key}"),
        }
    }
}

impl std::error::Error for Error {}
