use core::fmt;

/// Errors raised by algebra operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A scalar was constructed from NaN or `+inf`, which are outside the
    /// carrier set.
    InvalidValue { reason: &'static str },
    /// Entrywise operation on matrices of different shapes.
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Product with incompatible inner dimensions.
    InnerDimMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Power or other square-only operation on a non-square matrix.
    NotSquare { rows: usize, cols: usize },
    /// Entry buffer length does not match `rows * cols`.
    BadLength { expected: usize, got: usize },
    /// Operands built for different orders (diagonal vs. support).
    OrderMismatch { left: usize, right: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidValue { reason } => write!(f, "invalid scalar: {reason}"),
            Self::ShapeMismatch { op, left, right } => write!(
                f,
                "{op}: shape mismatch {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Self::InnerDimMismatch { left, right } => write!(
                f,
                "product: inner dimension mismatch {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Self::NotSquare { rows, cols } => {
                write!(f, "operation requires a square matrix, got {rows}x{cols}")
            }
            Self::BadLength { expected, got } => {
                write!(f, "entry buffer has {got} elements, expected {expected}")
            }
            Self::OrderMismatch { left, right } => {
                write!(f, "operands have different orders: {left} vs {right}")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
