//! Dense matrix algebra over the max-plus (tropical) semiring
//! `(R ∪ {ε}, ⊕, ⊗)` with `ε = -inf`, `x ⊕ y = max(x, y)` and
//! `x ⊗ y = x + y`, extended with ordinary entrywise matrix addition `+`
//! as an external operation.
//!
//! The core types are generic over the entry type (any [`Value`], i.e.
//! `f32` or `f64`); the `*64` aliases cover the common case. `ε` is the
//! `⊕`-neutral and `⊗`-absorbing element; for the external `+` the
//! absorbing convention `ε + x = ε` is used (see
//! [`Matrix::madd_eps_neutral`] for the one place the neutral reading is
//! needed).
//!
//! Entries are plain IEEE floats with NaN and `+inf` rejected at
//! construction, so `-inf` cleanly encodes `ε` through ordinary float
//! arithmetic. All values are immutable after construction and all
//! operations are pure.

mod error;
mod matrix;
mod operators;
mod scalar;
mod structured;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use operators::{alternating_product, sandwiched_diagonal};
pub use scalar::{Scalar, Value};
pub use structured::{Diagonal, Support};

/// Default absolute tolerance for comparisons between algebraically equal
/// expressions evaluated along different floating-point routes.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

pub type Scalar64 = Scalar<f64>;
pub type Matrix64 = Matrix<f64>;
pub type Diagonal64 = Diagonal<f64>;
pub type Support64 = Support<f64>;

pub type Scalar32 = Scalar<f32>;
pub type Matrix32 = Matrix<f32>;
pub type Diagonal32 = Diagonal<f32>;
pub type Support32 = Support<f32>;
