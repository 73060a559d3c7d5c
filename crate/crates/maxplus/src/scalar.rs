use core::fmt;

use num_traits::Float;

use crate::error::{Error, Result};

/// Floating-point entry type for the algebra (`f32` or `f64`).
pub trait Value: Float + fmt::Debug + fmt::Display + Send + Sync + 'static {}

impl<T> Value for T where T: Float + fmt::Debug + fmt::Display + Send + Sync + 'static {}

/// An element of `R ∪ {ε}`, `ε = -inf`: either a finite value or the null
/// element of the semiring.
///
/// `ε` is neutral for `⊕` (max) and absorbing for `⊗` (ordinary addition).
/// NaN and `+inf` are rejected at construction, so no operation here can
/// produce NaN: `-inf` only ever meets finite values or `-inf` under `+`.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct Scalar<T>(T);

impl<T: Value> Scalar<T> {
    /// The null element `ε`.
    pub fn eps() -> Self {
        Scalar(T::neg_infinity())
    }

    /// The `⊗`-identity (ordinary zero).
    pub fn zero() -> Self {
        Scalar(T::zero())
    }

    /// Admits finite values and `-inf`; rejects NaN and `+inf`.
    pub fn new(value: T) -> Result<Self> {
        if value.is_nan() {
            Err(Error::InvalidValue { reason: "NaN" })
        } else if value == T::infinity() {
            Err(Error::InvalidValue { reason: "+inf" })
        } else {
            Ok(Scalar(value))
        }
    }

    /// Admits finite values only.
    pub fn finite(value: T) -> Result<Self> {
        if value.is_finite() {
            Ok(Scalar(value))
        } else {
            Err(Error::InvalidValue {
                reason: "value is not finite",
            })
        }
    }

    pub fn is_eps(self) -> bool {
        self.0 == T::neg_infinity()
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Raw value; `ε` comes back as `-inf`.
    pub fn value(self) -> T {
        self.0
    }

    /// `Some(value)` when finite, `None` for `ε`.
    pub fn to_option(self) -> Option<T> {
        if self.is_eps() {
            None
        } else {
            Some(self.0)
        }
    }

    /// `x ⊕ y = max(x, y)`.
    pub fn oplus(self, rhs: Self) -> Self {
        Scalar(self.0.max(rhs.0))
    }

    /// `x ⊗ y = x + y`, with `ε` absorbing.
    pub fn otimes(self, rhs: Self) -> Self {
        Scalar(self.0 + rhs.0)
    }

    /// The natural order with `ε` as bottom.
    pub fn leq(self, rhs: Self) -> bool {
        self.0 <= rhs.0
    }

    /// Order comparison with absolute slack on the right-hand side. `ε`
    /// entries compare exactly (`ε ≤ x` always, `x ≤ ε` only for `x = ε`).
    pub fn leq_within(self, rhs: Self, tol: T) -> bool {
        if self.is_eps() {
            return true;
        }
        if rhs.is_eps() {
            return false;
        }
        self.0 <= rhs.0 + tol
    }

    /// Equality up to absolute tolerance on finite values; `ε` matches
    /// only `ε`.
    pub fn eq_within(self, rhs: Self, tol: T) -> bool {
        match (self.is_eps(), rhs.is_eps()) {
            (true, true) => true,
            (false, false) => (self.0 - rhs.0).abs() <= tol,
            _ => false,
        }
    }
}

impl<T: Value> fmt::Debug for Scalar<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<T: Value> fmt::Display for Scalar<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_eps() {
            write!(f, "ε")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_positive_infinity() {
        assert!(Scalar::new(f64::NAN).is_err());
        assert!(Scalar::new(f64::INFINITY).is_err());
        assert!(Scalar::new(f64::NEG_INFINITY).is_ok());
        assert!(Scalar::finite(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn eps_is_oplus_neutral_and_otimes_absorbing() {
        let x = Scalar::new(3.5f64).unwrap();
        let e = Scalar::eps();
        assert_eq!(e.oplus(x), x);
        assert_eq!(x.oplus(e), x);
        assert!(e.otimes(x).is_eps());
        assert!(x.otimes(e).is_eps());
        assert!(e.otimes(e).is_eps());
    }

    #[test]
    fn otimes_adds_finite_values() {
        let x = Scalar::new(1.5f64).unwrap();
        let y = Scalar::new(2.0f64).unwrap();
        assert_eq!(x.otimes(y).value(), 3.5);
    }

    #[test]
    fn eps_is_bottom_of_the_order() {
        let e: Scalar<f64> = Scalar::eps();
        let x = Scalar::new(-1e300).unwrap();
        assert!(e.leq(x));
        assert!(!x.leq(e));
        assert!(e.leq(e));
    }

    #[test]
    fn tolerant_comparisons_treat_eps_exactly() {
        let e: Scalar<f64> = Scalar::eps();
        let x = Scalar::new(0.0f64).unwrap();
        let y = Scalar::new(1e-12f64).unwrap();
        assert!(x.eq_within(y, 1e-9));
        assert!(!x.eq_within(e, 1e-9));
        assert!(e.eq_within(e, 1e-9));
        assert!(y.leq_within(x, 1e-9));
        assert!(!x.leq_within(e, 1e-9));
    }
}
