use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Scalar, Value};

/// Diagonal matrix: arbitrary scalars on the diagonal, `ε` elsewhere by
/// construction. Stores only the diagonal.
#[derive(Clone, PartialEq)]
pub struct Diagonal<T> {
    diag: Vec<Scalar<T>>,
}

impl<T: Value> core::fmt::Debug for Diagonal<T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Diagonal(")?;
        for (i, d) in self.diag.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

impl<T: Value> Diagonal<T> {
    pub fn new(diag: Vec<Scalar<T>>) -> Self {
        Diagonal { diag }
    }

    /// Builds from raw values, rejecting NaN and `+inf`.
    pub fn from_values(values: &[T]) -> Result<Self> {
        let diag = values
            .iter()
            .map(|v| Scalar::new(*v))
            .collect::<Result<_>>()?;
        Ok(Diagonal { diag })
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize) -> Scalar<T> {
        self.diag[i]
    }

    pub fn entries(&self) -> &[Scalar<T>] {
        &self.diag
    }

    /// Every diagonal entry finite and `≥ 0`.
    pub fn is_nonnegative(&self) -> bool {
        self.diag
            .iter()
            .all(|d| d.is_finite() && d.value() >= T::zero())
    }

    /// Entrywise max of two diagonals.
    pub fn oplus(&self, rhs: &Self) -> Result<Self> {
        if self.order() != rhs.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: rhs.order(),
            });
        }
        Ok(Diagonal {
            diag: self
                .diag
                .iter()
                .zip(&rhs.diag)
                .map(|(a, b)| a.oplus(*b))
                .collect(),
        })
    }

    /// Largest diagonal entry.
    pub fn norm(&self) -> Scalar<T> {
        self.diag
            .iter()
            .copied()
            .fold(Scalar::eps(), Scalar::oplus)
    }

    pub fn to_matrix(&self) -> Matrix<T> {
        let n = self.order();
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else {
                Scalar::eps()
            }
        })
    }
}

/// Square `{0, ε}`-matrix: entry `(i, j)` is `0` exactly when the pair is
/// selected (for a network, when arc `i → j` exists).
///
/// The class is closed under `⊗` and transposition. For a support matrix
/// of an acyclic graph with longest path length `p`, every power above `p`
/// is the null matrix.
#[derive(Clone, PartialEq)]
pub struct Support<T> {
    mat: Matrix<T>,
}

impl<T: Value> core::fmt::Debug for Support<T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Support{:?}", self.mat)
    }
}

impl<T: Value> Support<T> {
    /// Validates that every entry is exactly `0` or `ε`.
    pub fn from_matrix(mat: Matrix<T>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        for e in mat.entries() {
            if !(e.is_eps() || e.value() == T::zero()) {
                return Err(Error::InvalidValue {
                    reason: "support entries must be 0 or ε",
                });
            }
        }
        Ok(Support { mat })
    }

    /// Builds from an arc list over `0..order`.
    pub fn from_arcs(order: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut mat = Matrix::null(order, order);
        for &(i, j) in arcs {
            if i >= order || j >= order {
                return Err(Error::OrderMismatch {
                    left: i.max(j),
                    right: order,
                });
            }
            mat.set(i, j, Scalar::zero());
        }
        Ok(Support { mat })
    }

    pub fn order(&self) -> usize {
        self.mat.rows()
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        !self.mat.get(i, j).is_eps()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.mat
    }

    pub fn transpose(&self) -> Self {
        Support {
            mat: self.mat.transpose(),
        }
    }

    pub fn power(&self, q: usize) -> Matrix<T> {
        // powers of a square matrix cannot fail
        self.mat.power(q).expect("support matrices are square")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_expands_with_eps_off_diagonal() {
        let d = Diagonal::from_values(&[1.0, 2.0]).unwrap();
        let m = d.to_matrix();
        assert_eq!(m.get(0, 0).value(), 1.0);
        assert_eq!(m.get(1, 1).value(), 2.0);
        assert!(m.get(0, 1).is_eps());
        assert!(m.get(1, 0).is_eps());
        assert_eq!(d.norm().value(), 2.0);
    }

    #[test]
    fn nonnegativity_requires_finite_entries() {
        let ok = Diagonal::from_values(&[0.0, 2.0]).unwrap();
        assert!(ok.is_nonnegative());
        let neg = Diagonal::from_values(&[0.0, -0.5]).unwrap();
        assert!(!neg.is_nonnegative());
        let with_eps = Diagonal::new(vec![Scalar::<f64>::eps(), Scalar::zero()]);
        assert!(!with_eps.is_nonnegative());
    }

    #[test]
    fn support_rejects_other_values() {
        let bad = Matrix::from_options(&[vec![Some(1.0), None], vec![None, None]]).unwrap();
        assert!(Support::from_matrix(bad).is_err());
        let good = Matrix::from_options(&[vec![Some(0.0), None], vec![None, None]]).unwrap();
        assert!(Support::from_matrix(good).is_ok());
    }

    #[test]
    fn tandem_support_powers_vanish() {
        let g = Support::<f64>::from_arcs(2, &[(0, 1)]).unwrap();
        assert!(g.has_arc(0, 1));
        assert!(!g.has_arc(1, 0));
        assert!(!g.power(1).is_null());
        assert!(g.power(2).is_null());
    }

    #[test]
    fn diamond_support_powers_vanish_above_two() {
        let g = Support::<f64>::from_arcs(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let g2 = g.power(2);
        assert_eq!(g2.get(0, 3).value(), 0.0);
        assert!(!g2.is_null());
        assert!(g.power(3).is_null());
    }
}
