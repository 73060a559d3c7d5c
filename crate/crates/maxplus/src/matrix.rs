use core::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Value};

/// Dense matrix over `R ∪ {ε}` in row-major order.
///
/// Three binary operations live side by side:
/// * `⊕` — entrywise max ([`Matrix::oplus`]),
/// * `⊗` — max-plus product ([`Matrix::otimes`]),
/// * `+` — ordinary entrywise addition as an external operation
///   ([`Matrix::madd`]), with `ε` absorbing.
///
/// Values are immutable in all operations (each returns a fresh matrix),
/// so matrices can be shared freely across threads.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Scalar<T>>,
}

impl<T: Value> Matrix<T> {
    /// Builds a matrix from a row-major entry buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Scalar<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadLength {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix by evaluating `f(i, j)` at every position.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from rows of `Option` values, `None` meaning `ε`. Handy in
    /// tests and when decoding interchange formats.
    pub fn from_options(rows: &[Vec<Option<T>>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::BadLength {
                    expected: c,
                    got: row.len(),
                });
            }
            for v in row {
                data.push(match v {
                    Some(x) => Scalar::new(*x)?,
                    None => Scalar::eps(),
                });
            }
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    /// The null matrix `𝓔` (all `ε`): `⊕`-neutral and `⊗`-absorbing.
    pub fn null(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::eps(); rows * cols],
        }
    }

    /// The `⊗`-identity `E`: zero diagonal, `ε` off the diagonal.
    pub fn identity(order: usize) -> Self {
        Self::from_fn(order, order, |i, j| {
            if i == j {
                Scalar::zero()
            } else {
                Scalar::eps()
            }
        })
    }

    /// All entries finite zero: the identity of the external `+`.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    /// Column vector.
    pub fn column(entries: Vec<Scalar<T>>) -> Self {
        let rows = entries.len();
        Matrix {
            rows,
            cols: 1,
            data: entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar<T> {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Scalar<T>] {
        &self.data
    }

    fn check_same_shape(&self, rhs: &Self, op: &'static str) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(())
    }

    /// Entrywise max. Commutative, associative, idempotent; `𝓔` is neutral.
    pub fn oplus(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs, "oplus")?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.oplus(*b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Max-plus product: entry `(i,j) = max_k (a_ik + b_kj)` with `ε`
    /// absorbing. `E` is the identity, `𝓔` absorbs.
    pub fn otimes(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::InnerDimMismatch {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (n, m, inner) = (self.rows, rhs.cols, self.cols);
        let mut data = vec![Scalar::eps(); n * m];
        for i in 0..n {
            for k in 0..inner {
                let a = self.data[i * inner + k];
                if a.is_eps() {
                    continue;
                }
                let row = &rhs.data[k * m..(k + 1) * m];
                let out = &mut data[i * m..(i + 1) * m];
                for (o, b) in out.iter_mut().zip(row) {
                    *o = o.oplus(a.otimes(*b));
                }
            }
        }
        Ok(Matrix {
            rows: n,
            cols: m,
            data,
        })
    }

    /// Ordinary entrywise addition as an external operation, with `ε`
    /// absorbing: `ε + x = x + ε = ε`.
    pub fn madd(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs, "madd")?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.otimes(*b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Entrywise addition where `ε` acts as the neutral element instead of
    /// absorbing: `ε + x = x`, `x + ε = x`, `ε + ε = ε`.
    ///
    /// The external `+` of this algebra does not fix a convention for `ε`
    /// operands on its own; [`Matrix::madd`] takes the absorbing reading,
    /// which keeps the diagonal-conjugation identity exact. Sum bounds that
    /// combine terms of different sparsity patterns need this neutral
    /// reading, where an `ε` entry contributes nothing.
    pub fn madd_eps_neutral(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs, "madd_eps_neutral")?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| match (a.is_eps(), b.is_eps()) {
                (true, _) => *b,
                (_, true) => *a,
                _ => a.otimes(*b),
            })
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// `m`-fold `⊗`-power; the zeroth power is `E`.
    pub fn power(&self, m: usize) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut acc = Matrix::identity(self.rows);
        for _ in 0..m {
            acc = acc.otimes(self)?;
        }
        Ok(acc)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Entrywise order: `a_ij ≤ b_ij` everywhere, `ε` below everything.
    pub fn leq(&self, rhs: &Self) -> Result<bool> {
        self.check_same_shape(rhs, "leq")?;
        Ok(self.data.iter().zip(&rhs.data).all(|(a, b)| a.leq(*b)))
    }

    /// Entrywise order with absolute slack on the right-hand side.
    pub fn leq_within(&self, rhs: &Self, tol: T) -> Result<bool> {
        self.check_same_shape(rhs, "leq_within")?;
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .all(|(a, b)| a.leq_within(*b, tol)))
    }

    /// Entrywise equality up to absolute tolerance; `ε` matches only `ε`.
    pub fn eq_within(&self, rhs: &Self, tol: T) -> Result<bool> {
        self.check_same_shape(rhs, "eq_within")?;
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .all(|(a, b)| a.eq_within(*b, tol)))
    }

    /// First coordinate where the entrywise order (with slack) fails.
    pub fn first_violation(&self, rhs: &Self, tol: T) -> Result<Option<(usize, usize)>> {
        self.check_same_shape(rhs, "first_violation")?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self.get(i, j).leq_within(rhs.get(i, j), tol) {
                    return Ok(Some((i, j)));
                }
            }
        }
        Ok(None)
    }

    /// Maximum entry; `ε` for the all-`ε` matrix.
    pub fn norm(&self) -> Scalar<T> {
        self.data
            .iter()
            .copied()
            .fold(Scalar::eps(), Scalar::oplus)
    }

    /// Adds `c` to every entry (`ε` entries stay `ε`; `c = ε` blanks the
    /// matrix).
    pub fn scale(&self, c: Scalar<T>) -> Self {
        let data = self.data.iter().map(|a| a.otimes(c)).collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// True when no entry is `ε`.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// True when every entry is `ε`.
    pub fn is_null(&self) -> bool {
        self.data.iter().all(|a| a.is_eps())
    }
}

impl<T: Value> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
