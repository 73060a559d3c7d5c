//! JSON representations for matrices in reports: row-major nested arrays
//! with `null` for `ε`, since JSON has no literal for `-inf`.

use maxplus::Matrix64;
use serde::ser::{Serialize, Serializer};

/// Nested-array form of a matrix, `None` marking `ε`.
pub fn matrix_rows(m: &Matrix64) -> Vec<Vec<Option<f64>>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j).to_option()).collect())
        .collect()
}

/// `serde(serialize_with)` adapter for [`Matrix64`] fields.
pub fn serialize_matrix<S: Serializer>(m: &Matrix64, s: S) -> Result<S::Ok, S::Error> {
    matrix_rows(m).serialize(s)
}
