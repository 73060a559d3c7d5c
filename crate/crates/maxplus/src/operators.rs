//! Products of alternating diagonal and support matrices.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::structured::{Diagonal, Support};
use crate::scalar::Value;

fn check_orders<T: Value>(d: &Diagonal<T>, g: &Support<T>) -> Result<()> {
    if d.order() != g.order() {
        return Err(Error::OrderMismatch {
            left: d.order(),
            right: g.order(),
        });
    }
    Ok(())
}

/// Alternating diagonal/support product `D ⊗ (G ⊗ D)^reps`.
///
/// Entry `(i, j)` is the best weight over directed paths `i → j` of exactly
/// `reps` arcs, counting the diagonal value at every visited node. With
/// `reps = 0` this is `D` itself, and it is null whenever `G^reps` is.
pub fn alternating_product<T: Value>(
    d: &Diagonal<T>,
    g: &Support<T>,
    reps: usize,
) -> Result<Matrix<T>> {
    check_orders(d, g)?;
    let dm = d.to_matrix();
    let mut acc = dm.clone();
    for _ in 0..reps {
        acc = acc.otimes(g.matrix())?.otimes(&dm)?;
    }
    Ok(acc)
}

/// Support-sandwiched diagonal `G^left ⊗ D ⊗ G^right`.
///
/// Entry `(i, j)` is the best diagonal value over intermediate nodes `w`
/// with a `left`-arc path `i → w` and a `right`-arc path `w → j`. With
/// `left = right = 0` this is `D` itself.
pub fn sandwiched_diagonal<T: Value>(
    g: &Support<T>,
    d: &Diagonal<T>,
    left: usize,
    right: usize,
) -> Result<Matrix<T>> {
    check_orders(d, g)?;
    g.power(left)
        .otimes(&d.to_matrix())?
        .otimes(&g.power(right))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tandem() -> Support<f64> {
        Support::from_arcs(2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn zero_reps_returns_the_diagonal() {
        let d = Diagonal::from_values(&[1.0, 2.0]).unwrap();
        let got = alternating_product(&d, &tandem(), 0).unwrap();
        assert_eq!(got, d.to_matrix());
    }

    #[test]
    fn one_rep_on_transposed_tandem() {
        // D ⊗ (G^T ⊗ D) with D = diag(1,2): single finite entry
        // (2,1) = τ2 + τ1 = 3.
        let d = Diagonal::from_values(&[1.0, 2.0]).unwrap();
        let got = alternating_product(&d, &tandem().transpose(), 1).unwrap();
        let expect =
            Matrix::from_options(&[vec![None, None], vec![Some(3.0), None]]).unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn vanishes_with_the_support_power() {
        let d = Diagonal::from_values(&[1.0, 2.0]).unwrap();
        assert!(alternating_product(&d, &tandem(), 2).unwrap().is_null());
        assert!(alternating_product(&d, &tandem(), 5).unwrap().is_null());
    }

    #[test]
    fn zero_hops_is_the_diagonal() {
        let d = Diagonal::from_values(&[1.0, 2.0]).unwrap();
        let got = sandwiched_diagonal(&tandem(), &d, 0, 0).unwrap();
        assert_eq!(got, d.to_matrix());
    }

    #[test]
    fn one_left_hop_picks_the_target_service() {
        // G ⊗ D for the tandem: entry (1,2) = τ2 = 2, all else ε.
        let d = Diagonal::from_values(&[1.0, 2.0]).unwrap();
        let got = sandwiched_diagonal(&tandem(), &d, 1, 0).unwrap();
        let expect =
            Matrix::from_options(&[vec![None, Some(2.0)], vec![None, None]]).unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn vanishes_when_hops_exceed_longest_path() {
        let d = Diagonal::from_values(&[1.0, 2.0]).unwrap();
        assert!(sandwiched_diagonal(&tandem(), &d, 1, 1).unwrap().is_null());
        assert!(sandwiched_diagonal(&tandem(), &d, 2, 0).unwrap().is_null());
    }

    #[test]
    fn order_mismatch_is_rejected() {
        let d = Diagonal::from_values(&[1.0, 2.0, 3.0]).unwrap();
        assert!(alternating_product(&d, &tandem(), 1).is_err());
        assert!(sandwiched_diagonal(&tandem(), &d, 0, 0).is_err());
    }
}
