//! Algebraic laws of the extended max-plus matrix algebra, checked on
//! randomized matrices of orders 1 through 6 with a mix of finite and `ε`
//! entries.

use maxplus::{Matrix, Matrix64, Scalar, Scalar64};
use proptest::prelude::*;

const TOL: f64 = maxplus::DEFAULT_TOLERANCE;

fn scalar_strategy() -> impl Strategy<Value = Scalar64> {
    prop_oneof![
        1 => Just(Scalar::eps()),
        4 => (-50.0f64..50.0).prop_map(|v| Scalar::new(v).unwrap()),
    ]
}

fn square(n: usize) -> impl Strategy<Value = Matrix64> {
    prop::collection::vec(scalar_strategy(), n * n)
        .prop_map(move |data| Matrix::from_vec(n, n, data).unwrap())
}

/// Three same-order square matrices, order 1..=6.
fn triple() -> impl Strategy<Value = (Matrix64, Matrix64, Matrix64)> {
    (1usize..=6).prop_flat_map(|n| (square(n), square(n), square(n)))
}

/// Four same-order square matrices, order 1..=6.
fn quad() -> impl Strategy<Value = (Matrix64, Matrix64, Matrix64, Matrix64)> {
    (1usize..=6).prop_flat_map(|n| (square(n), square(n), square(n), square(n)))
}

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(1000)
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn oplus_commutative_associative_idempotent((a, b, c) in triple()) {
        prop_assert_eq!(a.oplus(&b).unwrap(), b.oplus(&a).unwrap());
        prop_assert_eq!(
            a.oplus(&b).unwrap().oplus(&c).unwrap(),
            a.oplus(&b.oplus(&c).unwrap()).unwrap()
        );
        prop_assert_eq!(a.oplus(&a).unwrap(), a);
    }

    #[test]
    fn otimes_associative((a, b, c) in triple()) {
        let lhs = a.otimes(&b).unwrap().otimes(&c).unwrap();
        let rhs = a.otimes(&b.otimes(&c).unwrap()).unwrap();
        prop_assert!(lhs.eq_within(&rhs, TOL).unwrap());
    }

    #[test]
    fn otimes_distributes_over_oplus((a, b, c) in triple()) {
        let left = a.otimes(&b.oplus(&c).unwrap()).unwrap();
        let left_expanded = a.otimes(&b).unwrap().oplus(&a.otimes(&c).unwrap()).unwrap();
        prop_assert!(left.eq_within(&left_expanded, TOL).unwrap());

        let right = b.oplus(&c).unwrap().otimes(&a).unwrap();
        let right_expanded = b.otimes(&a).unwrap().oplus(&c.otimes(&a).unwrap()).unwrap();
        prop_assert!(right.eq_within(&right_expanded, TOL).unwrap());
    }

    #[test]
    fn identity_neutral_null_absorbing((a, _, _) in triple()) {
        let n = a.rows();
        let e = Matrix::identity(n);
        let null = Matrix::null(n, n);
        prop_assert_eq!(e.otimes(&a).unwrap(), a.clone());
        prop_assert_eq!(a.otimes(&e).unwrap(), a.clone());
        prop_assert_eq!(null.otimes(&a).unwrap(), null.clone());
        prop_assert_eq!(a.otimes(&null).unwrap(), null.clone());
        prop_assert_eq!(a.oplus(&null).unwrap(), a);
    }

    #[test]
    fn madd_commutative_associative((a, b, c) in triple()) {
        prop_assert_eq!(a.madd(&b).unwrap(), b.madd(&a).unwrap());
        let lhs = a.madd(&b).unwrap().madd(&c).unwrap();
        let rhs = a.madd(&b.madd(&c).unwrap()).unwrap();
        prop_assert!(lhs.eq_within(&rhs, TOL).unwrap());
    }

    #[test]
    fn operations_are_monotone((a, b, pa, pb) in quad()) {
        // a ≤ a ⊕ pa and b ≤ b ⊕ pb by construction.
        let a_up = a.oplus(&pa).unwrap();
        let b_up = b.oplus(&pb).unwrap();
        prop_assert!(a.oplus(&b).unwrap().leq(&a_up.oplus(&b_up).unwrap()).unwrap());
        prop_assert!(a
            .otimes(&b)
            .unwrap()
            .leq_within(&a_up.otimes(&b_up).unwrap(), TOL)
            .unwrap());
        prop_assert!(a
            .madd(&b)
            .unwrap()
            .leq_within(&a_up.madd(&b_up).unwrap(), TOL)
            .unwrap());
    }

    #[test]
    fn transpose_reverses_otimes((a, b, _) in triple()) {
        let lhs = a.otimes(&b).unwrap().transpose();
        let rhs = b.transpose().otimes(&a.transpose()).unwrap();
        prop_assert!(lhs.eq_within(&rhs, TOL).unwrap());
    }

    #[test]
    fn norm_bounds_every_entry((a, _, _) in triple()) {
        let norm = a.norm();
        for e in a.entries() {
            prop_assert!(e.leq(norm));
        }
    }
}
