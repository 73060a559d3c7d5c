//! The network recurrence: per-epoch transition matrices, departure-vector
//! evolution, and products of transposed epoch matrices.
//!
//! With service diagonal `𝒯` and support `G`, the epoch matrix is
//!
//! ```text
//! A = (𝒯 ⊗ G^T)^0 ⊗ 𝒯  ⊕  (𝒯 ⊗ G^T)^1 ⊗ 𝒯  ⊕ … ⊕  (𝒯 ⊗ G^T)^p ⊗ 𝒯
//! ```
//!
//! and departures evolve as `x(k) = A(k) ⊗ x(k-1)`. Entry `(i, j)` of `A`
//! is the best total service over join-paths from `j` up to `i`, so it is
//! finite exactly when `j` reaches `i` in at most `p` arcs (or `i = j`),
//! and the diagonal always carries the epoch's own service times.

use maxplus::{Diagonal64, Matrix64, Scalar64};
use thiserror::Error;

use crate::network::CompiledNetwork;
use crate::service::ServiceSampler;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("initial vector must be finite in every coordinate")]
    NonFiniteStart,
    #[error("initial vector has {got} coordinates, network has {expected}")]
    BadStartLength { expected: usize, got: usize },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("product range requires start < end, got {start} >= {end}")]
    EmptyProductRange { start: usize, end: usize },
    #[error(transparent)]
    Algebra(#[from] maxplus::Error),
}

/// One epoch's transition matrix together with its epoch index.
#[derive(Debug, Clone)]
pub struct EpochMatrix {
    pub matrix: Matrix64,
    pub epoch: u64,
}

/// Builds the epoch matrix for one service diagonal.
pub fn epoch_matrix(services: &Diagonal64, net: &CompiledNetwork) -> EpochMatrix {
    let t = services.to_matrix();
    let gt = net.transposed_support().matrix();
    // Accumulate (𝒯 G^T)^j 𝒯 incrementally: term_{j} = term_{j-1} ⊗ G^T ⊗ 𝒯.
    let mut term = t.clone();
    let mut acc = t.clone();
    for _ in 1..=net.longest_path() {
        term = term
            .otimes(gt)
            .and_then(|m| m.otimes(&t))
            .expect("orders match by construction");
        acc = acc.oplus(&term).expect("same shape");
    }
    EpochMatrix {
        matrix: acc,
        epoch: 0,
    }
}

/// One step of the recurrence: `x' = A ⊗ x` for a column vector `x`.
pub fn step(a: &EpochMatrix, x: &Matrix64) -> Result<Matrix64, DynamicsError> {
    Ok(a.matrix.otimes(x)?)
}

/// A finished trajectory: the per-epoch norms `‖x(k)‖` and the final
/// departure vector.
#[derive(Debug, Clone)]
pub struct Trajectory {
    norms: Vec<f64>,
    final_x: Matrix64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.norms.len()
    }

    /// `‖x(k)‖` for `1 <= k <= horizon`.
    pub fn norm_at(&self, k: usize) -> f64 {
        self.norms[k - 1]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn final_x(&self) -> &Matrix64 {
        &self.final_x
    }

    /// `‖x(k)‖ / k`.
    pub fn rate_at(&self, k: usize) -> f64 {
        self.norm_at(k) / k as f64
    }

    /// The plain cycle-time estimate `‖x(K)‖ / K`.
    pub fn rate(&self) -> f64 {
        self.rate_at(self.horizon())
    }

    /// Offset-corrected rate `(‖x(K)‖ - ‖x(K/2)‖) / (K - K/2)`: the
    /// difference quotient cancels the constant transient term, so for a
    /// deterministic network it is exact once the trajectory is periodic.
    pub fn drift_rate(&self) -> f64 {
        let k = self.horizon();
        if k < 2 {
            return self.rate();
        }
        let half = k / 2;
        (self.norm_at(k) - self.norm_at(half)) / (k - half) as f64
    }
}

/// Runs the recurrence for `horizon` epochs, drawing a fresh service
/// diagonal each epoch. `start` must be finite (the default all-zero
/// vector models an initially empty network).
pub fn run_trajectory(
    net: &CompiledNetwork,
    sampler: &mut ServiceSampler,
    horizon: usize,
    start: &[f64],
) -> Result<Trajectory, DynamicsError> {
    if horizon == 0 {
        return Err(DynamicsError::ZeroHorizon);
    }
    if start.len() != net.node_count() {
        return Err(DynamicsError::BadStartLength {
            expected: net.node_count(),
            got: start.len(),
        });
    }
    if !start.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::NonFiniteStart);
    }
    let mut x = Matrix64::column(
        start
            .iter()
            .map(|&v| Scalar64::finite(v).expect("checked finite"))
            .collect(),
    );
    let mut norms = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let services = sampler.next_epoch();
        let a = epoch_matrix(&services, net);
        x = step(&a, &x)?;
        norms.push(x.norm().value());
    }
    Ok(Trajectory { norms, final_x: x })
}

/// Materializes the transposed epoch matrices `A^T(1), …, A^T(count)` for
/// a fixed sampler stream. Desk-scale only; long-horizon runs use
/// [`run_trajectory`], which never stores epoch matrices.
pub fn transposed_epoch_matrices(
    net: &CompiledNetwork,
    sampler: &mut ServiceSampler,
    count: usize,
) -> Vec<Matrix64> {
    (0..count)
        .map(|_| {
            let services = sampler.next_epoch();
            epoch_matrix(&services, net).matrix.transpose()
        })
        .collect()
}

/// Product `A^T(start+1) ⊗ … ⊗ A^T(end)` over a replayed epoch stream.
/// `start = 0` gives the full transposed product up to `end`.
pub fn transposed_product(
    net: &CompiledNetwork,
    sampler: &mut ServiceSampler,
    start: usize,
    end: usize,
) -> Result<Matrix64, DynamicsError> {
    if start >= end {
        return Err(DynamicsError::EmptyProductRange { start, end });
    }
    let transposed = transposed_epoch_matrices(net, sampler, end);
    let mut acc = transposed[start].clone();
    for factor in &transposed[start + 1..end] {
        acc = acc.otimes(factor)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{compile, random_dag, NetworkSpec};
    use crate::service::ServiceDistribution;
    use maxplus::{alternating_product, Matrix, Scalar};

    fn det(c: f64) -> ServiceDistribution {
        ServiceDistribution::Deterministic { c }
    }

    fn tandem() -> CompiledNetwork {
        compile(&NetworkSpec::new(vec![det(1.0), det(2.0)], vec![(0, 1)]).unwrap()).unwrap()
    }

    fn zero_column(n: usize) -> Matrix64 {
        Matrix::column(vec![Scalar::zero(); n])
    }

    #[test]
    fn tandem_epoch_matrix_matches_hand_expansion() {
        let services = Diagonal64::from_values(&[1.0, 2.0]).unwrap();
        let a = epoch_matrix(&services, &tandem());
        let expect = Matrix::from_options(&[
            vec![Some(1.0), None],
            vec![Some(3.0), Some(2.0)],
        ])
        .unwrap();
        assert_eq!(a.matrix, expect);
    }

    #[test]
    fn arc_free_epoch_matrix_is_the_service_diagonal() {
        let net =
            compile(&NetworkSpec::new(vec![det(1.0), det(2.0), det(3.0)], vec![]).unwrap())
                .unwrap();
        let services = Diagonal64::from_values(&[0.5, 1.5, 2.5]).unwrap();
        let a = epoch_matrix(&services, &net);
        assert_eq!(a.matrix, services.to_matrix());
    }

    #[test]
    fn diamond_accumulates_three_services_on_the_long_path() {
        let net = compile(
            &NetworkSpec::new(vec![det(1.0); 4], vec![(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap(),
        )
        .unwrap();
        let services = Diagonal64::from_values(&[1.0; 4]).unwrap();
        let a = epoch_matrix(&services, &net);
        assert_eq!(a.matrix.get(3, 0).value(), 3.0);
        assert_eq!(a.matrix.get(1, 0).value(), 2.0);
        assert_eq!(a.matrix.get(0, 0).value(), 1.0);
        assert!(a.matrix.get(0, 3).is_eps());
    }

    #[test]
    fn step_from_zero_gives_first_departures() {
        let services = Diagonal64::from_values(&[1.0, 2.0]).unwrap();
        let a = epoch_matrix(&services, &tandem());
        let x = step(&a, &zero_column(2)).unwrap();
        assert_eq!(x.get(0, 0).value(), 1.0);
        assert_eq!(x.get(1, 0).value(), 3.0);
    }

    #[test]
    fn identity_epoch_leaves_the_vector_alone() {
        let a = EpochMatrix {
            matrix: Matrix::identity(3),
            epoch: 1,
        };
        let x = Matrix::column(vec![
            Scalar::new(0.5).unwrap(),
            Scalar::new(-1.0).unwrap(),
            Scalar::new(7.0).unwrap(),
        ]);
        assert_eq!(step(&a, &x).unwrap(), x);
    }

    #[test]
    fn finite_diagonal_keeps_the_vector_finite() {
        let net = compile(&random_dag(5, 0.6, 21)).unwrap();
        let mut sampler =
            ServiceSampler::new(&vec![det(1.0); 5], 3).unwrap();
        let trajectory = run_trajectory(&net, &mut sampler, 20, &[0.0; 5]).unwrap();
        assert!(trajectory.final_x().is_finite());
    }

    #[test]
    fn deterministic_tandem_norms_follow_the_closed_form() {
        // x(k) = (k, 2k + 1), so ‖x(k)‖ = 2k + 1 and the offset-corrected
        // rate is exactly 2.
        let net = tandem();
        let mut sampler = ServiceSampler::new(
            &[det(1.0), det(2.0)],
            0,
        )
        .unwrap();
        let trajectory = run_trajectory(&net, &mut sampler, 100, &[0.0, 0.0]).unwrap();
        for k in 1..=100 {
            assert_eq!(trajectory.norm_at(k), 2.0 * k as f64 + 1.0);
        }
        assert_eq!(trajectory.drift_rate(), 2.0);
        assert!((trajectory.rate() - 2.01).abs() < 1e-12);
    }

    #[test]
    fn norms_are_nondecreasing_with_nonnegative_services() {
        let net = compile(&random_dag(4, 0.5, 8)).unwrap();
        let services = vec![ServiceDistribution::Uniform { lo: 0.0, hi: 2.0 }; 4];
        let mut sampler = ServiceSampler::new(&services, 17).unwrap();
        let trajectory = run_trajectory(&net, &mut sampler, 200, &[0.0; 4]).unwrap();
        for k in 2..=200 {
            assert!(trajectory.norm_at(k) >= trajectory.norm_at(k - 1));
        }
    }

    #[test]
    fn start_vector_validation() {
        let net = tandem();
        let services = [det(1.0), det(2.0)];
        let mut sampler = ServiceSampler::new(&services, 0).unwrap();
        assert!(matches!(
            run_trajectory(&net, &mut sampler, 0, &[0.0, 0.0]),
            Err(DynamicsError::ZeroHorizon)
        ));
        assert!(matches!(
            run_trajectory(&net, &mut sampler, 1, &[0.0]),
            Err(DynamicsError::BadStartLength { .. })
        ));
        assert!(matches!(
            run_trajectory(&net, &mut sampler, 1, &[0.0, f64::NEG_INFINITY]),
            Err(DynamicsError::NonFiniteStart)
        ));
    }

    #[test]
    fn epoch_matrix_diagonal_is_the_service_diagonal() {
        for seed in 0..10 {
            let spec = random_dag(5, 0.5, seed);
            let net = compile(&spec).unwrap();
            let mut sampler = ServiceSampler::new(spec.services(), seed).unwrap();
            let services = sampler.next_epoch();
            let a = epoch_matrix(&services, &net);
            for i in 0..5 {
                assert_eq!(a.matrix.get(i, i).value(), services.get(i).value());
            }
        }
    }

    #[test]
    fn epoch_matrix_equals_alternation_sum_over_transposed_support() {
        // (𝒯 G^T)^j 𝒯 = 𝒯 (G^T 𝒯)^j, so the epoch matrix equals the max
        // over j of the alternating products with the transposed support.
        for seed in 0..10 {
            let spec = random_dag(5, 0.5, 100 + seed);
            let net = compile(&spec).unwrap();
            let mut sampler = ServiceSampler::new(spec.services(), seed).unwrap();
            let services = sampler.next_epoch();
            let a = epoch_matrix(&services, &net);

            let gt = net.transposed_support();
            let mut expect = Matrix64::null(5, 5);
            for j in 0..=net.longest_path() {
                expect = expect
                    .oplus(&alternating_product(&services, gt, j).unwrap())
                    .unwrap();
            }
            assert!(a.matrix.eq_within(&expect, 1e-9).unwrap());
        }
    }

    #[test]
    fn transposed_epoch_equals_alternation_sum_over_plain_support() {
        // A^T(k) = ⊕_j 𝒯 (G 𝒯)^j — the transpose swaps G^T for G.
        for seed in 0..10 {
            let spec = random_dag(4, 0.6, 200 + seed);
            let net = compile(&spec).unwrap();
            let mut sampler = ServiceSampler::new(spec.services(), seed).unwrap();
            let services = sampler.next_epoch();
            let at = epoch_matrix(&services, &net).matrix.transpose();

            let g = net.support();
            let mut expect = Matrix64::null(4, 4);
            for j in 0..=net.longest_path() {
                expect = expect
                    .oplus(&alternating_product(&services, g, j).unwrap())
                    .unwrap();
            }
            assert!(at.eq_within(&expect, 1e-9).unwrap());
        }
    }

    #[test]
    fn single_factor_product_is_the_transposed_epoch_matrix() {
        let spec = random_dag(4, 0.5, 33);
        let net = compile(&spec).unwrap();
        let seed = 5;
        let mut sampler = ServiceSampler::new(spec.services(), seed).unwrap();
        let product = transposed_product(&net, &mut sampler, 2, 3).unwrap();

        let mut replay = ServiceSampler::new(spec.services(), seed).unwrap();
        let all = transposed_epoch_matrices(&net, &mut replay, 3);
        assert_eq!(product, all[2]);
    }

    #[test]
    fn deterministic_product_is_a_power() {
        let net = tandem();
        let services = [det(1.0), det(2.0)];
        let mut sampler = ServiceSampler::new(&services, 0).unwrap();
        let product = transposed_product(&net, &mut sampler, 0, 4).unwrap();

        let diag = Diagonal64::from_values(&[1.0, 2.0]).unwrap();
        let at = epoch_matrix(&diag, &net).matrix.transpose();
        let power = at.power(4).unwrap();
        assert!(product.eq_within(&power, 1e-9).unwrap());
    }

    #[test]
    fn empty_product_range_is_rejected() {
        let spec = random_dag(3, 0.5, 1);
        let net = compile(&spec).unwrap();
        let mut sampler = ServiceSampler::new(spec.services(), 0).unwrap();
        assert!(matches!(
            transposed_product(&net, &mut sampler, 3, 3),
            Err(DynamicsError::EmptyProductRange { .. })
        ));
    }
}
