//! Cycle-time estimation and the analytic bounds on it.
//!
//! The cycle time is the growth rate `lim ‖x(k)‖ / k` of the departure
//! recurrence — the maximal max-plus Lyapunov exponent of the random
//! product of epoch matrices. It is estimated by independent seeded
//! replications. Two analytic bounds sandwich it:
//!
//! * lower: the largest mean service time, `max_i E[τ_i]`;
//! * upper: the norm of `E[⊕_{0 ≤ r+s ≤ p} G^r ⊗ 𝒯 ⊗ G^s]`, computed
//!   exactly for deterministic services and by seeded Monte Carlo
//!   otherwise.
//!
//! The same sandwich holds entrywise between `E[𝒯]`, the limiting matrix
//! of the transposed products divided by the horizon, and the expectation
//! matrix above; [`estimate_limit_matrix`] estimates that limit.
//!
//! Replications and Monte Carlo samples derive per-task seeds from the
//! master seed, run in parallel, and are aggregated in index order, so
//! results do not depend on the worker-thread count.

use maxplus::{Matrix64, Scalar64};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::dynamics::{self, DynamicsError};
use crate::network::CompiledNetwork;
use crate::seeds;
use crate::service::{self, DistributionError, ServiceDistribution, ServiceSampler};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    BadArgument(String),
    #[error("estimate was computed for a different network (fingerprint {got:#x}, expected {expected:#x})")]
    NetworkMismatch { expected: u64, got: u64 },
    #[error("bound ordering violated: lower {lower} > upper {upper}")]
    InconsistentBounds { lower: f64, upper: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Algebra(#[from] maxplus::Error),
}

/// Configuration for cycle-time simulation.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationConfig {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    /// Confidence level for the normal-approximation interval.
    pub confidence: f64,
    /// Initial departure vector; all zeros when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon: 10_000,
            replications: 32,
            seed: 1,
            confidence: 0.95,
            start: None,
        }
    }
}

/// Standard normal quantile for two-sided intervals at the given level.
fn z_value(confidence: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(0.5 + confidence / 2.0)
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Point estimate of the cycle time with replication statistics.
#[derive(Debug, Clone, Serialize)]
pub struct CycleTimeEstimate {
    /// Mean over replications of `‖x(K)‖ / K`.
    pub point: f64,
    pub std_error: f64,
    /// Normal-approximation interval around `point`.
    pub ci: (f64, f64),
    pub confidence: f64,
    /// Mean over replications of the offset-corrected rate
    /// `(‖x(K)‖ - ‖x(K/2)‖) / (K - K/2)`; exact for deterministic
    /// networks, bias `o(1/K)` otherwise.
    pub drift: f64,
    pub drift_std_error: f64,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub network_fingerprint: u64,
}

/// Runs independent replications of the recurrence and aggregates the
/// terminal rates.
pub fn estimate_cycle_time(
    net: &CompiledNetwork,
    services: &[ServiceDistribution],
    cfg: &SimulationConfig,
) -> Result<CycleTimeEstimate, AnalysisError> {
    validate_inputs(net, services, cfg.horizon, cfg.replications)?;
    if !(0.0 < cfg.confidence && cfg.confidence < 1.0) {
        return Err(AnalysisError::BadArgument(format!(
            "confidence must lie in (0, 1), got {}",
            cfg.confidence
        )));
    }
    let start = match &cfg.start {
        Some(v) => v.clone(),
        None => vec![0.0; net.node_count()],
    };

    let per_rep: Result<Vec<(f64, f64)>, AnalysisError> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = seeds::derive(cfg.seed, seeds::DOMAIN_REPLICATION, rep as u64);
            let mut sampler = ServiceSampler::new(services, seed)?;
            let trajectory = dynamics::run_trajectory(net, &mut sampler, cfg.horizon, &start)?;
            Ok((trajectory.rate(), trajectory.drift_rate()))
        })
        .collect();
    let per_rep = per_rep?;

    let rates: Vec<f64> = per_rep.iter().map(|&(r, _)| r).collect();
    let drifts: Vec<f64> = per_rep.iter().map(|&(_, d)| d).collect();
    let (point, std_error) = mean_and_se(&rates);
    let (drift, drift_std_error) = mean_and_se(&drifts);
    let z = z_value(cfg.confidence);
    Ok(CycleTimeEstimate {
        point,
        std_error,
        ci: (point - z * std_error, point + z * std_error),
        confidence: cfg.confidence,
        drift,
        drift_std_error,
        horizon: cfg.horizon,
        replications: cfg.replications,
        seed: cfg.seed,
        network_fingerprint: net.fingerprint(),
    })
}

fn validate_inputs(
    net: &CompiledNetwork,
    services: &[ServiceDistribution],
    horizon: usize,
    replications: usize,
) -> Result<(), AnalysisError> {
    if services.len() != net.node_count() {
        return Err(AnalysisError::BadArgument(format!(
            "{} service distributions for a {}-node network",
            services.len(),
            net.node_count()
        )));
    }
    if horizon == 0 {
        return Err(AnalysisError::BadArgument("horizon must be >= 1".into()));
    }
    if replications == 0 {
        return Err(AnalysisError::BadArgument(
            "replications must be >= 1".into(),
        ));
    }
    for s in services {
        s.validate()?;
    }
    Ok(())
}

/// Per-entry running statistics over matrices with a shared sparsity
/// pattern (`None` marks `ε` entries).
struct EntryStats {
    rows: usize,
    cols: usize,
    count: usize,
    cells: Vec<Option<(f64, f64)>>, // (mean, sum of squared deviations)
}

impl EntryStats {
    fn new(rows: usize, cols: usize) -> Self {
        EntryStats {
            rows,
            cols,
            count: 0,
            cells: vec![None; rows * cols],
        }
    }

    fn update(&mut self, m: &Matrix64) {
        self.count += 1;
        for (cell, entry) in self.cells.iter_mut().zip(m.entries()) {
            match entry.to_option() {
                Some(v) => {
                    let (mean, m2) = cell.get_or_insert((0.0, 0.0));
                    let delta = v - *mean;
                    *mean += delta / self.count as f64;
                    *m2 += delta * (v - *mean);
                }
                None => debug_assert!(self.count == 1 || cell.is_none()),
            }
        }
    }

    fn merge(mut self, other: EntryStats) -> EntryStats {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        for (a, b) in self.cells.iter_mut().zip(other.cells) {
            *a = match (*a, b) {
                (Some((ma, m2a)), Some((mb, m2b))) => {
                    let delta = mb - ma;
                    let mean = ma + delta * nb / (na + nb);
                    let m2 = m2a + m2b + delta * delta * na * nb / (na + nb);
                    Some((mean, m2))
                }
                (None, None) => None,
                _ => unreachable!("sparsity patterns agree across samples"),
            };
        }
        self.count += other.count as usize;
        self
    }

    fn mean_matrix(&self) -> Matrix64 {
        Matrix64::from_fn(self.rows, self.cols, |i, j| {
            match self.cells[i * self.cols + j] {
                Some((mean, _)) => Scalar64::finite(mean).expect("finite mean"),
                None => Scalar64::eps(),
            }
        })
    }

    /// Standard error of the mean per entry (`ε` on the `ε` pattern).
    fn se_matrix(&self) -> Matrix64 {
        let n = self.count as f64;
        Matrix64::from_fn(self.rows, self.cols, |i, j| {
            match self.cells[i * self.cols + j] {
                Some((_, m2)) if self.count >= 2 => {
                    let var = m2 / (n - 1.0);
                    Scalar64::finite((var / n).sqrt()).expect("finite se")
                }
                Some(_) => Scalar64::zero(),
                None => Scalar64::eps(),
            }
        })
    }
}

/// Estimate of the limiting matrix of transposed products over the
/// horizon.
#[derive(Debug, Clone, Serialize)]
pub struct LimitMatrixEstimate {
    /// Mean over replications of the product at the full horizon divided
    /// by the horizon.
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub mean: Matrix64,
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub mean_std_error: Matrix64,
    /// Offset-corrected estimate from the half-horizon snapshot, entrywise
    /// `(P(K) - P(K/2)) / (K - K/2)`; exact for deterministic networks.
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub drift: Matrix64,
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub drift_std_error: Matrix64,
    /// Convergence diagnostic: largest entrywise gap between the full- and
    /// half-horizon rate snapshots, maximized over replications.
    pub max_snapshot_gap: f64,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub network_fingerprint: u64,
}

/// Entrywise ordinary division of finite entries by a count; `ε` stays
/// `ε`.
fn divide_entries(m: &Matrix64, denom: f64) -> Matrix64 {
    Matrix64::from_fn(m.rows(), m.cols(), |i, j| match m.get(i, j).to_option() {
        Some(v) => Scalar64::finite(v / denom).expect("finite"),
        None => Scalar64::eps(),
    })
}

/// Entrywise ordinary difference of finite entries; both `ε` stays `ε`.
/// The sparsity patterns of the two snapshots always agree (both are the
/// reachability pattern), so mixed entries cannot occur.
fn subtract_entries(a: &Matrix64, b: &Matrix64) -> Matrix64 {
    Matrix64::from_fn(a.rows(), a.cols(), |i, j| {
        match (a.get(i, j).to_option(), b.get(i, j).to_option()) {
            (Some(x), Some(y)) => Scalar64::finite(x - y).expect("finite"),
            (None, None) => Scalar64::eps(),
            _ => unreachable!("snapshots share the reachability pattern"),
        }
    })
}

/// Estimates the limiting matrix by averaging transposed-product
/// snapshots over independent replications.
pub fn estimate_limit_matrix(
    net: &CompiledNetwork,
    services: &[ServiceDistribution],
    horizon: usize,
    replications: usize,
    seed: u64,
) -> Result<LimitMatrixEstimate, AnalysisError> {
    validate_inputs(net, services, horizon, replications)?;
    if horizon < 2 {
        return Err(AnalysisError::BadArgument(
            "limit-matrix horizon must be >= 2".into(),
        ));
    }
    let n = net.node_count();
    let half = horizon / 2;

    let per_rep: Result<Vec<(Matrix64, Matrix64, f64)>, AnalysisError> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = seeds::derive(seed, seeds::DOMAIN_PRODUCT, rep as u64);
            let mut sampler = ServiceSampler::new(services, rep_seed)?;
            let mut product: Option<Matrix64> = None;
            let mut snapshot: Option<Matrix64> = None;
            for k in 1..=horizon {
                let services_k = sampler.next_epoch();
                let at = dynamics::epoch_matrix(&services_k, net).matrix.transpose();
                product = Some(match product {
                    Some(p) => p.otimes(&at)?,
                    None => at,
                });
                if k == half {
                    snapshot = Some(product.clone().expect("set above"));
                }
            }
            let product = product.expect("horizon >= 1");
            let snapshot = snapshot.expect("half < horizon");
            let full_rate = divide_entries(&product, horizon as f64);
            let half_rate = divide_entries(&snapshot, half as f64);
            let gap = subtract_entries(&full_rate, &half_rate)
                .entries()
                .iter()
                .filter_map(|s| s.to_option())
                .fold(0.0f64, |acc, v| acc.max(v.abs()));
            let drift = divide_entries(
                &subtract_entries(&product, &snapshot),
                (horizon - half) as f64,
            );
            Ok((full_rate, drift, gap))
        })
        .collect();
    let per_rep = per_rep?;

    let mut mean_stats = EntryStats::new(n, n);
    let mut drift_stats = EntryStats::new(n, n);
    let mut max_gap = 0.0f64;
    for (full_rate, drift, gap) in &per_rep {
        mean_stats.update(full_rate);
        drift_stats.update(drift);
        max_gap = max_gap.max(*gap);
    }

    Ok(LimitMatrixEstimate {
        mean: mean_stats.mean_matrix(),
        mean_std_error: mean_stats.se_matrix(),
        drift: drift_stats.mean_matrix(),
        drift_std_error: drift_stats.se_matrix(),
        max_snapshot_gap: max_gap,
        horizon,
        replications,
        seed,
        network_fingerprint: net.fingerprint(),
    })
}

/// Exact lower bound on the cycle time: the largest mean service time.
pub fn lower_bound_cycle_time(services: &[ServiceDistribution]) -> f64 {
    services
        .iter()
        .map(ServiceDistribution::mean)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// How a bound value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    Exact,
    MonteCarlo,
}

/// The expectation matrix `E[⊕_{0 ≤ r+s ≤ p} G^r ⊗ 𝒯 ⊗ G^s]` and the
/// upper bound on the cycle time derived from its norm.
#[derive(Debug, Clone, Serialize)]
pub struct UpperBoundEstimate {
    /// `‖ expectation matrix ‖`.
    pub value: f64,
    /// Standard error of the entry attaining the norm (0 when exact).
    pub value_std_error: f64,
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub matrix: Matrix64,
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub matrix_std_error: Matrix64,
    pub method: BoundMethod,
    pub samples: usize,
}

/// Middle-node table: `w` contributes to entry `(u, v)` exactly when the
/// shortest-path split `d(u, w) + d(w, v)` fits within the longest path
/// length, which is when some hop split `r + s <= p` connects `u` to `v`
/// through `w`.
fn admissible_middles(net: &CompiledNetwork) -> Vec<Vec<Vec<usize>>> {
    let n = net.node_count();
    let p = net.longest_path();
    // BFS shortest arc-count distances.
    let mut succ = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if net.support().has_arc(i, j) {
                succ[i].push(j);
            }
        }
    }
    let mut dist = vec![vec![usize::MAX; n]; n];
    for s in 0..n {
        dist[s][s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &succ[u] {
                if dist[s][v] == usize::MAX {
                    dist[s][v] = dist[s][u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    let mut middles = vec![vec![Vec::new(); n]; n];
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                let (a, b) = (dist[u][w], dist[w][v]);
                if a != usize::MAX && b != usize::MAX && a + b <= p {
                    middles[u][v].push(w);
                }
            }
        }
    }
    middles
}

fn sandwich_matrix(middles: &[Vec<Vec<usize>>], tau: &[f64]) -> Matrix64 {
    let n = middles.len();
    Matrix64::from_fn(n, n, |u, v| {
        middles[u][v]
            .iter()
            .map(|&w| Scalar64::finite(tau[w]).expect("finite sample"))
            .fold(Scalar64::eps(), Scalar64::oplus)
    })
}

const MC_CHUNK: usize = 8192;

/// Computes the upper bound: exact when every service is deterministic,
/// otherwise by entrywise Monte Carlo expectation over seeded samples.
pub fn upper_bound_cycle_time(
    net: &CompiledNetwork,
    services: &[ServiceDistribution],
    samples: usize,
    seed: u64,
) -> Result<UpperBoundEstimate, AnalysisError> {
    validate_inputs(net, services, 1, 1)?;
    let n = net.node_count();
    let middles = admissible_middles(net);

    if service::all_deterministic(services) {
        let tau: Vec<f64> = services.iter().map(ServiceDistribution::mean).collect();
        let matrix = sandwich_matrix(&middles, &tau);
        return Ok(UpperBoundEstimate {
            value: matrix.norm().value(),
            value_std_error: 0.0,
            matrix_std_error: Matrix64::from_fn(n, n, |i, j| {
                if matrix.get(i, j).is_eps() {
                    Scalar64::eps()
                } else {
                    Scalar64::zero()
                }
            }),
            matrix,
            method: BoundMethod::Exact,
            samples: 0,
        });
    }

    if samples == 0 {
        return Err(AnalysisError::BadArgument(
            "Monte Carlo upper bound needs samples >= 1".into(),
        ));
    }

    // Fixed-size chunks keep the merge order independent of scheduling.
    let chunk_starts: Vec<usize> = (0..samples).step_by(MC_CHUNK).collect();
    let chunk_stats: Result<Vec<EntryStats>, AnalysisError> = chunk_starts
        .par_iter()
        .map(|&start| {
            let mut stats = EntryStats::new(n, n);
            for idx in start..(start + MC_CHUNK).min(samples) {
                let sample_seed = seeds::derive(seed, seeds::DOMAIN_SAMPLE, idx as u64);
                let mut sampler = ServiceSampler::new(services, sample_seed)?;
                let diag = sampler.next_epoch();
                let tau: Vec<f64> = (0..n).map(|i| diag.get(i).value()).collect();
                stats.update(&sandwich_matrix(&middles, &tau));
            }
            Ok(stats)
        })
        .collect();
    let stats = chunk_stats?
        .into_iter()
        .reduce(EntryStats::merge)
        .expect("at least one chunk");

    let matrix = stats.mean_matrix();
    let se = stats.se_matrix();
    let norm = matrix.norm().value();
    // SE of the entry attaining the norm.
    let mut value_std_error = 0.0;
    'outer: for i in 0..n {
        for j in 0..n {
            if matrix.get(i, j).value() == norm {
                value_std_error = se.get(i, j).value();
                break 'outer;
            }
        }
    }
    Ok(UpperBoundEstimate {
        value: norm,
        value_std_error,
        matrix,
        matrix_std_error: se,
        method: BoundMethod::MonteCarlo,
        samples,
    })
}

/// Configuration for assembling a bounds report.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsConfig {
    /// Monte Carlo samples for the expectation matrix.
    pub samples: usize,
    pub seed: u64,
    /// Horizon for the limit-matrix estimate.
    pub limit_horizon: usize,
    pub limit_replications: usize,
    /// Slack multiplier on Monte Carlo standard errors in the flag
    /// comparisons.
    pub se_multiplier: f64,
    /// Absolute tolerance for exact comparisons.
    pub tolerance: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            samples: 100_000,
            seed: 1,
            limit_horizon: 4000,
            limit_replications: 32,
            se_multiplier: 3.0,
            tolerance: 1e-9,
        }
    }
}

/// Verdicts of the sandwich comparisons.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundsFlags {
    /// The cycle-time estimate is consistent with `[lower, upper]`: the
    /// offset-corrected estimate lies inside for deterministic networks,
    /// and the confidence interval intersects the (slack-widened) band
    /// otherwise.
    pub gamma_within_bounds: bool,
    /// `E[𝒯] ≤` estimated limit matrix, entrywise with slack.
    pub limit_above_lower: bool,
    /// Estimated limit matrix `≤` expectation matrix, entrywise with
    /// slack.
    pub limit_below_upper: bool,
}

impl BoundsFlags {
    pub fn all(&self) -> bool {
        self.gamma_within_bounds && self.limit_above_lower && self.limit_below_upper
    }
}

/// Scalar and matrix bounds with the comparisons against the estimates.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub lower_method: BoundMethod,
    pub upper: f64,
    pub upper_std_error: f64,
    pub upper_method: BoundMethod,
    pub samples: usize,
    /// `E[𝒯]` as a matrix (mean diagonal, `ε` off the diagonal).
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub matrix_lower: Matrix64,
    /// Estimate of `E[⊕ G^r ⊗ 𝒯 ⊗ G^s]`.
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub matrix_upper: Matrix64,
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub matrix_upper_std_error: Matrix64,
    pub limit: LimitMatrixEstimate,
    pub gamma_point: f64,
    pub gamma_drift: f64,
    pub flags: BoundsFlags,
    pub network_fingerprint: u64,
}

/// Entrywise `a ≤ b + slack_mult * (slack_a + slack_b) + tol`, with `ε`
/// below everything. Slack matrices carry `ε` on their own `ε` patterns,
/// which counts as zero slack.
fn leq_with_slack(
    a: &Matrix64,
    b: &Matrix64,
    slack_a: Option<&Matrix64>,
    slack_b: Option<&Matrix64>,
    mult: f64,
    tol: f64,
) -> bool {
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let left = match a.get(i, j).to_option() {
                Some(v) => v,
                None => continue,
            };
            let right = match b.get(i, j).to_option() {
                Some(v) => v,
                None => return false,
            };
            let slack_of = |m: Option<&Matrix64>| {
                m.and_then(|m| m.get(i, j).to_option()).unwrap_or(0.0)
            };
            if left > right + mult * (slack_of(slack_a) + slack_of(slack_b)) + tol {
                return false;
            }
        }
    }
    true
}

/// Assembles the full bounds report for a cycle-time estimate computed on
/// the same network.
pub fn bounds_report(
    net: &CompiledNetwork,
    services: &[ServiceDistribution],
    gamma: &CycleTimeEstimate,
    cfg: &BoundsConfig,
) -> Result<BoundsReport, AnalysisError> {
    if gamma.network_fingerprint != net.fingerprint() {
        return Err(AnalysisError::NetworkMismatch {
            expected: net.fingerprint(),
            got: gamma.network_fingerprint,
        });
    }

    let lower = lower_bound_cycle_time(services);
    let upper = upper_bound_cycle_time(net, services, cfg.samples, cfg.seed)?;
    if lower > upper.value + cfg.se_multiplier * upper.value_std_error + cfg.tolerance {
        return Err(AnalysisError::InconsistentBounds {
            lower,
            upper: upper.value,
        });
    }

    let limit = estimate_limit_matrix(
        net,
        services,
        cfg.limit_horizon,
        cfg.limit_replications,
        cfg.seed,
    )?;

    let mean_diag = service::mean_diagonal(services).to_matrix();
    let deterministic = service::all_deterministic(services);

    let gamma_within_bounds = if deterministic {
        lower - cfg.tolerance <= gamma.drift && gamma.drift <= upper.value + cfg.tolerance
    } else {
        let upper_slack = cfg.se_multiplier * upper.value_std_error;
        gamma.ci.1 >= lower - cfg.tolerance
            && gamma.ci.0 <= upper.value + upper_slack + cfg.tolerance
    };
    let flags = BoundsFlags {
        gamma_within_bounds,
        limit_above_lower: leq_with_slack(
            &mean_diag,
            &limit.drift,
            None,
            Some(&limit.drift_std_error),
            cfg.se_multiplier,
            cfg.tolerance,
        ),
        limit_below_upper: leq_with_slack(
            &limit.drift,
            &upper.matrix,
            Some(&limit.drift_std_error),
            Some(&upper.matrix_std_error),
            cfg.se_multiplier,
            cfg.tolerance,
        ),
    };

    Ok(BoundsReport {
        lower,
        lower_method: BoundMethod::Exact,
        upper: upper.value,
        upper_std_error: upper.value_std_error,
        upper_method: upper.method,
        samples: upper.samples,
        matrix_lower: mean_diag,
        matrix_upper: upper.matrix,
        matrix_upper_std_error: upper.matrix_std_error,
        limit,
        gamma_point: gamma.point,
        gamma_drift: gamma.drift,
        flags,
        network_fingerprint: net.fingerprint(),
    })
}

/// Runs replications out to twice the largest checkpoint and reports, for
/// each checkpoint `K`, the median over replications of
/// `|‖x(2K)‖/2K − ‖x(K)‖/K|` — a proxy for almost-sure convergence of the
/// rate.
pub fn convergence_medians(
    net: &CompiledNetwork,
    services: &[ServiceDistribution],
    checkpoints: &[usize],
    replications: usize,
    seed: u64,
) -> Result<Vec<f64>, AnalysisError> {
    let max_k = *checkpoints
        .iter()
        .max()
        .ok_or_else(|| AnalysisError::BadArgument("no checkpoints".into()))?;
    if checkpoints.iter().any(|&k| k == 0) {
        return Err(AnalysisError::BadArgument("checkpoints must be >= 1".into()));
    }
    validate_inputs(net, services, 2 * max_k, replications)?;
    let start = vec![0.0; net.node_count()];

    let per_rep: Result<Vec<Vec<f64>>, AnalysisError> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = seeds::derive(seed, seeds::DOMAIN_REPLICATION, rep as u64);
            let mut sampler = ServiceSampler::new(services, rep_seed)?;
            let trajectory = dynamics::run_trajectory(net, &mut sampler, 2 * max_k, &start)?;
            Ok(checkpoints
                .iter()
                .map(|&k| (trajectory.rate_at(2 * k) - trajectory.rate_at(k)).abs())
                .collect())
        })
        .collect();
    let per_rep = per_rep?;

    Ok((0..checkpoints.len())
        .map(|i| {
            let mut gaps: Vec<f64> = per_rep.iter().map(|g| g[i]).collect();
            gaps.sort_by(f64::total_cmp);
            let mid = gaps.len() / 2;
            if gaps.len() % 2 == 1 {
                gaps[mid]
            } else {
                0.5 * (gaps[mid - 1] + gaps[mid])
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{compile, NetworkSpec};

    fn det(c: f64) -> ServiceDistribution {
        ServiceDistribution::Deterministic { c }
    }

    fn exp(mean: f64) -> ServiceDistribution {
        ServiceDistribution::Exponential { mean }
    }

    fn tandem(services: [ServiceDistribution; 2]) -> (CompiledNetwork, Vec<ServiceDistribution>) {
        let spec = NetworkSpec::new(services.to_vec(), vec![(0, 1)]).unwrap();
        (compile(&spec).unwrap(), services.to_vec())
    }

    #[test]
    fn z_values_match_the_normal_table() {
        assert!((z_value(0.95) - 1.959964).abs() < 1e-5);
        assert!((z_value(0.99) - 2.575829).abs() < 1e-5);
    }

    #[test]
    fn deterministic_tandem_estimates() {
        let (net, services) = tandem([det(1.0), det(2.0)]);
        let cfg = SimulationConfig {
            horizon: 1000,
            replications: 1,
            seed: 7,
            ..Default::default()
        };
        let est = estimate_cycle_time(&net, &services, &cfg).unwrap();
        assert!((est.point - (2.0 + 1.0 / 1000.0)).abs() < 1e-12);
        assert_eq!(est.drift, 2.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn arc_free_network_rate_is_the_largest_constant() {
        let spec = NetworkSpec::new(vec![det(0.5), det(3.0), det(1.0)], vec![]).unwrap();
        let net = compile(&spec).unwrap();
        let cfg = SimulationConfig {
            horizon: 100,
            replications: 2,
            seed: 1,
            ..Default::default()
        };
        let est = estimate_cycle_time(&net, spec.services(), &cfg).unwrap();
        assert_eq!(est.point, 3.0);
        assert_eq!(est.drift, 3.0);
    }

    #[test]
    fn single_exponential_node_converges_to_its_mean() {
        let spec = NetworkSpec::new(vec![exp(1.0)], vec![]).unwrap();
        let net = compile(&spec).unwrap();
        let cfg = SimulationConfig {
            horizon: 20_000,
            replications: 8,
            seed: 11,
            ..Default::default()
        };
        let est = estimate_cycle_time(&net, spec.services(), &cfg).unwrap();
        // Mean of 20'000 exponentials: SE per replication 1/sqrt(K).
        let se = 1.0 / (20_000.0f64).sqrt() / (8.0f64).sqrt();
        assert!((est.point - 1.0).abs() < 4.0 * se, "point {}", est.point);
        assert!(est.ci.0 <= 1.0 && 1.0 <= est.ci.1 + 4.0 * se);
    }

    #[test]
    fn lower_bound_is_the_max_mean() {
        assert_eq!(lower_bound_cycle_time(&[det(1.0), det(2.0)]), 2.0);
        assert_eq!(lower_bound_cycle_time(&[exp(1.0), exp(1.0)]), 1.0);
        assert_eq!(
            lower_bound_cycle_time(&[det(1.0), det(2.0), det(3.0), det(1.0)]),
            3.0
        );
    }

    #[test]
    fn deterministic_tandem_upper_bound_is_exact() {
        let (net, services) = tandem([det(1.0), det(2.0)]);
        let ub = upper_bound_cycle_time(&net, &services, 10, 1).unwrap();
        assert_eq!(ub.method, BoundMethod::Exact);
        assert_eq!(ub.value, 2.0);
        assert_eq!(ub.matrix.get(0, 0).value(), 1.0);
        assert_eq!(ub.matrix.get(0, 1).value(), 2.0);
        assert_eq!(ub.matrix.get(1, 1).value(), 2.0);
        assert!(ub.matrix.get(1, 0).is_eps());
    }

    #[test]
    fn deterministic_diamond_upper_bound_is_the_largest_service() {
        // Every entry of the expectation matrix holds a single service
        // time, so with all services 1 the bound is 1 (and the diamond's
        // cycle time is 1 as well: each saturated server turns over one
        // customer per unit).
        let spec = NetworkSpec::new(
            vec![det(1.0); 4],
            vec![(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let net = compile(&spec).unwrap();
        let ub = upper_bound_cycle_time(&net, spec.services(), 10, 1).unwrap();
        assert_eq!(ub.value, 1.0);
        assert_eq!(lower_bound_cycle_time(spec.services()), 1.0);
    }

    #[test]
    fn arc_free_upper_bound_collapses_to_the_lower_bound() {
        let spec = NetworkSpec::new(vec![det(0.5), det(3.0)], vec![]).unwrap();
        let net = compile(&spec).unwrap();
        let ub = upper_bound_cycle_time(&net, spec.services(), 10, 1).unwrap();
        assert_eq!(ub.value, lower_bound_cycle_time(spec.services()));
    }

    #[test]
    fn exponential_tandem_upper_bound_near_three_halves() {
        // Entry (1,2) of the expectation matrix is E[max(τ1, τ2)] = 3/2
        // for two independent exponentials with mean 1.
        let (net, services) = tandem([exp(1.0), exp(1.0)]);
        let ub = upper_bound_cycle_time(&net, &services, 20_000, 5).unwrap();
        assert_eq!(ub.method, BoundMethod::MonteCarlo);
        assert!(
            (ub.value - 1.5).abs() <= 3.0 * ub.value_std_error,
            "value {} se {}",
            ub.value,
            ub.value_std_error
        );
    }

    #[test]
    fn limit_matrix_for_deterministic_tandem_is_exact_in_drift() {
        let (net, services) = tandem([det(1.0), det(2.0)]);
        let est = estimate_limit_matrix(&net, &services, 200, 2, 3).unwrap();
        assert_eq!(est.drift.get(0, 0).value(), 1.0);
        assert_eq!(est.drift.get(0, 1).value(), 2.0);
        assert_eq!(est.drift.get(1, 1).value(), 2.0);
        assert!(est.drift.get(1, 0).is_eps());
        // Plain mean carries the O(1/K) offset on the off-diagonal entry.
        assert!((est.mean.get(0, 1).value() - (2.0 + 1.0 / 200.0)).abs() < 1e-12);
    }

    #[test]
    fn single_node_limit_is_the_mean_service_time() {
        let spec = NetworkSpec::new(vec![exp(2.0)], vec![]).unwrap();
        let net = compile(&spec).unwrap();
        let est = estimate_limit_matrix(&net, spec.services(), 4000, 16, 9).unwrap();
        let se = est.drift_std_error.get(0, 0).value();
        assert!((est.drift.get(0, 0).value() - 2.0).abs() <= 4.0 * se);
    }

    #[test]
    fn bounds_report_deterministic_tandem_all_flags_pass() {
        let (net, services) = tandem([det(1.0), det(2.0)]);
        let cfg = SimulationConfig {
            horizon: 1000,
            replications: 1,
            seed: 7,
            ..Default::default()
        };
        let gamma = estimate_cycle_time(&net, &services, &cfg).unwrap();
        let bounds_cfg = BoundsConfig {
            samples: 10,
            limit_horizon: 100,
            limit_replications: 2,
            ..Default::default()
        };
        let report = bounds_report(&net, &services, &gamma, &bounds_cfg).unwrap();
        assert_eq!(report.lower, 2.0);
        assert_eq!(report.upper, 2.0);
        assert!(report.flags.all(), "{:?}", report.flags);
    }

    #[test]
    fn bounds_report_exponential_tandem_sandwich() {
        let (net, services) = tandem([exp(1.0), exp(1.0)]);
        let cfg = SimulationConfig {
            horizon: 2000,
            replications: 8,
            seed: 13,
            ..Default::default()
        };
        let gamma = estimate_cycle_time(&net, &services, &cfg).unwrap();
        let bounds_cfg = BoundsConfig {
            samples: 20_000,
            seed: 13,
            limit_horizon: 1000,
            limit_replications: 8,
            ..Default::default()
        };
        let report = bounds_report(&net, &services, &gamma, &bounds_cfg).unwrap();
        assert_eq!(report.lower, 1.0);
        assert!((report.upper - 1.5).abs() < 0.05);
        assert!(report.flags.all(), "{:?}", report.flags);
    }

    #[test]
    fn bounds_report_rejects_mismatched_networks() {
        let (net_a, services_a) = tandem([det(1.0), det(2.0)]);
        let (net_b, services_b) = tandem([det(1.0), det(3.0)]);
        let cfg = SimulationConfig {
            horizon: 100,
            replications: 1,
            seed: 1,
            ..Default::default()
        };
        let gamma = estimate_cycle_time(&net_a, &services_a, &cfg).unwrap();
        let err = bounds_report(&net_b, &services_b, &gamma, &BoundsConfig::default());
        assert!(matches!(err, Err(AnalysisError::NetworkMismatch { .. })));
    }

    #[test]
    fn argument_validation() {
        let (net, services) = tandem([det(1.0), det(2.0)]);
        let bad_cfg = SimulationConfig {
            horizon: 0,
            ..Default::default()
        };
        assert!(estimate_cycle_time(&net, &services, &bad_cfg).is_err());
        let bad_conf = SimulationConfig {
            confidence: 1.5,
            ..Default::default()
        };
        assert!(estimate_cycle_time(&net, &services, &bad_conf).is_err());
        assert!(estimate_limit_matrix(&net, &services, 1, 1, 0).is_err());
        assert!(convergence_medians(&net, &services, &[], 4, 0).is_err());
    }
}
