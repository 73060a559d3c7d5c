//! Service-time distributions and the seeded per-epoch sampler.
//!
//! Each node carries one distribution; all four families have nonnegative
//! support and finite mean and variance, so the moment preconditions of the
//! limit and bound results hold by construction. Exact first and second
//! moments are exposed in closed form for the bound formulas.

use maxplus::Diagonal64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("deterministic service time must be nonnegative, got {0}")]
    NegativeConstant(f64),
    #[error("mean must be positive and finite, got {0}")]
    BadMean(f64),
    #[error("uniform bounds must satisfy 0 <= lo <= hi, got [{lo}, {hi}]")]
    BadUniformRange { lo: f64, hi: f64 },
    #[error("erlang shape must be >= 1, got {0}")]
    BadShape(u32),
}

/// A node's service-time distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ServiceDistribution {
    /// Always `c`, `c >= 0`.
    Deterministic { c: f64 },
    /// Exponential with the given mean.
    Exponential { mean: f64 },
    /// Uniform on `[lo, hi]`, `0 <= lo <= hi`.
    Uniform { lo: f64, hi: f64 },
    /// Sum of `shape` exponential stages with total mean `mean`.
    Erlang { shape: u32, mean: f64 },
}

impl ServiceDistribution {
    pub fn validate(&self) -> Result<(), DistributionError> {
        match *self {
            Self::Deterministic { c } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(DistributionError::NegativeConstant(c));
                }
            }
            Self::Exponential { mean } => {
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(DistributionError::BadMean(mean));
                }
            }
            Self::Uniform { lo, hi } => {
                if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                    return Err(DistributionError::BadUniformRange { lo, hi });
                }
            }
            Self::Erlang { shape, mean } => {
                if shape < 1 {
                    return Err(DistributionError::BadShape(shape));
                }
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(DistributionError::BadMean(mean));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Deterministic { c } => c,
            Self::Exponential { mean } => mean,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Erlang { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Deterministic { .. } => 0.0,
            Self::Exponential { mean } => mean * mean,
            Self::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Self::Erlang { shape, mean } => mean * mean / shape as f64,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::Deterministic { .. })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Self::Deterministic { c } => c,
            Self::Exponential { mean } => {
                Exp::new(1.0 / mean).expect("validated rate").sample(rng)
            }
            Self::Uniform { lo, hi } => Uniform::new_inclusive(lo, hi)
                .expect("validated range")
                .sample(rng),
            Self::Erlang { shape, mean } => {
                let scale = mean / shape as f64;
                Gamma::new(shape as f64, scale)
                    .expect("validated shape/scale")
                    .sample(rng)
            }
        }
    }
}

/// True when every node is deterministic, in which case expectation bounds
/// are computed exactly rather than by Monte Carlo.
pub fn all_deterministic(services: &[ServiceDistribution]) -> bool {
    services.iter().all(ServiceDistribution::is_deterministic)
}

/// Diagonal of exact means, `diag(E[τ_1], …, E[τ_n])`.
pub fn mean_diagonal(services: &[ServiceDistribution]) -> Diagonal64 {
    Diagonal64::from_values(&services.iter().map(ServiceDistribution::mean).collect::<Vec<_>>())
        .expect("means are finite")
}

/// Exact per-node variances.
pub fn variance_vector(services: &[ServiceDistribution]) -> Vec<f64> {
    services.iter().map(ServiceDistribution::variance).collect()
}

/// Seeded source of per-epoch service-time diagonals.
///
/// Node `i` draws from its own substream seeded by
/// `derive(master, DOMAIN_NODE, i)`, so samples are i.i.d. across epochs,
/// nodes are mutually independent, and adding a node leaves the other
/// streams untouched. The same master seed always replays the same
/// sequence of diagonals.
#[derive(Debug, Clone)]
pub struct ServiceSampler {
    streams: Vec<(ServiceDistribution, ChaCha8Rng)>,
    master_seed: u64,
    epoch: u64,
}

impl ServiceSampler {
    pub fn new(
        services: &[ServiceDistribution],
        master_seed: u64,
    ) -> Result<Self, DistributionError> {
        for s in services {
            s.validate()?;
        }
        let streams = services
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let seed = seeds::derive(master_seed, seeds::DOMAIN_NODE, i as u64);
                (*s, ChaCha8Rng::seed_from_u64(seed))
            })
            .collect();
        Ok(ServiceSampler {
            streams,
            master_seed,
            epoch: 0,
        })
    }

    pub fn order(&self) -> usize {
        self.streams.len()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Number of epochs drawn so far.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Draws the next epoch's service diagonal.
    pub fn next_epoch(&mut self) -> Diagonal64 {
        self.epoch += 1;
        let values: Vec<f64> = self
            .streams
            .iter_mut()
            .map(|(dist, rng)| dist.sample(rng))
            .collect();
        Diagonal64::from_values(&values).expect("samples are finite")
    }
}
