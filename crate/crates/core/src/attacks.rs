//! Byzantine message generation.
//!
//! Byzantine agents are stateless message sources. Constant attacks send the
//! same value every step; Gaussian attacks draw one value per `(agent, t)`
//! and broadcast it to all neighbors unless `per_target` is set.

use std::collections::BTreeSet;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{rng_stream, Domain};
use crate::vector::DualVector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttackError {
    #[error("agent {0} is benign and sends no attack messages")]
    BenignAgent(usize),
    #[error("gaussian attack needs stddev >= 0 and a finite mean, got mean {mean}, stddev {stddev}")]
    InvalidGaussian { mean: f64, stddev: f64 },
    #[error("constant attack value must be finite, got {0}")]
    NonFinite(f64),
}

/// The message a Byzantine agent sends in place of its dual variable.
///
/// The naming of the two constant kinds follows their effect on the benign
/// duals rather than the magnitude of the value sent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AttackKind {
    LargeValue { value: f64 },
    SmallValue { value: f64 },
    Gaussian { mean: f64, stddev: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Draw a separate Gaussian value for every receiving neighbor.
    pub per_target: bool,
    pub byzantine: BTreeSet<usize>,
    /// Dimension of the sent vectors.
    pub dim: usize,
}

impl AttackSpec {
    pub fn validate(&self) -> Result<(), AttackError> {
        match self.kind {
            AttackKind::LargeValue { value } | AttackKind::SmallValue { value } if !value.is_finite() => {
                Err(AttackError::NonFinite(value))
            }
            AttackKind::Gaussian { mean, stddev } if !(mean.is_finite() && stddev >= 0.0 && stddev.is_finite()) => {
                Err(AttackError::InvalidGaussian { mean, stddev })
            }
            _ => Ok(()),
        }
    }
}

/// The message Byzantine agent `j` sends to `target` at step `t`.
///
/// With [`AttackKind::None`] the agent sends `honest`, its would-be benign
/// dual value, so the run measures the cost of Byzantine crash-free presence.
pub fn byzantine_message(
    spec: &AttackSpec,
    seed: u64,
    j: usize,
    t: usize,
    target: usize,
    honest: &DualVector,
) -> Result<DualVector, AttackError> {
    if !spec.byzantine.contains(&j) {
        return Err(AttackError::BenignAgent(j));
    }
    match spec.kind {
        AttackKind::LargeValue { value } | AttackKind::SmallValue { value } => {
            Ok(DualVector::new(vec![value; spec.dim]))
        }
        AttackKind::Gaussian { mean, stddev } => {
            let normal = Normal::new(mean, stddev).map_err(|_| AttackError::InvalidGaussian { mean, stddev })?;
            let stream_t = if spec.per_target {
                // Keep per-target streams disjoint from the broadcast one.
                ((target as u64 + 1) << 40) | t as u64
            } else {
                t as u64
            };
            let mut rng = rng_stream(seed, Domain::Attack, j as u64, stream_t);
            Ok(DualVector::new(
                (0..spec.dim).map(|_| normal.sample(&mut rng)).collect(),
            ))
        }
        AttackKind::None => Ok(honest.clone()),
    }
}
