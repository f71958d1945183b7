//! Robust aggregation of dual variables.
//!
//! Each composed rule first applies adaptive robust clipping (ARC) to the
//! received messages, then a base rule: coordinate-wise trimmed mean (CTM),
//! iterative outlier scissor (IOS) or self-centered clipping (SCC). The
//! checkers at the bottom measure norm domination and contraction against a
//! known benign/Byzantine labelling and are meant for tests and diagnostics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::RuleKind;
use crate::vector::{weighted_mean, DualVector};

/// Slack used by [`check_property2`].
pub const PROPERTY2_SLACK: f64 = 1e-9;
/// Numerators at or below this count as zero when the benign spread is zero.
pub const DEGENERATE_TOL: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error("{rule} with budget {budget} needs at least {needed} received messages, got {received}")]
    BudgetTooLarge {
        rule: &'static str,
        budget: usize,
        received: usize,
        needed: usize,
    },
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("message dimension {got} differs from own dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("oracle clipping radius needs at least one Byzantine neighbor with positive weight")]
    NoByzantineMass,
    #[error("oracle clipping radius needs the benign labelling of received messages")]
    MissingLabels,
    #[error("clipping radius must be >= 0, got {0}")]
    NegativeTau(f64),
    #[error("quantile must lie in [0, 1], got {0}")]
    InvalidQuantile(f64),
    #[error("benign spread is zero but aggregate deviates by {0:e}")]
    DegenerateContraction(f64),
    #[error("weighted average cannot tolerate a nonzero budget ({0})")]
    WeightedAverageBudget(usize),
}

/// How SCC picks its clipping radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "q")]
pub enum TauStrategy {
    /// Radius from the true benign labelling (diagnostic).
    Oracle,
    /// The q-quantile of distances from own to the received messages.
    Quantile(f64),
}

impl Default for TauStrategy {
    fn default() -> Self {
        TauStrategy::Quantile(0.5)
    }
}

/// A configured rule for one agent. `weights` has one entry per received
/// message, in the order messages are passed to [`aggregate`].
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationRule {
    pub kind: RuleKind,
    pub budget: usize,
    pub tau: TauStrategy,
    pub own_weight: f64,
    pub weights: Vec<f64>,
}

fn check_inputs(own: &DualVector, received: &[DualVector]) -> Result<(), AggregationError> {
    for x in received {
        if x.dim() != own.dim() {
            return Err(AggregationError::DimensionMismatch {
                got: x.dim(),
                expected: own.dim(),
            });
        }
    }
    Ok(())
}

fn check_weights(weights: &[f64], received: &[DualVector]) -> Result<(), AggregationError> {
    if weights.len() != received.len() {
        return Err(AggregationError::LengthMismatch {
            what: "weight row",
            got: weights.len(),
            expected: received.len(),
        });
    }
    Ok(())
}

/// Clips every received message to the `(b+1)`-th largest received norm.
pub fn arc_preprocess(received: &[DualVector], b: usize) -> Result<Vec<DualVector>, AggregationError> {
    if b >= received.len() {
        return Err(AggregationError::BudgetTooLarge {
            rule: "arc",
            budget: b,
            received: received.len(),
            needed: b + 1,
        });
    }
    let norms: Vec<f64> = received.iter().map(DualVector::norm).collect();
    let mut order: Vec<usize> = (0..received.len()).collect();
    order.sort_by(|&a, &c| norms[c].total_cmp(&norms[a]));
    let threshold = norms[order[b]];
    Ok(received
        .iter()
        .zip(&norms)
        .map(|(x, &n)| {
            if n == 0.0 || n <= threshold {
                x.clone()
            } else {
                x.scaled(threshold / n)
            }
        })
        .collect())
}

/// Coordinate-wise trimmed mean: per coordinate, drops the `b` largest and
/// `b` smallest received values and averages the rest together with own.
pub fn ctm(own: &DualVector, received: &[DualVector], b: usize) -> Result<DualVector, AggregationError> {
    check_inputs(own, received)?;
    if received.len() < 2 * b + 1 {
        return Err(AggregationError::BudgetTooLarge {
            rule: "ctm",
            budget: b,
            received: received.len(),
            needed: 2 * b + 1,
        });
    }
    let kept = received.len() - 2 * b;
    let divisor = (kept + 1) as f64;
    let mut out = Vec::with_capacity(own.dim());
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(received.len());
    for k in 0..own.dim() {
        column.clear();
        column.extend(received.iter().enumerate().map(|(idx, x)| (x[k], idx)));
        column.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
        let sum: f64 = column[b..b + kept].iter().map(|(v, _)| v).sum();
        out.push((sum + own[k]) / divisor);
    }
    Ok(DualVector::new(out))
}

/// Iterative outlier scissor: `b` times, removes the received message
/// farthest from the current weighted average.
pub fn ios(
    own: &DualVector,
    received: &[DualVector],
    own_weight: f64,
    weights: &[f64],
    b: usize,
) -> Result<DualVector, AggregationError> {
    check_inputs(own, received)?;
    check_weights(weights, received)?;
    if b >= received.len() {
        return Err(AggregationError::BudgetTooLarge {
            rule: "ios",
            budget: b,
            received: received.len(),
            needed: b + 1,
        });
    }
    let mut alive = vec![true; received.len()];
    let current = |alive: &[bool]| {
        let items = std::iter::once((own_weight, own)).chain(
            received
                .iter()
                .zip(weights)
                .zip(alive)
                .filter(|(_, &a)| a)
                .map(|((x, &w), _)| (w, x)),
        );
        weighted_mean(items, own.dim())
    };
    for _ in 0..b {
        let avg = current(&alive);
        let mut worst: Option<(usize, f64)> = None;
        for (idx, x) in received.iter().enumerate().filter(|(i, _)| alive[*i]) {
            let d = x.distance_sq(&avg);
            if worst.is_none_or(|(_, best)| d > best) {
                worst = Some((idx, d));
            }
        }
        if let Some((idx, _)) = worst {
            alive[idx] = false;
        }
    }
    Ok(current(&alive))
}

/// Self-centered clipping: each received `x` becomes
/// `own + min(1, τ/‖x−own‖)(x−own)`, followed by a weighted average.
pub fn scc(
    own: &DualVector,
    received: &[DualVector],
    own_weight: f64,
    weights: &[f64],
    tau: f64,
) -> Result<DualVector, AggregationError> {
    check_inputs(own, received)?;
    check_weights(weights, received)?;
    if tau.is_nan() || tau < 0.0 {
        return Err(AggregationError::NegativeTau(tau));
    }
    let clipped: Vec<DualVector> = received
        .iter()
        .map(|x| {
            let diff = x.sub(own);
            let d = diff.norm();
            if d <= tau || d == 0.0 {
                x.clone()
            } else {
                let mut y = own.clone();
                y.add_scaled(tau / d, &diff);
                y
            }
        })
        .collect();
    let items = std::iter::once((own_weight, own)).chain(weights.iter().copied().zip(&clipped));
    Ok(weighted_mean(items, own.dim()))
}

/// Clipping radius for [`scc`]. `benign` marks which received messages are
/// benign and is required by the oracle strategy.
pub fn scc_tau(
    own: &DualVector,
    received: &[DualVector],
    weights: &[f64],
    strategy: TauStrategy,
    benign: Option<&[bool]>,
) -> Result<f64, AggregationError> {
    check_inputs(own, received)?;
    check_weights(weights, received)?;
    match strategy {
        TauStrategy::Oracle => {
            let mask = benign.ok_or(AggregationError::MissingLabels)?;
            if mask.len() != received.len() {
                return Err(AggregationError::LengthMismatch {
                    what: "benign mask",
                    got: mask.len(),
                    expected: received.len(),
                });
            }
            let mut byz_mass = 0.0;
            let mut spread = 0.0;
            for ((x, &w), &good) in received.iter().zip(weights).zip(mask) {
                if good {
                    spread += w * own.distance_sq(x);
                } else {
                    byz_mass += w;
                }
            }
            if byz_mass <= 0.0 {
                return Err(AggregationError::NoByzantineMass);
            }
            Ok((spread / byz_mass).sqrt())
        }
        TauStrategy::Quantile(q) => {
            if !(0.0..=1.0).contains(&q) {
                return Err(AggregationError::InvalidQuantile(q));
            }
            let mut d: Vec<f64> = received.iter().map(|x| own.distance(x)).collect();
            if d.is_empty() {
                return Ok(0.0);
            }
            d.sort_by(f64::total_cmp);
            let pos = q * (d.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            Ok(d[lo] + (pos - lo as f64) * (d[hi] - d[lo]))
        }
    }
}

/// Applies `rule`. `benign` is only consulted for the oracle clipping radius;
/// when it is absent or the agent has no Byzantine neighbors the oracle
/// falls back to the median distance.
pub fn aggregate(
    rule: &AggregationRule,
    own: &DualVector,
    received: &[DualVector],
    benign: Option<&[bool]>,
) -> Result<DualVector, AggregationError> {
    check_inputs(own, received)?;
    check_weights(&rule.weights, received)?;
    match rule.kind {
        RuleKind::WeightedAverage => {
            if rule.budget != 0 {
                return Err(AggregationError::WeightedAverageBudget(rule.budget));
            }
            let items = std::iter::once((rule.own_weight, own)).chain(rule.weights.iter().copied().zip(received));
            Ok(weighted_mean(items, own.dim()))
        }
        RuleKind::CtmArc => ctm(own, &arc_preprocess(received, rule.budget)?, rule.budget),
        RuleKind::IosArc => ios(
            own,
            &arc_preprocess(received, rule.budget)?,
            rule.own_weight,
            &rule.weights,
            rule.budget,
        ),
        RuleKind::SccArc => {
            let clipped = arc_preprocess(received, rule.budget)?;
            let tau = match scc_tau(own, &clipped, &rule.weights, rule.tau, benign) {
                Err(AggregationError::NoByzantineMass | AggregationError::MissingLabels)
                    if rule.tau == TauStrategy::Oracle =>
                {
                    scc_tau(own, &clipped, &rule.weights, TauStrategy::default(), None)?
                }
                other => other?,
            };
            scc(own, &clipped, rule.own_weight, &rule.weights, tau)
        }
    }
}

fn max_benign_norm(own: &DualVector, received: &[DualVector], benign: &[bool]) -> f64 {
    received
        .iter()
        .zip(benign)
        .filter(|(_, &good)| good)
        .map(|(x, _)| x.norm())
        .fold(own.norm(), f64::max)
}

/// Norm domination: `‖AGG‖ ≤ max` benign closed-neighborhood norm, with slack
/// [`PROPERTY2_SLACK`].
pub fn check_property2(output: &DualVector, own: &DualVector, received: &[DualVector], benign: &[bool]) -> bool {
    output.norm() <= max_benign_norm(own, received, benign) + PROPERTY2_SLACK
}

/// `‖AGG − λ̄‖² / Σ_j e_j ‖λ_j − λ̄‖²` where `λ̄ = Σ_j e_j λ_j` runs over own
/// and the benign received messages. `e_received` entries of Byzantine
/// messages are ignored.
pub fn measure_contraction(
    output: &DualVector,
    own: &DualVector,
    received: &[DualVector],
    benign: &[bool],
    e_own: f64,
    e_received: &[f64],
) -> Result<f64, AggregationError> {
    check_inputs(own, received)?;
    if benign.len() != received.len() || e_received.len() != received.len() {
        return Err(AggregationError::LengthMismatch {
            what: "benign mask or diagnostic row",
            got: benign.len().min(e_received.len()),
            expected: received.len(),
        });
    }
    let members: Vec<(f64, &DualVector)> = std::iter::once((e_own, own))
        .chain(
            received
                .iter()
                .zip(e_received)
                .zip(benign)
                .filter(|(_, &good)| good)
                .map(|((x, &e), _)| (e, x)),
        )
        .collect();
    let center = weighted_mean(members.iter().copied(), own.dim());
    let numerator = output.distance_sq(&center);
    let denominator: f64 = members.iter().map(|(e, x)| e * x.distance_sq(&center)).sum();
    if denominator == 0.0 {
        if numerator <= DEGENERATE_TOL {
            return Ok(0.0);
        }
        return Err(AggregationError::DegenerateContraction(numerator));
    }
    Ok(numerator / denominator)
}
