//! The synchronous primal-dual step loop.
//!
//! Every agent starts at `P = λ = 0` with `D⁰ = 0`. In step `t` each agent
//! takes a projected gradient step on its cost, a regularized dual ascent
//! half step, broadcasts the half-step dual, and replaces its dual with an
//! aggregate of what it received. Byzantine agents broadcast attack messages
//! instead. The loop records rows `0..=T` and evaluates invariant monitors
//! after every dual half step.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{aggregate, AggregationError, AggregationRule, TauStrategy};
use crate::attacks::{byzantine_message, AttackError, AttackSpec};
use crate::dispatch::{BoxConstraint, CostModel, DemandProcess, DispatchError, StepCost, WeibullProcess};
use crate::topology::{
    benign_subnetwork, ctm_witness, network_rho, skewness, spectral_gap, NetworkSpec, RuleKind, TopologyError,
};
use crate::vector::DualVector;

/// Absolute slack of the dual-norm monitor.
pub const DUAL_BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("step {t}: {source}")]
    Dispatch {
        t: usize,
        #[source]
        source: DispatchError,
    },
    #[error("step {t}, agent {agent}: {source}")]
    Aggregation {
        t: usize,
        agent: usize,
        #[source]
        source: AggregationError,
    },
    #[error("step {t}: {source}")]
    Attack {
        t: usize,
        #[source]
        source: AttackError,
    },
    #[error("network: {0}")]
    Topology(#[from] TopologyError),
    #[error("{0}")]
    Monitor(MonitorViolation),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub cost: CostModel,
    pub bounds: BoxConstraint,
}

/// The dispatch problem shared by all runs on a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub agents: Vec<Agent>,
    pub demand: DemandProcess,
    pub weibull: WeibullProcess,
}

impl Problem {
    pub fn has_wind(&self) -> bool {
        self.agents.iter().any(|a| a.cost.is_wind())
    }

    /// Cost functions of `agents` at step `t`.
    pub fn step_costs(&self, seed: u64, t: usize, agents: &[usize]) -> Result<Vec<StepCost>, DispatchError> {
        let weibull = if self.has_wind() {
            Some(self.weibull.realize(seed, t)?)
        } else {
            None
        };
        agents.iter().map(|&i| self.agents[i].cost.at(weibull)).collect()
    }

    /// `D^t`, with `D⁰ = 0`.
    pub fn demand_at(&self, seed: u64, t: usize) -> Result<f64, DispatchError> {
        if t == 0 {
            Ok(0.0)
        } else {
            self.demand.realize(seed, t)
        }
    }

    pub fn boxes(&self, agents: &[usize]) -> Vec<BoxConstraint> {
        agents.iter().map(|&i| self.agents[i].bounds).collect()
    }

    /// `max_i max |P − D| / divisor` over box corners, zero, and the demand
    /// envelope including `D⁰ = 0`.
    pub fn residual_bound(&self, agents: &[usize], divisor: f64) -> f64 {
        let (d_lo, d_hi) = self.demand.envelope();
        let mut worst: f64 = 0.0;
        for &i in agents {
            let b = self.agents[i].bounds;
            for p in [b.lo, b.hi, 0.0].into_iter().filter(|p| b.contains(*p)) {
                for d in [d_lo, d_hi, 0.0] {
                    worst = worst.max((p - d).abs());
                }
            }
        }
        worst / divisor
    }

    pub fn gradient_bound(&self, agents: &[usize]) -> f64 {
        agents
            .iter()
            .map(|&i| self.agents[i].cost.gradient_bound(&self.agents[i].bounds))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Algorithm {
    AttackFree,
    Resilient { rule: RuleKind, tau: TauStrategy },
}

impl Algorithm {
    pub fn label(&self) -> String {
        match self {
            Algorithm::AttackFree => "attack_free".into(),
            Algorithm::Resilient { rule, .. } => rule.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub horizon: usize,
    pub algorithm: Algorithm,
    /// Divisor of the residual in the dual step; the total agent count when
    /// unset.
    pub dual_divisor: Option<f64>,
    pub strict_monitors: bool,
}

impl RunConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("theta", self.theta)] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be > 0, got {v}"));
            }
        }
        let product = self.beta * self.theta;
        if product.is_nan() || product >= 1.0 {
            out.push(format!(
                "beta*theta must be < 1, got {}*{} = {}",
                self.beta,
                self.theta,
                self.beta * self.theta
            ));
        }
        if let Some(m) = self.dual_divisor {
            if !(m > 0.0 && m.is_finite()) {
                out.push(format!("dual_divisor must be > 0, got {m}"));
            }
        }
        if let Algorithm::Resilient {
            tau: TauStrategy::Quantile(q),
            ..
        } = self.algorithm
        {
            if !(0.0..=1.0).contains(&q) {
                out.push(format!("tau quantile must lie in [0, 1], got {q}"));
            }
        }
        if matches!(
            self.algorithm,
            Algorithm::Resilient {
                rule: RuleKind::WeightedAverage,
                ..
            }
        ) {
            out.push("resilient algorithm needs a robust rule".into());
        }
        out
    }
}

/// `clip(p − α(∇C + λ/M), box)`
pub fn primal_step(p: f64, grad: f64, lambda: f64, alpha: f64, divisor: f64, bounds: &BoxConstraint) -> f64 {
    bounds.clip(p - alpha * (grad + lambda / divisor))
}

/// `λ + β((p − D)/M − θλ)`
pub fn dual_half_step(lambda: &DualVector, residual: f64, beta: f64, theta: f64, divisor: f64) -> DualVector {
    let mut out = lambda.scaled(1.0 - beta * theta);
    let drive = beta * residual / divisor;
    for k in 0..out.dim() {
        out[k] += drive;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorKind {
    DualBound,
    Dispersion,
    PrimalFeasibility,
    GradientBound,
}

impl fmt::Display for MonitorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonitorKind::DualBound => "dual_bound",
            MonitorKind::Dispersion => "dispersion",
            MonitorKind::PrimalFeasibility => "primal_feasibility",
            MonitorKind::GradientBound => "gradient_bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorViolation {
    pub t: usize,
    /// `None` for network-wide monitors.
    pub agent: Option<usize>,
    pub monitor: MonitorKind,
    pub value: f64,
    pub bound: f64,
}

impl fmt::Display for MonitorViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.agent {
            Some(a) => write!(
                f,
                "step {}: {} monitor failed for agent {a}: {} > {}",
                self.t, self.monitor, self.value, self.bound
            ),
            None => write!(
                f,
                "step {}: {} monitor failed: {} > {}",
                self.t, self.monitor, self.value, self.bound
            ),
        }
    }
}

/// Constants derived from the configuration before the run starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `max |P − D|/H` over benign agents.
    pub psi: f64,
    /// `max |P − D|/M` over all agents.
    pub psi_tilde: f64,
    /// Gradient bound over benign agents.
    pub phi: f64,
    /// Spectral quantity of the full mixing matrix.
    pub kappa_tilde: f64,
    /// Spectral quantity of the benign diagnostic (or trimmed-mean witness)
    /// matrix.
    pub kappa: f64,
    pub chi: f64,
    /// Contraction bound of the configured rule, when defined.
    pub rho: Option<f64>,
    pub rho_note: Option<String>,
    /// Bound enforced on every benign half-step dual norm.
    pub dual_bound: f64,
    /// Dispersion bound, when the network satisfies its precondition.
    pub dispersion_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub demand: f64,
    /// Allocations of all agents, indexed by agent id.
    pub p: Vec<f64>,
    /// Duals of all agents (first coordinate), indexed by agent id.
    pub lambda: Vec<f64>,
    /// `Σ_{i∈H} C_i^t(P_i^t)`
    pub cost: f64,
    /// `Σ_{i∈H} (P_i^t − D^t)/H`
    pub residual: f64,
    /// `Σ_{i∈H} ‖λ_i^t − mean‖²`
    pub dispersion: f64,
    /// First-target message of each Byzantine agent sent during this step.
    pub messages: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub benign: Vec<usize>,
    pub rows: Vec<StepRecord>,
    pub diagnostics: Diagnostics,
    pub violations: Vec<MonitorViolation>,
    /// Largest observed benign `‖λ^{t+1/2}‖`.
    pub max_dual_norm: f64,
}

fn diagnostics(network: &NetworkSpec, problem: &Problem, config: &RunConfig) -> Result<Diagnostics, EngineError> {
    let benign = network.benign_agents();
    let all: Vec<usize> = (0..network.agent_count()).collect();
    let h = benign.len() as f64;
    let m = network.agent_count() as f64;
    let psi = problem.residual_bound(&benign, h);
    let psi_tilde = problem.residual_bound(&all, m);
    let phi = problem.gradient_bound(&benign);
    let kappa_tilde = spectral_gap(&network.weights);
    let (sub, rho, rho_note) = match config.algorithm {
        Algorithm::AttackFree => (benign_subnetwork(network)?, None, None),
        Algorithm::Resilient { rule, .. } => {
            let sub = if rule == RuleKind::CtmArc {
                ctm_witness(network)?
            } else {
                benign_subnetwork(network)?
            };
            match network_rho(network, rule) {
                Ok(r) => (sub, Some(r), None),
                Err(e) => (sub, None, Some(e.to_string())),
            }
        }
    };
    let kappa = spectral_gap(&sub.weights);
    let chi = skewness(&sub.weights);
    let dual_bound = match config.algorithm {
        Algorithm::AttackFree => psi_tilde / config.theta,
        Algorithm::Resilient { .. } => psi / config.theta,
    };
    let dispersion_bound = rho.and_then(|rho| {
        if rho < (1.0 - kappa).powi(2) / (64.0 * h) {
            let eps = 1.0 - kappa - 8.0 * (rho * h).sqrt();
            Some(4.0 * h.powi(3) * config.beta.powi(2) * psi.powi(2) / (eps.powi(3) * m * m))
        } else {
            None
        }
    });
    Ok(Diagnostics {
        psi,
        psi_tilde,
        phi,
        kappa_tilde,
        kappa,
        chi,
        rho,
        rho_note,
        dual_bound,
        dispersion_bound,
    })
}

struct Monitors<'a> {
    strict: bool,
    violations: &'a mut Vec<MonitorViolation>,
}

impl Monitors<'_> {
    fn check(
        &mut self,
        t: usize,
        agent: Option<usize>,
        monitor: MonitorKind,
        value: f64,
        bound: f64,
    ) -> Result<(), EngineError> {
        if value <= bound {
            return Ok(());
        }
        let v = MonitorViolation {
            t,
            agent,
            monitor,
            value,
            bound,
        };
        if self.strict {
            return Err(EngineError::Monitor(v));
        }
        self.violations.push(v);
        Ok(())
    }
}

/// Runs the configured algorithm for `T` steps.
pub fn run(
    network: &NetworkSpec,
    problem: &Problem,
    attack: &AttackSpec,
    config: &RunConfig,
    seed: u64,
) -> Result<RunTrace, EngineError> {
    let n = network.agent_count();
    if problem.agents.len() != n {
        return Err(EngineError::InvalidConfig(format!(
            "{} agents in the problem, {n} in the network",
            problem.agents.len()
        )));
    }
    if let Some(first) = config.violations().into_iter().next() {
        return Err(EngineError::InvalidConfig(first));
    }
    if attack.byzantine != network.byzantine {
        return Err(EngineError::InvalidConfig(
            "attack and network disagree on the Byzantine set".into(),
        ));
    }
    let diagnostics = diagnostics(network, problem, config)?;
    let benign = network.benign_agents();
    let h = benign.len() as f64;
    let divisor = config.dual_divisor.unwrap_or(n as f64);
    let all: Vec<usize> = (0..n).collect();

    let rules: Vec<AggregationRule> = (0..n)
        .map(|i| {
            let neighbors = network.graph.neighbors(i);
            let (kind, budget, tau) = match config.algorithm {
                Algorithm::Resilient { rule, tau } if !network.is_byzantine(i) => (rule, network.trim_budget[i], tau),
                _ => (RuleKind::WeightedAverage, 0, TauStrategy::default()),
            };
            AggregationRule {
                kind,
                budget,
                tau,
                own_weight: network.weights.get(i, i),
                weights: neighbors.iter().map(|&j| network.weights.get(i, j)).collect(),
            }
        })
        .collect();
    let masks: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            network
                .graph
                .neighbors(i)
                .iter()
                .map(|&j| !network.is_byzantine(j))
                .collect()
        })
        .collect();

    let mut p = vec![0.0; n];
    let mut lambda = vec![DualVector::zeros(attack.dim.max(1)); n];
    let mut rows = Vec::with_capacity(config.horizon + 1);
    let mut violations = Vec::new();
    let mut monitors = Monitors {
        strict: config.strict_monitors,
        violations: &mut violations,
    };
    let mut max_dual_norm: f64 = 0.0;

    for t in 0..=config.horizon {
        let demand = problem
            .demand_at(seed, t)
            .map_err(|source| EngineError::Dispatch { t, source })?;
        let costs = problem
            .step_costs(seed, t, &all)
            .map_err(|source| EngineError::Dispatch { t, source })?;
        let cost: f64 = benign.iter().map(|&i| costs[i].value(p[i])).sum();
        let residual: f64 = benign.iter().map(|&i| (p[i] - demand) / h).sum();
        let mean = benign.iter().map(|&i| lambda[i][0]).sum::<f64>() / h;
        let dispersion: f64 = benign.iter().map(|&i| (lambda[i][0] - mean).powi(2)).sum();
        if let Some(bound) = diagnostics.dispersion_bound {
            monitors.check(t, None, MonitorKind::Dispersion, dispersion, bound)?;
        }
        // P⁰ = 0 is prescribed and may lie outside a box.
        for &i in benign.iter().filter(|_| t > 0) {
            let b = problem.agents[i].bounds;
            let infeasible = if b.contains(p[i]) { 0.0 } else { 1.0 };
            monitors.check(t, Some(i), MonitorKind::PrimalFeasibility, infeasible, 0.0)?;
        }
        let mut record = StepRecord {
            t,
            demand,
            p: p.clone(),
            lambda: lambda.iter().map(|l| l[0]).collect(),
            cost,
            residual,
            dispersion,
            messages: Vec::new(),
        };
        if t == config.horizon {
            rows.push(record);
            break;
        }

        let mut half = Vec::with_capacity(n);
        let mut next_p = Vec::with_capacity(n);
        for i in 0..n {
            let grad = costs[i].gradient(p[i]);
            if !network.is_byzantine(i) {
                monitors.check(
                    t,
                    Some(i),
                    MonitorKind::GradientBound,
                    grad.abs(),
                    diagnostics.phi + 1e-9,
                )?;
            }
            next_p.push(primal_step(
                p[i],
                grad,
                lambda[i][0],
                config.alpha,
                divisor,
                &problem.agents[i].bounds,
            ));
            let l = dual_half_step(&lambda[i], p[i] - demand, config.beta, config.theta, divisor);
            if !network.is_byzantine(i) {
                let norm = l.norm();
                max_dual_norm = max_dual_norm.max(norm);
                monitors.check(
                    t,
                    Some(i),
                    MonitorKind::DualBound,
                    norm,
                    diagnostics.dual_bound + DUAL_BOUND_SLACK,
                )?;
            }
            half.push(l);
        }

        for &j in &network.byzantine {
            let first = network.graph.neighbors(j).first().copied().unwrap_or(j);
            let msg = byzantine_message(attack, seed, j, t, first, &half[j])
                .map_err(|source| EngineError::Attack { t, source })?;
            record.messages.push((j, msg[0]));
        }
        rows.push(record);

        let mut next_lambda = Vec::with_capacity(n);
        for i in 0..n {
            let neighbors = network.graph.neighbors(i);
            let mut received = Vec::with_capacity(neighbors.len());
            for &j in neighbors {
                if network.is_byzantine(j) {
                    received.push(
                        byzantine_message(attack, seed, j, t, i, &half[j])
                            .map_err(|source| EngineError::Attack { t, source })?,
                    );
                } else {
                    received.push(half[j].clone());
                }
            }
            let agg = aggregate(&rules[i], &half[i], &received, Some(&masks[i]))
                .map_err(|source| EngineError::Aggregation { t, agent: i, source })?;
            next_lambda.push(agg);
        }
        p = next_p;
        lambda = next_lambda;
    }

    Ok(RunTrace {
        benign,
        rows,
        diagnostics,
        violations,
        max_dual_norm,
    })
}
