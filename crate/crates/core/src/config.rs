//! Experiment configuration files.
//!
//! Configs are TOML. [`ExperimentConfig`] mirrors the file one-to-one so it
//! round-trips through [`ExperimentConfig::to_toml`]; [`ExperimentConfig::resolve`]
//! turns it into the runnable [`Experiment`], reporting every validation
//! failure with its field path. Relative `graph_file` and Weibull trace paths
//! are resolved against the config file's directory.
//!
//! ```toml
//! name = "demo"
//! seed = 7
//! horizon = 100
//!
//! [network]
//! agents = 3
//! edges = [[0, 1], [1, 2], [0, 2]]
//!
//! [[agents]]
//! kind = "thermal"
//! eta = 0.1
//! zeta = 1.0
//! xi = 0.0
//! lo = 0.0
//! hi = 10.0
//! # ... one entry per agent, or a `thermal_range` block sampling `count` stations
//!
//! [demand]
//! kind = "gaussian"
//! mean = 5.0
//! stddev = 1.0
//!
//! [attack]
//! kind = "none"
//!
//! [algorithm]
//! kind = "attack_free"
//! alpha = 1.0
//! beta = 1.0
//! theta = 0.01
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregation::TauStrategy;
use crate::attacks::{AttackKind, AttackSpec};
use crate::dispatch::{BoxConstraint, CostModel, DemandProcess, ThermalCost, WeibullParams, WeibullProcess, WindCost};
use crate::engine::{Agent, Algorithm, Problem, RunConfig};
use crate::rng::{rng_stream, Domain};
use crate::topology::{build_metropolis, Graph, NetworkSpec, RuleKind, TopologyError, WeightMatrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
    #[error("cannot serialize config: {0}")]
    Serialize(String),
}

impl ConfigError {
    /// Field errors, empty for non-validation failures.
    pub fn field_errors(&self) -> &[FieldError] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub network: NetworkConfig,
    pub agents: Vec<AgentConfig>,
    pub demand: DemandConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weibull: Option<WeibullConfig>,
    pub attack: AttackConfig,
    pub algorithm: AlgorithmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    pub byzantine: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trim_budget: Option<TrimBudgetConfig>,
    #[serde(default)]
    pub weights: WeightScheme,
}

/// Per-agent trim budgets; defaults to each agent's Byzantine neighbor count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrimBudgetConfig {
    Rule(BudgetRule),
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    /// Each agent's budget equals its number of Byzantine neighbors.
    ByzantineNeighbors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    #[default]
    Metropolis,
    /// `1/(|N_i|+1)` over each closed neighborhood.
    UniformClosed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentConfig {
    Thermal {
        eta: f64,
        zeta: f64,
        xi: f64,
        lo: f64,
        hi: f64,
    },
    Wind {
        rho: f64,
        sigma_ue: f64,
        sigma_oe: f64,
        v_in: f64,
        v_out: f64,
        v_r: f64,
        p_r: f64,
        lo: f64,
        hi: f64,
    },
    /// `count` thermal stations with coefficients and bounds drawn uniformly
    /// from the given ranges; `hi` is drawn from `[max(lo, hi[0]), hi[1]]`.
    ThermalRange {
        count: usize,
        eta: [f64; 2],
        zeta: [f64; 2],
        xi: [f64; 2],
        lo: [f64; 2],
        hi: [f64; 2],
        sample_seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandConfig {
    Gaussian { mean: f64, stddev: f64 },
    Trace { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeibullConfig {
    Uniform {
        scale: [f64; 2],
        shape: [f64; 2],
    },
    Fixed {
        scale: f64,
        shape: f64,
    },
    /// CSV with header `scale,shape`, one row per entry; `#` lines are
    /// comments.
    Trace {
        file: PathBuf,
        steps_per_entry: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackName {
    LargeValue,
    SmallValue,
    Gaussian,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: AttackName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stddev: Option<f64>,
    #[serde(default)]
    pub per_target: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    AttackFree,
    Resilient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauConfig {
    Oracle,
    Quantile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleKind>,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_divisor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauConfig>,
}

/// A validated, runnable experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub seed: u64,
    pub network: NetworkSpec,
    pub problem: Problem,
    pub attack: AttackSpec,
    pub run: RunConfig,
    pub output_dir: PathBuf,
    /// True when the SCC clipping radius falls back to the data-driven
    /// default because the config did not choose one.
    pub tau_defaulted: bool,
    /// SHA-256 of the canonical serialization of the config.
    pub config_hash: String,
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<(ExperimentConfig, Experiment), ConfigError> {
    let config = ExperimentConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let experiment = config.resolve(base)?;
    Ok((config, experiment))
}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, path: impl Into<String>, message: impl fmt::Display) {
        self.0.push(FieldError {
            path: path.into(),
            message: message.to_string(),
        });
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Serialize(e.to_string()))
    }

    pub fn hash(&self) -> Result<String, ConfigError> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Validates every section and builds the runnable experiment.
    pub fn resolve(&self, base_dir: &Path) -> Result<Experiment, ConfigError> {
        let mut errors = Errors(Vec::new());
        let network = self.resolve_network(base_dir, &mut errors);
        let agents = self.resolve_agents(&mut errors);
        let demand = self.resolve_demand(&mut errors);
        let weibull = self.resolve_weibull(base_dir, agents.as_deref(), &mut errors);
        let (run, tau_defaulted) = self.resolve_algorithm(&mut errors);
        let attack = self.resolve_attack(&mut errors);

        if self.seed > i64::MAX as u64 {
            errors.push(
                "seed",
                format!("must be at most {} to be stored in TOML, got {}", i64::MAX, self.seed),
            );
        }
        if let (Some(net), Some(agents)) = (&network, &agents) {
            if net.agent_count() != agents.len() {
                errors.push(
                    "agents",
                    format!(
                        "{} agents configured for a {}-agent network",
                        agents.len(),
                        net.agent_count()
                    ),
                );
            }
        }
        let has_wind = agents.as_ref().is_some_and(|a| a.iter().any(|x| x.cost.is_wind()));
        if let (true, Some(steps)) = (has_wind, weibull.as_ref().and_then(WeibullProcess::steps)) {
            if steps <= self.horizon {
                errors.push(
                    "weibull.file",
                    format!(
                        "trace covers {steps} steps, run needs {} (t = 0..={})",
                        self.horizon + 1,
                        self.horizon
                    ),
                );
            }
        }
        if let (Some(net), Some(agents), Some(demand)) = (&network, &agents, &demand) {
            if net.agent_count() == agents.len() {
                self.check_feasibility(net, agents, demand, &mut errors);
            }
        }

        if !errors.0.is_empty() {
            return Err(ConfigError::Invalid(errors.0));
        }
        let network = network.expect("validated");
        let attack = AttackSpec {
            kind: attack.expect("validated"),
            per_target: self.attack.per_target,
            byzantine: network.byzantine.clone(),
            dim: 1,
        };
        Ok(Experiment {
            name: self.name.clone(),
            seed: self.seed,
            problem: Problem {
                agents: agents.expect("validated"),
                demand: demand.expect("validated"),
                weibull: weibull.unwrap_or(WeibullProcess::Fixed(WeibullParams { scale: 1.0, shape: 1.0 })),
            },
            network,
            attack,
            run: run.expect("validated"),
            output_dir: self
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out").join(&self.name)),
            tau_defaulted,
            config_hash: self.hash()?,
        })
    }

    fn resolve_network(&self, base_dir: &Path, errors: &mut Errors) -> Option<NetworkSpec> {
        let net = &self.network;
        let graph = match (&net.graph_file, net.agents, &net.edges) {
            (Some(file), None, None) => {
                let path = base_dir.join(file);
                match std::fs::read_to_string(&path) {
                    Ok(text) => Graph::parse_edge_list(&text)
                        .map_err(|e| errors.push("network.graph_file", e))
                        .ok(),
                    Err(e) => {
                        errors.push("network.graph_file", format!("cannot read {}: {e}", path.display()));
                        None
                    }
                }
            }
            (None, Some(n), Some(edges)) => {
                let pairs: Vec<(usize, usize)> = edges.iter().map(|[i, j]| (*i, *j)).collect();
                Graph::new(n, &pairs).map_err(|e| errors.push("network.edges", e)).ok()
            }
            _ => {
                errors.push("network", "set either graph_file or both agents and edges");
                None
            }
        }?;
        let n = graph.agent_count();
        let byzantine: BTreeSet<usize> = net.byzantine.iter().copied().collect();
        if byzantine.len() != net.byzantine.len() {
            errors.push("network.byzantine", "duplicate agent ids");
        }
        let weights = match net.weights {
            WeightScheme::Metropolis => build_metropolis(&graph).ok()?,
            WeightScheme::UniformClosed => WeightMatrix::from_rows(
                (0..n)
                    .map(|i| {
                        let w = 1.0 / (graph.degree(i) + 1) as f64;
                        (0..n)
                            .map(|j| if i == j || graph.has_edge(i, j) { w } else { 0.0 })
                            .collect()
                    })
                    .collect(),
            ),
        };
        let budget = match &net.trim_budget {
            Some(TrimBudgetConfig::Explicit(v)) => v.clone(),
            Some(TrimBudgetConfig::Rule(BudgetRule::ByzantineNeighbors)) | None => (0..n)
                .map(|i| graph.neighbors(i).iter().filter(|j| byzantine.contains(j)).count())
                .collect(),
        };
        let spec = NetworkSpec {
            graph,
            weights,
            byzantine,
            trim_budget: budget,
        };
        let problems = spec.violations();
        if problems.is_empty() {
            Some(spec)
        } else {
            for e in problems {
                let path = match e {
                    TopologyError::UnknownByzantine(_) | TopologyError::NoBenignAgents => "network.byzantine",
                    TopologyError::BudgetLength { .. }
                    | TopologyError::BudgetTooSmall { .. }
                    | TopologyError::NeighborhoodTooSmall { .. } => "network.trim_budget",
                    _ => "network",
                };
                errors.push(path, e);
            }
            None
        }
    }

    fn resolve_agents(&self, errors: &mut Errors) -> Option<Vec<Agent>> {
        let mut out = Vec::new();
        let before = errors.0.len();
        for (k, a) in self.agents.iter().enumerate() {
            let path = format!("agents[{k}]");
            match a {
                AgentConfig::Thermal { eta, zeta, xi, lo, hi } => {
                    let cost = CostModel::Thermal(ThermalCost {
                        eta: *eta,
                        zeta: *zeta,
                        xi: *xi,
                    });
                    if let Some(agent) = build_agent(cost, *lo, *hi, &path, errors) {
                        out.push(agent);
                    }
                }
                AgentConfig::Wind {
                    rho,
                    sigma_ue,
                    sigma_oe,
                    v_in,
                    v_out,
                    v_r,
                    p_r,
                    lo,
                    hi,
                } => {
                    let cost = CostModel::Wind(WindCost {
                        rho_lin: *rho,
                        sigma_ue: *sigma_ue,
                        sigma_oe: *sigma_oe,
                        v_in: *v_in,
                        v_out: *v_out,
                        v_r: *v_r,
                        p_r: *p_r,
                    });
                    if let Some(agent) = build_agent(cost, *lo, *hi, &path, errors) {
                        out.push(agent);
                    }
                }
                AgentConfig::ThermalRange {
                    count,
                    eta,
                    zeta,
                    xi,
                    lo,
                    hi,
                    sample_seed,
                } => {
                    let mut bad = false;
                    for (name, r) in [("eta", eta), ("zeta", zeta), ("xi", xi), ("lo", lo), ("hi", hi)] {
                        if r[0] > r[1] || !r[0].is_finite() || !r[1].is_finite() {
                            errors.push(format!("{path}.{name}"), format!("range [{}, {}] is empty", r[0], r[1]));
                            bad = true;
                        }
                    }
                    if eta[0] < 0.0 {
                        errors.push(format!("{path}.eta"), "eta must be >= 0");
                        bad = true;
                    }
                    if lo[0] > hi[1] {
                        errors.push(format!("{path}.hi"), "upper bounds must reach the lower-bound range");
                        bad = true;
                    }
                    if bad {
                        continue;
                    }
                    for s in sample_thermal(*count, *eta, *zeta, *xi, *lo, *hi, *sample_seed) {
                        out.push(s);
                    }
                }
            }
        }
        (errors.0.len() == before).then_some(out)
    }

    fn resolve_demand(&self, errors: &mut Errors) -> Option<DemandProcess> {
        let d = match &self.demand {
            DemandConfig::Gaussian { mean, stddev } => DemandProcess::Gaussian {
                mean: *mean,
                stddev: *stddev,
            },
            DemandConfig::Trace { values } => {
                if values.len() <= self.horizon {
                    errors.push(
                        "demand.values",
                        format!(
                            "trace has {} entries, run needs {} (t = 0..={})",
                            values.len(),
                            self.horizon + 1,
                            self.horizon
                        ),
                    );
                }
                DemandProcess::Trace(values.clone())
            }
        };
        match d.validate() {
            Ok(()) => Some(d),
            Err(e) => {
                errors.push("demand", e);
                None
            }
        }
    }

    fn resolve_weibull(
        &self,
        base_dir: &Path,
        agents: Option<&[Agent]>,
        errors: &mut Errors,
    ) -> Option<WeibullProcess> {
        let needs = agents.is_some_and(|a| a.iter().any(|x| x.cost.is_wind()))
            || self.agents.iter().any(|a| matches!(a, AgentConfig::Wind { .. }));
        let Some(cfg) = &self.weibull else {
            if needs {
                errors.push("weibull", "wind stations need a weibull section");
            }
            return None;
        };
        let process = match cfg {
            WeibullConfig::Uniform { scale, shape } => WeibullProcess::Uniform {
                scale: (scale[0], scale[1]),
                shape: (shape[0], shape[1]),
            },
            WeibullConfig::Fixed { scale, shape } => WeibullProcess::Fixed(WeibullParams {
                scale: *scale,
                shape: *shape,
            }),
            WeibullConfig::Trace { file, steps_per_entry } => {
                let path = base_dir.join(file);
                match read_weibull_trace(&path) {
                    Ok(entries) => WeibullProcess::Trace {
                        entries,
                        steps_per_entry: *steps_per_entry,
                    },
                    Err(e) => {
                        errors.push("weibull.file", e);
                        return None;
                    }
                }
            }
        };
        match process.validate() {
            Ok(()) => Some(process),
            Err(e) => {
                errors.push("weibull", e);
                None
            }
        }
    }

    fn resolve_attack(&self, errors: &mut Errors) -> Option<AttackKind> {
        let a = &self.attack;
        let need = |field: Option<f64>, name: &str, errors: &mut Errors| {
            if field.is_none() {
                errors.push(
                    format!("attack.{name}"),
                    format!("required for attack kind {:?}", a.kind),
                );
            }
            field.unwrap_or(0.0)
        };
        let before = errors.0.len();
        let kind = match a.kind {
            AttackName::LargeValue => AttackKind::LargeValue {
                value: need(a.value, "value", errors),
            },
            AttackName::SmallValue => AttackKind::SmallValue {
                value: need(a.value, "value", errors),
            },
            AttackName::Gaussian => AttackKind::Gaussian {
                mean: need(a.mean, "mean", errors),
                stddev: need(a.stddev, "stddev", errors),
            },
            AttackName::None => AttackKind::None,
        };
        let spec = AttackSpec {
            kind,
            per_target: a.per_target,
            byzantine: BTreeSet::new(),
            dim: 1,
        };
        if let Err(e) = spec.validate() {
            errors.push("attack", e);
        }
        (errors.0.len() == before).then_some(kind)
    }

    fn resolve_algorithm(&self, errors: &mut Errors) -> (Option<RunConfig>, bool) {
        let a = &self.algorithm;
        let mut tau_defaulted = false;
        let algorithm = match a.kind {
            AlgorithmName::AttackFree => {
                if a.rule.is_some() {
                    errors.push("algorithm.rule", "attack_free takes no aggregation rule");
                }
                Algorithm::AttackFree
            }
            AlgorithmName::Resilient => {
                let Some(rule) = a.rule else {
                    errors.push("algorithm.rule", "resilient needs rule = ctm_arc | ios_arc | scc_arc");
                    return (None, false);
                };
                let tau = match a.tau {
                    Some(TauConfig::Oracle) => TauStrategy::Oracle,
                    Some(TauConfig::Quantile(q)) => TauStrategy::Quantile(q),
                    None => {
                        tau_defaulted = rule == RuleKind::SccArc;
                        TauStrategy::default()
                    }
                };
                Algorithm::Resilient { rule, tau }
            }
        };
        let run = RunConfig {
            alpha: a.alpha,
            beta: a.beta,
            theta: a.theta,
            horizon: self.horizon,
            algorithm,
            dual_divisor: a.dual_divisor,
            strict_monitors: false,
        };
        let problems = run.violations();
        if problems.is_empty() {
            (Some(run), tau_defaulted)
        } else {
            for p in problems {
                errors.push("algorithm", p);
            }
            (None, tau_defaulted)
        }
    }

    /// Every realized demand must be attainable by the benign agents, or the
    /// regret oracle has no solution.
    fn check_feasibility(&self, net: &NetworkSpec, agents: &[Agent], demand: &DemandProcess, errors: &mut Errors) {
        let benign = net.benign_agents();
        let h = benign.len() as f64;
        let lo = benign.iter().map(|&i| agents[i].bounds.lo).sum::<f64>() / h;
        let hi = benign.iter().map(|&i| agents[i].bounds.hi).sum::<f64>() / h;
        let mut bad = Vec::new();
        for t in 1..=self.horizon {
            if let Ok(d) = demand.realize(self.seed, t) {
                if d < lo || d > hi {
                    bad.push((t, d));
                }
            }
        }
        if let Some(&(t, d)) = bad.first() {
            errors.push(
                "demand",
                format!(
                    "{} realized demands fall outside the benign range [{lo}, {hi}] (first: t={t}, D={d})",
                    bad.len()
                ),
            );
        }
    }
}

fn build_agent(cost: CostModel, lo: f64, hi: f64, path: &str, errors: &mut Errors) -> Option<Agent> {
    let bounds = BoxConstraint::new(lo, hi)
        .map_err(|e| errors.push(format!("{path}.lo"), e))
        .ok();
    let valid = cost.validate().map_err(|e| errors.push(path.to_string(), e)).is_ok();
    match (bounds, valid) {
        (Some(bounds), true) => Some(Agent { cost, bounds }),
        _ => None,
    }
}

/// Draws `count` thermal stations from the given ranges.
pub fn sample_thermal(
    count: usize,
    eta: [f64; 2],
    zeta: [f64; 2],
    xi: [f64; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    seed: u64,
) -> Vec<Agent> {
    (0..count)
        .map(|k| {
            let mut rng = rng_stream(seed, Domain::AgentParams, k as u64, 0);
            let mut draw = |r: [f64; 2]| r[0] + (r[1] - r[0]) * rng.random::<f64>();
            let cost = ThermalCost {
                eta: draw(eta),
                zeta: draw(zeta),
                xi: draw(xi),
            };
            let l = draw(lo);
            let u = draw([l.max(hi[0]), hi[1].max(l)]);
            Agent {
                cost: CostModel::Thermal(cost),
                bounds: BoxConstraint { lo: l, hi: u },
            }
        })
        .collect()
}

fn read_weibull_trace(path: &Path) -> Result<Vec<WeibullParams>, String> {
    #[derive(Deserialize)]
    struct Row {
        scale: f64,
        shape: f64,
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (k, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| format!("{} row {}: {e}", path.display(), k + 1))?;
        out.push(WeibullParams {
            scale: row.scale,
            shape: row.shape,
        });
    }
    Ok(out)
}
