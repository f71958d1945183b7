//! Communication graphs, mixing weights and the spectral/contraction
//! diagnostics that accompany them.
//!
//! Everything here is a pure function of its inputs. The diagnostic matrices
//! ([`benign_subnetwork`], [`ctm_witness`]) are reported in run metadata and
//! used by the invariant monitors; they never enter the algorithm path.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Power iteration budget for [`spectral_gap`].
const POWER_ITERATIONS: usize = 200;
const POWER_REL_TOL: f64 = 1e-12;
/// Tolerance on row and column sums of stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("graph needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("edge ({0},{1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0},{1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("edge ({i},{j}) references an agent outside 0..{n}")]
    AgentOutOfRange { i: usize, j: usize, n: usize },
    #[error("graph is disconnected ({reached} of {n} agents reachable from agent 0)")]
    Disconnected { reached: usize, n: usize },
    #[error("benign subgraph is disconnected: {0}")]
    BenignDisconnected(Box<TopologyError>),
    #[error("byzantine agent {0} is not in the graph")]
    UnknownByzantine(usize),
    #[error("no benign agents remain")]
    NoBenignAgents,
    #[error("trim budget has {got} entries, expected {expected}")]
    BudgetLength { got: usize, expected: usize },
    #[error("agent {agent}: trim budget {budget} is below its {byzantine} byzantine neighbors")]
    BudgetTooSmall {
        agent: usize,
        budget: usize,
        byzantine: usize,
    },
    #[error("agent {agent}: {neighbors} neighbors cannot absorb trimming 2*{budget}+1")]
    NeighborhoodTooSmall {
        agent: usize,
        neighbors: usize,
        budget: usize,
    },
    #[error("weight matrix is not {kind}: {detail}")]
    NotStochastic { kind: &'static str, detail: String },
    #[error("contraction bound precondition failed: {0}")]
    RhoPrecondition(String),
    #[error("edge list parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Undirected, connected graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list; rejects self-loops, duplicates
    /// (in either orientation) and disconnected inputs.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::TooFewAgents(n));
        }
        let mut set = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(TopologyError::AgentOutOfRange { i, j, n });
            }
            if i == j {
                return Err(TopologyError::SelfLoop(i, j));
            }
            let key = (i.min(j), i.max(j));
            if !set.insert(key) {
                return Err(TopologyError::DuplicateEdge(i, j));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        let graph = Graph {
            n,
            edges: set,
            adjacency,
        };
        let reached = graph.reachable_from(0);
        if reached < n {
            return Err(TopologyError::Disconnected { reached, n });
        }
        Ok(graph)
    }

    pub fn path(n: usize) -> Result<Self, TopologyError> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self, TopologyError> {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Graph::new(n, &edges)
    }

    /// Star with agent 0 at the center.
    pub fn star(n: usize) -> Result<Self, TopologyError> {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Graph::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self, TopologyError> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::new(n, &edges)
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    fn reachable_from(&self, start: usize) -> usize {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count
    }

    /// Parses the edge-list format: first non-comment line `n <count>`,
    /// then one `i j` pair per line. `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| TopologyError::Parse {
                    line: line_no,
                    message: format!("{s:?}: {e}"),
                })
            };
            match (n, parts.as_slice()) {
                (None, ["n", count]) => n = Some(parse(count)?),
                (None, _) => {
                    return Err(TopologyError::Parse {
                        line: line_no,
                        message: "expected header `n <count>`".into(),
                    })
                }
                (Some(_), [i, j]) => edges.push((parse(i)?, parse(j)?)),
                (Some(_), _) => {
                    return Err(TopologyError::Parse {
                        line: line_no,
                        message: format!("expected `i j`, got {line:?}"),
                    })
                }
            }
        }
        let n = n.ok_or(TopologyError::Parse {
            line: 0,
            message: "missing header `n <count>`".into(),
        })?;
        Graph::new(n, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (i, j) in &self.edges {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }

    /// Induced subgraph on `keep` (ascending global ids), relabelled 0..len.
    fn induced(&self, keep: &[usize]) -> Result<Graph, TopologyError> {
        let mut local = vec![usize::MAX; self.n];
        for (k, &g) in keep.iter().enumerate() {
            local[g] = k;
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter(|(i, j)| local[*i] != usize::MAX && local[*j] != usize::MAX)
            .map(|&(i, j)| (local[i], local[j]))
            .collect();
        Graph::new(keep.len(), &edges)
    }
}

/// Square nonnegative matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    n: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), n * n, "weight matrix must be square");
        WeightMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        WeightMatrix { n, data }
    }

    /// Every entry equal to 1/n.
    pub fn averaging(n: usize) -> Self {
        WeightMatrix {
            n,
            data: vec![1.0 / n as f64; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, s) in sums.iter_mut().enumerate() {
                *s += self.get(i, j);
            }
        }
        sums
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.data.iter().all(|&v| v >= 0.0) && self.row_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.is_row_stochastic(tol) && self.column_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    /// `y = W x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl fmt::Display for WeightMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.6}")).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Metropolis constant weights: `1/(1+max(deg_i,deg_j))` on edges, the
/// diagonal takes the residual so each row sums to one.
pub fn build_metropolis(graph: &Graph) -> Result<WeightMatrix, TopologyError> {
    let n = graph.agent_count();
    let reached = graph.reachable_from(0);
    if reached < n {
        return Err(TopologyError::Disconnected { reached, n });
    }
    let mut w = WeightMatrix {
        n,
        data: vec![0.0; n * n],
    };
    for (i, j) in graph.edges() {
        let v = 1.0 / (1.0 + graph.degree(i).max(graph.degree(j)) as f64);
        w.set(i, j, v);
        w.set(j, i, v);
    }
    for i in 0..n {
        let off: f64 = graph.neighbors(i).iter().map(|&j| w.get(i, j)).sum();
        w.set(i, i, 1.0 - off);
    }
    Ok(w)
}

/// Squared operator norm of `W - (1/n) 1 1ᵀ W`, by power iteration on `AᵀA`.
/// For doubly stochastic `W` this is `‖W - (1/n) 1 1ᵀ‖²`.
pub fn spectral_gap(w: &WeightMatrix) -> f64 {
    let n = w.size();
    let col_means: Vec<f64> = w.column_sums().into_iter().map(|s| s / n as f64).collect();
    let a = WeightMatrix {
        n,
        data: (0..n * n).map(|k| w.data[k] - col_means[k % n]).collect(),
    };
    // x ↦ Aᵀ(Ax)
    let apply = |x: &[f64]| -> Vec<f64> {
        let ax = a.mul_vec(x);
        let mut out = vec![0.0; n];
        for (i, &axi) in ax.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += a.get(i, j) * axi;
            }
        }
        out
    };
    // Deterministic start with components along every direction.
    let mut x: Vec<f64> = (0..n)
        .map(|k| 1.0 + (k as f64 + 1.0).sqrt() * if k % 2 == 0 { 1.0 } else { -0.5 })
        .collect();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        let y = apply(&x);
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        x = y;
        if (next - estimate).abs() <= POWER_REL_TOL * next.abs().max(f64::MIN_POSITIVE) {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.max(0.0)
}

/// `(1/H) ‖Eᵀ1 − 1‖²`, the column-sum skewness of a row-stochastic matrix.
pub fn skewness(e: &WeightMatrix) -> f64 {
    let h = e.size() as f64;
    e.column_sums().iter().map(|c| (c - 1.0).powi(2)).sum::<f64>() / h
}

/// Graph, mixing weights, Byzantine set and per-agent trim budgets.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    pub graph: Graph,
    pub weights: WeightMatrix,
    pub byzantine: BTreeSet<usize>,
    pub trim_budget: Vec<usize>,
}

impl NetworkSpec {
    pub fn new(
        graph: Graph,
        weights: WeightMatrix,
        byzantine: BTreeSet<usize>,
        trim_budget: Vec<usize>,
    ) -> Result<Self, TopologyError> {
        let spec = NetworkSpec {
            graph,
            weights,
            byzantine,
            trim_budget,
        };
        match spec.violations().into_iter().next() {
            Some(err) => Err(err),
            None => Ok(spec),
        }
    }

    /// Metropolis weights and budgets equal to each agent's number of
    /// Byzantine neighbors.
    pub fn with_metropolis(graph: Graph, byzantine: BTreeSet<usize>) -> Result<Self, TopologyError> {
        let weights = build_metropolis(&graph)?;
        let budget = (0..graph.agent_count())
            .map(|i| graph.neighbors(i).iter().filter(|j| byzantine.contains(j)).count())
            .collect();
        NetworkSpec::new(graph, weights, byzantine, budget)
    }

    /// All invariant violations, not just the first.
    pub fn violations(&self) -> Vec<TopologyError> {
        let n = self.graph.agent_count();
        let mut out = Vec::new();
        if self.weights.size() != n || !self.weights.is_row_stochastic(STOCHASTIC_TOL) {
            out.push(TopologyError::NotStochastic {
                kind: "row stochastic",
                detail: format!("size {} for {n} agents", self.weights.size()),
            });
        }
        for &b in &self.byzantine {
            if b >= n {
                out.push(TopologyError::UnknownByzantine(b));
            }
        }
        if self.byzantine.len() >= n {
            out.push(TopologyError::NoBenignAgents);
        } else if let Err(e) = self.benign_graph() {
            out.push(TopologyError::BenignDisconnected(Box::new(e)));
        }
        if self.trim_budget.len() != n {
            out.push(TopologyError::BudgetLength {
                got: self.trim_budget.len(),
                expected: n,
            });
            return out;
        }
        for i in self.benign_agents() {
            let byz = self.byzantine_neighbor_count(i);
            let budget = self.trim_budget[i];
            if budget < byz {
                out.push(TopologyError::BudgetTooSmall {
                    agent: i,
                    budget,
                    byzantine: byz,
                });
            }
            let neighbors = self.graph.degree(i);
            if neighbors < 2 * budget + 1 {
                out.push(TopologyError::NeighborhoodTooSmall {
                    agent: i,
                    neighbors,
                    budget,
                });
            }
        }
        out
    }

    pub fn agent_count(&self) -> usize {
        self.graph.agent_count()
    }

    pub fn is_byzantine(&self, i: usize) -> bool {
        self.byzantine.contains(&i)
    }

    /// Benign agent ids in ascending order.
    pub fn benign_agents(&self) -> Vec<usize> {
        (0..self.agent_count()).filter(|i| !self.is_byzantine(*i)).collect()
    }

    pub fn byzantine_neighbor_count(&self, i: usize) -> usize {
        self.graph
            .neighbors(i)
            .iter()
            .filter(|j| self.is_byzantine(**j))
            .count()
    }

    fn benign_graph(&self) -> Result<Graph, TopologyError> {
        self.graph.induced(&self.benign_agents())
    }
}

/// Benign subgraph with a row-stochastic diagnostic weight matrix.
#[derive(Debug, Clone)]
pub struct BenignSubnetwork {
    pub graph: Graph,
    /// Global agent id of each local index.
    pub agents: Vec<usize>,
    pub weights: WeightMatrix,
}

impl BenignSubnetwork {
    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.agents.binary_search(&global).ok()
    }
}

/// Induced benign graph plus the matrix that keeps benign off-diagonal
/// weights and moves each agent's Byzantine-neighbor mass onto its diagonal:
/// `e_ij = ẽ_ij`, `e_ii = ẽ_ii + Σ_{j∈N_i∩B} ẽ_ij`.
pub fn benign_subnetwork(spec: &NetworkSpec) -> Result<BenignSubnetwork, TopologyError> {
    let agents = spec.benign_agents();
    if agents.is_empty() {
        return Err(TopologyError::NoBenignAgents);
    }
    let graph = spec
        .benign_graph()
        .map_err(|e| TopologyError::BenignDisconnected(Box::new(e)))?;
    if spec.byzantine.is_empty() {
        return Ok(BenignSubnetwork {
            graph,
            agents,
            weights: spec.weights.clone(),
        });
    }
    let h = agents.len();
    let mut e = WeightMatrix {
        n: h,
        data: vec![0.0; h * h],
    };
    for (li, &gi) in agents.iter().enumerate() {
        let mut diag = spec.weights.get(gi, gi);
        for &gj in spec.graph.neighbors(gi) {
            let w = spec.weights.get(gi, gj);
            if spec.is_byzantine(gj) {
                diag += w;
            } else {
                let lj = agents.binary_search(&gj).expect("benign neighbor");
                e.set(li, lj, w);
            }
        }
        e.set(li, li, diag);
    }
    Ok(BenignSubnetwork {
        graph,
        agents,
        weights: e,
    })
}

/// Witness matrix for the trimmed mean: uniform weights over each benign
/// agent's benign closed neighborhood.
pub fn ctm_witness(spec: &NetworkSpec) -> Result<BenignSubnetwork, TopologyError> {
    let mut sub = benign_subnetwork(spec)?;
    let h = sub.agents.len();
    let mut e = WeightMatrix {
        n: h,
        data: vec![0.0; h * h],
    };
    for li in 0..h {
        let closed: Vec<usize> = std::iter::once(li)
            .chain(sub.graph.neighbors(li).iter().copied())
            .collect();
        let w = 1.0 / closed.len() as f64;
        for lj in closed {
            e.set(li, lj, w);
        }
    }
    sub.weights = e;
    Ok(sub)
}

/// Aggregation rule families, as used for contraction bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    WeightedAverage,
    CtmArc,
    IosArc,
    SccArc,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleKind::WeightedAverage => "weighted_average",
            RuleKind::CtmArc => "ctm_arc",
            RuleKind::IosArc => "ios_arc",
            RuleKind::SccArc => "scc_arc",
        };
        f.write_str(s)
    }
}

/// Mixing weights seen by one agent: its own weight and one per neighbor.
/// `byzantine`, when known, marks which neighbors are Byzantine.
#[derive(Debug, Clone, Copy)]
pub struct NeighborhoodWeights<'a> {
    pub own: f64,
    pub neighbors: &'a [f64],
    pub byzantine: Option<&'a [bool]>,
}

/// Upper bound on the per-agent contraction constant of a composed rule.
///
/// - `ctm_arc`: `6b(|N|-b+1)/(|N|-2b+1)² + b/(|N|-2b+1)`
/// - `scc_arc`: `8 s_B (1+m)/m + |N∩B|·x/(1-|N∩B|·x)`
/// - `ios_arc`: `(15 s_b)²/(m²(1-3 s_b)²) + |N∩B|·x/(1-|N∩B|·x)`, requires `s_b < 1/3`
///
/// where `s_B` is the Byzantine neighbors' weight mass, `s_b` the mass of the
/// `b` heaviest neighbors, and `m`/`x` the min/max weight over the benign
/// closed neighborhood. Without a Byzantine mask the worst placement of `b`
/// Byzantine neighbors is assumed (heaviest neighbors, extremes over the whole
/// closed neighborhood), which upper-bounds every admissible placement.
pub fn rho_bound(
    kind: RuleKind,
    neighborhood_size: usize,
    budget: usize,
    weights: Option<NeighborhoodWeights<'_>>,
) -> Result<f64, TopologyError> {
    let b = budget as f64;
    let n = neighborhood_size as f64;
    if budget == 0 {
        return Ok(0.0);
    }
    match kind {
        RuleKind::WeightedAverage => Err(TopologyError::RhoPrecondition(
            "weighted average has no contraction bound with a nonzero Byzantine budget".into(),
        )),
        RuleKind::CtmArc => {
            if neighborhood_size < 2 * budget + 1 {
                return Err(TopologyError::RhoPrecondition(format!(
                    "ctm_arc needs |N_i| >= 2b_i+1 (|N_i|={neighborhood_size}, b_i={budget})"
                )));
            }
            let kept = n - 2.0 * b + 1.0;
            Ok(6.0 * b * (n - b + 1.0) / (kept * kept) + b / kept)
        }
        RuleKind::IosArc | RuleKind::SccArc => {
            let w = weights
                .ok_or_else(|| TopologyError::RhoPrecondition(format!("{kind} bound needs the agent's weight row")))?;
            if w.neighbors.len() != neighborhood_size || budget > neighborhood_size {
                return Err(TopologyError::RhoPrecondition(format!(
                    "weight row has {} neighbors, neighborhood size {neighborhood_size}, budget {budget}",
                    w.neighbors.len()
                )));
            }
            let mut sorted = w.neighbors.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let heaviest: f64 = sorted.iter().take(budget).sum();
            let (byz_mass, byz_count, min_benign, max_benign) = match w.byzantine {
                Some(mask) => {
                    let mut mass = 0.0;
                    let mut count = 0usize;
                    let mut lo = w.own;
                    let mut hi = w.own;
                    for (&wj, &bad) in w.neighbors.iter().zip(mask) {
                        if bad {
                            mass += wj;
                            count += 1;
                        } else {
                            lo = lo.min(wj);
                            hi = hi.max(wj);
                        }
                    }
                    (mass, count, lo, hi)
                }
                None => {
                    let lo = w.neighbors.iter().fold(w.own, |m, &v| m.min(v));
                    let hi = w.neighbors.iter().fold(w.own, |m, &v| m.max(v));
                    (heaviest, budget, lo, hi)
                }
            };
            let arc_mass = byz_count as f64 * max_benign;
            if arc_mass >= 1.0 {
                return Err(TopologyError::RhoPrecondition(format!(
                    "|N_i∩B|·max ẽ_ij = {arc_mass} must be < 1"
                )));
            }
            let arc_term = arc_mass / (1.0 - arc_mass);
            let base = if kind == RuleKind::IosArc {
                if heaviest >= 1.0 / 3.0 {
                    return Err(TopologyError::RhoPrecondition(format!(
                        "ios_arc needs the {budget} heaviest neighbor weights to sum below 1/3, got {heaviest}"
                    )));
                }
                (15.0 * heaviest).powi(2) / (min_benign.powi(2) * (1.0 - 3.0 * heaviest).powi(2))
            } else {
                8.0 * byz_mass * (1.0 + min_benign) / min_benign
            };
            Ok(base + arc_term)
        }
    }
}

/// Network-level bound: maximum of [`rho_bound`] over benign agents, using
/// the true Byzantine placement.
pub fn network_rho(spec: &NetworkSpec, kind: RuleKind) -> Result<f64, TopologyError> {
    let mut rho: f64 = 0.0;
    for i in spec.benign_agents() {
        let neighbors = spec.graph.neighbors(i);
        let row: Vec<f64> = neighbors.iter().map(|&j| spec.weights.get(i, j)).collect();
        let mask: Vec<bool> = neighbors.iter().map(|&j| spec.is_byzantine(j)).collect();
        let budget = match kind {
            RuleKind::WeightedAverage => spec.byzantine_neighbor_count(i),
            _ => spec.trim_budget[i],
        };
        let bound = rho_bound(
            kind,
            neighbors.len(),
            budget,
            Some(NeighborhoodWeights {
                own: spec.weights.get(i, i),
                neighbors: &row,
                byzantine: Some(&mask),
            }),
        )?;
        rho = rho.max(bound);
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn metropolis_two_node_path() {
        let w = build_metropolis(&Graph::path(2).unwrap()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_close(w.get(i, j), 0.5, 1e-15);
            }
        }
    }

    #[test]
    fn metropolis_triangle() {
        let w = build_metropolis(&Graph::complete(3).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_close(w.get(i, j), 1.0 / 3.0, 1e-15);
            }
        }
    }

    #[test]
    fn isolated_node_is_rejected() {
        assert_eq!(Graph::new(1, &[]), Err(TopologyError::TooFewAgents(1)));
        assert!(matches!(
            Graph::new(3, &[(0, 1)]),
            Err(TopologyError::Disconnected { reached: 2, n: 3 })
        ));
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert_eq!(Graph::new(2, &[(1, 1)]), Err(TopologyError::SelfLoop(1, 1)));
        assert_eq!(
            Graph::new(2, &[(0, 1), (1, 0)]),
            Err(TopologyError::DuplicateEdge(1, 0))
        );
    }

    #[test]
    fn spectral_gap_examples() {
        assert_close(spectral_gap(&WeightMatrix::averaging(5)), 0.0, 1e-14);
        let w = build_metropolis(&Graph::path(2).unwrap()).unwrap();
        assert_close(spectral_gap(&w), 0.0, 1e-14);
        assert_close(spectral_gap(&WeightMatrix::identity(3)), 1.0, 1e-10);
    }

    #[test]
    fn spectral_gap_of_cycle_matches_eigenvalue() {
        // Metropolis on C_6 is circulant with weights 1/3: eigenvalues
        // (1 + 2cos(2πk/6))/3; the largest in modulus off k=0 is 2/3.
        let w = build_metropolis(&Graph::cycle(6).unwrap()).unwrap();
        assert_close(spectral_gap(&w), 4.0 / 9.0, 1e-9);
    }

    #[test]
    fn benign_subnetwork_without_byzantine_is_identity_map() {
        let g = Graph::cycle(5).unwrap();
        let spec = NetworkSpec::with_metropolis(g.clone(), BTreeSet::new()).unwrap();
        let sub = benign_subnetwork(&spec).unwrap();
        assert_eq!(sub.graph, g);
        assert_eq!(sub.weights, spec.weights);
    }

    #[test]
    fn star_with_byzantine_center_is_rejected() {
        let g = Graph::star(5).unwrap();
        let w = build_metropolis(&g).unwrap();
        let spec = NetworkSpec {
            graph: g,
            weights: w,
            byzantine: BTreeSet::from([0]),
            trim_budget: vec![0; 5],
        };
        assert!(matches!(
            benign_subnetwork(&spec),
            Err(TopologyError::BenignDisconnected(_))
        ));
    }

    #[test]
    fn four_cycle_reassigns_byzantine_weight() {
        let g = Graph::cycle(4).unwrap();
        let w = build_metropolis(&g).unwrap(); // 1/3 everywhere on the closed neighborhood
        let spec = NetworkSpec {
            graph: g,
            weights: w,
            byzantine: BTreeSet::from([0]),
            trim_budget: vec![0; 4],
        };
        let sub = benign_subnetwork(&spec).unwrap();
        assert_eq!(sub.agents, vec![1, 2, 3]);
        // Benign path 1-2-3; agents 1 and 3 lose neighbor 0.
        assert_eq!(sub.graph.edge_count(), 2);
        let e = &sub.weights;
        assert_close(e.get(0, 0), 2.0 / 3.0, 1e-15);
        assert_close(e.get(0, 1), 1.0 / 3.0, 1e-15);
        assert_close(e.get(1, 1), 1.0 / 3.0, 1e-15);
        assert_close(e.get(2, 2), 2.0 / 3.0, 1e-15);
        assert!(e.is_row_stochastic(1e-12));
    }

    #[test]
    fn rho_bound_examples() {
        assert_close(rho_bound(RuleKind::CtmArc, 4, 1, None).unwrap(), 3.0, 1e-12);
        let row = [0.25, 0.25, 0.25];
        let weights = NeighborhoodWeights {
            own: 0.25,
            neighbors: &row,
            byzantine: None,
        };
        for kind in [
            RuleKind::CtmArc,
            RuleKind::IosArc,
            RuleKind::SccArc,
            RuleKind::WeightedAverage,
        ] {
            assert_eq!(rho_bound(kind, 3, 0, Some(weights)).unwrap(), 0.0);
        }
        let heavy = [0.4, 0.1, 0.1];
        let err = rho_bound(
            RuleKind::IosArc,
            3,
            1,
            Some(NeighborhoodWeights {
                own: 0.4,
                neighbors: &heavy,
                byzantine: None,
            }),
        )
        .unwrap_err();
        assert!(err.to_string().contains("1/3"), "{err}");
    }

    #[test]
    fn rho_bound_with_mask_never_exceeds_worst_case() {
        let row = [0.2, 0.15, 0.25, 0.1];
        for bad in 0..4 {
            let mut mask = [false; 4];
            mask[bad] = true;
            for kind in [RuleKind::IosArc, RuleKind::SccArc] {
                let exact = rho_bound(
                    kind,
                    4,
                    1,
                    Some(NeighborhoodWeights {
                        own: 0.3,
                        neighbors: &row,
                        byzantine: Some(&mask),
                    }),
                )
                .unwrap();
                let worst = rho_bound(
                    kind,
                    4,
                    1,
                    Some(NeighborhoodWeights {
                        own: 0.3,
                        neighbors: &row,
                        byzantine: None,
                    }),
                )
                .unwrap();
                assert!(exact <= worst + 1e-12, "{kind}: {exact} > {worst}");
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let text = "# prism\nn 6\n0 1\n0 2 # comment\n1 2\n3 4\n3 5\n4 5\n0 3\n1 4\n2 5\n";
        let g = Graph::parse_edge_list(text).unwrap();
        assert_eq!(g.agent_count(), 6);
        assert_eq!(g.edge_count(), 9);
        assert_eq!(Graph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
        assert!(matches!(
            Graph::parse_edge_list("0 1\n"),
            Err(TopologyError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn network_spec_reports_all_budget_failures() {
        let g = Graph::path(4).unwrap();
        let w = build_metropolis(&g).unwrap();
        let spec = NetworkSpec {
            graph: g,
            weights: w,
            byzantine: BTreeSet::from([3]),
            trim_budget: vec![0, 0, 0, 0],
        };
        let v = spec.violations();
        assert!(v
            .iter()
            .any(|e| matches!(e, TopologyError::BudgetTooSmall { agent: 2, .. })));
        let spec = NetworkSpec {
            trim_budget: vec![0, 0, 1, 0],
            ..spec
        };
        assert!(spec
            .violations()
            .iter()
            .any(|e| matches!(e, TopologyError::NeighborhoodTooSmall { agent: 2, .. })));
    }
}
