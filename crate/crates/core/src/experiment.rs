//! Running configured experiments and persisting their artifacts.
//!
//! A run directory holds:
//! - `trace.csv`: `t, D, P_<id>..., lambda_<id>..., cost, residual` for the
//!   benign agents, rows `t = 0..=T`
//! - `metrics.csv`: `t, cumulative_regret, cumulative_violation` for
//!   `t = 1..=T`, benign-agent formulation
//! - `meta.json`: seed, config hash, derived constants, monitor outcomes
//! - `config.toml`: the config as run, with absolute input paths
//!
//! Reals are written in shortest round-trip decimal form.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parse_config, Experiment, ExperimentConfig, WeibullConfig};
use crate::engine::{self, MonitorViolation, RunTrace};
use crate::error::{Error, Result};
use crate::metrics::{
    compute_series, constraint_violation, growth_exponent, AgentSet, MetricSeries, OracleCache, TraceRow,
};

pub const TRACE_FILE: &str = "trace.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const META_FILE: &str = "meta.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_HEADER: [&str; 3] = ["t", "cumulative_regret", "cumulative_violation"];
/// Tail fraction used to fit the path-variation exponent.
pub const GAMMA_WINDOW: f64 = 0.5;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub strict_monitors: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub t: usize,
    pub cumulative_regret: f64,
    pub cumulative_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    pub algorithm: String,
    pub horizon: usize,
    pub agents: usize,
    pub byzantine: Vec<usize>,
    pub psi: f64,
    pub psi_tilde: f64,
    pub phi: f64,
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub chi: f64,
    pub rho_bound: Option<f64>,
    pub rho_note: Option<String>,
    pub dual_bound: f64,
    pub max_dual_norm: f64,
    pub dispersion_bound: Option<f64>,
    /// Fitted growth exponent of the oracle path variation.
    pub gamma: Option<f64>,
    /// `"oracle"`, `"quantile(q)"`, or absent for rules without a radius.
    pub tau: Option<String>,
    /// True when the SCC radius fell back to the median-distance default
    /// because the config did not set one.
    pub tau_defaulted: bool,
    pub monitor_violations: Vec<MonitorViolation>,
    pub final_metrics: Option<FinalMetrics>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: RunTrace,
    pub series: MetricSeries,
    pub meta: Meta,
}

/// Benign rows `t = 1..=T` as metric input.
pub fn benign_rows(trace: &RunTrace) -> Vec<TraceRow> {
    trace
        .rows
        .iter()
        .skip(1)
        .map(|r| TraceRow {
            t: r.t,
            demand: r.demand,
            p: trace.benign.iter().map(|&i| r.p[i]).collect(),
        })
        .collect()
}

/// Runs the engine and computes benign metrics without touching the disk.
pub fn simulate(exp: &Experiment, strict_monitors: bool) -> Result<RunOutcome> {
    let mut run = exp.run;
    run.strict_monitors = strict_monitors;
    let trace = engine::run(&exp.network, &exp.problem, &exp.attack, &run, exp.seed)?;
    let series = benign_metrics(exp, &benign_rows(&trace))?;
    let meta = build_meta(exp, &trace, &series);
    Ok(RunOutcome { trace, series, meta })
}

fn benign_metrics(exp: &Experiment, rows: &[TraceRow]) -> Result<MetricSeries> {
    let benign = exp.network.benign_agents();
    let boxes = exp.problem.boxes(&benign);
    let mut cache = OracleCache::new();
    Ok(compute_series(
        rows,
        AgentSet::Benign,
        &boxes,
        |t| exp.problem.step_costs(exp.seed, t, &benign),
        &mut cache,
    )?)
}

fn build_meta(exp: &Experiment, trace: &RunTrace, series: &MetricSeries) -> Meta {
    let d = &trace.diagnostics;
    let tau = match exp.run.algorithm {
        engine::Algorithm::Resilient {
            rule: crate::topology::RuleKind::SccArc,
            tau,
        } => Some(match tau {
            crate::aggregation::TauStrategy::Oracle => "oracle".to_string(),
            crate::aggregation::TauStrategy::Quantile(q) => format!("quantile({q})"),
        }),
        _ => None,
    };
    Meta {
        name: exp.name.clone(),
        seed: exp.seed,
        config_hash: exp.config_hash.clone(),
        algorithm: exp.run.algorithm.label(),
        horizon: exp.run.horizon,
        agents: exp.network.agent_count(),
        byzantine: exp.network.byzantine.iter().copied().collect(),
        psi: d.psi,
        psi_tilde: d.psi_tilde,
        phi: d.phi,
        kappa: d.kappa,
        kappa_tilde: d.kappa_tilde,
        chi: d.chi,
        rho_bound: d.rho,
        rho_note: d.rho_note.clone(),
        dual_bound: d.dual_bound,
        max_dual_norm: trace.max_dual_norm,
        dispersion_bound: d.dispersion_bound,
        gamma: growth_exponent(&series.path_variation, GAMMA_WINDOW).ok(),
        tau,
        tau_defaulted: exp.tau_defaulted,
        monitor_violations: trace.violations.clone(),
        final_metrics: series.t.last().map(|&t| FinalMetrics {
            t,
            cumulative_regret: *series.cumulative_regret.last().expect("same length"),
            cumulative_violation: *series.cumulative_violation.last().expect("same length"),
        }),
    }
}

fn fmt_real(v: f64) -> String {
    v.to_string()
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string(), "D".to_string()];
    header.extend(trace.benign.iter().map(|i| format!("P_{i}")));
    header.extend(trace.benign.iter().map(|i| format!("lambda_{i}")));
    header.push("cost".into());
    header.push("residual".into());
    w.write_record(&header)?;
    for r in &trace.rows {
        let mut rec = vec![r.t.to_string(), fmt_real(r.demand)];
        rec.extend(trace.benign.iter().map(|&i| fmt_real(r.p[i])));
        rec.extend(trace.benign.iter().map(|&i| fmt_real(r.lambda[i])));
        rec.push(fmt_real(r.cost));
        rec.push(fmt_real(r.residual));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_metrics(path: &Path, series: &MetricSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER)?;
    for k in 0..series.t.len() {
        w.write_record([
            series.t[k].to_string(),
            fmt_real(series.cumulative_regret[k]),
            fmt_real(series.cumulative_violation[k]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// A trace read back from `trace.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub agents: Vec<usize>,
    pub t: Vec<usize>,
    pub demand: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<f64>>,
    pub cost: Vec<f64>,
    pub residual: Vec<f64>,
}

impl TraceFile {
    /// Rows `t ≥ 1` as metric input.
    pub fn metric_rows(&self) -> Vec<TraceRow> {
        (0..self.t.len())
            .filter(|&k| self.t[k] >= 1)
            .map(|k| TraceRow {
                t: self.t[k],
                demand: self.demand[k],
                p: self.p[k].clone(),
            })
            .collect()
    }
}

fn bad_trace(path: &Path, message: String) -> Error {
    Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, message))
}

pub fn read_trace(path: &Path) -> Result<TraceFile> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let p_cols: Vec<(usize, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(k, h)| h.strip_prefix("P_").and_then(|id| id.parse().ok()).map(|id| (k, id)))
        .collect();
    let l_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("lambda_"))
        .map(|(k, _)| k)
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad_trace(path, format!("missing column {name}")))
    };
    let (ct, cd, cc, cr) = (col("t")?, col("D")?, col("cost")?, col("residual")?);
    let mut out = TraceFile {
        agents: p_cols.iter().map(|(_, id)| *id).collect(),
        t: Vec::new(),
        demand: Vec::new(),
        p: Vec::new(),
        lambda: Vec::new(),
        cost: Vec::new(),
        residual: Vec::new(),
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad_trace(path, format!("row {}: column {k} is not a number", line + 1)))
        };
        out.t.push(num(ct)? as usize);
        out.demand.push(num(cd)?);
        out.p.push(p_cols.iter().map(|(k, _)| num(*k)).collect::<Result<_>>()?);
        out.lambda.push(l_cols.iter().map(|k| num(*k)).collect::<Result<_>>()?);
        out.cost.push(num(cc)?);
        out.residual.push(num(cr)?);
    }
    Ok(out)
}

/// Metrics rebuilt from a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct Recomputed {
    pub t: Vec<usize>,
    /// Absent when no experiment was supplied to rebuild the costs.
    pub cumulative_regret: Option<Vec<f64>>,
    pub cumulative_violation: Vec<f64>,
}

/// Recomputes metrics from a trace file. Without an experiment only the
/// violation column can be rebuilt.
pub fn metrics_from_trace(trace: &TraceFile, exp: Option<&Experiment>) -> Result<Recomputed> {
    let rows = trace.metric_rows();
    let cumulative_regret = match exp {
        Some(exp) => Some(benign_metrics(exp, &rows)?.cumulative_regret),
        None => None,
    };
    Ok(Recomputed {
        t: rows.iter().map(|r| r.t).collect(),
        cumulative_regret,
        cumulative_violation: constraint_violation(&rows),
    })
}

/// Copy of the config with input paths made absolute, so it can be reused
/// from the output directory.
fn portable_config(config: &ExperimentConfig, base_dir: &Path) -> ExperimentConfig {
    let absolute = |p: &Path| fs::canonicalize(base_dir.join(p)).unwrap_or_else(|_| base_dir.join(p));
    let mut c = config.clone();
    if let Some(g) = &c.network.graph_file {
        c.network.graph_file = Some(absolute(g));
    }
    if let Some(WeibullConfig::Trace { file, .. }) = &mut c.weibull {
        *file = absolute(file);
    }
    c
}

fn write_all(dir: &Path, outcome: &RunOutcome, config: &ExperimentConfig, base_dir: &Path) -> Result<()> {
    write_trace(&dir.join(TRACE_FILE), &outcome.trace)?;
    write_metrics(&dir.join(METRICS_FILE), &outcome.series)?;
    let meta = serde_json::to_string_pretty(&outcome.meta)?;
    fs::write(dir.join(META_FILE), meta + "\n").map_err(|e| Error::io(dir.join(META_FILE), e))?;
    let toml = portable_config(config, base_dir).to_toml()?;
    fs::write(dir.join(CONFIG_FILE), toml).map_err(|e| Error::io(dir.join(CONFIG_FILE), e))?;
    Ok(())
}

/// Validates, runs and persists one config. On failure nothing written by
/// this call is left behind.
pub fn run_experiment(config_path: &Path, options: &RunOptions) -> Result<(PathBuf, RunOutcome)> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    let exp = config.resolve(base_dir)?;
    let dir = options.out.clone().unwrap_or_else(|| exp.output_dir.clone());
    let outcome = simulate(&exp, options.strict_monitors)?;

    let created = !dir.exists();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    if let Err(e) = write_all(&dir, &outcome, &config, base_dir) {
        if created {
            let _ = fs::remove_dir_all(&dir);
        } else {
            for f in [TRACE_FILE, METRICS_FILE, META_FILE, CONFIG_FILE] {
                let _ = fs::remove_file(dir.join(f));
            }
        }
        return Err(e);
    }
    Ok((dir, outcome))
}

/// Validates a config file without running it.
pub fn validate(config_path: &Path) -> Result<Experiment> {
    Ok(parse_config(config_path)?.1)
}

/// Runs every `*.toml` in `dir` in parallel, writing to `out_root/<stem>`.
/// Results are returned in file-name order.
pub fn run_sweep(dir: &Path, out_root: &Path, options: &RunOptions) -> Result<Vec<(PathBuf, Result<PathBuf>)>> {
    let mut configs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    configs.sort();
    Ok(configs
        .into_par_iter()
        .map(|path| {
            let stem = path.file_stem().unwrap_or_default().to_owned();
            let opts = RunOptions {
                out: Some(out_root.join(stem)),
                ..options.clone()
            };
            let result = run_experiment(&path, &opts).map(|(dir, _)| dir);
            (path, result)
        })
        .collect())
}
