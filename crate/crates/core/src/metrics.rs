//! Dynamic regret, accumulative constraint violation and growth exponents.
//!
//! The functions here see a run only through [`TraceRow`]s, so they apply
//! equally to an in-memory trace and to one read back from `trace.csv`.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use thiserror::Error;

use crate::dispatch::{instantaneous_optimum, BoxConstraint, DispatchError, Optimum, StepCost};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("oracle failed at step {t}: {source}")]
    Oracle {
        t: usize,
        #[source]
        source: DispatchError,
    },
    #[error("growth exponent window contains nonpositive value {value} at t={t}")]
    NonPositive { t: usize, value: f64 },
    #[error("growth exponent needs at least two points in the window, got {0}")]
    WindowTooShort(usize),
    #[error("window fraction must lie in (0, 1], got {0}")]
    InvalidWindow(f64),
    #[error("row {t} has {got} allocations, expected {expected}")]
    RowWidth { t: usize, got: usize, expected: usize },
}

/// One step of a trace restricted to an agent set.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub demand: f64,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentSet {
    All,
    Benign,
}

/// Oracle solves memoized per `(t, agent set)`.
#[derive(Debug, Default)]
pub struct OracleCache {
    solved: HashMap<(usize, AgentSet), Optimum>,
}

impl OracleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(
        &mut self,
        t: usize,
        set: AgentSet,
        costs: &[StepCost],
        boxes: &[BoxConstraint],
        demand: f64,
    ) -> Result<&Optimum, MetricsError> {
        match self.solved.entry((t, set)) {
            Entry::Occupied(e) => Ok(e.into_mut()),
            Entry::Vacant(e) => {
                let opt =
                    instantaneous_optimum(costs, boxes, demand).map_err(|source| MetricsError::Oracle { t, source })?;
                Ok(e.insert(opt))
            }
        }
    }

    pub fn get(&self, t: usize, set: AgentSet) -> Option<&Optimum> {
        self.solved.get(&(t, set))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    pub t: Vec<usize>,
    pub cumulative_regret: Vec<f64>,
    pub cumulative_violation: Vec<f64>,
    pub per_step_optimum_cost: Vec<f64>,
    pub path_variation: Vec<f64>,
}

/// Running `|Σ_τ Σ_i (P_i^τ − D^τ)/n|` where `n` is the row width.
pub fn constraint_violation(rows: &[TraceRow]) -> Vec<f64> {
    let mut sum = 0.0;
    rows.iter()
        .map(|r| {
            let n = r.p.len() as f64;
            sum += r.p.iter().map(|p| (p - r.demand) / n).sum::<f64>();
            sum.abs()
        })
        .collect()
}

/// Output of [`dynamic_regret`], one entry per row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Regret {
    pub cumulative: Vec<f64>,
    pub optimum_cost: Vec<f64>,
    pub optima: Vec<Vec<f64>>,
}

/// Cumulative `Σ_i C_i^t(P_i^t) − Σ_i C_i^t(P_i^{t*})` together with the
/// per-step optimum cost and the oracle allocations.
///
/// `costs_at(t)` returns the cost functions of the row's agents at step `t`.
pub fn dynamic_regret<F>(
    rows: &[TraceRow],
    set: AgentSet,
    boxes: &[BoxConstraint],
    mut costs_at: F,
    cache: &mut OracleCache,
) -> Result<Regret, MetricsError>
where
    F: FnMut(usize) -> Result<Vec<StepCost>, DispatchError>,
{
    let mut out = Regret::default();
    let mut sum = 0.0;
    for r in rows {
        if r.p.len() != boxes.len() {
            return Err(MetricsError::RowWidth {
                t: r.t,
                got: r.p.len(),
                expected: boxes.len(),
            });
        }
        let costs = costs_at(r.t).map_err(|source| MetricsError::Oracle { t: r.t, source })?;
        let actual: f64 = costs.iter().zip(&r.p).map(|(c, &p)| c.value(p)).sum();
        let opt = cache.solve(r.t, set, &costs, boxes, r.demand)?;
        sum += actual - opt.cost;
        out.cumulative.push(sum);
        out.optimum_cost.push(opt.cost);
        out.optima.push(opt.allocations.clone());
    }
    Ok(out)
}

/// Running `Σ_t Σ_i |P_i^{t*} − P_i^{(t−1)*}|`, zero at the first step.
pub fn path_variation(optima: &[Vec<f64>]) -> Vec<f64> {
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(optima.len());
    for (k, cur) in optima.iter().enumerate() {
        if k > 0 {
            sum += cur.iter().zip(&optima[k - 1]).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
        out.push(sum);
    }
    out
}

/// Full metric series over `rows` for one agent set.
pub fn compute_series<F>(
    rows: &[TraceRow],
    set: AgentSet,
    boxes: &[BoxConstraint],
    costs_at: F,
    cache: &mut OracleCache,
) -> Result<MetricSeries, MetricsError>
where
    F: FnMut(usize) -> Result<Vec<StepCost>, DispatchError>,
{
    let regret = dynamic_regret(rows, set, boxes, costs_at, cache)?;
    Ok(MetricSeries {
        t: rows.iter().map(|r| r.t).collect(),
        cumulative_violation: constraint_violation(rows),
        path_variation: path_variation(&regret.optima),
        cumulative_regret: regret.cumulative,
        per_step_optimum_cost: regret.optimum_cost,
    })
}

/// Least-squares slope of `ln(series)` against `ln(t)` over the final
/// `window` fraction, with `t` counted from 1 at the first entry.
pub fn growth_exponent(series: &[f64], window: f64) -> Result<f64, MetricsError> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(MetricsError::InvalidWindow(window));
    }
    let n = series.len();
    let take = ((n as f64) * window).ceil() as usize;
    let start = n - take.min(n);
    if n - start < 2 {
        return Err(MetricsError::WindowTooShort(n - start));
    }
    let mut xs = Vec::with_capacity(n - start);
    let mut ys = Vec::with_capacity(n - start);
    for (k, &v) in series.iter().enumerate().skip(start) {
        if v.is_nan() || v <= 0.0 {
            return Err(MetricsError::NonPositive { t: k + 1, value: v });
        }
        xs.push(((k + 1) as f64).ln());
        ys.push(v.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Ordinary least-squares slope of `series` against its index.
pub fn linear_slope(series: &[f64]) -> f64 {
    let m = series.len() as f64;
    let mx = (m - 1.0) / 2.0;
    let my = series.iter().sum::<f64>() / m;
    let sxy: f64 = series.iter().enumerate().map(|(k, y)| (k as f64 - mx) * (y - my)).sum();
    let sxx: f64 = (0..series.len()).map(|k| (k as f64 - mx).powi(2)).sum();
    sxy / sxx
}
