//! Time-varying economic dispatch: station cost models, demand and wind
//! processes, and the per-step optimum oracle.
//!
//! Wind power follows the piecewise-linear curve of a turbine with cut-in,
//! rated and cut-out speeds driven by a Weibull wind speed. The expected
//! under- and over-estimation penalties reduce to one smooth integral of the
//! Weibull CDF over the linear segment of the curve, plus the point masses at
//! zero and rated output.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::quadrature;
use crate::rng::{rng_stream, Domain};

/// Absolute tolerance of the penalty integral.
const QUAD_TOL: f64 = 1e-11;
/// Demand envelope half-width in standard deviations.
pub const DEMAND_SIGMAS: f64 = 6.0;
const WIND_BISECT_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 400;
/// Residual target of the multiplier search, relative to `max(1, |D|)`.
pub const ORACLE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispatchError {
    #[error("box lower bound {lo} exceeds upper bound {hi}")]
    InvalidBox { lo: f64, hi: f64 },
    #[error("thermal cost needs eta >= 0, got {0}")]
    NonConvexThermal(f64),
    #[error("invalid wind parameters: {0}")]
    InvalidWind(String),
    #[error("invalid Weibull parameters: scale {scale}, shape {shape}")]
    InvalidWeibull { scale: f64, shape: f64 },
    #[error("invalid demand process: {0}")]
    InvalidDemand(String),
    #[error("step {t} is beyond the {len}-step trace")]
    TraceExhausted { t: usize, len: usize },
    #[error("demand {demand} infeasible: mean allocation must lie in [{min}, {max}]")]
    Infeasible { demand: f64, min: f64, max: f64 },
    #[error("{costs} cost models but {boxes} boxes")]
    LengthMismatch { costs: usize, boxes: usize },
    #[error("wind station needs Weibull parameters for this step")]
    MissingWeibull,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxConstraint {
    pub lo: f64,
    pub hi: f64,
}

impl BoxConstraint {
    pub fn new(lo: f64, hi: f64) -> Result<Self, DispatchError> {
        if lo > hi || !lo.is_finite() || !hi.is_finite() {
            return Err(DispatchError::InvalidBox { lo, hi });
        }
        Ok(BoxConstraint { lo, hi })
    }

    pub fn clip(&self, p: f64) -> f64 {
        p.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// `C(p) = ηp² + ζp + ξ`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalCost {
    pub eta: f64,
    pub zeta: f64,
    pub xi: f64,
}

impl ThermalCost {
    pub fn validate(&self) -> Result<(), DispatchError> {
        if self.eta < 0.0 || !self.zeta.is_finite() || !self.xi.is_finite() || !self.eta.is_finite() {
            return Err(DispatchError::NonConvexThermal(self.eta));
        }
        Ok(())
    }

    pub fn value(&self, p: f64) -> f64 {
        self.eta * p * p + self.zeta * p + self.xi
    }

    pub fn gradient(&self, p: f64) -> f64 {
        2.0 * self.eta * p + self.zeta
    }
}

/// Wind station: linear cost `ϱp` plus expected penalties for
/// under-estimation (`σ_ue·E[(W−p)⁺]`) and over-estimation (`σ_oe·E[(p−W)⁺]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindCost {
    pub rho_lin: f64,
    pub sigma_ue: f64,
    pub sigma_oe: f64,
    pub v_in: f64,
    pub v_out: f64,
    pub v_r: f64,
    pub p_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullParams {
    pub scale: f64,
    pub shape: f64,
}

impl WeibullParams {
    pub fn new(scale: f64, shape: f64) -> Result<Self, DispatchError> {
        if !(scale > 0.0 && shape > 0.0 && scale.is_finite() && shape.is_finite()) {
            return Err(DispatchError::InvalidWeibull { scale, shape });
        }
        Ok(WeibullParams { scale, shape })
    }

    /// Wind speed CDF `1 − exp(−(v/ς)^φ)`.
    pub fn cdf(&self, v: f64) -> f64 {
        if v <= 0.0 {
            0.0
        } else {
            -(-(v / self.scale).powf(self.shape)).exp_m1()
        }
    }
}

impl WindCost {
    pub fn validate(&self) -> Result<(), DispatchError> {
        let ok = 0.0 < self.v_in
            && self.v_in < self.v_r
            && self.v_r < self.v_out
            && self.v_out.is_finite()
            && self.p_r > 0.0
            && self.p_r.is_finite()
            && self.sigma_ue >= 0.0
            && self.sigma_oe >= 0.0
            && self.sigma_ue.is_finite()
            && self.sigma_oe.is_finite()
            && self.rho_lin.is_finite();
        if !ok {
            return Err(DispatchError::InvalidWind(format!(
                "need 0 < v_in < v_r < v_out, p_r > 0, sigma_ue, sigma_oe >= 0; got {self:?}"
            )));
        }
        Ok(())
    }

    /// Wind speed at which the linear segment produces `w`.
    fn speed_for(&self, w: f64) -> f64 {
        self.v_in + w * (self.v_r - self.v_in) / self.p_r
    }

    /// Power output for wind speed `v`.
    pub fn power(&self, v: f64) -> f64 {
        if v < self.v_in || v > self.v_out {
            0.0
        } else if v < self.v_r {
            self.p_r * (v - self.v_in) / (self.v_r - self.v_in)
        } else {
            self.p_r
        }
    }

    /// CDF of wind power, right-continuous.
    pub fn power_cdf(&self, weibull: &WeibullParams, w: f64) -> f64 {
        if w < 0.0 {
            0.0
        } else if w >= self.p_r {
            1.0
        } else {
            1.0 - weibull.cdf(self.v_out) + weibull.cdf(self.speed_for(w))
        }
    }

    /// `∫_0^p F_V(v(w)) dw` for `p` in `[0, p_r]`.
    fn segment_integral(&self, weibull: &WeibullParams, p: f64) -> f64 {
        let v_hi = self.speed_for(p.clamp(0.0, self.p_r));
        let jacobian = self.p_r / (self.v_r - self.v_in);
        jacobian * quadrature::integrate(|v| weibull.cdf(v), self.v_in, v_hi, QUAD_TOL / jacobian)
    }

    pub fn expected_power(&self, weibull: &WeibullParams) -> f64 {
        self.p_r * weibull.cdf(self.v_out) - self.segment_integral(weibull, self.p_r)
    }

    /// `E[(p − W)⁺]`
    pub fn expected_surplus(&self, weibull: &WeibullParams, p: f64) -> f64 {
        if p <= 0.0 {
            0.0
        } else if p < self.p_r {
            p * (1.0 - weibull.cdf(self.v_out)) + self.segment_integral(weibull, p)
        } else {
            p - self.expected_power(weibull)
        }
    }

    /// `E[(W − p)⁺]`
    pub fn expected_shortfall(&self, weibull: &WeibullParams, p: f64) -> f64 {
        if p >= self.p_r {
            0.0
        } else {
            self.expected_power(weibull) - p + self.expected_surplus(weibull, p)
        }
    }

    pub fn value(&self, weibull: &WeibullParams, p: f64) -> f64 {
        let mut c = self.rho_lin * p;
        if self.sigma_ue != 0.0 {
            c += self.sigma_ue * self.expected_shortfall(weibull, p);
        }
        if self.sigma_oe != 0.0 {
            c += self.sigma_oe * self.expected_surplus(weibull, p);
        }
        c
    }

    pub fn gradient(&self, weibull: &WeibullParams, p: f64) -> f64 {
        let f = self.power_cdf(weibull, p);
        self.rho_lin + self.sigma_oe * f - self.sigma_ue * (1.0 - f)
    }
}

/// Station cost model, independent of the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    Thermal(ThermalCost),
    Wind(WindCost),
}

impl CostModel {
    pub fn validate(&self) -> Result<(), DispatchError> {
        match self {
            CostModel::Thermal(c) => c.validate(),
            CostModel::Wind(c) => c.validate(),
        }
    }

    pub fn is_wind(&self) -> bool {
        matches!(self, CostModel::Wind(_))
    }

    /// The cost in effect at a step; wind stations need that step's Weibull
    /// parameters.
    pub fn at(&self, weibull: Option<WeibullParams>) -> Result<StepCost, DispatchError> {
        match (self, weibull) {
            (CostModel::Thermal(c), _) => Ok(StepCost::Thermal(*c)),
            (CostModel::Wind(c), Some(w)) => Ok(StepCost::Wind(*c, w)),
            (CostModel::Wind(_), None) => Err(DispatchError::MissingWeibull),
        }
    }

    /// Bound on `|∇C(p)|` over the box, uniform over all Weibull parameters.
    pub fn gradient_bound(&self, bx: &BoxConstraint) -> f64 {
        match self {
            CostModel::Thermal(c) => c.gradient(bx.lo).abs().max(c.gradient(bx.hi).abs()),
            CostModel::Wind(c) => (c.rho_lin - c.sigma_ue).abs().max((c.rho_lin + c.sigma_oe).abs()),
        }
    }
}

/// A cost function realized for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepCost {
    Thermal(ThermalCost),
    Wind(WindCost, WeibullParams),
}

impl StepCost {
    pub fn value(&self, p: f64) -> f64 {
        match self {
            StepCost::Thermal(c) => c.value(p),
            StepCost::Wind(c, w) => c.value(w, p),
        }
    }

    pub fn gradient(&self, p: f64) -> f64 {
        match self {
            StepCost::Thermal(c) => c.gradient(p),
            StepCost::Wind(c, w) => c.gradient(w, p),
        }
    }

    /// `argmin_{p ∈ box} C(p) + μp`
    pub fn best_response(&self, mu: f64, bx: &BoxConstraint) -> f64 {
        match self {
            StepCost::Thermal(c) if c.eta > 0.0 => bx.clip(-(c.zeta + mu) / (2.0 * c.eta)),
            StepCost::Thermal(c) => {
                if c.zeta + mu < 0.0 {
                    bx.hi
                } else {
                    bx.lo
                }
            }
            StepCost::Wind(..) => {
                if self.gradient(bx.lo) + mu >= 0.0 {
                    return bx.lo;
                }
                if self.gradient(bx.hi) + mu <= 0.0 {
                    return bx.hi;
                }
                let (mut a, mut b) = (bx.lo, bx.hi);
                for _ in 0..MAX_BISECTIONS {
                    if b - a <= WIND_BISECT_TOL {
                        break;
                    }
                    let m = 0.5 * (a + b);
                    if self.gradient(m) + mu >= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                0.5 * (a + b)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DemandProcess {
    Gaussian { mean: f64, stddev: f64 },
    Trace(Vec<f64>),
}

impl DemandProcess {
    pub fn validate(&self) -> Result<(), DispatchError> {
        match self {
            DemandProcess::Gaussian { mean, stddev } => {
                if !mean.is_finite() || *stddev < 0.0 || !stddev.is_finite() {
                    return Err(DispatchError::InvalidDemand(format!(
                        "gaussian needs finite mean and stddev >= 0, got mean {mean}, stddev {stddev}"
                    )));
                }
            }
            DemandProcess::Trace(values) => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(DispatchError::InvalidDemand(
                        "trace must be non-empty with finite values".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `D^t`, a pure function of `(seed, t)`.
    pub fn realize(&self, seed: u64, t: usize) -> Result<f64, DispatchError> {
        match self {
            DemandProcess::Gaussian { mean, stddev } => {
                let normal = Normal::new(*mean, *stddev).map_err(|e| DispatchError::InvalidDemand(e.to_string()))?;
                Ok(normal.sample(&mut rng_stream(seed, Domain::Demand, 0, t as u64)))
            }
            DemandProcess::Trace(values) => values
                .get(t)
                .copied()
                .ok_or(DispatchError::TraceExhausted { t, len: values.len() }),
        }
    }

    /// `[min, max]` of attainable demand: the 6σ envelope for Gaussian
    /// demand, the extrema for a trace.
    pub fn envelope(&self) -> (f64, f64) {
        match self {
            DemandProcess::Gaussian { mean, stddev } => (mean - DEMAND_SIGMAS * stddev, mean + DEMAND_SIGMAS * stddev),
            DemandProcess::Trace(values) => values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            }),
        }
    }
}

/// Per-step Weibull factors shared by all wind stations.
#[derive(Debug, Clone, PartialEq)]
pub enum WeibullProcess {
    Fixed(WeibullParams),
    Uniform {
        scale: (f64, f64),
        shape: (f64, f64),
    },
    /// Each entry holds for `steps_per_entry` consecutive steps.
    Trace {
        entries: Vec<WeibullParams>,
        steps_per_entry: usize,
    },
}

impl WeibullProcess {
    pub fn validate(&self) -> Result<(), DispatchError> {
        match self {
            WeibullProcess::Fixed(w) => WeibullParams::new(w.scale, w.shape).map(|_| ()),
            WeibullProcess::Uniform { scale, shape } => {
                let ok = |(a, b): (f64, f64)| a > 0.0 && a <= b && b.is_finite();
                if !ok(*scale) || !ok(*shape) {
                    return Err(DispatchError::InvalidWeibull {
                        scale: scale.0,
                        shape: shape.0,
                    });
                }
                Ok(())
            }
            WeibullProcess::Trace {
                entries,
                steps_per_entry,
            } => {
                if entries.is_empty() || *steps_per_entry == 0 {
                    return Err(DispatchError::InvalidWeibull {
                        scale: f64::NAN,
                        shape: f64::NAN,
                    });
                }
                entries
                    .iter()
                    .try_for_each(|w| WeibullParams::new(w.scale, w.shape).map(|_| ()))
            }
        }
    }

    /// Number of steps covered, if bounded.
    pub fn steps(&self) -> Option<usize> {
        match self {
            WeibullProcess::Trace {
                entries,
                steps_per_entry,
            } => Some(entries.len() * steps_per_entry),
            _ => None,
        }
    }

    pub fn realize(&self, seed: u64, t: usize) -> Result<WeibullParams, DispatchError> {
        match self {
            WeibullProcess::Fixed(w) => Ok(*w),
            WeibullProcess::Uniform { scale, shape } => {
                let draw = |domain, (a, b): (f64, f64)| {
                    let u: f64 = rng_stream(seed, domain, 0, t as u64).random();
                    a + (b - a) * u
                };
                WeibullParams::new(draw(Domain::WeibullScale, *scale), draw(Domain::WeibullShape, *shape))
            }
            WeibullProcess::Trace {
                entries,
                steps_per_entry,
            } => entries
                .get(t / steps_per_entry)
                .copied()
                .ok_or(DispatchError::TraceExhausted {
                    t,
                    len: entries.len() * steps_per_entry,
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub allocations: Vec<f64>,
    pub multiplier: f64,
    pub cost: f64,
}

/// Minimizes `Σ C_i(P_i)` subject to `(1/n) Σ P_i = D` and `P_i ∈ box_i` by
/// bisection on the multiplier of the coupling constraint.
pub fn instantaneous_optimum(
    costs: &[StepCost],
    boxes: &[BoxConstraint],
    demand: f64,
) -> Result<Optimum, DispatchError> {
    if costs.len() != boxes.len() {
        return Err(DispatchError::LengthMismatch {
            costs: costs.len(),
            boxes: boxes.len(),
        });
    }
    let n = costs.len() as f64;
    let min = boxes.iter().map(|b| b.lo).sum::<f64>() / n;
    let max = boxes.iter().map(|b| b.hi).sum::<f64>() / n;
    let tol = ORACLE_REL_TOL * demand.abs().max(1.0);
    if costs.is_empty() || !demand.is_finite() || demand < min - tol || demand > max + tol {
        return Err(DispatchError::Infeasible { demand, min, max });
    }
    let allocate = |mu: f64| -> (Vec<f64>, f64) {
        let p: Vec<f64> = costs.iter().zip(boxes).map(|(c, b)| c.best_response(mu, b)).collect();
        let mean = p.iter().sum::<f64>() / n;
        (p, mean)
    };
    let finish = |allocations: Vec<f64>, multiplier: f64| {
        let cost = costs.iter().zip(&allocations).map(|(c, &p)| c.value(p)).sum();
        Ok(Optimum {
            allocations,
            multiplier,
            cost,
        })
    };

    let g_max = costs
        .iter()
        .zip(boxes)
        .map(|(c, b)| c.gradient(b.lo).abs().max(c.gradient(b.hi).abs()))
        .fold(0.0, f64::max)
        + 1.0;
    // mean(μ) is nonincreasing: low μ pushes every agent to its upper bound.
    let (mut mu_lo, mut mu_hi) = (-g_max, g_max);
    let (mut p_lo, mut m_lo) = allocate(mu_lo);
    let (mut p_hi, mut m_hi) = allocate(mu_hi);
    let mut expansions = 0;
    while (m_lo < demand - tol || m_hi > demand + tol) && expansions < 60 {
        if m_lo < demand - tol {
            mu_lo *= 2.0;
            (p_lo, m_lo) = allocate(mu_lo);
        }
        if m_hi > demand + tol {
            mu_hi *= 2.0;
            (p_hi, m_hi) = allocate(mu_hi);
        }
        expansions += 1;
    }
    if (m_lo - demand).abs() <= tol {
        return finish(p_lo, mu_lo);
    }
    if (m_hi - demand).abs() <= tol {
        return finish(p_hi, mu_hi);
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (mu_lo + mu_hi);
        if mid <= mu_lo || mid >= mu_hi {
            break;
        }
        let (p, m) = allocate(mid);
        if (m - demand).abs() <= tol {
            return finish(p, mid);
        }
        if m > demand {
            (mu_lo, p_lo, m_lo) = (mid, p, m);
        } else {
            (mu_hi, p_hi, m_hi) = (mid, p, m);
        }
    }
    // The mean allocation jumps across D at a multiplier where some agent's
    // gradient is flat; any convex combination of the two sides is optimal.
    let s = ((m_lo - demand) / (m_lo - m_hi)).clamp(0.0, 1.0);
    let p: Vec<f64> = p_lo
        .iter()
        .zip(&p_hi)
        .zip(boxes)
        .map(|((a, b), bx)| bx.clip(a + s * (b - a)))
        .collect();
    finish(p, 0.5 * (mu_lo + mu_hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(eta: f64) -> StepCost {
        StepCost::Thermal(ThermalCost {
            eta,
            zeta: 0.0,
            xi: 0.0,
        })
    }

    pub(crate) fn station5() -> WindCost {
        WindCost {
            rho_lin: 1.0,
            sigma_ue: 5.0,
            sigma_oe: 30.0,
            v_in: 3.0,
            v_out: 25.0,
            v_r: 13.0,
            p_r: 160.0,
        }
    }

    #[test]
    fn thermal_value_table_row() {
        let c = ThermalCost {
            eta: 0.0675,
            zeta: 2.0,
            xi: 0.0,
        };
        assert!((c.value(50.0) - 268.75).abs() < 1e-12);
        assert_eq!(c.gradient(0.0), 2.0);
    }

    #[test]
    fn wind_without_penalties_is_linear() {
        let c = WindCost {
            sigma_ue: 0.0,
            sigma_oe: 0.0,
            ..station5()
        };
        let w = WeibullParams::new(13.0, 2.3).unwrap();
        assert!((c.value(&w, 10.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn wind_gradient_saturates_above_rated_power() {
        let c = station5();
        let w = WeibullParams::new(13.0, 2.3).unwrap();
        assert_eq!(c.gradient(&w, 160.0), 31.0);
        assert_eq!(c.gradient(&w, 500.0), 31.0);
        assert_eq!(c.gradient(&w, -1.0), 1.0 - 5.0);
    }

    #[test]
    fn wind_expectations_are_consistent() {
        let c = station5();
        let w = WeibullParams::new(13.0, 2.3).unwrap();
        for p in [0.0, 20.0, 80.0, 159.0, 160.0, 200.0] {
            let lhs = c.expected_shortfall(&w, p) - c.expected_surplus(&w, p);
            assert!((lhs - (c.expected_power(&w) - p)).abs() < 1e-9, "p={p}");
        }
    }

    #[test]
    fn optimum_symmetric() {
        let bx = BoxConstraint::new(0.0, 10.0).unwrap();
        let opt = instantaneous_optimum(&[quad(1.0), quad(1.0)], &[bx, bx], 4.0).unwrap();
        assert!((opt.allocations[0] - 4.0).abs() < 1e-8);
        assert!((opt.allocations[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn optimum_weighted() {
        let bx = BoxConstraint::new(0.0, 10.0).unwrap();
        let opt = instantaneous_optimum(&[quad(1.0), quad(2.0)], &[bx, bx], 3.0).unwrap();
        assert!((opt.allocations[0] - 4.0).abs() < 1e-8);
        assert!((opt.allocations[1] - 2.0).abs() < 1e-8);
        assert!((opt.multiplier + 8.0).abs() < 1e-6);
    }

    #[test]
    fn optimum_infeasible() {
        let bx = BoxConstraint::new(0.0, 5.0).unwrap();
        assert!(matches!(
            instantaneous_optimum(&[quad(1.0)], &[bx], 7.0),
            Err(DispatchError::Infeasible { .. })
        ));
    }

    #[test]
    fn optimum_with_flat_wind_region_meets_demand() {
        // Box extends past rated power, so the gradient is flat on [150, 500].
        let wind = WindCost {
            rho_lin: 1.0,
            sigma_ue: 3.0,
            sigma_oe: 20.0,
            v_in: 3.0,
            v_out: 25.0,
            v_r: 13.0,
            p_r: 150.0,
        };
        let w = WeibullParams::new(10.0, 2.5).unwrap();
        let costs = [
            StepCost::Wind(wind, w),
            StepCost::Thermal(ThermalCost {
                eta: 0.0,
                zeta: 21.0,
                xi: 0.0,
            }),
        ];
        let boxes = [
            BoxConstraint::new(0.0, 500.0).unwrap(),
            BoxConstraint::new(0.0, 10.0).unwrap(),
        ];
        let opt = instantaneous_optimum(&costs, &boxes, 200.0).unwrap();
        let mean = opt.allocations.iter().sum::<f64>() / 2.0;
        assert!((mean - 200.0).abs() < 1e-7, "{:?}", opt.allocations);
    }

    #[test]
    fn trace_demand_lookup() {
        let d = DemandProcess::Trace(vec![70.0, 71.0, 69.0]);
        assert_eq!(d.realize(0, 1).unwrap(), 71.0);
        assert!(matches!(
            d.realize(0, 3),
            Err(DispatchError::TraceExhausted { t: 3, len: 3 })
        ));
    }

    #[test]
    fn gaussian_demand_is_pure_in_t() {
        let d = DemandProcess::Gaussian {
            mean: 100.0,
            stddev: 10.0,
        };
        assert_eq!(d.realize(5, 12).unwrap(), d.realize(5, 12).unwrap());
        assert_ne!(d.realize(5, 12).unwrap(), d.realize(5, 13).unwrap());
        assert_eq!(d.envelope(), (40.0, 160.0));
    }

    #[test]
    fn uniform_weibull_stays_in_range() {
        let p = WeibullProcess::Uniform {
            scale: (3.0, 25.0),
            shape: (2.0, 3.0),
        };
        for t in 0..200 {
            let w = p.realize(1, t).unwrap();
            assert!((3.0..=25.0).contains(&w.scale));
            assert!((2.0..=3.0).contains(&w.shape));
        }
    }
}
