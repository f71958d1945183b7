use std::collections::BTreeSet;

use byzalloc::aggregation::{aggregate, arc_preprocess, check_property2, AggregationRule, TauStrategy};
use byzalloc::config::{parse_config, ExperimentConfig};
use byzalloc::dispatch::{instantaneous_optimum, BoxConstraint, StepCost, ThermalCost, WeibullParams, WindCost};
use byzalloc::metrics::{constraint_violation, TraceRow};
use byzalloc::topology::{build_metropolis, rho_bound, spectral_gap, Graph, RuleKind};
use byzalloc::DualVector;
use proptest::prelude::*;

/// Random connected graph: a random spanning tree plus extra edges.
fn connected_graph() -> impl Strategy<Value = Graph> {
    (2usize..=20)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|i| (0..i).boxed()).collect();
            let extra = prop::collection::vec((0..n, 0..n), 0..2 * n);
            (Just(n), parents, extra)
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges = BTreeSet::new();
            for (k, &p) in parents.iter().enumerate() {
                edges.insert((p, k + 1));
            }
            for (a, b) in extra {
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            let edges: Vec<_> = edges.into_iter().collect();
            Graph::new(n, &edges).unwrap()
        })
}

fn wind_cost() -> impl Strategy<Value = (WindCost, WeibullParams)> {
    (
        0.0..8.0f64,
        0.0..10.0f64,
        0.0..40.0f64,
        1.0..5.0f64,
        5.0..15.0f64,
        5.0..25.0f64,
        50.0..300.0f64,
        2.0..20.0f64,
        1.2..3.5f64,
    )
        .prop_map(|(rho, ue, oe, v_in, dr, dout, p_r, scale, shape)| {
            let v_r = v_in + dr;
            (
                WindCost {
                    rho_lin: rho,
                    sigma_ue: ue,
                    sigma_oe: oe,
                    v_in,
                    v_out: v_r + dout,
                    v_r,
                    p_r,
                },
                WeibullParams::new(scale, shape).unwrap(),
            )
        })
}

/// Fixture of `n` received messages in dimension `d`, of which the first
/// `k` are replaced by adversarial values, then shuffled by `rot`.
fn fixture(d: usize) -> impl Strategy<Value = (DualVector, Vec<DualVector>, Vec<bool>)> {
    (3usize..=8)
        .prop_flat_map(move |n| {
            let vecs = prop::collection::vec(prop::collection::vec(-100.0..100.0f64, d), n + 1);
            let bad = prop::collection::vec(prop::collection::vec(-1e6..1e6f64, d), n);
            (Just(n), 0..=(n - 1) / 2, vecs, bad, 0..n)
        })
        .prop_map(|(n, k, vecs, bad, rot)| {
            let own = DualVector::new(vecs[0].clone());
            let mut received: Vec<DualVector> = vecs[1..].iter().cloned().map(DualVector::new).collect();
            let mut benign = vec![true; n];
            for j in 0..k {
                received[j] = DualVector::new(bad[j].clone());
                benign[j] = false;
            }
            received.rotate_left(rot);
            benign.rotate_left(rot);
            (own, received, benign)
        })
}

fn uniform_rule(kind: RuleKind, n: usize, budget: usize, tau: TauStrategy) -> AggregationRule {
    AggregationRule {
        kind,
        budget,
        tau,
        own_weight: 1.0 / (n + 1) as f64,
        weights: vec![1.0 / (n + 1) as f64; n],
    }
}

proptest! {
    #[test]
    fn metropolis_is_doubly_stochastic(g in connected_graph()) {
        let w = build_metropolis(&g).unwrap();
        prop_assert!(w.is_doubly_stochastic(1e-12));
        prop_assert!(spectral_gap(&w) < 1.0);
    }

    #[test]
    fn ctm_bound_is_monotone_in_budget(n in 1usize..40) {
        let mut prev = 0.0;
        for b in 0..=(n - 1) / 2 {
            let r = rho_bound(RuleKind::CtmArc, n, b, None).unwrap();
            prop_assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn arc_never_exceeds_max_benign_norm((_own, received, benign) in fixture(2)) {
        let b = benign.iter().filter(|g| !**g).count();
        let clipped = arc_preprocess(&received, b).unwrap();
        let max_benign = received.iter().zip(&benign).filter(|(_, g)| **g).map(|(x, _)| x.norm()).fold(0.0, f64::max);
        for x in &clipped {
            prop_assert!(x.norm() <= max_benign * (1.0 + 1e-12));
        }
    }

    #[test]
    fn composed_rules_dominate_benign_norms(
        (own, received, benign) in fixture(3),
        (own1, received1, benign1) in fixture(1),
    ) {
        let rules = [
            (RuleKind::CtmArc, &own1, &received1, &benign1),
            (RuleKind::IosArc, &own, &received, &benign),
            (RuleKind::SccArc, &own, &received, &benign),
        ];
        for (kind, own, received, benign) in rules {
            let b = benign.iter().filter(|g| !**g).count();
            let rule = uniform_rule(kind, received.len(), b, TauStrategy::Oracle);
            let out = aggregate(&rule, own, received, Some(benign)).unwrap();
            prop_assert!(check_property2(&out, own, received, benign), "{kind}: {:?}", out);
        }
    }

    #[test]
    fn weighted_average_of_constants_is_the_constant(c in -1e3..1e3f64, n in 1usize..8) {
        let x = DualVector::scalar(c);
        let rule = uniform_rule(RuleKind::WeightedAverage, n, 0, TauStrategy::default());
        let out = aggregate(&rule, &x, &vec![x.clone(); n], None).unwrap();
        prop_assert!((out.as_slice()[0] - c).abs() <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn thermal_cost_is_convex(
        eta in 0.0..0.2f64, zeta in -10.0..40.0f64, xi in 0.0..50.0f64,
        p1 in 0.0..400.0f64, p2 in 0.0..400.0f64, s in 0.0..1.0f64,
    ) {
        let c = StepCost::Thermal(ThermalCost { eta, zeta, xi });
        let mid = s * p1 + (1.0 - s) * p2;
        prop_assert!(c.value(mid) <= s * c.value(p1) + (1.0 - s) * c.value(p2) + 1e-8);
    }

    #[test]
    fn wind_cost_is_convex((w, weibull) in wind_cost(), a in 0.0..1.0f64, b in 0.0..1.0f64, s in 0.0..1.0f64) {
        let c = StepCost::Wind(w, weibull);
        let (p1, p2) = (a * w.p_r, b * w.p_r);
        let mid = s * p1 + (1.0 - s) * p2;
        let scale = 1.0 + c.value(p1).abs() + c.value(p2).abs();
        prop_assert!(c.value(mid) <= s * c.value(p1) + (1.0 - s) * c.value(p2) + 1e-8 * scale);
    }

    #[test]
    fn wind_gradient_is_nondecreasing((w, weibull) in wind_cost(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let c = StepCost::Wind(w, weibull);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(c.gradient(lo * w.p_r) <= c.gradient(hi * w.p_r) + 1e-12);
    }

    #[test]
    fn oracle_meets_demand_and_kkt(
        agents in prop::collection::vec((0.001..0.1f64, 0.0..40.0f64, 0.0..100.0f64, 10.0..200.0f64), 1..8),
        frac in 0.0..1.0f64,
    ) {
        let costs: Vec<StepCost> = agents.iter().map(|&(eta, zeta, _, _)| StepCost::Thermal(ThermalCost { eta, zeta, xi: 0.0 })).collect();
        let boxes: Vec<BoxConstraint> = agents.iter().map(|&(_, _, lo, w)| BoxConstraint::new(lo, lo + w).unwrap()).collect();
        let n = agents.len() as f64;
        let lo = boxes.iter().map(|b| b.lo).sum::<f64>() / n;
        let hi = boxes.iter().map(|b| b.hi).sum::<f64>() / n;
        let demand = lo + frac * (hi - lo);
        let opt = instantaneous_optimum(&costs, &boxes, demand).unwrap();
        let mean = opt.allocations.iter().sum::<f64>() / n;
        prop_assert!((mean - demand).abs() <= 1e-9 * demand.max(1.0));
        for ((c, b), &p) in costs.iter().zip(&boxes).zip(&opt.allocations) {
            prop_assert!(b.contains(p));
            let g = c.gradient(p) + opt.multiplier;
            let interior = p > b.lo + 1e-9 && p < b.hi - 1e-9;
            if interior {
                prop_assert!(g.abs() <= 1e-6 * (1.0 + opt.multiplier.abs()));
            } else if p <= b.lo + 1e-9 {
                prop_assert!(g >= -1e-6 * (1.0 + opt.multiplier.abs()));
            } else {
                prop_assert!(g <= 1e-6 * (1.0 + opt.multiplier.abs()));
            }
        }
    }

    #[test]
    fn violation_ignores_agent_order(
        rows in prop::collection::vec((0.0..200.0f64, prop::collection::vec(0.0..200.0f64, 4)), 1..30),
        rot in 0usize..4,
    ) {
        let build = |rotate: usize| -> Vec<TraceRow> {
            rows.iter().enumerate().map(|(t, (d, p))| {
                let mut p = p.clone();
                p.rotate_left(rotate);
                TraceRow { t: t + 1, demand: *d, p }
            }).collect()
        };
        let a = constraint_violation(&build(0));
        let b = constraint_violation(&build(rot));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn config_round_trips(eta in 0.0..1.0f64, hi in 10.0..500.0f64, seed in 0..=i64::MAX as u64, steps in 0usize..500) {
        let text = format!(
            "name = \"rt\"\nseed = {seed}\nhorizon = {steps}\n\n[network]\nagents = 2\nedges = [[0, 1]]\n\n\
             [[agents]]\nkind = \"thermal\"\neta = {eta:?}\nzeta = 1.0\nxi = 0.0\nlo = 0.0\nhi = {hi:?}\n\n\
             [[agents]]\nkind = \"thermal\"\neta = 0.5\nzeta = 1.0\nxi = 0.0\nlo = 0.0\nhi = 10.0\n\n\
             [demand]\nkind = \"trace\"\nvalues = [1.0]\n\n[attack]\nkind = \"none\"\n\n\
             [algorithm]\nkind = \"attack_free\"\nalpha = 1.0\nbeta = 1.0\ntheta = 0.1\n"
        );
        let parsed = ExperimentConfig::from_toml(&text).unwrap();
        let again = ExperimentConfig::from_toml(&parsed.to_toml().unwrap()).unwrap();
        prop_assert_eq!(parsed, again);
    }
}

#[test]
fn seeds_beyond_toml_range_are_rejected() {
    let text = "name = \"s\"\nseed = 1\nhorizon = 1\n\n[network]\nagents = 2\nedges = [[0, 1]]\n\n\
                [[agents]]\nkind = \"thermal\"\neta = 0.5\nzeta = 1.0\nxi = 0.0\nlo = 0.0\nhi = 10.0\n\n\
                [[agents]]\nkind = \"thermal\"\neta = 0.5\nzeta = 1.0\nxi = 0.0\nlo = 0.0\nhi = 10.0\n\n\
                [demand]\nkind = \"trace\"\nvalues = [0.0, 1.0]\n\n[attack]\nkind = \"none\"\n\n\
                [algorithm]\nkind = \"attack_free\"\nalpha = 1.0\nbeta = 1.0\ntheta = 0.1\n";
    let mut cfg = ExperimentConfig::from_toml(text).unwrap();
    assert!(cfg.resolve(std::path::Path::new(".")).is_ok());
    cfg.seed = u64::MAX;
    let err = cfg.resolve(std::path::Path::new(".")).unwrap_err();
    assert!(err.field_errors().iter().any(|e| e.path == "seed"));
}

#[test]
fn bundled_configs_validate() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for case in ["case1", "case2"] {
        for entry in std::fs::read_dir(root.join(case)).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|x| x == "toml") {
                parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                count += 1;
            }
        }
    }
    assert_eq!(count, 32);
}
