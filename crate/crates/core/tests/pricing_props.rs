use std::sync::Arc;

use proptest::prelude::*;
use superhedge::lp::{DenseSimplex, LpStatus};
use superhedge::paths::{GridFamily, PricePath};
use superhedge::payoffs::{CustomPayoff, PayoffSpec, StaticOptionSet};
use superhedge::pricing::{
    b_constant, duality_gap, hat_c, lower_bound_value, primal_lp, primal_lp_subset, solve_dual, upper_bound_value,
    BoundInputs, MarketSpec, PricingError, TreeInstance,
};
use superhedge::tree::{build_tree, EventTree, TreeConfig};

fn tol(v: f64) -> f64 {
    1e-7 * (1.0 + v.abs())
}

fn value(tree: &EventTree, payoff: &PayoffSpec, market: &MarketSpec) -> Option<f64> {
    primal_lp(tree, payoff, market, &DenseSimplex::default()).ok().map(|o| o.value)
}

fn payoff() -> impl Strategy<Value = PayoffSpec> {
    prop_oneof![
        Just(PayoffSpec::lookback_max()),
        Just(PayoffSpec::asian_average()),
        (0.8f64..1.2).prop_map(PayoffSpec::european_call),
        (0.8f64..1.2).prop_map(PayoffSpec::european_put),
    ]
}

fn tree() -> impl Strategy<Value = EventTree> {
    (0.02f64..0.095, prop::collection::btree_set(1u32..10, 1..=2)).prop_map(|(eps, ts)| {
        let times = ts.into_iter().map(|t| f64::from(t) / 10.0).collect();
        build_tree(&TreeConfig::partition(eps, times, 1.0)).unwrap()
    })
}

fn statics() -> impl Strategy<Value = StaticOptionSet> {
    prop_oneof![
        Just(StaticOptionSet::empty()),
        (0.05f64..0.4).prop_map(|p| StaticOptionSet::new(vec![PayoffSpec::european_call(1.0)], vec![p]).unwrap()),
        (0.05f64..0.4, 1.05f64..1.6).prop_map(|(p, q)| {
            StaticOptionSet::new(vec![PayoffSpec::european_call(1.0), PayoffSpec::square()], vec![p, q]).unwrap()
        }),
    ]
}

fn affine(base: PayoffSpec, a: f64, m: f64) -> PayoffSpec {
    PayoffSpec::custom(
        CustomPayoff {
            name: "affine".into(),
            eval: Arc::new(move |p: &dyn PricePath| a * base.evaluate(p) + m),
            path_dependent: true,
            bounded: false,
            value_at_zero: None,
        },
        None,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn duality_closes(tree in tree(), g in payoff(), statics in statics(), kappa in 0.005f64..0.12) {
        let market = MarketSpec::new(kappa, statics).unwrap();
        if let Ok(r) = duality_gap(&tree, &g, &market, &DenseSimplex::default()) {
            prop_assert!(r.ok, "{:?}", r);
        }
    }

    #[test]
    fn more_friction_costs_more(tree in tree(), g in payoff(), statics in statics(), k1 in 0.005f64..0.12, k2 in 0.005f64..0.12) {
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let a = value(&tree, &g, &MarketSpec::new(lo, statics.clone()).unwrap());
        let b = value(&tree, &g, &MarketSpec::new(hi, statics).unwrap());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!(a <= b + tol(b));
        }
    }

    #[test]
    fn dearer_options_cost_more(tree in tree(), g in payoff(), p in 0.05f64..0.3, bump in 0.0f64..0.2, kappa in 0.01f64..0.1) {
        let cheap = StaticOptionSet::new(vec![PayoffSpec::european_call(1.0)], vec![p]).unwrap();
        let dear = cheap.with_prices(vec![p + bump]).unwrap();
        let a = value(&tree, &g, &MarketSpec::new(kappa, cheap).unwrap());
        let b = value(&tree, &g, &MarketSpec::new(kappa, dear).unwrap());
        let none = value(&tree, &g, &MarketSpec::new(kappa, StaticOptionSet::empty()).unwrap()).unwrap();
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!(a <= b + tol(b));
            prop_assert!(b <= none + tol(none));
        }
    }

    #[test]
    fn fewer_scenarios_cost_less(tree in tree(), g in payoff(), kappa in 0.01f64..0.12, mask in any::<u64>()) {
        let market = MarketSpec::new(kappa, StaticOptionSet::empty()).unwrap();
        let solver = DenseSimplex::default();
        let leaves = tree.leaves();
        let small: Vec<usize> = leaves.iter().enumerate().filter(|(i, _)| mask >> (i % 64) & 1 == 1).map(|(_, &l)| l).collect();
        prop_assume!(!small.is_empty());
        let large: Vec<usize> = leaves.iter().copied().filter(|l| small.contains(l) || l % 2 == 0).collect();
        // A support that admits an arbitrage prices at −∞.
        let sub = |support: &[usize]| match primal_lp_subset(&tree, &g, &market, support, &solver) {
            Ok(o) => o.value,
            Err(PricingError::UnexpectedStatus { status: LpStatus::Unbounded, .. }) => f64::NEG_INFINITY,
            Err(e) => panic!("{e}"),
        };
        let (vs, vl) = (sub(&small), sub(&large));
        let vf = value(&tree, &g, &market).unwrap();
        let below = |a: f64, b: f64| a == f64::NEG_INFINITY || a <= b + tol(b);
        prop_assert!(below(vs, vl), "{} > {}", vs, vl);
        prop_assert!(below(vl, vf), "{} > {}", vl, vf);
    }

    #[test]
    fn positively_homogeneous_and_cash_invariant(tree in tree(), g in payoff(), statics in statics(), kappa in 0.01f64..0.12, a in 0.1f64..5.0, m in -2.0f64..2.0) {
        let market = MarketSpec::new(kappa, statics).unwrap();
        prop_assume!(value(&tree, &g, &market).is_some());
        let v = value(&tree, &g, &market).unwrap();
        let scaled = value(&tree, &affine(g.clone(), a, 0.0), &market).unwrap();
        let shifted = value(&tree, &affine(g, 1.0, m), &market).unwrap();
        prop_assert!((scaled - a * v).abs() <= tol(a * v) * 10.0);
        prop_assert!((shifted - v - m).abs() <= tol(v + m) * 10.0);
    }

    #[test]
    fn cps_from_the_dual_is_consistent(tree in tree(), g in payoff(), statics in statics(), kappa in 0.01f64..0.12) {
        let market = MarketSpec::new(kappa, statics).unwrap();
        let inst = TreeInstance::new(&tree, &g, &market).unwrap();
        if let Ok(d) = solve_dual(&tree, &inst, &DenseSimplex::default()) {
            prop_assert!(d.report.passes(1e-7), "{:?}", d.report);
            prop_assert!((d.report.expectation - d.value).abs() <= tol(d.value));
        }
    }

    #[test]
    fn b_grows_with_epsilon(e1 in 0.001f64..0.5, e2 in 0.001f64..0.5, kappa in 0.0f64..0.12, cq in 1.1f64..5.0, ln in 0.5f64..5.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let c = hat_c(cq, ln);
        prop_assert!(b_constant(1.0, lo, kappa, c, ln) <= b_constant(1.0, hi, kappa, c, ln));
    }
}

fn quad_market(kappa: f64, call: f64, square: f64) -> MarketSpec {
    let statics =
        StaticOptionSet::new(vec![PayoffSpec::european_call(1.0), PayoffSpec::square()], vec![call, square]).unwrap();
    MarketSpec::new(kappa, statics).unwrap()
}

#[test]
fn upper_bound_decreases_in_lambda() {
    let tree = build_tree(&TreeConfig::dyadic(0.05, GridFamily::uniform(2), 2, 1.0)).unwrap();
    let market = quad_market(0.05, 0.1, 1.2);
    let inputs = BoundInputs::from_market(&market, 1.0).unwrap();
    let solver = DenseSimplex::default();
    let mut last = f64::INFINITY;
    for lambda in [1.5, 2.0, 4.0, 16.0] {
        let r = upper_bound_value(&tree, &PayoffSpec::lookback_max(), &market, &inputs, lambda, &solver).unwrap();
        let u = r.upper_bound.unwrap();
        assert!(u <= last + 1e-9, "Lambda {lambda}: {u} > {last}");
        assert!(u >= r.primal_value - 1e-9);
        last = u;
    }
}

#[test]
fn lower_bound_below_primal_across_kappa() {
    let tree = build_tree(&TreeConfig::partition(0.02, vec![0.3, 0.6], 1.0)).unwrap();
    let solver = DenseSimplex::default();
    for kappa in [0.06, 0.08, 0.1, 0.12] {
        let market = MarketSpec::new(kappa, StaticOptionSet::new(vec![PayoffSpec::square()], vec![1.5]).unwrap()).unwrap();
        let inputs = BoundInputs::from_market(&market, 1.0).unwrap();
        let r = lower_bound_value(&tree, &PayoffSpec::lookback_max(), &market, &inputs, &solver).unwrap();
        if let Some(lb) = r.lower_bound {
            assert!(lb <= r.primal_value + 1e-9);
        }
    }
}
