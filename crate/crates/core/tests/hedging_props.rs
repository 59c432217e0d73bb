use proptest::prelude::*;
use superhedge::hedging::{alpha_cost_bound, execute, lift, verify_doubling, DoublingHedge, PathHedge};
use superhedge::lp::DenseSimplex;
use superhedge::paths::{GbmSampler, GridFamily, PathSampler, PricePath, SampledPath};
use superhedge::payoffs::{PayoffSpec, StaticOptionSet};
use superhedge::pricing::{kappa_tilde_upper, primal_lp_with_band, MarketSpec};
use superhedge::tree::{build_tree, TreeConfig};

fn square_market(kappa: f64) -> MarketSpec {
    MarketSpec::new(kappa, StaticOptionSet::new(vec![PayoffSpec::square()], vec![1.5]).unwrap()).unwrap()
}

struct Scripted {
    statics: Vec<f64>,
    schedule: Vec<(usize, f64)>,
}

impl PathHedge for Scripted {
    fn statics(&self) -> &[f64] {
        &self.statics
    }

    fn holdings(&self, _: &SampledPath) -> Result<Vec<(usize, f64)>, superhedge::hedging::HedgingError> {
        Ok(self.schedule.clone())
    }
}

/// Piecewise-linear path through lattice knots `exp(m ε)`, sampled so that
/// every knot is a sample.
fn lattice_path(eps: f64, moves: &[bool], per_knot: usize) -> SampledPath {
    let mut knots = vec![0i32];
    for &up in moves {
        let last = *knots.last().unwrap();
        knots.push(last + if up { 1 } else { -1 });
    }
    knots.push(*knots.last().unwrap());
    let mut values = vec![1.0];
    for w in knots.windows(2) {
        let (a, b) = ((w[0] as f64 * eps).exp(), (w[1] as f64 * eps).exp());
        for j in 1..=per_knot {
            values.push(if j == per_knot { b } else { a + (b - a) * j as f64 / per_knot as f64 * 0.5 });
        }
    }
    SampledPath::uniform(1.0, values).unwrap()
}

proptest! {
    #[test]
    fn trade_log_reproduces_z(
        values in prop::collection::vec(0.5f64..2.0, 3..40),
        targets in prop::collection::vec(-3.0f64..3.0, 1..10),
        c0 in -2.0f64..2.0, c1 in 0.0f64..2.0, kappa in 0.0f64..0.12,
    ) {
        let mut v = values;
        v[0] = 1.0;
        let path = SampledPath::uniform(1.0, v).unwrap();
        let n = path.len();
        let schedule: Vec<(usize, f64)> = targets.iter().enumerate().filter(|(i, _)| *i < n).map(|(i, &t)| (i, t)).collect();
        let market = square_market(kappa.max(1e-6));
        let hedge = Scripted { statics: vec![c0, c1], schedule };
        let r = execute(&hedge, &path, &market, &PayoffSpec::lookback_max()).unwrap();
        prop_assert!((r.recompute(market.kappa()) - r.z).abs() <= 1e-12 * (1.0 + r.z.abs()));
        prop_assert_eq!(r.shortfall, r.payoff - r.z);
    }

    #[test]
    fn doubling_chain_on_gbm(seed in any::<u64>(), kappa in 0.01f64..0.124, k in 1.0f64..200.0) {
        let path = GbmSampler::new(0.0, 0.6, 2000, 1.0).unwrap().sample(seed, 0);
        let r = verify_doubling(&path, &square_market(kappa), 2.0, k).unwrap();
        prop_assert!(r.passes(), "{:?}", r);
        prop_assert!((r.execution.recompute(kappa) - r.execution.z).abs() <= 1e-12 * (1.0 + r.execution.z.abs()));
    }

    #[test]
    fn lifted_hedge_beats_the_tree_on_lattice_paths(
        moves in prop::collection::vec(any::<bool>(), 0..3),
        payoff_kind in 0usize..3,
    ) {
        let eps = 0.05;
        let grid = GridFamily::uniform(2);
        let tree = build_tree(&TreeConfig::dyadic(eps, grid.clone(), 2, 1.0)).unwrap();
        let market = square_market(0.05);
        let g = [PayoffSpec::lookback_max(), PayoffSpec::european_call(1.0), PayoffSpec::asian_average()][payoff_kind].clone();
        let band = kappa_tilde_upper(market.kappa(), eps).unwrap();
        let plan = primal_lp_with_band(&tree, &g, &market, band, &DenseSimplex::default()).unwrap().plan;
        let lifted = lift(&plan, &tree, eps, &grid).unwrap();
        let path = lattice_path(eps, &moves, 200);
        let (report, diag, run) = lifted.execute_detailed(&path, &market, &g).unwrap();
        prop_assume!(!run.discretization.frozen);
        prop_assert!(run.discretization.max_log_overshoot(eps) < 1e-9);
        prop_assert!(diag.i_term >= -1e-9, "I = {}", diag.i_term);
        // Every trade sits on a crossing sample.
        let crossings = run.discretization.crossings.crossing_indices();
        prop_assert!(report.trades.iter().all(|t| crossings.contains(&t.sample)));
    }
}

#[test]
fn doubling_on_a_gbm_corpus() {
    let sampler = GbmSampler::new(0.0, 0.3, 500, 1.0).unwrap();
    for kappa in [0.05, 0.1, 0.12] {
        let market = square_market(kappa);
        for s in 0..300 {
            let r = verify_doubling(&sampler.sample(11, s), &market, 2.0, 50.0).unwrap();
            assert!(r.passes(), "kappa {kappa}, stream {s}: {r:?}");
        }
    }
}

#[test]
fn doubling_cost_and_alpha_bound() {
    let market = square_market(0.1);
    let hedge = DoublingHedge::new(2.0, &market).unwrap();
    assert_eq!(hedge.cost(&market), 4.0 + 2.0 * 1.5);
    let base = alpha_cost_bound(0.1, 2.0, 1.5, 1.0);
    for k in [10.0, 100.0, 1000.0] {
        assert!((alpha_cost_bound(0.1, 2.0, 1.5, k) * k - base).abs() <= 1e-12 * base);
    }
    assert!(alpha_cost_bound(0.1249999, 2.0, 1.5, 10.0) > 1e6);
}

#[test]
fn holding_changes_only_at_crossings() {
    let path = SampledPath::from_fn(1001, 1.0, |t| 1.0 + 3.0 * (4.0 * t).sin().abs()).unwrap();
    let market = square_market(0.1);
    let hedge = DoublingHedge::new(2.0, &market).unwrap();
    let schedule = hedge.holdings(&path).unwrap();
    assert_eq!(schedule[0], (0, -1.0));
    assert!(schedule.windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(schedule.iter().all(|(_, h)| -h <= path.sup_norm()));
}
