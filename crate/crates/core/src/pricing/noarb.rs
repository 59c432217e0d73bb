use serde::Serialize;

use super::cps::ConsistentPriceSystem;
use super::{MarketSpec, PricingError};
use crate::lp::{LinearProgram, LpBackend, LpStatus, Relation, Sense};
use crate::tree::EventTree;

/// Slack is capped here so the program stays bounded without options.
const SLACK_CAP: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoArbitrageReport {
    pub ok: bool,
    /// `max_Q min_i (ℒ_i − E_Q f_i)` over martingale measures on the tree,
    /// capped at 1; `None` when the tree has no martingale measure.
    pub slack: Option<f64>,
    /// Maximizing measure as a frictionless price system (`X = level · p`).
    pub witness: Option<ConsistentPriceSystem>,
}

/// Looks for a martingale measure on the tree that prices every static
/// option strictly below its ask.
pub fn check_no_arbitrage(
    tree: &EventTree,
    market: &MarketSpec,
    solver: &dyn LpBackend,
) -> Result<NoArbitrageReport, PricingError> {
    let statics = market.statics();
    let nodes = tree.len();
    let s = nodes;
    let mut objective = vec![0.0; nodes + 1];
    objective[s] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    lp.set_bounds(s, f64::NEG_INFINITY, SLACK_CAP);
    lp.add_sparse_constraint(&[(tree.root(), 1.0)], Relation::Eq, 1.0);
    for node in tree.nodes().iter().filter(|n| !n.children.is_empty()) {
        let mut flow = vec![(node.id, 1.0)];
        flow.extend(node.children.iter().map(|&c| (c, -1.0)));
        lp.add_sparse_constraint(&flow, Relation::Eq, 0.0);
        let mut mart = vec![(node.id, tree.level(node.id))];
        mart.extend(node.children.iter().map(|&c| (c, -tree.level(c))));
        lp.add_sparse_constraint(&mart, Relation::Eq, 0.0);
    }
    let paths: Vec<_> = tree.leaves().iter().map(|&l| tree.jump_path(l)).collect();
    for (option, &price) in statics.options().iter().zip(statics.prices()) {
        let mut terms: Vec<_> = tree.leaves().iter().zip(&paths).map(|(&l, p)| (l, option.evaluate(p))).collect();
        terms.push((s, 1.0));
        lp.add_sparse_constraint(&terms, Relation::Le, price);
    }
    let sol = solver.solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(NoArbitrageReport { ok: false, slack: None, witness: None }),
        status => return Err(PricingError::UnexpectedStatus { problem: "no-arbitrage", status }),
    }
    let p: Vec<f64> = sol.x[..nodes].to_vec();
    let x = (0..nodes).map(|v| tree.level(v) * p[v]).collect();
    let slack = sol.x[s];
    Ok(NoArbitrageReport {
        ok: slack > solver.tolerance(),
        slack: Some(slack),
        witness: Some(ConsistentPriceSystem { kappa: 0.0, p, x }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DenseSimplex;
    use crate::payoffs::{PayoffSpec, StaticOptionSet};
    use crate::tree::{build_tree, TreeConfig};

    fn call_market(price: f64) -> MarketSpec {
        MarketSpec::new(0.05, StaticOptionSet::new(vec![PayoffSpec::european_call(1.0)], vec![price]).unwrap()).unwrap()
    }

    #[test]
    fn one_step_call() {
        let tree = build_tree(&TreeConfig::binomial(0.1, vec![0.5], 1.0)).unwrap();
        let solver = DenseSimplex::default();
        let p_up = (1.0 - (-0.1f64).exp()) / (0.1f64.exp() - (-0.1f64).exp());
        let call = p_up * (0.1f64.exp() - 1.0);
        assert!((p_up - 0.47502).abs() < 1e-5);
        let r = check_no_arbitrage(&tree, &call_market(0.2), &solver).unwrap();
        assert!(r.ok);
        assert!((r.slack.unwrap() - (0.2 - call)).abs() < 1e-9);
        let w = r.witness.unwrap();
        let up = tree.nodes().iter().find(|n| n.offset == 1).unwrap().id;
        assert!((w.p[up] - p_up).abs() < 1e-9);
        let r = check_no_arbitrage(&tree, &call_market(0.01), &solver).unwrap();
        assert!(!r.ok);
    }

    #[test]
    fn no_options_is_fine() {
        let tree = build_tree(&TreeConfig::partition(0.1, vec![0.5], 1.0)).unwrap();
        let market = MarketSpec::new(0.05, StaticOptionSet::empty()).unwrap();
        let r = check_no_arbitrage(&tree, &market, &DenseSimplex::default()).unwrap();
        assert!(r.ok && r.slack == Some(1.0));
    }
}
