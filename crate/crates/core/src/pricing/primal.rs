use serde::Serialize;

use super::instance::TreeInstance;
use super::liquidation::{liquidation_value_with, HedgePlan};
use super::{MarketSpec, PricingError, RECHECK_TOL};
use crate::lp::{LinearProgram, LpBackend, LpSolution, LpStatus, Relation, Sense};
use crate::paths::PricePath;
use crate::payoffs::PayoffSpec;
use crate::tree::EventTree;

/// Result of re-evaluating a hedge witness leaf by leaf.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessCheck {
    pub leaves_checked: usize,
    /// Smallest `Z − G` over the checked leaves.
    pub min_margin: f64,
    pub worst_leaf: usize,
}

#[derive(Debug, Clone)]
pub struct PrimalOutcome {
    pub value: f64,
    pub plan: HedgePlan,
    pub witness: WitnessCheck,
    pub lp: LinearProgram,
    pub solution: LpSolution,
    /// Leaf positions (in [`EventTree::leaves`] order) carrying constraints.
    pub support: Vec<usize>,
    /// Row of the super-replication constraint for each support leaf.
    pub superreplication_rows: Vec<usize>,
    /// Row of the terminal flat-position constraint for each support leaf.
    pub liquidation_rows: Vec<usize>,
}

pub(crate) fn buy_var(n_options: usize, node: usize) -> usize {
    1 + n_options + 2 * node
}

pub(crate) fn sell_var(n_options: usize, node: usize) -> usize {
    2 + n_options + 2 * node
}

/// Cheapest super-replication on every leaf.
pub fn primal_lp(
    tree: &EventTree,
    payoff: &PayoffSpec,
    market: &MarketSpec,
    solver: &dyn LpBackend,
) -> Result<PrimalOutcome, PricingError> {
    primal_lp_subset(tree, payoff, market, tree.leaves(), solver)
}

/// Cheapest super-replication on the leaves in `support` (node ids).
pub fn primal_lp_subset(
    tree: &EventTree,
    payoff: &PayoffSpec,
    market: &MarketSpec,
    support: &[usize],
    solver: &dyn LpBackend,
) -> Result<PrimalOutcome, PricingError> {
    let inst = TreeInstance::new(tree, payoff, market)?;
    solve_primal(tree, &inst, support, solver)
}

/// Cheapest super-replication on every leaf with transaction-cost rate
/// `band` in place of the market's rate.
pub fn primal_lp_with_band(
    tree: &EventTree,
    payoff: &PayoffSpec,
    market: &MarketSpec,
    band: f64,
    solver: &dyn LpBackend,
) -> Result<PrimalOutcome, PricingError> {
    let inst = TreeInstance::with_band(tree, payoff, market, band)?;
    solve_primal(tree, &inst, tree.leaves(), solver)
}

fn support_positions(tree: &EventTree, support: &[usize]) -> Result<Vec<usize>, PricingError> {
    if support.is_empty() {
        return Err(PricingError::InvalidInput("support must contain at least one leaf".into()));
    }
    let mut pos = Vec::with_capacity(support.len());
    for &id in support {
        match tree.leaves().iter().position(|&l| l == id) {
            Some(j) => pos.push(j),
            None => return Err(PricingError::InvalidInput(format!("node {id} is not a leaf"))),
        }
    }
    pos.sort_unstable();
    pos.dedup();
    Ok(pos)
}

/// Builds and solves the primal program for an explicit instance.
pub fn solve_primal(
    tree: &EventTree,
    inst: &TreeInstance,
    support: &[usize],
    solver: &dyn LpBackend,
) -> Result<PrimalOutcome, PricingError> {
    inst.check(tree)?;
    let support = support_positions(tree, support)?;
    let n = inst.num_options();
    let kappa = inst.band;

    let mut objective = vec![0.0; 1 + n + 2 * tree.len()];
    objective[0] = 1.0;
    objective[1..=n].copy_from_slice(&inst.caps);
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);

    let chains: Vec<Vec<usize>> = support.iter().map(|&j| tree.path_to(tree.leaves()[j])).collect();
    let mut superreplication_rows = Vec::with_capacity(support.len());
    for (&j, chain) in support.iter().zip(&chains) {
        let mut terms = vec![(0, 1.0)];
        terms.extend((0..n).map(|i| (1 + i, inst.options[i][j])));
        for &u in chain {
            let level = tree.level(u);
            terms.push((buy_var(n, u), -(1.0 + kappa) * level));
            terms.push((sell_var(n, u), (1.0 - kappa) * level));
        }
        superreplication_rows.push(lp.add_sparse_constraint(&terms, Relation::Ge, inst.payoff[j]));
    }
    let mut liquidation_rows = Vec::with_capacity(support.len());
    for chain in &chains {
        let terms: Vec<_> = chain.iter().flat_map(|&u| [(buy_var(n, u), 1.0), (sell_var(n, u), -1.0)]).collect();
        liquidation_rows.push(lp.add_sparse_constraint(&terms, Relation::Eq, 0.0));
    }

    let solution = solver.solve(&lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(PricingError::UnexpectedStatus { problem: "primal", status: solution.status });
    }
    let x = &solution.x;
    let buys = (0..tree.len()).map(|u| x[buy_var(n, u)]).collect();
    let sells = (0..tree.len()).map(|u| x[sell_var(n, u)]).collect();
    let plan = HedgePlan::new(tree, kappa, x[..=n].to_vec(), buys, sells);
    let witness = recheck(tree, inst, &plan, &support)?;
    Ok(PrimalOutcome {
        value: solution.objective,
        plan,
        witness,
        lp,
        solution,
        support,
        superreplication_rows,
        liquidation_rows,
    })
}

/// Re-evaluates the plan on each support path with the liquidation formula
/// and rejects it if any leaf falls short beyond rounding.
fn recheck(tree: &EventTree, inst: &TreeInstance, plan: &HedgePlan, support: &[usize]) -> Result<WitnessCheck, PricingError> {
    let mut check = WitnessCheck { leaves_checked: 0, min_margin: f64::INFINITY, worst_leaf: 0 };
    for &j in support {
        let leaf = tree.leaves()[j];
        let path = tree.jump_path(leaf);
        let strategy = plan.restrict(tree, leaf);
        let values = inst.option_values(j);
        let z = liquidation_value_with(&strategy, &path, plan.kappa, &values)?;
        let gross = plan.statics[0].abs()
            + plan.statics[1..].iter().zip(&values).map(|(c, f)| (c * f).abs()).sum::<f64>()
            + strategy.trades.iter().map(|t| 2.0 * path.value_at(t.time) * (t.buy + t.sell)).sum::<f64>();
        let g = inst.payoff[j];
        let margin = z - g;
        if margin < -RECHECK_TOL * (1.0 + g.abs() + gross) {
            return Err(PricingError::WitnessRejected { leaf, value: z, payoff: g });
        }
        check.leaves_checked += 1;
        if margin < check.min_margin {
            check.min_margin = margin;
            check.worst_leaf = leaf;
        }
    }
    Ok(check)
}
