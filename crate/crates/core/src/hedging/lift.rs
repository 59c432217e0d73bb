use serde::Serialize;

use super::{execute_schedule, ExecutionReport, HedgingError, PathHedge};
use crate::paths::{discretize_detailed, Discretization, GridFamily, PricePath, SampledPath};
use crate::payoffs::PayoffSpec;
use crate::pricing::{liquidation_value_with, HedgePlan, MarketSpec};
use crate::tree::{EventTree, NodeKind, TreeMode};

/// Snapped jump times are matched to tree times within this relative
/// tolerance.
const TIME_TOL: f64 = 1e-12;

/// A tree hedge run on continuous paths: over `(τ_k, τ_{k+1}]` hold the tree
/// position in force just before the `k`-th jump of the discretized path.
#[derive(Debug, Clone, Copy)]
pub struct LiftedHedge<'a> {
    plan: &'a HedgePlan,
    tree: &'a EventTree,
    grid: &'a GridFamily,
    max_jumps: usize,
}

/// Where one path lands in the tree and what it trades.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedRun {
    pub discretization: Discretization,
    /// Tree node of each retained jump.
    pub jump_nodes: Vec<usize>,
    pub leaf: usize,
    /// `(crossing sample, holding from there on)`.
    pub schedule: Vec<(usize, f64)>,
}

/// Checks that `plan` was built on `tree` and that `tree` is the dyadic tree
/// for `epsilon` and `grid`.
pub fn lift<'a>(
    plan: &'a HedgePlan,
    tree: &'a EventTree,
    epsilon: f64,
    grid: &'a GridFamily,
) -> Result<LiftedHedge<'a>, HedgingError> {
    let TreeMode::DyadicGrid { grid: tree_grid, max_jumps } = &tree.config().mode else {
        return Err(HedgingError::TreeMismatch("lifting needs a dyadic-mode tree".into()));
    };
    if tree_grid != grid {
        return Err(HedgingError::TreeMismatch("grid family differs from the tree's".into()));
    }
    if (tree.epsilon() - epsilon).abs() > TIME_TOL * epsilon {
        return Err(HedgingError::TreeMismatch(format!("epsilon {epsilon} but tree built with {}", tree.epsilon())));
    }
    let n = tree.len();
    if plan.gamma.len() != n || plan.buys.len() != n || plan.sells.len() != n || plan.statics.is_empty() {
        return Err(HedgingError::TreeMismatch(format!("plan sized for {} nodes, tree has {n}", plan.gamma.len())));
    }
    Ok(LiftedHedge { plan, tree, grid, max_jumps: *max_jumps })
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_TOL * a.abs().max(1.0)
}

impl<'a> LiftedHedge<'a> {
    pub fn plan(&self) -> &'a HedgePlan {
        self.plan
    }

    pub fn tree(&self) -> &'a EventTree {
        self.tree
    }

    /// Discretizes `path` and walks its image down the tree.
    pub fn run(&self, path: &SampledPath) -> Result<LiftedRun, HedgingError> {
        let tree = self.tree;
        if !same_time(path.horizon(), tree.horizon()) {
            return Err(HedgingError::InvalidInput(format!(
                "path horizon {} differs from tree horizon {}",
                path.horizon(),
                tree.horizon()
            )));
        }
        let disc = discretize_detailed(path, tree.epsilon(), self.max_jumps, self.grid)?;
        let levels = disc.jump_path.levels();
        let mut cur = tree.root();
        let mut jump_nodes = Vec::with_capacity(disc.snapped_times.len());
        let mut schedule = Vec::with_capacity(disc.snapped_times.len());
        for (k, (&t, &idx)) in disc.snapped_times.iter().zip(disc.crossings.crossing_indices()).enumerate() {
            let up = levels[k + 1] > levels[k];
            let (pre, next) = self.descend(cur, t, up)?;
            schedule.push((idx, self.plan.holding(pre)));
            jump_nodes.push(next);
            cur = next;
        }
        let leaf = self.settle(cur)?;
        Ok(LiftedRun { discretization: disc, jump_nodes, leaf, schedule })
    }

    /// From `cur`, waits until time `t` and takes the jump there. Returns the
    /// node just before the jump and the jump node.
    fn descend(&self, mut cur: usize, t: f64, up: bool) -> Result<(usize, usize), HedgingError> {
        loop {
            let node = self.tree.node(cur);
            let mut wait = None;
            for &c in &node.children {
                let child = self.tree.node(c);
                match child.kind {
                    NodeKind::Jump { up: u } if u == up && same_time(child.time, t) => return Ok((cur, c)),
                    NodeKind::Wait if child.time < t => wait = Some(c),
                    _ => {}
                }
            }
            cur = wait.ok_or_else(|| {
                HedgingError::TreeMismatch(format!("no jump at t = {t} below node {cur} of the tree"))
            })?;
        }
    }

    /// Follows wait nodes down to the terminal node.
    fn settle(&self, mut cur: usize) -> Result<usize, HedgingError> {
        loop {
            let node = self.tree.node(cur);
            if node.is_terminal() {
                return Ok(cur);
            }
            cur = node
                .children
                .iter()
                .copied()
                .find(|&c| matches!(self.tree.node(c).kind, NodeKind::Terminal | NodeKind::Wait))
                .ok_or_else(|| HedgingError::TreeMismatch(format!("node {cur} has no waiting branch")))?;
        }
    }

    /// Executes the lifted hedge and evaluates the tree side of the
    /// comparison.
    pub fn execute_detailed(
        &self,
        path: &SampledPath,
        market: &MarketSpec,
        payoff: &PayoffSpec,
    ) -> Result<(ExecutionReport, LiftedDiagnostics, LiftedRun), HedgingError> {
        let run = self.run(path)?;
        let report = execute_schedule(&self.plan.statics, &run.schedule, path, market, payoff)?;
        let strategy = self.plan.restrict(self.tree, run.leaf);
        let statics = market.statics();

        let lattice = self.tree.jump_path(run.leaf);
        let z_tree = liquidation_value_with(&strategy, &lattice, self.plan.kappa, &statics.evaluate(&lattice))?;

        // Ψ(S) with the tree's own jump times, so trades at a jump node see
        // the post-jump level.
        let node_times = run.jump_nodes.iter().map(|&v| self.tree.node(v).time).collect();
        let psi = run.discretization.jump_path.with_jump_times(node_times)?;
        let f_psi = statics.evaluate(&psi);
        let z_psi = liquidation_value_with(&strategy, &psi, self.plan.kappa, &f_psi)?;
        let static_psi = static_value(&self.plan.statics, &f_psi);
        let i_term = (report.z - report.static_value) - (z_psi - static_psi);
        Ok((report, LiftedDiagnostics { z_tree, z_psi, i_term }, run))
    }
}

fn static_value(statics: &[f64], option_values: &[f64]) -> f64 {
    statics[0] + statics[1..].iter().zip(option_values).map(|(c, f)| c * f).sum::<f64>()
}

/// Tree-side values for one lifted run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftedDiagnostics {
    /// Tree liquidation value on the lattice path of the reached leaf, at the
    /// plan's band.
    pub z_tree: f64,
    /// Tree plan evaluated on `Ψ(S)` at the plan's band.
    pub z_psi: f64,
    /// Trading gain on `S` at the market cost minus trading gain on `Ψ(S)`
    /// at the plan's band.
    pub i_term: f64,
}

impl PathHedge for LiftedHedge<'_> {
    fn statics(&self) -> &[f64] {
        &self.plan.statics
    }

    fn holdings(&self, path: &SampledPath) -> Result<Vec<(usize, f64)>, HedgingError> {
        Ok(self.run(path)?.schedule)
    }
}
