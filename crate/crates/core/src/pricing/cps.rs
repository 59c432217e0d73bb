use serde::Serialize;

use super::instance::TreeInstance;
use super::{MarketSpec, PricingError};
use crate::lp::{LinearProgram, LpBackend, LpSolution, LpStatus, Relation, Sense};
use crate::payoffs::PayoffSpec;
use crate::tree::EventTree;

/// Tolerance below which a node mass counts as zero when reading off `m`.
const MASS_FLOOR: f64 = 1e-14;

/// Per-node probability mass `p` and shadow-price flow `X = p·m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistentPriceSystem {
    pub kappa: f64,
    pub p: Vec<f64>,
    pub x: Vec<f64>,
}

/// Largest violation of each defining property, recomputed from scratch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpsReport {
    pub root_mass_error: f64,
    pub leaf_mass_error: f64,
    pub negative_mass: f64,
    pub flow_residual: f64,
    pub martingale_residual: f64,
    pub band_violation: f64,
    pub price_violation: f64,
    pub expectation: f64,
}

impl CpsReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.root_mass_error,
            self.leaf_mass_error,
            self.negative_mass,
            self.flow_residual,
            self.martingale_residual,
            self.band_violation,
            self.price_violation,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

impl ConsistentPriceSystem {
    /// `m = X / p`, undefined where the node carries no mass.
    pub fn shadow_price(&self, id: usize) -> Option<f64> {
        (self.p[id] > MASS_FLOOR).then(|| self.x[id] / self.p[id])
    }

    /// Masses of the leaves, in leaf order.
    pub fn leaf_masses(&self, tree: &EventTree) -> Vec<f64> {
        tree.leaves().iter().map(|&l| self.p[l]).collect()
    }

    /// `Σ_leaf p · values`.
    pub fn expectation(&self, tree: &EventTree, values: &[f64]) -> f64 {
        tree.leaves().iter().zip(values).map(|(&l, v)| self.p[l] * v).sum()
    }

    /// Checks flow conservation, the martingale property of `X`, the band
    /// `(1−κ)·level·p ≤ X ≤ (1+κ)·level·p` and the option caps of `inst`.
    pub fn check(&self, tree: &EventTree, inst: &TreeInstance) -> CpsReport {
        let k = self.kappa;
        let mut r = CpsReport {
            root_mass_error: (self.p[tree.root()] - 1.0).abs(),
            leaf_mass_error: (self.leaf_masses(tree).iter().sum::<f64>() - 1.0).abs(),
            negative_mass: self.p.iter().fold(0.0f64, |m, p| m.max(-p)),
            flow_residual: 0.0,
            martingale_residual: 0.0,
            band_violation: 0.0,
            price_violation: 0.0,
            expectation: self.expectation(tree, &inst.payoff),
        };
        for node in tree.nodes() {
            let v = node.id;
            if !node.children.is_empty() {
                let p_sum: f64 = node.children.iter().map(|&c| self.p[c]).sum();
                let x_sum: f64 = node.children.iter().map(|&c| self.x[c]).sum();
                r.flow_residual = r.flow_residual.max((self.p[v] - p_sum).abs());
                r.martingale_residual = r.martingale_residual.max((self.x[v] - x_sum).abs());
            }
            let level = tree.level(v);
            let lo = (1.0 - k) * level * self.p[v];
            let hi = (1.0 + k) * level * self.p[v];
            r.band_violation = r.band_violation.max(lo - self.x[v]).max(self.x[v] - hi);
        }
        for (values, cap) in inst.options.iter().zip(&inst.caps) {
            r.price_violation = r.price_violation.max(self.expectation(tree, values) - cap);
        }
        r
    }
}

#[derive(Debug, Clone)]
pub struct DualOutcome {
    pub value: f64,
    pub cps: ConsistentPriceSystem,
    pub report: CpsReport,
    pub lp: LinearProgram,
    pub solution: LpSolution,
}

pub(crate) fn p_var(node: usize) -> usize {
    2 * node
}

pub(crate) fn x_var(node: usize) -> usize {
    2 * node + 1
}

/// Largest expected payoff over consistent price systems on the tree.
pub fn dual_lp(
    tree: &EventTree,
    payoff: &PayoffSpec,
    market: &MarketSpec,
    solver: &dyn LpBackend,
) -> Result<DualOutcome, PricingError> {
    let inst = TreeInstance::new(tree, payoff, market)?;
    solve_dual(tree, &inst, solver)
}

/// Builds the `(p, X)` program for an explicit instance. An empty set of
/// consistent price systems yields [`PricingError::NoConsistentPriceSystem`].
pub fn solve_dual(tree: &EventTree, inst: &TreeInstance, solver: &dyn LpBackend) -> Result<DualOutcome, PricingError> {
    inst.check(tree)?;
    let k = inst.band;
    let mut objective = vec![0.0; 2 * tree.len()];
    for (&leaf, g) in tree.leaves().iter().zip(&inst.payoff) {
        objective[p_var(leaf)] = *g;
    }
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    for v in 0..tree.len() {
        lp.set_bounds(x_var(v), f64::NEG_INFINITY, f64::INFINITY);
    }
    lp.add_sparse_constraint(&[(p_var(tree.root()), 1.0)], Relation::Eq, 1.0);
    for node in tree.nodes().iter().filter(|n| !n.children.is_empty()) {
        let mut flow = vec![(p_var(node.id), 1.0)];
        flow.extend(node.children.iter().map(|&c| (p_var(c), -1.0)));
        lp.add_sparse_constraint(&flow, Relation::Eq, 0.0);
        let mut mart = vec![(x_var(node.id), 1.0)];
        mart.extend(node.children.iter().map(|&c| (x_var(c), -1.0)));
        lp.add_sparse_constraint(&mart, Relation::Eq, 0.0);
    }
    for v in 0..tree.len() {
        let level = tree.level(v);
        lp.add_sparse_constraint(&[(x_var(v), 1.0), (p_var(v), -(1.0 + k) * level)], Relation::Le, 0.0);
        lp.add_sparse_constraint(&[(x_var(v), 1.0), (p_var(v), -(1.0 - k) * level)], Relation::Ge, 0.0);
    }
    for (values, cap) in inst.options.iter().zip(&inst.caps) {
        let terms: Vec<_> = tree.leaves().iter().zip(values).map(|(&l, f)| (p_var(l), *f)).collect();
        lp.add_sparse_constraint(&terms, Relation::Le, *cap);
    }

    let solution = solver.solve(&lp)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(PricingError::NoConsistentPriceSystem),
        status => return Err(PricingError::UnexpectedStatus { problem: "dual", status }),
    }
    let cps = ConsistentPriceSystem {
        kappa: k,
        p: (0..tree.len()).map(|v| solution.x[p_var(v)]).collect(),
        x: (0..tree.len()).map(|v| solution.x[x_var(v)]).collect(),
    };
    let report = cps.check(tree, inst);
    Ok(DualOutcome { value: solution.objective, cps, report, lp, solution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DenseSimplex;
    use crate::payoffs::StaticOptionSet;
    use crate::tree::{build_tree, TreeConfig};

    #[test]
    fn one_step_witness_puts_mass_up() {
        let tree = build_tree(&TreeConfig::binomial(0.05, vec![0.5], 1.0)).unwrap();
        let market = MarketSpec::new(0.05, StaticOptionSet::empty()).unwrap();
        let out = dual_lp(&tree, &PayoffSpec::terminal_value(), &market, &DenseSimplex::default()).unwrap();
        assert!((out.value - 0.05f64.exp()).abs() < 1e-9);
        assert!(out.report.passes(1e-9), "{:?}", out.report);
        let up = tree.nodes().iter().find(|n| n.offset == 1).unwrap().id;
        assert!((out.cps.p[up] - 1.0).abs() < 1e-9);
        let m0 = out.cps.shadow_price(0).unwrap();
        assert!(m0 >= 0.95 * 0.05f64.exp() - 1e-12 && m0 <= 1.05 + 1e-12);
    }

    #[test]
    fn tiny_band_pins_the_mean() {
        let tree = build_tree(&TreeConfig::partition(0.1, vec![0.3, 0.6], 1.0)).unwrap();
        let market = MarketSpec::new(1e-9, StaticOptionSet::empty()).unwrap();
        let out = dual_lp(&tree, &PayoffSpec::terminal_value(), &market, &DenseSimplex::default()).unwrap();
        assert!((out.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn impossible_caps_are_infeasible() {
        let tree = build_tree(&TreeConfig::binomial(0.1, vec![0.5], 1.0)).unwrap();
        let statics = StaticOptionSet::new(vec![PayoffSpec::terminal_value()], vec![0.5]).unwrap();
        let market = MarketSpec::new(0.05, statics).unwrap();
        let err = dual_lp(&tree, &PayoffSpec::zero(), &market, &DenseSimplex::default()).unwrap_err();
        assert_eq!(err, PricingError::NoConsistentPriceSystem);
    }
}
