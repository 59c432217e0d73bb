use serde::Serialize;

use super::cps::{solve_dual, ConsistentPriceSystem, CpsReport};
use super::instance::{leaves_below, TreeInstance};
use super::primal::{solve_primal, PrimalOutcome};
use super::{MarketSpec, PricingError, RECHECK_TOL};
use crate::lp::{certificate_report, CertificateReport, LpBackend, LpStatus};
use crate::payoffs::PayoffSpec;
use crate::tree::EventTree;

/// Primal and dual values with every cross-check between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub primal_value: f64,
    pub dual_value: f64,
    /// Value of the dual generated from the primal's data by the LP kernel.
    pub mechanical_dual_value: f64,
    /// Expected payoff under the price system read off the primal
    /// multipliers.
    pub multiplier_cps_value: f64,
    pub gap: f64,
    /// `RECHECK_TOL · (1 + |primal|)`.
    pub tolerance: f64,
    pub primal_certificate: CertificateReport,
    pub dual_certificate: CertificateReport,
    pub dual_cps: CpsReport,
    pub multiplier_cps: CpsReport,
    pub witness_min_margin: f64,
    pub ok: bool,
}

/// Solves both programs on the tree and checks them against each other.
pub fn duality_gap(
    tree: &EventTree,
    payoff: &PayoffSpec,
    market: &MarketSpec,
    solver: &dyn LpBackend,
) -> Result<GapReport, PricingError> {
    let inst = TreeInstance::new(tree, payoff, market)?;
    let primal = solve_primal(tree, &inst, tree.leaves(), solver)?;
    let dual = solve_dual(tree, &inst, solver)?;

    let mechanical = solver.solve(&primal.lp.dual_program())?;
    if mechanical.status != LpStatus::Optimal {
        return Err(PricingError::UnexpectedStatus { problem: "mechanical dual", status: mechanical.status });
    }
    let from_multipliers = cps_from_multipliers(tree, &primal);
    let multiplier_cps = from_multipliers.check(tree, &inst);

    let primal_certificate = certificate_report(&primal.lp, &primal.solution);
    let dual_certificate = certificate_report(&dual.lp, &dual.solution);
    let v = primal.value;
    let tolerance = RECHECK_TOL * (1.0 + v.abs());
    let gap = (v - dual.value).abs();
    let ok = gap <= tolerance
        && primal_certificate.passes(RECHECK_TOL)
        && dual_certificate.passes(RECHECK_TOL)
        && dual.report.passes(RECHECK_TOL)
        && multiplier_cps.passes(RECHECK_TOL)
        && (mechanical.objective - v).abs() <= tolerance
        && (multiplier_cps.expectation - v).abs() <= tolerance;
    Ok(GapReport {
        primal_value: v,
        dual_value: dual.value,
        mechanical_dual_value: mechanical.objective,
        multiplier_cps_value: multiplier_cps.expectation,
        gap,
        tolerance,
        primal_certificate,
        dual_certificate,
        dual_cps: dual.report,
        multiplier_cps,
        witness_min_margin: primal.witness.min_margin,
        ok,
    })
}

/// Leaf masses are the multipliers of the super-replication rows and the
/// shadow flow of a node sums the multipliers of the flat-position rows of
/// the leaves below it.
pub(crate) fn cps_from_multipliers(tree: &EventTree, primal: &PrimalOutcome) -> ConsistentPriceSystem {
    let y = &primal.solution.duals;
    let mut leaf_p = vec![0.0; tree.leaves().len()];
    let mut leaf_x = vec![0.0; tree.leaves().len()];
    for (k, &j) in primal.support.iter().enumerate() {
        leaf_p[j] = y[primal.superreplication_rows[k]];
        leaf_x[j] = y[primal.liquidation_rows[k]];
    }
    let below = leaves_below(tree);
    ConsistentPriceSystem {
        kappa: primal.plan.kappa,
        p: below.iter().map(|js| js.iter().map(|&j| leaf_p[j]).sum()).collect(),
        x: below.iter().map(|js| js.iter().map(|&j| leaf_x[j]).sum()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DenseSimplex;
    use crate::payoffs::StaticOptionSet;
    use crate::tree::{build_tree, TreeConfig};

    #[test]
    fn one_step_gap_closes() {
        let tree = build_tree(&TreeConfig::binomial(0.05, vec![0.5], 1.0)).unwrap();
        let market = MarketSpec::new(0.05, StaticOptionSet::empty()).unwrap();
        let r = duality_gap(&tree, &PayoffSpec::terminal_value(), &market, &DenseSimplex::default()).unwrap();
        assert!(r.ok, "{r:?}");
        assert!((r.dual_value - 0.05f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn lookback_with_options_gap_closes() {
        let tree = build_tree(&TreeConfig::partition(0.1, vec![0.3, 0.6], 1.0)).unwrap();
        let statics = StaticOptionSet::new(
            vec![PayoffSpec::european_call(1.0), PayoffSpec::square()],
            vec![0.08, 1.1],
        )
        .unwrap();
        let market = MarketSpec::new(0.05, statics).unwrap();
        let r = duality_gap(&tree, &PayoffSpec::lookback_max(), &market, &DenseSimplex::default()).unwrap();
        assert!(r.ok, "{r:?}");
    }
}
