use serde::Serialize;

use super::constants::{
    b_constant, hat_c, kappa_tilde_lower, kappa_tilde_upper, lower_correction, lower_price_adjustments,
    upper_correction, AdjustedPrices,
};
use super::cps::solve_dual;
use super::instance::TreeInstance;
use super::primal::solve_primal;
use super::{MarketSpec, PricingError};
use crate::lp::LpBackend;
use crate::payoffs::{truncate_quadratic, PayoffSpec};
use crate::tree::EventTree;

/// Constants feeding the bound formulas: the payoff's Lipschitz constant
/// `L`, and `c_q`, `ℒ_N` of the quadratic static option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub lipschitz: f64,
    pub c_q: f64,
    pub l_n: f64,
}

impl BoundInputs {
    /// Reads `c_q` and `ℒ_N` off the last static option.
    pub fn from_market(market: &MarketSpec, lipschitz: f64) -> Result<Self, PricingError> {
        let (_, l_n, c_q) = market.statics().quadratic()?;
        Ok(Self { lipschitz, c_q, l_n })
    }

    pub fn hat_c(&self) -> f64 {
        hat_c(self.c_q, self.l_n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corrections {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub hat_c: f64,
    pub b: f64,
    pub kappa_tilde_lower: Option<f64>,
    pub kappa_tilde_upper: Option<f64>,
}

/// One row of a bound sweep. `None` in `lower_bound` with
/// `lower_infeasible` set stands for `−∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub kappa: f64,
    pub primal_value: f64,
    /// `None` when the tree carries no consistent price system.
    pub dual_value: Option<f64>,
    pub lower_bound: Option<f64>,
    pub lower_infeasible: bool,
    pub upper_bound: Option<f64>,
    /// Value of the adjusted dual program before the correction.
    pub adjusted_sup: Option<f64>,
    pub corrections: Corrections,
    pub constants: BoundConstants,
    pub adjusted_prices: Option<AdjustedPrices>,
}

fn base_report(
    tree: &EventTree,
    payoff: &PayoffSpec,
    market: &MarketSpec,
    inputs: &BoundInputs,
    solver: &dyn LpBackend,
) -> Result<BoundReport, PricingError> {
    let eps = tree.epsilon();
    let kappa = market.kappa();
    let hc = inputs.hat_c();
    let l = inputs.lipschitz;
    let inst = TreeInstance::new(tree, payoff, market)?;
    let primal = solve_primal(tree, &inst, tree.leaves(), solver)?;
    let dual_value = match solve_dual(tree, &inst, solver) {
        Ok(d) => Some(d.value),
        Err(PricingError::NoConsistentPriceSystem) => None,
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        epsilon: eps,
        kappa,
        primal_value: primal.value,
        dual_value,
        lower_bound: None,
        lower_infeasible: false,
        upper_bound: None,
        adjusted_sup: None,
        corrections: Corrections {
            lower: lower_correction(l, hc, eps),
            upper: upper_correction(l, eps, hc, kappa),
        },
        constants: BoundConstants {
            hat_c: hc,
            b: b_constant(l, eps, kappa, hc, inputs.l_n),
            kappa_tilde_lower: kappa_tilde_lower(kappa, eps),
            kappa_tilde_upper: kappa_tilde_upper(kappa, eps).ok(),
        },
        adjusted_prices: None,
    })
}

fn sup_or_empty(tree: &EventTree, inst: &TreeInstance, solver: &dyn LpBackend) -> Result<Option<f64>, PricingError> {
    match solve_dual(tree, inst, solver) {
        Ok(d) => Ok(Some(d.value)),
        Err(PricingError::NoConsistentPriceSystem) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Adjusted dual program on a partition tree with the narrower band
/// `κ̃_lower` and lowered option caps, minus `L Ĉ (e^{4ε} + ε − 1)`.
pub fn lower_bound_value(
    tree: &EventTree,
    payoff: &PayoffSpec,
    market: &MarketSpec,
    inputs: &BoundInputs,
    solver: &dyn LpBackend,
) -> Result<BoundReport, PricingError> {
    if tree.config().is_dyadic() {
        return Err(PricingError::InvalidInput("the lower bound runs on partition trees".into()));
    }
    let eps = tree.epsilon();
    let kt = kappa_tilde_lower(market.kappa(), eps)
        .ok_or(PricingError::NoKappaTilde { kappa: market.kappa(), epsilon: eps })?;
    let mut report = base_report(tree, payoff, market, inputs, solver)?;
    let adjusted = lower_price_adjustments(market, eps, inputs.lipschitz, report.constants.hat_c);
    let mut inst = TreeInstance::with_band(tree, payoff, market, kt)?;
    inst.caps = adjusted.prices.clone();
    let sup = sup_or_empty(tree, &inst, solver)?;
    report.adjusted_sup = sup;
    report.lower_infeasible = sup.is_none();
    report.lower_bound = sup.map(|s| s - report.corrections.lower);
    report.adjusted_prices = Some(adjusted);
    Ok(report)
}

/// Adjusted dual program on a dyadic tree with the wider band `κ̃_upper`,
/// caps `ℒ_i + B` and the last option truncated at `Λ (S_T + 1)`; the
/// positive part plus `L (e^{2ε} + ε − 1) Ĉ² / (2 (1 − 8κ))`.
pub fn upper_bound_value(
    tree: &EventTree,
    payoff: &PayoffSpec,
    market: &MarketSpec,
    inputs: &BoundInputs,
    lambda: f64,
    solver: &dyn LpBackend,
) -> Result<BoundReport, PricingError> {
    if !tree.config().is_dyadic() {
        return Err(PricingError::InvalidInput("the upper bound runs on dyadic trees".into()));
    }
    let kt = kappa_tilde_upper(market.kappa(), tree.epsilon())?;
    let mut report = base_report(tree, payoff, market, inputs, solver)?;
    let mut inst = TreeInstance::with_band(tree, payoff, market, kt)?;
    let b = report.constants.b;
    inst.caps.iter_mut().for_each(|c| *c += b);
    if let Some(last) = inst.options.last_mut() {
        for (v, &leaf) in last.iter_mut().zip(tree.leaves()) {
            *v = truncate_quadratic(*v, lambda, tree.level(leaf))?;
        }
    } else if !(lambda > 1.0) {
        return Err(PricingError::InvalidInput(format!("Lambda must exceed 1, got {lambda}")));
    }
    let sup = sup_or_empty(tree, &inst, solver)?;
    report.adjusted_sup = sup;
    report.upper_bound = Some(sup.unwrap_or(0.0).max(0.0) + report.corrections.upper);
    Ok(report)
}
