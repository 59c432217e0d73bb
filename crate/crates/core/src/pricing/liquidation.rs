use serde::Serialize;

use super::{MarketSpec, PricingError};
use crate::paths::PricePath;
use crate::tree::EventTree;

const TIME_TOL: f64 = 1e-12;

/// Shares bought and sold at one instant; both amounts are nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trade {
    pub time: f64,
    pub buy: f64,
    pub sell: f64,
}

/// A hedge along a single path: static position `(c_0, …, c_N)` and the
/// dated trades in the underlying, in time order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStrategy {
    pub statics: Vec<f64>,
    pub trades: Vec<Trade>,
}

impl PathStrategy {
    pub fn cash(c0: f64, n_options: usize) -> Self {
        let mut statics = vec![0.0; n_options + 1];
        statics[0] = c0;
        Self { statics, trades: Vec::new() }
    }

    /// Holding after the last trade.
    pub fn final_holding(&self) -> f64 {
        self.trades.iter().map(|t| t.buy - t.sell).sum()
    }
}

/// Liquidation value of `strategy` on `path` with the market's options and
/// transaction-cost rate.
pub fn liquidation_value(strategy: &PathStrategy, path: &dyn PricePath, market: &MarketSpec) -> Result<f64, PricingError> {
    let values = market.statics().evaluate(path);
    liquidation_value_with(strategy, path, market.kappa(), &values)
}

/// `c·F(S) + [γ_T − κ|γ_T|] S_T + (1−κ) ∫ S dγ⁻ − (1+κ) ∫ S dγ⁺`, with every
/// trade executed at the path level prevailing at its time.
pub fn liquidation_value_with(
    strategy: &PathStrategy,
    path: &dyn PricePath,
    kappa: f64,
    option_values: &[f64],
) -> Result<f64, PricingError> {
    let misaligned = |m: String| Err(PricingError::MisalignedPlan(m));
    if strategy.statics.len() != option_values.len() + 1 {
        return misaligned(format!(
            "{} static positions for {} options plus cash",
            strategy.statics.len(),
            option_values.len()
        ));
    }
    if let Some(c) = strategy.statics[1..].iter().find(|c| !(**c >= 0.0)) {
        return misaligned(format!("option position {c} is negative"));
    }
    let horizon = path.horizon();
    let mut prev = 0.0;
    let mut z = strategy.statics[0] + strategy.statics[1..].iter().zip(option_values).map(|(c, f)| c * f).sum::<f64>();
    let mut gamma = 0.0;
    for tr in &strategy.trades {
        if !(tr.time >= prev - TIME_TOL && tr.time <= horizon + TIME_TOL) {
            return misaligned(format!("trade time {} out of order or outside [0, {horizon}]", tr.time));
        }
        if !(tr.buy >= 0.0 && tr.sell >= 0.0) {
            return misaligned(format!("trade at {} has negative amounts", tr.time));
        }
        prev = tr.time;
        let s = path.value_at(tr.time.min(horizon));
        z += (1.0 - kappa) * s * tr.sell - (1.0 + kappa) * s * tr.buy;
        gamma += tr.buy - tr.sell;
    }
    Ok(z + (gamma - kappa * gamma.abs()) * path.terminal())
}

/// A tree hedge: static position plus per-node share trades.
///
/// The trade at a node executes at that node's level; `gamma[v]` is the
/// holding after it, carried until the next node on the path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgePlan {
    pub kappa: f64,
    /// `(c_0, c_1, …, c_N)`.
    pub statics: Vec<f64>,
    pub buys: Vec<f64>,
    pub sells: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl HedgePlan {
    pub fn new(tree: &EventTree, kappa: f64, statics: Vec<f64>, buys: Vec<f64>, sells: Vec<f64>) -> Self {
        let mut gamma = vec![0.0; tree.len()];
        for node in tree.nodes() {
            let before = node.parent.map_or(0.0, |p| gamma[p]);
            gamma[node.id] = before + buys[node.id] - sells[node.id];
        }
        Self { kappa, statics, buys, sells, gamma }
    }

    /// The plan as seen along the root-to-`leaf` path.
    pub fn restrict(&self, tree: &EventTree, leaf: usize) -> PathStrategy {
        let trades = tree
            .path_to(leaf)
            .into_iter()
            .filter(|&id| self.buys[id] != 0.0 || self.sells[id] != 0.0)
            .map(|id| Trade { time: tree.node(id).time, buy: self.buys[id], sell: self.sells[id] })
            .collect();
        PathStrategy { statics: self.statics.clone(), trades }
    }

    /// Holding in force over the interval after node `id`.
    pub fn holding(&self, id: usize) -> f64 {
        self.gamma[id]
    }

    /// Cost `ℒ(c) = c_0 + Σ c_i ℒ_i`.
    pub fn cost(&self, prices: &[f64]) -> f64 {
        self.statics[0] + self.statics[1..].iter().zip(prices).map(|(c, l)| c * l).sum::<f64>()
    }
}
