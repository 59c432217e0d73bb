//! Pathwise hedges executed on sampled continuous paths.
//!
//! A [`PathHedge`] fixes a static position and, for a given path, the
//! sample indices at which the share holding changes and the new holding.
//! [`execute`] turns that schedule into a trade log and a liquidation
//! value.

mod doubling;
mod lift;
mod montecarlo;

pub use doubling::{alpha_cost_bound, verify_doubling, DoublingHedge, DoublingReport};
pub use lift::{lift, LiftedDiagnostics, LiftedHedge, LiftedRun};
pub use montecarlo::{lift_bound, monte_carlo_verify, verify_lifted_path, MonteCarloReport, PathOutcome, PathStatus};

use serde::Serialize;
use thiserror::Error;

use crate::paths::{PathError, PricePath, SampledPath};
use crate::payoffs::PayoffSpec;
use crate::pricing::{liquidation_value_with, MarketSpec, PathStrategy, PricingError, Trade};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HedgingError {
    #[error("plan and tree do not match: {0}")]
    TreeMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

/// A strategy that can be run on a sampled path.
pub trait PathHedge {
    /// `(c_0, c_1, …, c_N)`, matching the market's static options.
    fn statics(&self) -> &[f64];

    /// `(sample index, holding from that sample on)` in increasing index
    /// order; the holding before the first entry is 0.
    fn holdings(&self, path: &SampledPath) -> Result<Vec<(usize, f64)>, HedgingError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Buy,
    Sell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeRecord {
    pub time: f64,
    pub sample: usize,
    pub size: f64,
    pub price: f64,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionReport {
    /// Terminal liquidation value.
    pub z: f64,
    /// `c · F(S)`.
    pub static_value: f64,
    pub trades: Vec<TradeRecord>,
    pub final_holding: f64,
    pub terminal_price: f64,
    pub payoff: f64,
    /// `payoff − z`.
    pub shortfall: f64,
}

impl ExecutionReport {
    /// Liquidation value summed directly from the trade log.
    pub fn recompute(&self, kappa: f64) -> f64 {
        let mut z = self.static_value;
        for t in &self.trades {
            z += match t.side {
                Side::Buy => -(1.0 + kappa) * t.price * t.size,
                Side::Sell => (1.0 - kappa) * t.price * t.size,
            };
        }
        z + (self.final_holding - kappa * self.final_holding.abs()) * self.terminal_price
    }
}

/// Runs `hedge` on `path`: trades execute at the sampled price of each
/// scheduled index and the final holding is liquidated at `S_T`.
pub fn execute(
    hedge: &dyn PathHedge,
    path: &SampledPath,
    market: &MarketSpec,
    payoff: &PayoffSpec,
) -> Result<ExecutionReport, HedgingError> {
    let schedule = hedge.holdings(path)?;
    execute_schedule(hedge.statics(), &schedule, path, market, payoff)
}

pub(crate) fn execute_schedule(
    statics: &[f64],
    schedule: &[(usize, f64)],
    path: &SampledPath,
    market: &MarketSpec,
    payoff: &PayoffSpec,
) -> Result<ExecutionReport, HedgingError> {
    let option_values = market.statics().evaluate(path);
    if statics.len() != option_values.len() + 1 {
        return Err(HedgingError::InvalidInput(format!(
            "hedge holds {} static positions, market has {} options plus cash",
            statics.len(),
            option_values.len()
        )));
    }
    let mut trades = Vec::new();
    let mut strategy = PathStrategy { statics: statics.to_vec(), trades: Vec::new() };
    let mut holding = 0.0;
    let mut last_index = None;
    for &(index, target) in schedule {
        if index >= path.len() || last_index.is_some_and(|l| index <= l) {
            return Err(HedgingError::InvalidInput(format!("schedule index {index} out of order or range")));
        }
        last_index = Some(index);
        let delta = target - holding;
        holding = target;
        if delta == 0.0 {
            continue;
        }
        let time = path.times()[index];
        let (buy, sell, side) = if delta > 0.0 { (delta, 0.0, Side::Buy) } else { (0.0, -delta, Side::Sell) };
        strategy.trades.push(Trade { time, buy, sell });
        trades.push(TradeRecord { time, sample: index, size: delta.abs(), price: path.values()[index], side });
    }
    let z = liquidation_value_with(&strategy, path, market.kappa(), &option_values)?;
    let static_value = statics[0] + statics[1..].iter().zip(&option_values).map(|(c, f)| c * f).sum::<f64>();
    let g = payoff.evaluate(path);
    Ok(ExecutionReport {
        z,
        static_value,
        trades,
        final_holding: holding,
        terminal_price: path.terminal(),
        payoff: g,
        shortfall: g - z,
    })
}
