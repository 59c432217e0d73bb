//! Super-replication prices on event trees.
//!
//! The primal problem buys static options and trades the underlying at tree
//! nodes; the dual searches over consistent price systems, encoded per node
//! as a probability mass `p` and a shadow-price flow `X = p·m`. Both are
//! plain [`LinearProgram`](crate::lp::LinearProgram)s handed to an
//! [`LpBackend`](crate::lp::LpBackend).
//!
//! ```
//! use superhedge::lp::DenseSimplex;
//! use superhedge::payoffs::{PayoffSpec, StaticOptionSet};
//! use superhedge::pricing::{dual_lp, primal_lp, MarketSpec};
//! use superhedge::tree::{build_tree, TreeConfig};
//!
//! let tree = build_tree(&TreeConfig::binomial(0.05, vec![0.5], 1.0)).unwrap();
//! let market = MarketSpec::new(0.05, StaticOptionSet::empty()).unwrap();
//! let g = PayoffSpec::terminal_value();
//! let solver = DenseSimplex::default();
//! let primal = primal_lp(&tree, &g, &market, &solver).unwrap();
//! let dual = dual_lp(&tree, &g, &market, &solver).unwrap();
//! assert!((primal.value - 0.05f64.exp()).abs() < 1e-9);
//! assert!((dual.value - 0.05f64.exp()).abs() < 1e-9);
//! ```

mod bounds;
mod constants;
mod cps;
mod gap;
mod instance;
mod liquidation;
mod noarb;
mod primal;

pub use bounds::{lower_bound_value, upper_bound_value, BoundConstants, BoundInputs, BoundReport, Corrections};
pub use constants::{
    b_constant, hat_c, kappa_tilde_lower, kappa_tilde_upper, lower_correction, lower_price_adjustments,
    upper_correction, AdjustedPrices,
};
pub use cps::{dual_lp, solve_dual, ConsistentPriceSystem, CpsReport, DualOutcome};
pub use gap::{duality_gap, GapReport};
pub use instance::TreeInstance;
pub use liquidation::{liquidation_value, liquidation_value_with, HedgePlan, PathStrategy, Trade};
pub use noarb::{check_no_arbitrage, NoArbitrageReport};
pub use primal::{primal_lp, primal_lp_subset, primal_lp_with_band, solve_primal, PrimalOutcome, WitnessCheck};

use thiserror::Error;

use crate::lp::{LpError, LpStatus};
use crate::payoffs::{PayoffError, StaticOptionSet};
use crate::tree::TreeError;

/// Relative tolerance used when re-checking witnesses and certificates.
pub const RECHECK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("kappa must lie in (0, 1/8), got {0}")]
    KappaOutOfRange(f64),
    #[error("adjusted transaction cost {kappa_tilde} is not below 1")]
    KappaTildeOutOfRange { kappa_tilde: f64 },
    #[error("no admissible lower transaction cost for kappa {kappa} and epsilon {epsilon}")]
    NoKappaTilde { kappa: f64, epsilon: f64 },
    #[error("misaligned plan: {0}")]
    MisalignedPlan(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{problem} LP ended with status {status:?}")]
    UnexpectedStatus { problem: &'static str, status: LpStatus },
    #[error("no consistent price system exists on this tree")]
    NoConsistentPriceSystem,
    #[error("hedge witness fails at leaf {leaf}: liquidation value {value} below payoff {payoff}")]
    WitnessRejected { leaf: usize, value: f64, payoff: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Payoff(#[from] PayoffError),
}

/// Transaction-cost rate and static hedging instruments; the initial price
/// of the underlying is 1.
#[derive(Debug, Clone)]
pub struct MarketSpec {
    kappa: f64,
    statics: StaticOptionSet,
}

impl MarketSpec {
    pub fn new(kappa: f64, statics: StaticOptionSet) -> Result<Self, PricingError> {
        if !(kappa > 0.0 && kappa < 0.125) {
            return Err(PricingError::KappaOutOfRange(kappa));
        }
        Ok(Self { kappa, statics })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn statics(&self) -> &StaticOptionSet {
        &self.statics
    }

    pub fn with_statics(&self, statics: StaticOptionSet) -> Self {
        Self { kappa: self.kappa, statics }
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self, PricingError> {
        Self::new(kappa, self.statics.clone())
    }
}
