use serde::Serialize;

use super::{MarketSpec, PricingError};
use crate::payoffs::PayoffSpec;
use crate::tree::EventTree;

/// Leaf data of one pricing problem: payoff and option values per leaf,
/// option caps and the transaction-cost band.
///
/// Leaf vectors follow the order of [`EventTree::leaves`]. The band is kept
/// apart from the market so that the bound programs can run with an
/// adjusted rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeInstance {
    pub band: f64,
    pub payoff: Vec<f64>,
    /// `options[i][j]` is `f_{i+1}` on leaf `j`.
    pub options: Vec<Vec<f64>>,
    pub caps: Vec<f64>,
}

impl TreeInstance {
    pub fn new(tree: &EventTree, payoff: &PayoffSpec, market: &MarketSpec) -> Result<Self, PricingError> {
        Self::with_band(tree, payoff, market, market.kappa())
    }

    pub fn with_band(tree: &EventTree, payoff: &PayoffSpec, market: &MarketSpec, band: f64) -> Result<Self, PricingError> {
        if !(0.0..1.0).contains(&band) {
            return Err(PricingError::InvalidInput(format!("band parameter {band} outside [0, 1)")));
        }
        let paths: Vec<_> = tree.leaves().iter().map(|&l| tree.jump_path(l)).collect();
        let payoff_values: Vec<f64> = paths.iter().map(|p| payoff.evaluate(p)).collect();
        let statics = market.statics();
        let options: Vec<Vec<f64>> = statics
            .options()
            .iter()
            .map(|o| paths.iter().map(|p| o.evaluate(p)).collect())
            .collect();
        let inst = Self { band, payoff: payoff_values, options, caps: statics.prices().to_vec() };
        inst.check(tree)?;
        Ok(inst)
    }

    pub fn num_options(&self) -> usize {
        self.caps.len()
    }

    /// `(f_1, …, f_N)` on leaf position `j`.
    pub fn option_values(&self, j: usize) -> Vec<f64> {
        self.options.iter().map(|o| o[j]).collect()
    }

    pub(crate) fn check(&self, tree: &EventTree) -> Result<(), PricingError> {
        let n = tree.leaves().len();
        let bad = |m: String| Err(PricingError::InvalidInput(m));
        if self.payoff.len() != n || self.options.iter().any(|o| o.len() != n) {
            return bad(format!("leaf data does not match the {n} leaves of the tree"));
        }
        if self.options.len() != self.caps.len() {
            return bad("option values and caps differ in length".into());
        }
        let finite = |v: &f64| v.is_finite();
        if !self.payoff.iter().all(finite) || !self.options.iter().flatten().all(finite) || !self.caps.iter().all(finite) {
            return bad("payoff or option values are not finite on the tree".into());
        }
        Ok(())
    }
}

/// For every node, the positions (in leaf order) of the leaves below it.
pub(crate) fn leaves_below(tree: &EventTree) -> Vec<Vec<usize>> {
    let mut below = vec![Vec::new(); tree.len()];
    for (j, &leaf) in tree.leaves().iter().enumerate() {
        for id in tree.path_to(leaf) {
            below[id].push(j);
        }
    }
    below
}
