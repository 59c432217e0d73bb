use serde::Serialize;

use super::{execute, ExecutionReport, HedgingError, PathHedge};
use crate::paths::{absolute_crossing_times, PricePath, SampledPath};
use crate::payoffs::{alpha_k, PayoffSpec};
use crate::pricing::MarketSpec;

/// Static `c = (c_q², 0, …, 0, c_q)` plus a short position in the running
/// maximum of the price sampled at its unit crossings.
///
/// With `θ_0 = 0` and `θ_k` the first sample with `|S − S_{θ_{k−1}}| ≥ 1`,
/// the holding on `(θ_i, θ_{i+1}]` is `−max_{j≤i} S_{θ_j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingHedge {
    pub c_q: f64,
    statics: Vec<f64>,
}

impl DoublingHedge {
    /// The last static option of `market` plays the role of `q`.
    pub fn new(c_q: f64, market: &MarketSpec) -> Result<Self, HedgingError> {
        if !(c_q > 1.0 && c_q.is_finite()) {
            return Err(HedgingError::InvalidInput(format!("c_q must exceed 1, got {c_q}")));
        }
        let options = market.statics().options();
        match options.last() {
            Some(last) if last.terminal_function().is_some() => {}
            _ => return Err(HedgingError::InvalidInput("the last static option must be a vanilla claim".into())),
        }
        let mut statics = vec![0.0; options.len() + 1];
        statics[0] = c_q * c_q;
        statics[options.len()] = c_q;
        Ok(Self { c_q, statics })
    }

    /// `ℒ(c) = c_q² + c_q ℒ_N`.
    pub fn cost(&self, market: &MarketSpec) -> f64 {
        self.c_q * self.c_q + self.c_q * market.statics().prices().last().copied().unwrap_or(0.0)
    }
}

impl PathHedge for DoublingHedge {
    fn statics(&self) -> &[f64] {
        &self.statics
    }

    fn holdings(&self, path: &SampledPath) -> Result<Vec<(usize, f64)>, HedgingError> {
        let crossings = absolute_crossing_times(path, 1.0);
        let values = path.values();
        let mut running = values[0];
        let mut schedule = vec![(0, -running)];
        for &i in crossings.crossing_indices() {
            running = running.max(values[i]);
            schedule.push((i, -running));
        }
        Ok(schedule)
    }
}

/// `32/(1 − 8κ) · (c_q² + c_q ℒ_N)/K`.
pub fn alpha_cost_bound(kappa: f64, c_q: f64, l_n: f64, k: f64) -> f64 {
    32.0 / (1.0 - 8.0 * kappa) * (c_q * c_q + c_q * l_n) / k
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    pub execution: ExecutionReport,
    /// `𝕂`: crossings before the horizon plus one.
    pub big_k: usize,
    /// `max_{0≤j≤𝕂} S_{θ_j}`, with `θ_𝕂 = T`.
    pub max_anchor: f64,
    /// `(1 − 8κ)/4 · max_j S²_{θ_j}`.
    pub lower_bound: f64,
    /// `Z − lower_bound`.
    pub margin: f64,
    /// Summed excess of `|S_{θ_k} − S_{θ_{k−1}}|` over 1.
    pub overshoot: f64,
    /// Largest short position held, `max_{j<𝕂} S_{θ_j}`.
    pub position_cap: f64,
    /// `overshoot · position_cap`.
    pub adjustment: f64,
    pub strict_ok: bool,
    pub adjusted_ok: bool,
    pub sup_norm: f64,
    /// `‖S‖ ≤ 2 max_j S_{θ_j}`.
    pub norm_ok: bool,
    pub alpha_k: f64,
    /// `K α_K(S) ≤ 8 max_j S²_{θ_j}`.
    pub alpha_ok: bool,
    /// `(1 − 8κ)/4 · max_j S²_{θ_j} ≥ K(1 − 8κ)/32 · α_K(S)`.
    pub chain_ok: bool,
    pub cost: f64,
}

impl DoublingReport {
    pub fn passes(&self) -> bool {
        self.adjusted_ok && self.norm_ok && self.alpha_ok && self.chain_ok
    }
}

/// Runs the doubling hedge on `path` against `α_K` and evaluates the
/// inequality chain on that path.
pub fn verify_doubling(path: &SampledPath, market: &MarketSpec, c_q: f64, k: f64) -> Result<DoublingReport, HedgingError> {
    if !(k > 0.0) {
        return Err(HedgingError::InvalidInput(format!("K must be positive, got {k}")));
    }
    let hedge = DoublingHedge::new(c_q, market)?;
    let payoff = PayoffSpec::alpha_tail(k).map_err(|e| HedgingError::InvalidInput(e.to_string()))?;
    let execution = execute(&hedge, path, market, &payoff)?;

    let values = path.values();
    let crossings = absolute_crossing_times(path, 1.0);
    let anchors: Vec<f64> = crossings.anchor_indices().iter().map(|&i| values[i]).collect();
    let position_cap = anchors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_anchor = position_cap.max(path.terminal());
    let overshoot: f64 = anchors
        .iter()
        .chain(std::iter::once(&path.terminal()))
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| ((w[1] - w[0]).abs() - 1.0).max(0.0))
        .sum();

    let kappa = market.kappa();
    let m2 = max_anchor * max_anchor;
    let lower_bound = (1.0 - 8.0 * kappa) / 4.0 * m2;
    let margin = execution.z - lower_bound;
    let adjustment = overshoot * position_cap;
    let sup_norm = path.sup_norm();
    let a = alpha_k(path, k);
    Ok(DoublingReport {
        big_k: crossings.count() + 1,
        max_anchor,
        lower_bound,
        margin,
        overshoot,
        position_cap,
        adjustment,
        strict_ok: margin >= 0.0,
        adjusted_ok: margin + adjustment >= 0.0,
        sup_norm,
        norm_ok: sup_norm <= 2.0 * max_anchor,
        alpha_k: a,
        alpha_ok: k * a <= 8.0 * m2,
        chain_ok: lower_bound >= k * (1.0 - 8.0 * kappa) / 32.0 * a,
        cost: hedge.cost(market),
        execution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoffs::StaticOptionSet;

    fn market(kappa: f64) -> MarketSpec {
        MarketSpec::new(kappa, StaticOptionSet::new(vec![PayoffSpec::square()], vec![2.0]).unwrap()).unwrap()
    }

    #[test]
    fn constant_path() {
        let path = SampledPath::uniform(1.0, vec![1.0; 11]).unwrap();
        let m = market(0.1);
        let hedge = DoublingHedge::new(2.0, &m).unwrap();
        let r = execute(&hedge, &path, &m, &PayoffSpec::zero()).unwrap();
        // Short one share at 1 and buy it back at 1.
        assert!((r.z - 5.8).abs() < 1e-12);
        assert_eq!(r.trades.len(), 1);
        assert_eq!(r.recompute(0.1), r.z);
    }

    #[test]
    fn linear_path() {
        let path = SampledPath::from_fn(101, 1.0, |t| 1.0 + 2.0 * t).unwrap();
        let m = market(0.1);
        let hedge = DoublingHedge::new(2.0, &m).unwrap();
        let r = execute(&hedge, &path, &m, &PayoffSpec::zero()).unwrap();
        // Short 1 at t = 0, short 1 more at t = 0.5 (S = 2), cover 2 at 3.
        let expected = 4.0 + 2.0 * 9.0 + 0.9 * 1.0 + 0.9 * 2.0 - 1.1 * 2.0 * 3.0;
        assert!((r.z - expected).abs() < 1e-9, "{}", r.z);
        assert!((r.z - 18.1).abs() < 1e-9);
        assert!((r.recompute(0.1) - r.z).abs() <= 1e-12 * r.z.abs());
        let v = verify_doubling(&path, &m, 2.0, 10.0).unwrap();
        assert_eq!(v.big_k, 2);
        assert_eq!(v.max_anchor, 3.0);
        assert!(v.passes() && v.strict_ok);
    }

    #[test]
    fn alpha_cost_bound_values() {
        assert!((alpha_cost_bound(0.1, 2.0, 2.0, 100.0) - 12.8).abs() < 1e-12);
        let a = alpha_cost_bound(0.05, 2.0, 1.5, 10.0);
        assert!((alpha_cost_bound(0.05, 2.0, 1.5, 100.0) * 10.0 - a).abs() < 1e-12);
    }

    #[test]
    fn cost_matches_formula() {
        let m = market(0.05);
        assert_eq!(DoublingHedge::new(2.0, &m).unwrap().cost(&m), 8.0);
        assert!(DoublingHedge::new(1.0, &m).is_err());
    }
}
