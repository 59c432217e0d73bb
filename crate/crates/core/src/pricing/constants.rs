use serde::Serialize;

use super::{MarketSpec, PricingError};
use crate::payoffs::PayoffKind;

/// `Ĉ = 8 √(c_q² + c_q ℒ_N)`.
pub fn hat_c(c_q: f64, l_n: f64) -> f64 {
    8.0 * (c_q * c_q + c_q * l_n).sqrt()
}

/// `L Ĉ (e^{4ε} + ε − 1)`.
pub fn lower_correction(l: f64, hat_c: f64, epsilon: f64) -> f64 {
    l * hat_c * ((4.0 * epsilon).exp_m1() + epsilon)
}

/// `L (e^{2ε} + ε − 1) Ĉ² / (2 (1 − 8κ))`.
pub fn upper_correction(l: f64, epsilon: f64, hat_c: f64, kappa: f64) -> f64 {
    l * ((2.0 * epsilon).exp_m1() + epsilon) * hat_c * hat_c / (2.0 * (1.0 - 8.0 * kappa))
}

/// `B = L (e^{2ε} + ε − 1) Ĉ² / (2 (1 − 8κ)) + 2 L (e^ε − 1) ℒ_N + ε`.
pub fn b_constant(l: f64, epsilon: f64, kappa: f64, hat_c: f64, l_n: f64) -> f64 {
    upper_correction(l, epsilon, hat_c, kappa) + 2.0 * l * epsilon.exp_m1() * l_n + epsilon
}

/// Largest `κ̃` with `min((1+κ)/(1+κ̃), (1−κ̃)/(1−κ)) ≥ e^{2ε}`, if positive.
pub fn kappa_tilde_lower(kappa: f64, epsilon: f64) -> Option<f64> {
    let a = (1.0 + kappa) * (-2.0 * epsilon).exp() - 1.0;
    let b = 1.0 - (1.0 - kappa) * (2.0 * epsilon).exp();
    let k = a.min(b);
    (k > 0.0).then_some(k)
}

/// Smallest `κ̃` with `min((1+κ̃)/(1+κ), (1−κ)/(1−κ̃)) ≥ e^{4ε}`; must stay
/// below 1.
pub fn kappa_tilde_upper(kappa: f64, epsilon: f64) -> Result<f64, PricingError> {
    let a = (1.0 + kappa) * (4.0 * epsilon).exp() - 1.0;
    let b = 1.0 - (1.0 - kappa) * (-4.0 * epsilon).exp();
    let k = a.max(b);
    if k >= 1.0 {
        return Err(PricingError::KappaTildeOutOfRange { kappa_tilde: k });
    }
    Ok(k)
}

/// Option caps of the lower-bound program, with a flag on every cap that
/// falls below the least value a consistent price system can give its
/// option (so the program is then certainly infeasible).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustedPrices {
    pub prices: Vec<f64>,
    pub floors: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl AdjustedPrices {
    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|f| *f)
    }
}

/// `ℒ_i − L Ĉ (e^{4ε} + ε − 1)` for `i < N` and
/// `[ℒ_N (1 − L(e^ε − 1)) − L Ĉ (e^ε − 1)] / (1 + L(e^ε − 1))` for the last
/// option.
pub fn lower_price_adjustments(market: &MarketSpec, epsilon: f64, l: f64, hat_c: f64) -> AdjustedPrices {
    let statics = market.statics();
    let n = statics.len();
    let shift = lower_correction(l, hat_c, epsilon);
    let d = l * epsilon.exp_m1();
    let prices: Vec<f64> = statics
        .prices()
        .iter()
        .enumerate()
        .map(|(i, &p)| if i + 1 < n { p - shift } else { (p * (1.0 - d) - hat_c * d) / (1.0 + d) })
        .collect();
    let kt = kappa_tilde_lower(market.kappa(), epsilon).unwrap_or(1.0);
    // Under any κ̃-consistent system E[S_T] ≥ (1−κ̃)/(1+κ̃), hence the floor
    // for a quadratic claim by Jensen.
    let floors: Vec<f64> = statics
        .options()
        .iter()
        .map(|o| match o.kind() {
            PayoffKind::QuadraticVanilla { scale } => scale * ((1.0 - kt) / (1.0 + kt)).powi(2),
            _ => 0.0,
        })
        .collect();
    let flagged = prices.iter().zip(&floors).map(|(p, f)| p < f).collect();
    AdjustedPrices { prices, floors, flagged }
}
