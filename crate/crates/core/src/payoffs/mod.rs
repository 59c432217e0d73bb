//! Claims `G` on price paths and the static options used for hedging.

mod validate;

pub use validate::{
    check_lipschitz_supnorm, check_lipschitz_timeshift, check_q_regularity, LipschitzReport,
};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::paths::PricePath;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PayoffError {
    #[error("invalid payoff parameter: {0}")]
    InvalidParameter(String),
    #[error("no c_q found: q(x) >= x^2/c fails for every tabulated c up to x_max = {x_max}")]
    NoCqFound { x_max: f64 },
    #[error("payoff {0} is not a function of the terminal value")]
    NotVanilla(String),
    #[error("G(0) is undefined for {0}; supply the truncation cap explicitly")]
    MissingZeroValue(String),
    #[error("static option {index} ({name}) is path dependent but unbounded")]
    UnboundedPathDependent { index: usize, name: String },
    #[error("{options} static options but {prices} prices")]
    PriceCountMismatch { options: usize, prices: usize },
}

pub type PathFn = Arc<dyn Fn(&dyn PricePath) -> f64 + Send + Sync>;
pub type TerminalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied payoff with its declared regularity metadata.
#[derive(Clone)]
pub struct CustomPayoff {
    pub name: String,
    pub eval: PathFn,
    pub path_dependent: bool,
    pub bounded: bool,
    /// `G` on the constant-0 path, when defined.
    pub value_at_zero: Option<f64>,
}

impl fmt::Debug for CustomPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPayoff")
            .field("name", &self.name)
            .field("path_dependent", &self.path_dependent)
            .field("bounded", &self.bounded)
            .finish()
    }
}

/// User-supplied vanilla claim `q(S_T)`.
#[derive(Clone)]
pub struct CustomVanilla {
    pub name: String,
    pub q: TerminalFn,
}

impl fmt::Debug for CustomVanilla {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomVanilla").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum PayoffKind {
    /// `‖S‖ = sup_t S_t`.
    LookbackMax,
    /// `(1/T) ∫ S_t dt`.
    AsianAverage,
    EuropeanCall { strike: f64 },
    EuropeanPut { strike: f64 },
    /// `scale · S_T²`.
    QuadraticVanilla { scale: f64 },
    /// `α_K(S) = ‖S‖/K + ‖S‖ χ{‖S‖ ≥ K}`.
    AlphaTail { k: f64 },
    /// `min(base, cap)`.
    Truncated { base: Box<PayoffSpec>, cap: f64 },
    Custom(CustomPayoff),
    CustomVanilla(CustomVanilla),
}

/// A claim together with its declared Lipschitz constant.
///
/// For vanilla claims that grow faster than linearly (the quadratic option)
/// the constant refers to `|q(x) - q(y)| ≤ L |x - y| (1 + q(x)/x + q(y)/y)`
/// instead of the sup-norm bound.
#[derive(Debug, Clone)]
pub struct PayoffSpec {
    kind: PayoffKind,
    lipschitz: Option<f64>,
}

impl PayoffSpec {
    pub fn lookback_max() -> Self {
        Self { kind: PayoffKind::LookbackMax, lipschitz: Some(1.0) }
    }

    pub fn asian_average() -> Self {
        Self { kind: PayoffKind::AsianAverage, lipschitz: Some(1.0) }
    }

    pub fn european_call(strike: f64) -> Self {
        Self { kind: PayoffKind::EuropeanCall { strike }, lipschitz: Some(1.0) }
    }

    pub fn european_put(strike: f64) -> Self {
        Self { kind: PayoffKind::EuropeanPut { strike }, lipschitz: Some(1.0) }
    }

    /// `G(S) = S_T`.
    pub fn terminal_value() -> Self {
        Self::european_call(0.0)
    }

    pub fn quadratic_vanilla(scale: f64) -> Result<Self, PayoffError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(PayoffError::InvalidParameter(format!("quadratic scale must be positive, got {scale}")));
        }
        Ok(Self { kind: PayoffKind::QuadraticVanilla { scale }, lipschitz: Some(1.0) })
    }

    /// `q(x) = x²`.
    pub fn square() -> Self {
        Self { kind: PayoffKind::QuadraticVanilla { scale: 1.0 }, lipschitz: Some(1.0) }
    }

    pub fn alpha_tail(k: f64) -> Result<Self, PayoffError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(PayoffError::InvalidParameter(format!("K must be positive, got {k}")));
        }
        Ok(Self { kind: PayoffKind::AlphaTail { k }, lipschitz: None })
    }

    pub fn truncated(base: PayoffSpec, cap: f64) -> Result<Self, PayoffError> {
        if !cap.is_finite() {
            return Err(PayoffError::InvalidParameter("truncation cap must be finite".into()));
        }
        let lipschitz = base.lipschitz;
        Ok(Self { kind: PayoffKind::Truncated { base: Box::new(base), cap }, lipschitz })
    }

    /// `G_K = G ∧ (L K + G(0))`. `g_zero` overrides `G(0)` and is required
    /// when the payoff is not defined on the zero path.
    pub fn truncated_at_level(base: PayoffSpec, k: f64, g_zero: Option<f64>) -> Result<Self, PayoffError> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(PayoffError::InvalidParameter(format!("truncation level must be >= 1, got {k}")));
        }
        let l = base
            .lipschitz
            .ok_or_else(|| PayoffError::InvalidParameter(format!("{} has no Lipschitz constant", base.name())))?;
        let g0 = g_zero
            .or_else(|| base.value_at_zero_path())
            .ok_or_else(|| PayoffError::MissingZeroValue(base.name()))?;
        Self::truncated(base, l * k + g0)
    }

    pub fn custom(payoff: CustomPayoff, lipschitz: Option<f64>) -> Self {
        Self { kind: PayoffKind::Custom(payoff), lipschitz }
    }

    pub fn custom_vanilla(name: impl Into<String>, q: TerminalFn, lipschitz: Option<f64>) -> Self {
        Self { kind: PayoffKind::CustomVanilla(CustomVanilla { name: name.into(), q }), lipschitz }
    }

    /// The zero claim.
    pub fn zero() -> Self {
        Self::custom(
            CustomPayoff {
                name: "zero".into(),
                eval: Arc::new(|_| 0.0),
                path_dependent: false,
                bounded: true,
                value_at_zero: Some(0.0),
            },
            Some(1.0),
        )
    }

    /// Replaces the declared Lipschitz constant.
    pub fn with_lipschitz(mut self, lipschitz: Option<f64>) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn name(&self) -> String {
        match &self.kind {
            PayoffKind::LookbackMax => "lookback_max".into(),
            PayoffKind::AsianAverage => "asian_average".into(),
            PayoffKind::EuropeanCall { strike } => format!("european_call({strike})"),
            PayoffKind::EuropeanPut { strike } => format!("european_put({strike})"),
            PayoffKind::QuadraticVanilla { scale } => format!("quadratic_vanilla({scale})"),
            PayoffKind::AlphaTail { k } => format!("alpha_tail({k})"),
            PayoffKind::Truncated { base, cap } => format!("truncated({}, {cap})", base.name()),
            PayoffKind::Custom(c) => c.name.clone(),
            PayoffKind::CustomVanilla(c) => c.name.clone(),
        }
    }

    pub fn is_path_dependent(&self) -> bool {
        match &self.kind {
            PayoffKind::LookbackMax | PayoffKind::AsianAverage | PayoffKind::AlphaTail { .. } => true,
            PayoffKind::EuropeanCall { .. }
            | PayoffKind::EuropeanPut { .. }
            | PayoffKind::QuadraticVanilla { .. }
            | PayoffKind::CustomVanilla(_) => false,
            PayoffKind::Truncated { base, .. } => base.is_path_dependent(),
            PayoffKind::Custom(c) => c.path_dependent,
        }
    }

    pub fn is_bounded(&self) -> bool {
        match &self.kind {
            PayoffKind::EuropeanPut { .. } | PayoffKind::Truncated { .. } => true,
            PayoffKind::Custom(c) => c.bounded,
            _ => false,
        }
    }

    /// The function `q` with `G(S) = q(S_T)`, for claims that only see the
    /// terminal value.
    pub fn terminal_function(&self) -> Option<TerminalFn> {
        match &self.kind {
            PayoffKind::EuropeanCall { strike } => {
                let k = *strike;
                Some(Arc::new(move |x| (x - k).max(0.0)))
            }
            PayoffKind::EuropeanPut { strike } => {
                let k = *strike;
                Some(Arc::new(move |x| (k - x).max(0.0)))
            }
            PayoffKind::QuadraticVanilla { scale } => {
                let a = *scale;
                Some(Arc::new(move |x| a * x * x))
            }
            PayoffKind::CustomVanilla(c) => Some(c.q.clone()),
            PayoffKind::Truncated { base, cap } => {
                let q = base.terminal_function()?;
                let cap = *cap;
                Some(Arc::new(move |x| q(x).min(cap)))
            }
            _ => None,
        }
    }

    /// `G` on the constant path at level 0, where the formula extends there.
    pub fn value_at_zero_path(&self) -> Option<f64> {
        match &self.kind {
            PayoffKind::LookbackMax
            | PayoffKind::AsianAverage
            | PayoffKind::AlphaTail { .. }
            | PayoffKind::QuadraticVanilla { .. } => Some(0.0),
            PayoffKind::EuropeanCall { strike } => Some((-strike).max(0.0)),
            PayoffKind::EuropeanPut { strike } => Some(strike.max(0.0)),
            PayoffKind::Truncated { base, cap } => base.value_at_zero_path().map(|v| v.min(*cap)),
            PayoffKind::Custom(c) => c.value_at_zero,
            PayoffKind::CustomVanilla(c) => Some((c.q)(0.0)),
        }
    }

    pub fn evaluate(&self, path: &dyn PricePath) -> f64 {
        match &self.kind {
            PayoffKind::LookbackMax => path.sup_norm(),
            PayoffKind::AsianAverage => path.time_average(),
            PayoffKind::EuropeanCall { strike } => (path.terminal() - strike).max(0.0),
            PayoffKind::EuropeanPut { strike } => (strike - path.terminal()).max(0.0),
            PayoffKind::QuadraticVanilla { scale } => scale * path.terminal().powi(2),
            PayoffKind::AlphaTail { k } => alpha_k_of_norm(path.sup_norm(), *k),
            PayoffKind::Truncated { base, cap } => base.evaluate(path).min(*cap),
            PayoffKind::Custom(c) => (c.eval)(path),
            PayoffKind::CustomVanilla(c) => (c.q)(path.terminal()),
        }
    }
}

fn alpha_k_of_norm(norm: f64, k: f64) -> f64 {
    let tail = if norm >= k { norm } else { 0.0 };
    norm / k + tail
}

/// `α_K(S) = ‖S‖/K + ‖S‖ χ{‖S‖ ≥ K}`.
pub fn alpha_k(path: &dyn PricePath, k: f64) -> f64 {
    assert!(k > 0.0, "K must be positive");
    alpha_k_of_norm(path.sup_norm(), k)
}

/// `min(f_N, Λ (S_T + 1))`.
pub fn truncate_quadratic(fn_value: f64, lambda: f64, terminal: f64) -> Result<f64, PayoffError> {
    if !(lambda > 1.0) {
        return Err(PayoffError::InvalidParameter(format!("Lambda must exceed 1, got {lambda}")));
    }
    Ok(fn_value.min(lambda * (terminal + 1.0)))
}

pub const DEFAULT_CQ_X_MAX: f64 = 1e4;
const CQ_CANDIDATES: std::ops::RangeInclusive<u32> = 2..=1000;
const CQ_GRID_POINTS: usize = 4000;

/// Smallest integer `c ≥ 2` with `q(x) ≥ x²/c` on a dense geometric grid of
/// `[c, x_max]`.
///
/// Any `c > 1` works for `q(x) = x²`; restricting to integers makes the
/// returned constant (and every quantity derived from it) reproducible.
pub fn quadratic_cq(q: &PayoffSpec, x_max: f64) -> Result<f64, PayoffError> {
    let f = q.terminal_function().ok_or_else(|| PayoffError::NotVanilla(q.name()))?;
    for c in CQ_CANDIDATES {
        let c = c as f64;
        if c >= x_max {
            break;
        }
        let ratio = (x_max / c).ln();
        let ok = (0..=CQ_GRID_POINTS).all(|i| {
            let x = c * (ratio * i as f64 / CQ_GRID_POINTS as f64).exp();
            f(x) >= x * x / c * (1.0 - 1e-12)
        });
        if ok {
            return Ok(c);
        }
    }
    Err(PayoffError::NoCqFound { x_max })
}

/// Static hedging instruments `f_1, …, f_N` with ask prices `ℒ_1, …, ℒ_N`.
///
/// The cash claim `f_0 ≡ 1` with price 1 is implicit.
#[derive(Debug, Clone)]
pub struct StaticOptionSet {
    options: Vec<PayoffSpec>,
    prices: Vec<f64>,
}

impl StaticOptionSet {
    pub fn empty() -> Self {
        Self { options: Vec::new(), prices: Vec::new() }
    }

    /// Checks that every path-dependent option is bounded.
    pub fn new(options: Vec<PayoffSpec>, prices: Vec<f64>) -> Result<Self, PayoffError> {
        if options.len() != prices.len() {
            return Err(PayoffError::PriceCountMismatch { options: options.len(), prices: prices.len() });
        }
        if let Some(p) = prices.iter().find(|p| !p.is_finite()) {
            return Err(PayoffError::InvalidParameter(format!("option price {p} is not finite")));
        }
        for (index, o) in options.iter().enumerate() {
            if o.is_path_dependent() && !o.is_bounded() {
                return Err(PayoffError::UnboundedPathDependent { index: index + 1, name: o.name() });
            }
        }
        Ok(Self { options, prices })
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }

    pub fn options(&self) -> &[PayoffSpec] {
        &self.options
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// `(f_1(S), …, f_N(S))`.
    pub fn evaluate(&self, path: &dyn PricePath) -> Vec<f64> {
        self.options.iter().map(|o| o.evaluate(path)).collect()
    }

    pub fn with_prices(&self, prices: Vec<f64>) -> Result<Self, PayoffError> {
        Self::new(self.options.clone(), prices)
    }

    /// `(f_N, ℒ_N, c_q)` when the last option is a vanilla claim with
    /// quadratic growth.
    pub fn quadratic(&self) -> Result<(&PayoffSpec, f64, f64), PayoffError> {
        let last = self
            .options
            .last()
            .ok_or_else(|| PayoffError::NotVanilla("empty static option set".into()))?;
        let cq = quadratic_cq(last, DEFAULT_CQ_X_MAX)?;
        Ok((last, *self.prices.last().unwrap(), cq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{JumpPath, SampledPath};

    fn jp(times: &[f64], levels: &[f64]) -> JumpPath {
        JumpPath::new(times.to_vec(), levels.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let p = jp(&[0.3, 0.7], &[1.0, 1.2, 0.9]);
        assert_eq!(PayoffSpec::lookback_max().evaluate(&p), 1.2);
        let c = JumpPath::constant(1.0, 1.0).unwrap();
        assert_eq!(PayoffSpec::asian_average().evaluate(&c), 1.0);
        let end = jp(&[0.5], &[1.0, 0.1f64.exp()]);
        let v = PayoffSpec::european_call(1.0).evaluate(&end);
        assert!((v - (0.1f64.exp() - 1.0)).abs() < 1e-15);
        assert!((v - 0.10517).abs() < 1e-5);
    }

    #[test]
    fn alpha_examples() {
        let at = |norm: f64| alpha_k(&JumpPath::constant(norm, 1.0).unwrap(), 2.0);
        assert_eq!(at(1.5), 0.75);
        assert_eq!(at(3.0), 4.5);
        assert_eq!(at(2.0), 3.0);
    }

    #[test]
    fn truncate_quadratic_examples() {
        assert_eq!(truncate_quadratic(4.0, 10.0, 2.0).unwrap(), 4.0);
        assert_eq!(truncate_quadratic(100.0, 10.0, 2.0).unwrap(), 30.0);
        let x = 1.0 + 3f64.sqrt();
        let v = truncate_quadratic(x * x, 2.0, x).unwrap();
        assert!((v - x * x).abs() < 1e-12 && (v - 2.0 * (x + 1.0)).abs() < 1e-12);
        assert!(truncate_quadratic(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn cq_examples() {
        assert_eq!(quadratic_cq(&PayoffSpec::square(), DEFAULT_CQ_X_MAX).unwrap(), 2.0);
        let quarter = PayoffSpec::quadratic_vanilla(0.25).unwrap();
        assert_eq!(quadratic_cq(&quarter, DEFAULT_CQ_X_MAX).unwrap(), 4.0);
        let linear = PayoffSpec::custom_vanilla("linear", Arc::new(|x| x), Some(1.0));
        assert_eq!(
            quadratic_cq(&linear, DEFAULT_CQ_X_MAX),
            Err(PayoffError::NoCqFound { x_max: DEFAULT_CQ_X_MAX })
        );
        assert!(quadratic_cq(&PayoffSpec::lookback_max(), DEFAULT_CQ_X_MAX).is_err());
    }

    #[test]
    fn truncation_level_uses_g_zero() {
        let g = PayoffSpec::truncated_at_level(PayoffSpec::european_put(1.5), 3.0, None).unwrap();
        match g.kind() {
            PayoffKind::Truncated { cap, .. } => assert_eq!(*cap, 4.5),
            _ => unreachable!(),
        }
        let custom = PayoffSpec::custom(
            CustomPayoff {
                name: "log".into(),
                eval: Arc::new(|p| p.terminal().ln().abs()),
                path_dependent: false,
                bounded: false,
                value_at_zero: None,
            },
            Some(2.0),
        );
        assert!(matches!(
            PayoffSpec::truncated_at_level(custom.clone(), 2.0, None),
            Err(PayoffError::MissingZeroValue(_))
        ));
        assert!(PayoffSpec::truncated_at_level(custom, 2.0, Some(0.0)).is_ok());
    }

    #[test]
    fn homogeneity_spot_checks() {
        let p = SampledPath::new(vec![0.0, 0.4, 1.0], vec![1.0, 1.7, 1.3]).unwrap();
        let scaled = SampledPath::new(vec![0.0, 0.4, 1.0], vec![3.0, 5.1, 3.9]).unwrap();
        let look = PayoffSpec::lookback_max();
        assert!((look.evaluate(&scaled) - 3.0 * look.evaluate(&p)).abs() < 1e-12);
        let q = PayoffSpec::square();
        assert!((q.evaluate(&scaled) - 9.0 * q.evaluate(&p)).abs() < 1e-12);
    }

    #[test]
    fn static_set_rejects_unbounded_path_dependent() {
        let err = StaticOptionSet::new(vec![PayoffSpec::lookback_max()], vec![1.0]).unwrap_err();
        assert!(matches!(err, PayoffError::UnboundedPathDependent { index: 1, .. }));
        let capped = PayoffSpec::truncated(PayoffSpec::lookback_max(), 2.0).unwrap();
        let set = StaticOptionSet::new(vec![capped, PayoffSpec::square()], vec![1.1, 1.2]).unwrap();
        let (_, price, cq) = set.quadratic().unwrap();
        assert_eq!((price, cq), (1.2, 2.0));
    }
}
