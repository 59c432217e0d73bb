//! Experiment configuration: one JSON document, versioned, unknown keys
//! rejected.

use serde::Deserialize;
use superhedge::lp::{DenseSimplex, SolverOptions};
use superhedge::paths::{ExpFbmSampler, GbmSampler, GridFamily, PathSampler};
use superhedge::payoffs::{PayoffSpec, StaticOptionSet};
use superhedge::pricing::MarketSpec;
use superhedge::tree::TreeConfig;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub market: MarketConfig,
    pub payoff: PayoffConfig,
    /// Overrides the payoff's declared Lipschitz constant.
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub tree: Option<TreeSpec>,
    /// Leaf positions charged by the model measure; all leaves when absent.
    #[serde(default)]
    pub model_support: Option<Vec<usize>>,
    #[serde(default)]
    pub bounds: Option<BoundsConfig>,
    #[serde(default)]
    pub hedge: Option<HedgeConfig>,
    #[serde(default)]
    pub assumptions: AssumptionsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_tolerance() -> f64 {
    1e-7
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub kappa: f64,
    #[serde(default)]
    pub options: Vec<OptionConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionConfig {
    pub payoff: PayoffConfig,
    pub price: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffConfig {
    LookbackMax,
    AsianAverage,
    EuropeanCall { strike: f64 },
    EuropeanPut { strike: f64 },
    TerminalValue,
    Square,
    QuadraticVanilla { scale: f64 },
    AlphaTail { k: f64 },
    Truncated { base: Box<PayoffConfig>, cap: f64 },
    Zero,
}

impl PayoffConfig {
    pub fn build(&self) -> Result<PayoffSpec, CliError> {
        let p = match self {
            Self::LookbackMax => PayoffSpec::lookback_max(),
            Self::AsianAverage => PayoffSpec::asian_average(),
            Self::EuropeanCall { strike } => PayoffSpec::european_call(*strike),
            Self::EuropeanPut { strike } => PayoffSpec::european_put(*strike),
            Self::TerminalValue => PayoffSpec::terminal_value(),
            Self::Square => PayoffSpec::square(),
            Self::QuadraticVanilla { scale } => PayoffSpec::quadratic_vanilla(*scale).map_err(CliError::config)?,
            Self::AlphaTail { k } => PayoffSpec::alpha_tail(*k).map_err(CliError::config)?,
            Self::Truncated { base, cap } => PayoffSpec::truncated(base.build()?, *cap).map_err(CliError::config)?,
            Self::Zero => PayoffSpec::zero(),
        };
        Ok(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeSpec {
    Partition {
        epsilon: f64,
        times: Vec<f64>,
        #[serde(default)]
        forced_jumps: bool,
        #[serde(default = "default_horizon")]
        horizon: f64,
        #[serde(default)]
        node_budget: Option<usize>,
    },
    Dyadic {
        epsilon: f64,
        i_max: usize,
        max_jumps: usize,
        #[serde(default = "default_horizon")]
        horizon: f64,
        #[serde(default)]
        node_budget: Option<usize>,
    },
}

fn default_horizon() -> f64 {
    1.0
}

impl TreeSpec {
    pub fn build(&self) -> TreeConfig {
        let (cfg, budget) = match self {
            Self::Partition { epsilon, times, forced_jumps, horizon, node_budget } => {
                let cfg = if *forced_jumps {
                    TreeConfig::binomial(*epsilon, times.clone(), *horizon)
                } else {
                    TreeConfig::partition(*epsilon, times.clone(), *horizon)
                };
                (cfg, node_budget)
            }
            Self::Dyadic { epsilon, i_max, max_jumps, horizon, node_budget } => {
                (TreeConfig::dyadic(*epsilon, GridFamily::uniform(*i_max), *max_jumps, *horizon), node_budget)
            }
        };
        match budget {
            Some(b) => cfg.with_node_budget(*b),
            None => cfg,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub epsilons: Vec<f64>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Partition times of the lower-bound trees.
    pub lower_times: Vec<f64>,
    #[serde(default = "default_i_max")]
    pub upper_i_max: usize,
    #[serde(default = "default_upper_jumps")]
    pub upper_max_jumps: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_lambdas() -> Vec<f64> {
    vec![2.0]
}

fn default_i_max() -> usize {
    2
}

fn default_upper_jumps() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HedgeConfig {
    #[serde(default)]
    pub doubling: Option<DoublingConfig>,
    #[serde(default)]
    pub lift: Option<LiftConfig>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_bins() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublingConfig {
    #[serde(default = "default_cq")]
    pub c_q: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    pub kappas: Vec<f64>,
    pub paths: usize,
    pub sampler: SamplerConfig,
}

fn default_cq() -> f64 {
    2.0
}

fn default_k() -> f64 {
    100.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftConfig {
    pub epsilon: f64,
    #[serde(default = "default_i_max")]
    pub i_max: usize,
    pub max_jumps: usize,
    pub paths: usize,
    pub samplers: Vec<SamplerConfig>,
    #[serde(default = "default_max_excluded")]
    pub max_excluded_fraction: f64,
}

fn default_max_excluded() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerConfig {
    Gbm {
        #[serde(default)]
        mu: f64,
        sigma: f64,
        steps: usize,
        #[serde(default = "default_horizon")]
        horizon: f64,
    },
    ExpFbm {
        hurst: f64,
        sigma: f64,
        steps: usize,
        #[serde(default = "default_horizon")]
        horizon: f64,
    },
}

impl SamplerConfig {
    pub fn build(&self) -> Result<Box<dyn PathSampler>, CliError> {
        Ok(match self {
            Self::Gbm { mu, sigma, steps, horizon } => {
                Box::new(GbmSampler::new(*mu, *sigma, *steps, *horizon).map_err(CliError::config)?)
            }
            Self::ExpFbm { hurst, sigma, steps, horizon } => {
                Box::new(ExpFbmSampler::new(*hurst, *sigma, *steps, *horizon).map_err(CliError::config)?)
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Gbm { sigma, .. } => format!("gbm_sigma{sigma}"),
            Self::ExpFbm { hurst, sigma, .. } => format!("exp_fbm_h{hurst}_sigma{sigma}"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl Default for AssumptionsConfig {
    fn default() -> Self {
        Self { trials: default_trials() }
    }
}

fn default_trials() -> usize {
    2000
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub max_nonzeros: Option<usize>,
    #[serde(default)]
    pub lex_after: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(CliError::config)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        if !(cfg.tolerance > 0.0 && cfg.tolerance.is_finite()) {
            return Err(CliError::Config(format!("tolerance must be positive, got {}", cfg.tolerance)));
        }
        // Fail early on the model restriction and malformed payoffs.
        cfg.market()?;
        cfg.payoff()?;
        Ok(cfg)
    }

    /// Bid-ask spreads are restricted to `0 < κ < 1/8`.
    pub fn market(&self) -> Result<MarketSpec, CliError> {
        let options =
            self.market.options.iter().map(|o| o.payoff.build()).collect::<Result<Vec<_>, _>>()?;
        let prices = self.market.options.iter().map(|o| o.price).collect();
        let statics = StaticOptionSet::new(options, prices).map_err(CliError::config)?;
        MarketSpec::new(self.market.kappa, statics).map_err(CliError::config)
    }

    pub fn payoff(&self) -> Result<PayoffSpec, CliError> {
        self.payoff.build()
    }

    pub fn lipschitz(&self) -> Result<f64, CliError> {
        self.lipschitz
            .or_else(|| self.payoff.build().ok().and_then(|p| p.lipschitz()))
            .ok_or_else(|| CliError::Config("payoff declares no Lipschitz constant; set `lipschitz`".into()))
    }

    pub fn tree(&self) -> Result<TreeConfig, CliError> {
        self.tree
            .as_ref()
            .map(TreeSpec::build)
            .ok_or_else(|| CliError::Config("this command needs a `tree` section".into()))
    }

    pub fn solver(&self) -> DenseSimplex {
        let d = SolverOptions::default();
        DenseSimplex::new(SolverOptions {
            max_iterations: self.solver.max_iterations.unwrap_or(d.max_iterations),
            max_nonzeros: self.solver.max_nonzeros.unwrap_or(d.max_nonzeros),
            lex_after: self.solver.lex_after.unwrap_or(d.lex_after),
            ..d
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "market": {"kappa": 0.05},
        "payoff": {"kind": "terminal_value"},
        "tree": {"mode": "partition", "epsilon": 0.05, "times": [0.5], "forced_jumps": true}
    }"#;

    #[test]
    fn parses_minimal() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 0);
        assert!(cfg.tree().unwrap().epsilon == 0.05);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = MINIMAL.replace("\"market\"", "\"colour\": 1, \"market\"");
        assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::Config(_))));
        let text = MINIMAL.replace("\"forced_jumps\": true", "\"forced_jumps\": true, \"typo\": 3");
        assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn kappa_restriction() {
        let text = MINIMAL.replace("0.05}", "0.2}");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("kappa must lie in (0, 1/8)"), "{err}");
    }

    #[test]
    fn schema_version_checked() {
        let text = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(ExperimentConfig::parse(&text).is_err());
    }
}
