use serde::Serialize;

use super::lift::LiftedHedge;
use super::HedgingError;
use crate::paths::{PathError, PathSampler, PricePath, SampledPath};
use crate::payoffs::PayoffSpec;
use crate::pricing::MarketSpec;

/// Relative slack on the pathwise comparison, for rounding in the sums.
const VIOLATION_TOL: f64 = 1e-9;

/// `L (1 + Σ_{i<N} c_i)(e^{2ε} + ε − 1)‖S‖ + L c_N (e^ε − 1)(2 f_N(S) + ‖S‖)`.
///
/// `statics` is `(c_0, …, c_N)`; `f_n` is the last option's value on the
/// path and is ignored without options.
pub fn lift_bound(lipschitz: f64, epsilon: f64, statics: &[f64], f_n: f64, sup_norm: f64) -> f64 {
    let n = statics.len() - 1;
    let inner: f64 = if n > 1 { statics[1..n].iter().sum() } else { 0.0 };
    let first = lipschitz * (1.0 + inner) * ((2.0 * epsilon).exp_m1() + epsilon) * sup_norm;
    if n == 0 {
        return first;
    }
    first + lipschitz * statics[n] * epsilon.exp_m1() * (2.0 * f_n + sup_norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Verified,
    Violated,
    /// More crossings than the tree has depth.
    ExcludedFrozen,
    /// A crossing gap fell below the smallest grid element.
    ExcludedGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathOutcome {
    pub stream: u64,
    pub status: PathStatus,
    pub crossings: usize,
    /// Remaining fields are `NaN` for excluded paths.
    pub z: f64,
    pub payoff: f64,
    pub bound: f64,
    /// `Z − (G − bound)`.
    pub margin: f64,
    pub shortfall: f64,
    pub i_term: f64,
    pub z_tree: f64,
    pub max_log_overshoot: f64,
}

impl PathOutcome {
    fn excluded(stream: u64, status: PathStatus, crossings: usize) -> Self {
        Self {
            stream,
            status,
            crossings,
            z: f64::NAN,
            payoff: f64::NAN,
            bound: f64::NAN,
            margin: f64::NAN,
            shortfall: f64::NAN,
            i_term: f64::NAN,
            z_tree: f64::NAN,
            max_log_overshoot: f64::NAN,
        }
    }
}

/// Runs the lifted hedge on one path and compares `Z` with `G − bound`.
pub fn verify_lifted_path(
    lifted: &LiftedHedge<'_>,
    path: &SampledPath,
    stream: u64,
    market: &MarketSpec,
    payoff: &PayoffSpec,
    lipschitz: f64,
) -> Result<PathOutcome, HedgingError> {
    let (report, diag, run) = match lifted.execute_detailed(path, market, payoff) {
        Ok(r) => r,
        Err(HedgingError::Path(PathError::NoGridElementBelow { .. })) => {
            return Ok(PathOutcome::excluded(stream, PathStatus::ExcludedGrid, 0));
        }
        Err(e) => return Err(e),
    };
    let crossings = run.discretization.crossings.count();
    if run.discretization.frozen {
        return Ok(PathOutcome::excluded(stream, PathStatus::ExcludedFrozen, crossings));
    }
    let epsilon = lifted.tree().epsilon();
    let statics = &lifted.plan().statics;
    let f_n = market.statics().evaluate(path).last().copied().unwrap_or(0.0);
    let bound = lift_bound(lipschitz, epsilon, statics, f_n, path.sup_norm());
    let margin = report.z - (report.payoff - bound);
    let tol = VIOLATION_TOL * (1.0 + report.payoff.abs() + bound);
    Ok(PathOutcome {
        stream,
        status: if margin >= -tol { PathStatus::Verified } else { PathStatus::Violated },
        crossings,
        z: report.z,
        payoff: report.payoff,
        bound,
        margin,
        shortfall: report.shortfall,
        i_term: diag.i_term,
        z_tree: diag.z_tree,
        max_log_overshoot: run.discretization.max_log_overshoot(epsilon),
    })
}

/// Summary over a batch of paths. [`MonteCarloReport::merge`] is
/// associative, so batches can be reduced in any grouping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub n_paths: usize,
    pub verified: usize,
    pub violations: usize,
    pub excluded_frozen: usize,
    pub excluded_grid: usize,
    /// Smallest `Z − (G − bound)` over checked paths.
    pub min_margin: f64,
    pub worst_stream: Option<u64>,
    pub max_shortfall: f64,
    pub sum_shortfall: f64,
    pub min_i_term: f64,
}

impl Default for MonteCarloReport {
    fn default() -> Self {
        Self {
            n_paths: 0,
            verified: 0,
            violations: 0,
            excluded_frozen: 0,
            excluded_grid: 0,
            min_margin: f64::INFINITY,
            worst_stream: None,
            max_shortfall: f64::NEG_INFINITY,
            sum_shortfall: 0.0,
            min_i_term: f64::INFINITY,
        }
    }
}

impl MonteCarloReport {
    pub fn from_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a PathOutcome>) -> Self {
        outcomes.into_iter().fold(Self::default(), |mut r, o| {
            r.push(o);
            r
        })
    }

    pub fn push(&mut self, o: &PathOutcome) {
        self.n_paths += 1;
        match o.status {
            PathStatus::ExcludedFrozen => self.excluded_frozen += 1,
            PathStatus::ExcludedGrid => self.excluded_grid += 1,
            PathStatus::Verified | PathStatus::Violated => {
                if o.status == PathStatus::Verified {
                    self.verified += 1;
                } else {
                    self.violations += 1;
                }
                if o.margin < self.min_margin || (o.margin == self.min_margin && Some(o.stream) < self.worst_stream) {
                    self.min_margin = o.margin;
                    self.worst_stream = Some(o.stream);
                }
                self.max_shortfall = self.max_shortfall.max(o.shortfall);
                self.sum_shortfall += o.shortfall;
                self.min_i_term = self.min_i_term.min(o.i_term);
            }
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n_paths += other.n_paths;
        self.verified += other.verified;
        self.violations += other.violations;
        self.excluded_frozen += other.excluded_frozen;
        self.excluded_grid += other.excluded_grid;
        if other.min_margin < self.min_margin
            || (other.min_margin == self.min_margin && other.worst_stream < self.worst_stream && other.worst_stream.is_some())
        {
            self.min_margin = other.min_margin;
            self.worst_stream = other.worst_stream;
        }
        self.max_shortfall = self.max_shortfall.max(other.max_shortfall);
        self.sum_shortfall += other.sum_shortfall;
        self.min_i_term = self.min_i_term.min(other.min_i_term);
        self
    }

    pub fn checked(&self) -> usize {
        self.verified + self.violations
    }

    pub fn excluded_fraction(&self) -> f64 {
        if self.n_paths == 0 {
            return 0.0;
        }
        (self.excluded_frozen + self.excluded_grid) as f64 / self.n_paths as f64
    }

    pub fn mean_shortfall(&self) -> Option<f64> {
        (self.checked() > 0).then(|| self.sum_shortfall / self.checked() as f64)
    }
}

/// Samples streams `0..n_paths` of `seed` and verifies each path in turn.
pub fn monte_carlo_verify(
    lifted: &LiftedHedge<'_>,
    sampler: &dyn PathSampler,
    n_paths: usize,
    seed: u64,
    market: &MarketSpec,
    payoff: &PayoffSpec,
    lipschitz: f64,
) -> Result<(MonteCarloReport, Vec<PathOutcome>), HedgingError> {
    let outcomes = (0..n_paths as u64)
        .map(|s| verify_lifted_path(lifted, &sampler.sample(seed, s), s, market, payoff, lipschitz))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((MonteCarloReport::from_outcomes(&outcomes), outcomes))
}
