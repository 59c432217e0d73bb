//! Price paths and their discretization.
//!
//! Two representations are used throughout the crate:
//!
//! - [`SampledPath`]: a continuous path known on a finite, strictly increasing
//!   time grid and interpolated linearly in between.
//! - [`JumpPath`]: a piecewise-constant, right-continuous path (an element of
//!   the Skorokhod space) described by its jump times and levels.
//!
//! Both implement [`PricePath`], which is what payoffs consume.

mod crossing;
mod grid;
mod sampler;

pub use crossing::{
    absolute_crossing_times, discretize, discretize_detailed, is_in_d_epsilon,
    log_crossing_times, CrossingDecomposition, Discretization,
};
pub use grid::{grid_elements, snap_below, GridFamily, GridSpec, DEFAULT_I_MAX};
pub use sampler::{sample_exp_fbm, sample_gbm, ExpFbmSampler, GbmSampler, PathSampler};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no grid element strictly below {delta_t} (smallest represented element {min_element}); increase i_max")]
    NoGridElementBelow { delta_t: f64, min_element: f64 },
    #[error("covariance matrix of size {size} is not numerically positive definite")]
    FactorizationFailure { size: usize },
}

/// Read access to a positive price path on `[0, T]`.
pub trait PricePath {
    fn horizon(&self) -> f64;
    fn initial(&self) -> f64;
    fn terminal(&self) -> f64;
    /// `sup_t |S_t|`; paths are positive so this is the running maximum.
    fn sup_norm(&self) -> f64;
    /// `(1/T) ∫_0^T S_t dt`, exact for the representation.
    fn time_average(&self) -> f64;
    fn value_at(&self, t: f64) -> f64;
    /// Times at which the path changes shape; the sup of a difference of two
    /// paths of the same kind is attained on the union of their breakpoints.
    fn breakpoints(&self) -> Vec<f64>;
}

/// A continuous path sampled on a finite grid, linear between samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, PathError> {
        if times.len() < 2 {
            return Err(PathError::InvalidPath("need at least two samples".into()));
        }
        if times.len() != values.len() {
            return Err(PathError::InvalidPath(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(PathError::InvalidPath("first time must be 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PathError::InvalidPath("times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(PathError::InvalidPath("values must be finite and positive".into()));
        }
        Ok(Self { times, values })
    }

    /// Uniform grid `t_i = i T / (n - 1)` carrying the given values.
    pub fn uniform(horizon: f64, values: Vec<f64>) -> Result<Self, PathError> {
        let n = values.len();
        if n < 2 {
            return Err(PathError::InvalidPath("need at least two samples".into()));
        }
        Self::new(uniform_times(horizon, n), values)
    }

    /// Samples `f` on a uniform grid of `n` points over `[0, horizon]`.
    pub fn from_fn(n: usize, horizon: f64, f: impl Fn(f64) -> f64) -> Result<Self, PathError> {
        let times = uniform_times(horizon, n.max(2));
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Canonical market paths start at 1.
    pub fn is_canonical(&self) -> bool {
        self.values[0] == 1.0
    }
}

pub(crate) fn uniform_times(horizon: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { horizon } else { horizon * i as f64 / last })
        .collect()
}

impl PricePath for SampledPath {
    fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn initial(&self) -> f64 {
        self.values[0]
    }

    fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    fn sup_norm(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    fn time_average(&self) -> f64 {
        let integral: f64 = self
            .times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
            .sum();
        integral / self.horizon()
    }

    fn value_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.horizon() {
            return self.terminal();
        }
        let hi = self.times.partition_point(|&s| s <= t);
        let lo = hi - 1;
        if self.times[lo] == t {
            return self.values[lo];
        }
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        self.values[lo] + w * (self.values[hi] - self.values[lo])
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.times.clone()
    }
}

/// Piecewise-constant right-continuous path with finitely many jumps.
///
/// `levels[0]` holds on `[0, jump_times[0])`, `levels[i]` on
/// `[jump_times[i-1], jump_times[i])` and the last level up to and including
/// the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpPath {
    jump_times: Vec<f64>,
    levels: Vec<f64>,
    horizon: f64,
}

impl JumpPath {
    pub fn new(jump_times: Vec<f64>, levels: Vec<f64>, horizon: f64) -> Result<Self, PathError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(PathError::InvalidPath("horizon must be positive".into()));
        }
        if levels.len() != jump_times.len() + 1 {
            return Err(PathError::InvalidPath(format!(
                "{} jump times need {} levels, got {}",
                jump_times.len(),
                jump_times.len() + 1,
                levels.len()
            )));
        }
        if jump_times.iter().any(|&t| !(t > 0.0 && t < horizon)) {
            return Err(PathError::InvalidPath("jump times must lie in (0, T)".into()));
        }
        if jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PathError::InvalidPath("jump times must be strictly increasing".into()));
        }
        if levels.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(PathError::InvalidPath("levels must be finite and positive".into()));
        }
        if levels.windows(2).any(|w| w[0] == w[1]) {
            return Err(PathError::InvalidPath("consecutive levels must differ".into()));
        }
        Ok(Self { jump_times, levels, horizon })
    }

    pub fn constant(level: f64, horizon: f64) -> Result<Self, PathError> {
        Self::new(Vec::new(), vec![level], horizon)
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// Consecutive inter-jump gaps `t_k - t_{k-1}` with `t_0 = 0`.
    pub fn gaps(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.jump_times
            .iter()
            .map(|&t| {
                let g = t - prev;
                prev = t;
                g
            })
            .collect()
    }

    /// Same levels, new jump times.
    pub fn with_jump_times(&self, jump_times: Vec<f64>) -> Result<Self, PathError> {
        Self::new(jump_times, self.levels.clone(), self.horizon)
    }

    /// Scales every level by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            jump_times: self.jump_times.clone(),
            levels: self.levels.iter().map(|v| v * factor).collect(),
            horizon: self.horizon,
        }
    }
}

impl PricePath for JumpPath {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn initial(&self) -> f64 {
        self.levels[0]
    }

    fn terminal(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    fn sup_norm(&self) -> f64 {
        self.levels.iter().copied().fold(0.0, f64::max)
    }

    fn time_average(&self) -> f64 {
        let mut prev = 0.0;
        let mut integral = 0.0;
        for (i, &t) in self.jump_times.iter().enumerate() {
            integral += self.levels[i] * (t - prev);
            prev = t;
        }
        integral += self.terminal() * (self.horizon - prev);
        integral / self.horizon
    }

    fn value_at(&self, t: f64) -> f64 {
        let idx = self.jump_times.partition_point(|&s| s <= t);
        self.levels[idx]
    }

    fn breakpoints(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.jump_times.iter().copied())
            .chain(std::iter::once(self.horizon))
            .collect()
    }
}

/// `sup_t |a_t - b_t|`, evaluated on the union of both paths' breakpoints
/// (up to the shorter horizon).
pub fn sup_norm_distance<P: PricePath>(a: &P, b: &P) -> f64 {
    let horizon = a.horizon().min(b.horizon());
    let mut points = a.breakpoints();
    points.extend(b.breakpoints());
    points.retain(|&t| t <= horizon);
    points
        .into_iter()
        .map(|t| (a.value_at(t) - b.value_at(t)).abs())
        .fold(0.0, f64::max)
}
