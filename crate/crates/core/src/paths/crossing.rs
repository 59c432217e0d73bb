use serde::Serialize;

use super::{GridFamily, JumpPath, PathError, PricePath, SampledPath};

/// Relative slack applied when comparing an increment with its threshold, so
/// that analytically exact crossings are not lost to rounding.
const THRESHOLD_REL_TOL: f64 = 1e-12;

/// First-passage decomposition of a sampled path.
///
/// `crossing_indices` are the sample indices of the registered crossings
/// strictly before the horizon; index 0 and the terminal index are implicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingDecomposition {
    crossing_indices: Vec<usize>,
    crossing_values: Vec<f64>,
    terminal_index: usize,
}

impl CrossingDecomposition {
    pub fn crossing_indices(&self) -> &[usize] {
        &self.crossing_indices
    }

    pub fn crossing_values(&self) -> &[f64] {
        &self.crossing_values
    }

    pub fn terminal_index(&self) -> usize {
        self.terminal_index
    }

    /// Number of crossings strictly before the horizon.
    pub fn count(&self) -> usize {
        self.crossing_indices.len()
    }

    pub fn crossing_times(&self, path: &SampledPath) -> Vec<f64> {
        self.crossing_indices.iter().map(|&i| path.times()[i]).collect()
    }

    /// Indices `0 = θ_0 < θ_1 < … < θ_K < terminal`.
    pub fn anchor_indices(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.crossing_indices.iter().copied()).collect()
    }
}

fn first_passages(path: &SampledPath, threshold: f64, distance: impl Fn(f64, f64) -> f64) -> CrossingDecomposition {
    let values = path.values();
    let terminal_index = values.len() - 1;
    let cutoff = threshold * (1.0 - THRESHOLD_REL_TOL);
    let mut anchor = values[0];
    let mut crossing_indices = Vec::new();
    let mut crossing_values = Vec::new();
    for (i, &v) in values.iter().enumerate().take(terminal_index).skip(1) {
        if distance(v, anchor) >= cutoff {
            crossing_indices.push(i);
            crossing_values.push(v);
            anchor = v;
        }
    }
    CrossingDecomposition { crossing_indices, crossing_values, terminal_index }
}

/// Successive first samples at which `|ln S - ln S_anchor| ≥ ε`.
///
/// A crossing that is first reached at the terminal sample is not counted.
pub fn log_crossing_times(path: &SampledPath, epsilon: f64) -> CrossingDecomposition {
    assert!(epsilon > 0.0 && epsilon.is_finite(), "epsilon must be positive");
    first_passages(path, epsilon, |v, a| (v.ln() - a.ln()).abs())
}

/// Successive first samples at which `|S - S_anchor| ≥ delta`.
pub fn absolute_crossing_times(path: &SampledPath, delta: f64) -> CrossingDecomposition {
    assert!(delta > 0.0 && delta.is_finite(), "delta must be positive");
    first_passages(path, delta, |v, a| (v - a).abs())
}

/// Result of mapping a sampled path onto the `ε`-jump path space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discretization {
    pub jump_path: JumpPath,
    pub crossings: CrossingDecomposition,
    /// Snapped jump times `τ̂_k`, one per retained crossing.
    pub snapped_times: Vec<f64>,
    /// True when the path crossed more often than `max_jumps`.
    pub frozen: bool,
}

impl Discretization {
    /// Largest `|ln S_{τ_k} - ln S_{τ_{k-1}}| - ε` over retained crossings.
    pub fn max_log_overshoot(&self, epsilon: f64) -> f64 {
        self.jump_path
            .levels()
            .windows(2)
            .map(|w| (w[1].ln() - w[0].ln()).abs() - epsilon)
            .fold(0.0, f64::max)
    }
}

/// Jump path with levels at the sampled log-`ε` crossings and jump times at
/// the cumulative grid-snapped gaps.
pub fn discretize(
    path: &SampledPath,
    epsilon: f64,
    max_jumps: usize,
    grid: &GridFamily,
) -> Result<JumpPath, PathError> {
    discretize_detailed(path, epsilon, max_jumps, grid).map(|d| d.jump_path)
}

pub fn discretize_detailed(
    path: &SampledPath,
    epsilon: f64,
    max_jumps: usize,
    grid: &GridFamily,
) -> Result<Discretization, PathError> {
    let crossings = log_crossing_times(path, epsilon);
    let retained = crossings.count().min(max_jumps);
    let times = path.times();
    let mut snapped_times = Vec::with_capacity(retained);
    let mut levels = Vec::with_capacity(retained + 1);
    levels.push(path.initial());
    let mut prev_index = 0;
    let mut snapped = 0.0;
    for (k, &idx) in crossings.crossing_indices().iter().take(retained).enumerate() {
        let gap = times[idx] - times[prev_index];
        let spec = grid.spec(epsilon, k as u32 + 1)?;
        snapped += spec.snap_below(gap)?;
        snapped_times.push(snapped);
        levels.push(path.values()[idx]);
        prev_index = idx;
    }
    let jump_path = JumpPath::new(snapped_times.clone(), levels, path.horizon())?;
    Ok(Discretization {
        jump_path,
        frozen: crossings.count() > max_jumps,
        crossings,
        snapped_times,
    })
}

/// Membership in the (truncated) `ε`-jump path space: starts at 1, every
/// log-jump equals `ε` within `tol`, every gap lies in its depth's grid.
pub fn is_in_d_epsilon(path: &JumpPath, epsilon: f64, grid: &GridFamily, tol: f64) -> bool {
    if (path.initial() - 1.0).abs() > tol {
        return false;
    }
    let steps_ok = path
        .levels()
        .windows(2)
        .all(|w| ((w[1].ln() - w[0].ln()).abs() - epsilon).abs() <= tol);
    if !steps_ok {
        return false;
    }
    path.gaps().iter().enumerate().all(|(k, &gap)| {
        grid.spec(epsilon, k as u32 + 1)
            .map(|spec| spec.contains(gap, 1e-12 * gap.max(1.0)))
            .unwrap_or(false)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_path(rate: f64) -> SampledPath {
        SampledPath::from_fn(1001, 1.0, |t| (rate * t).exp()).unwrap()
    }

    #[test]
    fn exponential_log_crossings() {
        let p = exp_path(1.0);
        let d = log_crossing_times(&p, 0.2);
        assert_eq!(d.count(), 4);
        let times = d.crossing_times(&p);
        for (t, expected) in times.iter().zip([0.2, 0.4, 0.6, 0.8]) {
            assert!((t - expected).abs() <= 1e-3 + 1e-12, "{t} vs {expected}");
        }
        assert_eq!(d.terminal_index(), 1000);
    }

    #[test]
    fn decaying_path_single_crossing() {
        let p = exp_path(-1.0);
        let d = log_crossing_times(&p, 0.5);
        assert_eq!(d.count(), 1);
        assert!((d.crossing_times(&p)[0] - 0.5).abs() <= 1e-3);
    }

    #[test]
    fn constant_path_has_no_crossings() {
        let p = SampledPath::from_fn(11, 1.0, |_| 1.0).unwrap();
        assert_eq!(log_crossing_times(&p, 0.01).count(), 0);
        assert_eq!(absolute_crossing_times(&p, 1.0).count(), 0);
    }

    #[test]
    fn absolute_crossings_with_terminal_tie() {
        let p = SampledPath::from_fn(1001, 1.0, |t| 1.0 + 2.0 * t).unwrap();
        let d = absolute_crossing_times(&p, 1.0);
        assert_eq!(d.count(), 1);
        assert_eq!(d.crossing_times(&p), vec![0.5]);

        let p = SampledPath::from_fn(1001, 1.0, |t| 1.0 + 3.0 * t).unwrap();
        let d = absolute_crossing_times(&p, 1.0);
        assert_eq!(d.count(), 2);
        let t = d.crossing_times(&p);
        assert!((t[0] - 1.0 / 3.0).abs() <= 1e-3);
        assert!((t[1] - 2.0 / 3.0).abs() <= 2e-3);
    }

    #[test]
    fn discretize_exponential() {
        let p = exp_path(1.0);
        let grid = GridFamily::uniform(64);
        let j = discretize(&p, 0.5, 4, &grid).unwrap();
        assert_eq!(j.jump_times(), &[0.25]);
        assert_eq!(j.levels()[0], 1.0);
        assert!((j.levels()[1] - 0.5f64.exp()).abs() < 2e-3);
        assert!(is_in_d_epsilon(&j, 0.5, &grid, 1e-3));
    }

    #[test]
    fn discretize_constant_and_truncation() {
        let grid = GridFamily::default();
        let c = SampledPath::from_fn(11, 1.0, |_| 1.0).unwrap();
        let j = discretize(&c, 0.1, 3, &grid).unwrap();
        assert_eq!(j.jump_count(), 0);
        assert_eq!(j.levels(), &[1.0]);

        let p = exp_path(1.0);
        let d = discretize_detailed(&p, 0.1, 3, &grid).unwrap();
        assert_eq!(d.jump_path.jump_count(), 3);
        assert!(d.frozen);
    }

    #[test]
    fn d_epsilon_rejections() {
        let grid = GridFamily::default();
        let e = 0.1f64;
        let double = JumpPath::new(vec![0.05], vec![1.0, (2.0 * e).exp()], 1.0).unwrap();
        assert!(!is_in_d_epsilon(&double, e, &grid, 1e-9));
        let bad_gap = JumpPath::new(vec![0.03], vec![1.0, e.exp()], 1.0).unwrap();
        assert!(!is_in_d_epsilon(&bad_gap, e, &grid, 1e-9));
        let good = JumpPath::new(vec![0.05], vec![1.0, e.exp()], 1.0).unwrap();
        assert!(is_in_d_epsilon(&good, e, &grid, 1e-9));
    }
}
