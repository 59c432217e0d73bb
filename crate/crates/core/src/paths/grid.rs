use serde::{Deserialize, Serialize};

use super::PathError;

pub const DEFAULT_I_MAX: usize = 64;

/// Truncated grid of admissible inter-jump gaps for the `k`-th jump:
/// `{i ε / 2^k : 1 ≤ i ≤ i_max} ∪ {ε / (i 2^k) : 1 ≤ i ≤ i_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub epsilon: f64,
    pub k: u32,
    pub i_max: usize,
}

impl GridSpec {
    pub fn new(epsilon: f64, k: u32, i_max: usize) -> Result<Self, PathError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(PathError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if k == 0 || i_max == 0 {
            return Err(PathError::InvalidParameter("k and i_max must be positive".into()));
        }
        Ok(Self { epsilon, k, i_max })
    }

    pub fn elements(&self) -> Vec<f64> {
        grid_elements(self)
    }

    pub fn min_element(&self) -> f64 {
        self.epsilon / (self.i_max as f64 * self.scale())
    }

    /// Membership up to an absolute tolerance.
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.elements().iter().any(|e| (e - x).abs() <= tol)
    }

    pub fn snap_below(&self, delta_t: f64) -> Result<f64, PathError> {
        snap_below(delta_t, self)
    }

    fn scale(&self) -> f64 {
        2f64.powi(self.k as i32)
    }
}

pub fn grid_elements(spec: &GridSpec) -> Vec<f64> {
    let scale = spec.scale();
    let mut out: Vec<f64> = (1..=spec.i_max)
        .flat_map(|i| {
            let i = i as f64;
            [i * spec.epsilon / scale, spec.epsilon / (i * scale)]
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Largest represented grid element strictly below `delta_t`.
pub fn snap_below(delta_t: f64, spec: &GridSpec) -> Result<f64, PathError> {
    let elements = grid_elements(spec);
    let idx = elements.partition_point(|&e| e < delta_t);
    if idx == 0 {
        return Err(PathError::NoGridElementBelow { delta_t, min_element: elements[0] });
    }
    Ok(elements[idx - 1])
}

/// Per-depth family of gap grids sharing one `ε`.
///
/// Depth `k` uses `per_depth[k - 1]` when present and `default_i_max`
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFamily {
    pub default_i_max: usize,
    #[serde(default)]
    pub per_depth: Vec<usize>,
}

impl Default for GridFamily {
    fn default() -> Self {
        Self::uniform(DEFAULT_I_MAX)
    }
}

impl GridFamily {
    pub fn uniform(i_max: usize) -> Self {
        Self { default_i_max: i_max, per_depth: Vec::new() }
    }

    pub fn i_max(&self, k: u32) -> usize {
        self.per_depth
            .get(k as usize - 1)
            .copied()
            .unwrap_or(self.default_i_max)
    }

    pub fn spec(&self, epsilon: f64, k: u32) -> Result<GridSpec, PathError> {
        GridSpec::new(epsilon, k, self.i_max(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_truncated_grid() {
        let g = GridSpec::new(0.1, 2, 4).unwrap();
        let expected = [0.1 / 16.0, 0.1 / 12.0, 0.0125, 0.025, 0.05, 0.075, 0.1];
        let got = g.elements();
        assert_eq!(got.len(), expected.len());
        for (a, b) in got.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn membership() {
        let g = GridSpec::new(0.1, 1, DEFAULT_I_MAX).unwrap();
        assert!(g.contains(0.05, 1e-15));
        assert!(!g.contains(0.03, 1e-12));
    }

    #[test]
    fn snapping() {
        let g = GridSpec::new(0.1, 1, 8).unwrap();
        assert_eq!(g.snap_below(0.06).unwrap(), 0.05);
        assert_eq!(g.snap_below(0.05 + 1e-12).unwrap(), 0.05);
        assert!(g.snap_below(0.05).unwrap() < 0.05);
        assert_eq!(
            g.snap_below(0.004),
            Err(PathError::NoGridElementBelow { delta_t: 0.004, min_element: 0.00625 })
        );
    }

    #[test]
    fn family_overrides() {
        let f = GridFamily { default_i_max: 3, per_depth: vec![5] };
        assert_eq!(f.i_max(1), 5);
        assert_eq!(f.i_max(2), 3);
    }
}
