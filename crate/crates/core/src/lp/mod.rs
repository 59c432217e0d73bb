//! Dense linear programming.
//!
//! [`LinearProgram`] holds a problem in natural form (general bounds, mixed
//! relations, either sense). [`DenseSimplex`] is the built-in solver; other
//! solvers can be plugged in through [`LpBackend`].
//!
//! Dual multipliers are reported as sensitivities `∂ objective / ∂ rhs` in
//! the problem's own sense, so for a maximization `max x s.t. x ≤ 3` the
//! multiplier of the constraint is `+1`.
//!
//! ```
//! use superhedge::lp::{DenseSimplex, LinearProgram, LpBackend, LpStatus, Relation, Sense};
//!
//! let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
//! lp.add_constraint(vec![1.0, 1.0], Relation::Le, 1.0);
//! let sol = DenseSimplex::default().solve(&lp).unwrap();
//! assert_eq!(sol.status, LpStatus::Optimal);
//! assert!((sol.objective - 1.0).abs() < 1e-12);
//! ```

mod certificates;
mod dual;
mod format;
mod simplex;

pub use certificates::{certificate_report, verify_certificates, verify_farkas, verify_ray, CertificateReport};
pub use simplex::DenseSimplex;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidProgram(String),
    #[error("problem has {nonzeros} nonzero coefficients, above the limit {limit}")]
    SizeExceeded { nonzeros: usize, limit: usize },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// Variables default to `[0, ∞)`.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Appends a variable and returns its index.
    pub fn add_variable(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        for c in &mut self.constraints {
            c.coefficients.push(0.0);
        }
        self.objective.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_constraint(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) -> usize {
        assert_eq!(coefficients.len(), self.num_vars(), "constraint width");
        self.constraints.push(Constraint { coefficients, relation, rhs });
        self.constraints.len() - 1
    }

    /// Adds a row given as `(variable, coefficient)` pairs; repeated
    /// variables accumulate.
    pub fn add_sparse_constraint(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) -> usize {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            row[j] += a;
        }
        self.add_constraint(row, relation, rhs)
    }

    pub fn nonzeros(&self) -> usize {
        self.constraints
            .iter()
            .map(|c| c.coefficients.iter().filter(|a| **a != 0.0).count())
            .sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Row activities `a_i · x`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|c| dot(&c.coefficients, x)).collect()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let bad = |m: String| Err(LpError::InvalidProgram(m));
        if self.lower.len() != n || self.upper.len() != n {
            return bad("bound vectors do not match the objective".into());
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return bad("objective has non-finite entries".into());
        }
        for (j, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || *l == f64::INFINITY || *u == f64::NEG_INFINITY || l > u {
                return bad(format!("variable {j} has bounds [{l}, {u}]"));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coefficients.len() != n {
                return bad(format!("row {i} has {} coefficients, expected {n}", c.coefficients.len()));
            }
            if !c.rhs.is_finite() || c.coefficients.iter().any(|a| !a.is_finite()) {
                return bad(format!("row {i} has non-finite data"));
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless optimal.
    pub x: Vec<f64>,
    /// Objective value; `NaN` when infeasible, `±∞` when unbounded.
    pub objective: f64,
    /// `∂ objective / ∂ rhs_i` per constraint; empty unless optimal.
    pub duals: Vec<f64>,
    /// `c_j - Σ_i a_ij y_i`; empty unless optimal.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    /// Improving direction when unbounded.
    pub ray: Option<Vec<f64>>,
    /// Row multipliers proving infeasibility (see [`verify_farkas`]).
    pub farkas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots tolerated before the ratio test turns
    /// lexicographic.
    pub lex_after: usize,
    pub max_iterations: usize,
    pub max_nonzeros: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            pivot_tol: 1e-11,
            lex_after: 50,
            max_iterations: 200_000,
            max_nonzeros: 50_000,
        }
    }
}

/// Anything that solves a [`LinearProgram`] to an [`LpSolution`] with the
/// multiplier conventions documented on this module.
pub trait LpBackend: Send + Sync {
    fn name(&self) -> &str;
    fn tolerance(&self) -> f64;
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError>;
}
