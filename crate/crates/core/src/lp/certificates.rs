use serde::Serialize;

use super::{dot, LinearProgram, LpSolution, LpStatus, Relation, Sense};

/// Independently recomputed optimality residuals, each already divided by
/// its natural scale so that all of them compare against one tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub primal_residual: f64,
    pub bound_residual: f64,
    pub dual_sign_violation: f64,
    pub reduced_cost_violation: f64,
    pub complementarity: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal - dual| / (1 + |primal|)`.
    pub relative_gap: f64,
}

impl CertificateReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.primal_residual,
            self.bound_residual,
            self.dual_sign_violation,
            self.reduced_cost_violation,
            self.complementarity,
            self.relative_gap,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

/// Which side of its range a multiplier sign points to, in a minimization
/// frame: positive reduced cost pushes a variable to its lower bound.
fn orient(lp: &LinearProgram) -> f64 {
    if lp.sense == Sense::Maximize {
        -1.0
    } else {
        1.0
    }
}

/// Recomputes every optimality condition of `sol` from the problem data.
pub fn certificate_report(lp: &LinearProgram, sol: &LpSolution) -> CertificateReport {
    let x = &sol.x;
    let y = &sol.duals;
    let s = orient(lp);
    let cscale = 1.0 + lp.objective.iter().fold(0.0f64, |m, c| m.max(c.abs()));

    let mut primal_residual = 0.0f64;
    let mut dual_sign_violation = 0.0f64;
    let mut complementarity = 0.0f64;
    for (i, con) in lp.constraints.iter().enumerate() {
        let act = dot(&con.coefficients, x);
        let mag: f64 = con.coefficients.iter().zip(x).map(|(a, v)| (a * v).abs()).sum();
        let rscale = 1.0 + con.rhs.abs() + mag;
        let slack = con.rhs - act;
        let viol = match con.relation {
            Relation::Le => (-slack).max(0.0),
            Relation::Ge => slack.max(0.0),
            Relation::Eq => slack.abs(),
        };
        primal_residual = primal_residual.max(viol / rscale);
        // In a minimization frame, ≤ rows carry y ≤ 0 and ≥ rows y ≥ 0.
        let ys = s * y[i];
        let sign_viol = match con.relation {
            Relation::Le => ys.max(0.0),
            Relation::Ge => (-ys).max(0.0),
            Relation::Eq => 0.0,
        };
        dual_sign_violation = dual_sign_violation.max(sign_viol / cscale);
        if con.relation != Relation::Eq {
            complementarity = complementarity.max((y[i] * slack).abs() / (cscale * rscale));
        }
    }

    let mut bound_residual = 0.0f64;
    let mut reduced_cost_violation = 0.0f64;
    for j in 0..lp.num_vars() {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let xscale = 1.0 + x[j].abs();
        bound_residual = bound_residual.max((l - x[j]).max(0.0) / xscale).max((x[j] - u).max(0.0) / xscale);
        let ay: f64 = lp.constraints.iter().zip(y).map(|(c, yi)| c.coefficients[j] * yi).sum();
        let r = s * (lp.objective[j] - ay);
        // r > 0 needs a finite lower bound, r < 0 a finite upper bound.
        let viol = if r > 0.0 && !l.is_finite() || r < 0.0 && !u.is_finite() { r.abs() } else { 0.0 };
        reduced_cost_violation = reduced_cost_violation.max(viol / cscale);
        let dist = if r > 0.0 && l.is_finite() {
            x[j] - l
        } else if r < 0.0 && u.is_finite() {
            u - x[j]
        } else {
            0.0
        };
        complementarity = complementarity.max((r * dist).abs() / (cscale * xscale));
    }

    let primal_objective = lp.objective_value(x);
    let dual_objective = dual_objective(lp, y);
    CertificateReport {
        primal_residual,
        bound_residual,
        dual_sign_violation,
        reduced_cost_violation,
        complementarity,
        primal_objective,
        dual_objective,
        relative_gap: (primal_objective - dual_objective).abs() / (1.0 + primal_objective.abs()),
    }
}

/// `bᵀy + Σ_j r_j β_j` where `β_j` is the bound that the sign of the reduced
/// cost `r_j` selects; computed from `y` alone.
pub(crate) fn dual_objective(lp: &LinearProgram, y: &[f64]) -> f64 {
    let s = orient(lp);
    let mut value: f64 = lp.constraints.iter().zip(y).map(|(c, yi)| c.rhs * yi).sum();
    for j in 0..lp.num_vars() {
        let ay: f64 = lp.constraints.iter().zip(y).map(|(c, yi)| c.coefficients[j] * yi).sum();
        let r = lp.objective[j] - ay;
        let oriented = s * r;
        let bound = if oriented > 0.0 {
            lp.lower[j]
        } else if oriented < 0.0 {
            lp.upper[j]
        } else {
            0.0
        };
        if r != 0.0 && bound.is_finite() {
            value += r * bound;
        }
    }
    value
}

/// True iff `sol` is optimal and every recomputed residual is at most `tol`.
pub fn verify_certificates(lp: &LinearProgram, sol: &LpSolution, tol: f64) -> bool {
    sol.status == LpStatus::Optimal
        && sol.x.len() == lp.num_vars()
        && sol.duals.len() == lp.num_constraints()
        && certificate_report(lp, sol).passes(tol)
}

/// Checks that `y` proves infeasibility: signs match the relations
/// (`y ≥ 0` on `≤` rows, `y ≤ 0` on `≥` rows) and the aggregated row
/// `(yᵀA) x ≤ yᵀb` has no solution inside the variable bounds.
pub fn verify_farkas(lp: &LinearProgram, y: &[f64], tol: f64) -> bool {
    if y.len() != lp.num_constraints() {
        return false;
    }
    let signs_ok = lp.constraints.iter().zip(y).all(|(c, yi)| match c.relation {
        Relation::Le => *yi >= -tol,
        Relation::Ge => *yi <= tol,
        Relation::Eq => true,
    });
    if !signs_ok {
        return false;
    }
    let mut min_lhs = 0.0;
    for j in 0..lp.num_vars() {
        let g: f64 = lp.constraints.iter().zip(y).map(|(c, yi)| c.coefficients[j] * yi).sum();
        if g.abs() <= tol {
            continue;
        }
        let bound = if g > 0.0 { lp.lower[j] } else { lp.upper[j] };
        if !bound.is_finite() {
            return false;
        }
        min_lhs += g * bound;
    }
    let rhs: f64 = lp.constraints.iter().zip(y).map(|(c, yi)| c.rhs * yi).sum();
    min_lhs > rhs + tol
}

/// Checks that `ray` is a recession direction of the feasible set that
/// strictly improves the objective.
pub fn verify_ray(lp: &LinearProgram, ray: &[f64], tol: f64) -> bool {
    if ray.len() != lp.num_vars() {
        return false;
    }
    let rows_ok = lp.constraints.iter().all(|c| {
        let a = dot(&c.coefficients, ray);
        match c.relation {
            Relation::Le => a <= tol,
            Relation::Ge => a >= -tol,
            Relation::Eq => a.abs() <= tol,
        }
    });
    let bounds_ok = (0..lp.num_vars()).all(|j| {
        (ray[j] >= -tol || !lp.lower[j].is_finite()) && (ray[j] <= tol || !lp.upper[j].is_finite())
    });
    let gain = orient(lp) * lp.objective_value(ray);
    rows_ok && bounds_ok && gain < -tol
}
