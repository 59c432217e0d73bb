use super::{LinearProgram, Relation, Sense};

impl LinearProgram {
    /// The Lagrangian dual, built mechanically from the problem data and
    /// scaled so that its optimal value equals this problem's optimal value.
    ///
    /// Variable order: one multiplier `y_i` per constraint, then one `v_j ≥ 0`
    /// per finite lower bound, then one `w_j ≥ 0` per finite upper bound (each
    /// in variable order). For a minimization the `y_i` are the sensitivities
    /// `∂ objective / ∂ rhs_i`; for a maximization they are their negatives.
    pub fn dual_program(&self) -> LinearProgram {
        let flip = if self.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let m = self.num_constraints();
        let n = self.num_vars();
        let lower_idx: Vec<usize> = (0..n).filter(|&j| self.lower[j].is_finite()).collect();
        let upper_idx: Vec<usize> = (0..n).filter(|&j| self.upper[j].is_finite()).collect();

        // Dual of min (flip·c)ᵀx: max bᵀy + lᵀv - uᵀw.
        let mut objective: Vec<f64> = self.constraints.iter().map(|c| c.rhs).collect();
        objective.extend(lower_idx.iter().map(|&j| self.lower[j]));
        objective.extend(upper_idx.iter().map(|&j| -self.upper[j]));
        let width = objective.len();
        let mut lower = vec![0.0; width];
        let mut upper = vec![f64::INFINITY; width];
        for (i, c) in self.constraints.iter().enumerate() {
            match c.relation {
                Relation::Ge => {}
                Relation::Le => {
                    lower[i] = f64::NEG_INFINITY;
                    upper[i] = 0.0;
                }
                Relation::Eq => lower[i] = f64::NEG_INFINITY,
            }
        }
        let mut dual = LinearProgram { sense: Sense::Maximize, objective, constraints: Vec::new(), lower, upper };
        for j in 0..n {
            let mut row = vec![0.0; width];
            for (i, c) in self.constraints.iter().enumerate() {
                row[i] = c.coefficients[j];
            }
            if let Ok(k) = lower_idx.binary_search(&j) {
                row[m + k] = 1.0;
            }
            if let Ok(k) = upper_idx.binary_search(&j) {
                row[m + lower_idx.len() + k] = -1.0;
            }
            dual.add_constraint(row, Relation::Eq, flip * self.objective[j]);
        }
        if self.sense == Sense::Maximize {
            dual.sense = Sense::Minimize;
            dual.objective.iter_mut().for_each(|c| *c = -*c);
        }
        dual
    }
}

#[cfg(test)]
mod tests {
    use crate::lp::{DenseSimplex, LinearProgram, LpBackend, LpStatus, Relation, Sense};

    fn both(lp: &LinearProgram) -> (f64, f64) {
        let s = DenseSimplex::default();
        let p = s.solve(lp).unwrap();
        let d = s.solve(&lp.dual_program()).unwrap();
        assert_eq!(p.status, LpStatus::Optimal);
        assert_eq!(d.status, LpStatus::Optimal);
        (p.objective, d.objective)
    }

    #[test]
    fn dual_value_matches_for_both_senses() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Le, 4.0);
        lp.add_constraint(vec![1.0, 3.0], Relation::Le, 6.0);
        let (p, d) = both(&lp);
        assert!((p - 12.0).abs() < 1e-12 && (d - 12.0).abs() < 1e-12);

        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        lp.set_bounds(1, -1.0, 4.0);
        lp.add_constraint(vec![1.0, 1.0], Relation::Ge, 2.0);
        lp.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
        let (p, d) = both(&lp);
        assert!((p - 2.5).abs() < 1e-12 && (d - 2.5).abs() < 1e-12);
    }

    #[test]
    fn dual_multipliers_are_sensitivities() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        lp.add_constraint(vec![1.0, 1.0], Relation::Ge, 2.0);
        lp.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
        let s = DenseSimplex::default();
        let p = s.solve(&lp).unwrap();
        let d = s.solve(&lp.dual_program()).unwrap();
        for i in 0..2 {
            assert!((p.duals[i] - d.x[i]).abs() < 1e-12);
        }
    }
}
