//! Simplex against brute-force vertex enumeration on small boxed programs.

use proptest::prelude::*;
use superhedge::lp::{verify_certificates, verify_farkas, DenseSimplex, LinearProgram, LpBackend, LpStatus, Relation, Sense};

const BOX: f64 = 10.0;

/// Every row as `a·x ≤ b`, box included.
fn halfspaces(lp: &LinearProgram) -> Vec<(Vec<f64>, f64)> {
    let n = lp.num_vars();
    let mut out = Vec::new();
    for c in &lp.constraints {
        let neg: Vec<f64> = c.coefficients.iter().map(|a| -a).collect();
        match c.relation {
            Relation::Le => out.push((c.coefficients.clone(), c.rhs)),
            Relation::Ge => out.push((neg, -c.rhs)),
            Relation::Eq => {
                out.push((c.coefficients.clone(), c.rhs));
                out.push((neg, -c.rhs));
            }
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        out.push((e.clone(), lp.upper[j]));
        e[j] = -1.0;
        out.push((e, -lp.lower[j]));
    }
    out
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (0..m)
        .flat_map(|first| {
            subsets(m - first - 1, k - 1)
                .into_iter()
                .map(move |rest| std::iter::once(first).chain(rest.into_iter().map(|r| r + first + 1)).collect())
        })
        .collect()
}

/// Best vertex of the bounded polytope, or `None` when it is empty.
fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let hs = halfspaces(lp);
    let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let mut best: Option<f64> = None;
    for set in subsets(hs.len(), n) {
        let a = set.iter().map(|&i| hs[i].0.clone()).collect();
        let b = set.iter().map(|&i| hs[i].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        let feasible = hs.iter().all(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-7);
        if feasible {
            let v = sign * lp.objective_value(&x);
            best = Some(best.map_or(v, |w: f64| w.min(v)));
        }
    }
    best.map(|v| sign * v)
}

fn coef() -> impl Strategy<Value = f64> {
    (-4i32..=4).prop_map(f64::from)
}

prop_compose! {
    fn boxed_lp()(n in 1usize..=3, m in 1usize..=4)(
        objective in prop::collection::vec(coef(), n),
        rows in prop::collection::vec((prop::collection::vec(coef(), n), 0u8..3, -6i32..=6), m),
        maximize in any::<bool>(),
        free in prop::collection::vec(any::<bool>(), n),
    ) -> LinearProgram {
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        let mut lp = LinearProgram::new(sense, objective);
        for (j, &f) in free.iter().enumerate() {
            lp.set_bounds(j, if f { -BOX } else { 0.0 }, BOX);
        }
        for (a, r, b) in rows {
            let rel = [Relation::Le, Relation::Ge, Relation::Eq][r as usize];
            lp.add_constraint(a, rel, f64::from(b));
        }
        lp
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in boxed_lp()) {
        let solver = DenseSimplex::default();
        let sol = solver.solve(&lp).unwrap();
        match vertex_oracle(&lp) {
            Some(v) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - v).abs() <= 1e-7 * (1.0 + v.abs()), "{} vs {}", sol.objective, v);
                prop_assert!(verify_certificates(&lp, &sol, 1e-7));
            }
            None => {
                prop_assert_eq!(sol.status, LpStatus::Infeasible);
                prop_assert!(verify_farkas(&lp, sol.farkas.as_deref().unwrap(), 1e-7));
            }
        }
    }

    #[test]
    fn mechanical_dual_has_the_same_value(lp in boxed_lp()) {
        let solver = DenseSimplex::default();
        let primal = solver.solve(&lp).unwrap();
        prop_assume!(primal.status == LpStatus::Optimal);
        let dual = solver.solve(&lp.dual_program()).unwrap();
        prop_assert_eq!(dual.status, LpStatus::Optimal);
        prop_assert!((dual.objective - primal.objective).abs() <= 1e-7 * (1.0 + primal.objective.abs()));
    }
}

#[test]
fn unbounded_direction_is_reported() {
    let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
    lp.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
    let sol = DenseSimplex::default().solve(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
    assert!(superhedge::lp::verify_ray(&lp, sol.ray.as_deref().unwrap(), 1e-9));
}
