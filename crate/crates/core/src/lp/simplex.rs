use nalgebra::{DMatrix, DVector};

use super::{dot, verify_ray, LinearProgram, LpBackend, LpError, LpSolution, LpStatus, Relation, Sense, SolverOptions};

/// Dense two-phase tableau simplex.
///
/// Pricing is Dantzig's most-negative reduced cost. After `lex_after`
/// consecutive degenerate pivots the ratio test switches to a lexicographic
/// rule until the objective moves again. The final basis is re-solved with
/// an LU factorization of the original columns before primal values and
/// multipliers are read.
#[derive(Debug, Clone, Default)]
pub struct DenseSimplex {
    pub options: SolverOptions,
}

impl DenseSimplex {
    pub fn new(options: SolverOptions) -> Self {
        Self { options }
    }

    pub fn with_tol(tol: f64) -> Self {
        Self { options: SolverOptions { tol, ..SolverOptions::default() } }
    }
}

impl LpBackend for DenseSimplex {
    fn name(&self) -> &str {
        "dense-simplex"
    }

    fn tolerance(&self) -> f64 {
        self.options.tol
    }

    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        solve(lp, &self.options)
    }
}

/// How an original variable maps to nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + z`.
    Shift { col: usize, lo: f64 },
    /// `x = hi - z`.
    Reflect { col: usize, hi: f64 },
    /// `x = z⁺ - z⁻`.
    Split { pos: usize, neg: usize },
}

impl VarMap {
    fn value(&self, z: &[f64]) -> f64 {
        match *self {
            VarMap::Shift { col, lo } => lo + z[col],
            VarMap::Reflect { col, hi } => hi - z[col],
            VarMap::Split { pos, neg } => z[pos] - z[neg],
        }
    }

    fn direction(&self, dz: &[f64]) -> f64 {
        match *self {
            VarMap::Shift { col, .. } => dz[col],
            VarMap::Reflect { col, .. } => -dz[col],
            VarMap::Split { pos, neg } => dz[pos] - dz[neg],
        }
    }
}

/// `min c·z  s.t.  A z = b, z ≥ 0` with `b ≥ 0` and a unit starting basis.
struct StandardForm {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    maps: Vec<VarMap>,
    /// Sign applied to each original row to make its rhs nonnegative.
    row_sign: Vec<f64>,
    basis: Vec<usize>,
    artificial: Vec<bool>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut maps = Vec::with_capacity(n);
        let mut struct_cols = 0usize;
        let mut ub_rows: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            let (lo, hi) = (lp.lower[j], lp.upper[j]);
            let map = if lo.is_finite() {
                if hi.is_finite() {
                    ub_rows.push((struct_cols, hi - lo));
                }
                VarMap::Shift { col: struct_cols, lo }
            } else if hi.is_finite() {
                VarMap::Reflect { col: struct_cols, hi }
            } else {
                struct_cols += 1;
                VarMap::Split { pos: struct_cols - 1, neg: struct_cols }
            };
            struct_cols += 1;
            maps.push(map);
        }
        let m_orig = lp.num_constraints();
        let rows = m_orig + ub_rows.len();

        // Row data over structural columns plus a relation per row.
        let mut dense: Vec<Vec<f64>> = Vec::with_capacity(rows);
        let mut rel: Vec<Relation> = Vec::with_capacity(rows);
        let mut b = Vec::with_capacity(rows);
        for con in &lp.constraints {
            let mut row = vec![0.0; struct_cols];
            let mut rhs = con.rhs;
            for (j, &a) in con.coefficients.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match maps[j] {
                    VarMap::Shift { col, lo } => {
                        row[col] += a;
                        rhs -= a * lo;
                    }
                    VarMap::Reflect { col, hi } => {
                        row[col] -= a;
                        rhs -= a * hi;
                    }
                    VarMap::Split { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            dense.push(row);
            rel.push(con.relation);
            b.push(rhs);
        }
        for &(col, width) in &ub_rows {
            let mut row = vec![0.0; struct_cols];
            row[col] = 1.0;
            dense.push(row);
            rel.push(Relation::Le);
            b.push(width);
        }

        let slack_count = rel.iter().filter(|r| **r != Relation::Eq).count();
        let mut row_sign = vec![1.0; rows];
        let mut slack_of_row: Vec<Option<(usize, f64)>> = vec![None; rows];
        let mut next = struct_cols;
        for i in 0..rows {
            let coef = match rel[i] {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => continue,
            };
            slack_of_row[i] = Some((next, coef));
            next += 1;
        }
        debug_assert_eq!(next, struct_cols + slack_count);
        for i in 0..rows {
            if b[i] < 0.0 {
                row_sign[i] = -1.0;
            }
        }
        let mut basis = vec![usize::MAX; rows];
        let mut art_count = 0;
        for i in 0..rows {
            match slack_of_row[i] {
                Some((col, coef)) if coef * row_sign[i] > 0.0 => basis[i] = col,
                _ => {
                    basis[i] = next + art_count;
                    art_count += 1;
                }
            }
        }
        let cols = next + art_count;
        let mut a = vec![0.0; rows * cols];
        for i in 0..rows {
            let s = row_sign[i];
            let base = i * cols;
            for (j, v) in dense[i].iter().enumerate() {
                a[base + j] = s * v;
            }
            if let Some((col, coef)) = slack_of_row[i] {
                a[base + col] = s * coef;
            }
            if basis[i] >= next {
                a[base + basis[i]] = 1.0;
            }
            b[i] *= s;
        }
        let mut c = vec![0.0; cols];
        for (j, map) in maps.iter().enumerate() {
            let cj = sign * lp.objective[j];
            match *map {
                VarMap::Shift { col, .. } => c[col] = cj,
                VarMap::Reflect { col, .. } => c[col] = -cj,
                VarMap::Split { pos, neg } => {
                    c[pos] = cj;
                    c[neg] = -cj;
                }
            }
        }
        let mut artificial = vec![false; cols];
        for flag in artificial.iter_mut().skip(next) {
            *flag = true;
        }
        row_sign.truncate(m_orig);
        Self { rows, cols, a, b, c, maps, row_sign, basis, artificial }
    }
}

struct Tableau<'a> {
    sf: &'a StandardForm,
    /// `rows × (cols + 1)`, last column is the basic solution.
    t: Vec<f64>,
    /// Reduced costs, last entry is minus the objective.
    d: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    degenerate_run: usize,
    lexicographic: bool,
    /// Set when the last unbounded column had entries in `(0, pivot_tol]`
    /// that were treated as zero.
    tiny_ray: bool,
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

impl<'a> Tableau<'a> {
    fn new(sf: &'a StandardForm) -> Self {
        let w = sf.cols + 1;
        let mut t = vec![0.0; sf.rows * w];
        for i in 0..sf.rows {
            t[i * w..i * w + sf.cols].copy_from_slice(&sf.a[i * sf.cols..(i + 1) * sf.cols]);
            t[i * w + sf.cols] = sf.b[i];
        }
        Self { sf, t, d: vec![0.0; w], basis: sf.basis.clone(), iterations: 0, degenerate_run: 0, lexicographic: false, tiny_ray: false }
    }

    fn width(&self) -> usize {
        self.sf.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.sf.cols)
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.width();
        self.d.iter_mut().for_each(|v| *v = 0.0);
        self.d[..self.sf.cols].copy_from_slice(cost);
        for i in 0..self.sf.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.d[j] -= cb * self.t[i * w + j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let w = self.width();
        let p = self.t[r * w + s];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + s] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[s];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[s] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        let f = self.d[s];
        if f != 0.0 {
            for (x, y) in self.d.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
            self.d[s] = 0.0;
        }
        self.basis[r] = s;
        self.iterations += 1;
    }

    fn entering(&self, opts: &SolverOptions) -> Option<usize> {
        (0..self.sf.cols)
            .filter(|&j| !self.sf.artificial[j] && self.d[j] < -opts.tol)
            .min_by(|&a, &b| self.d[a].total_cmp(&self.d[b]).then(a.cmp(&b)))
    }

    /// Ratio test. Normally two-pass: the first pass finds the largest step
    /// keeping every basic variable above `-tol`, the second picks the
    /// largest pivot among rows blocking within that step. During a long
    /// degenerate run ties at the exact minimum ratio are broken
    /// lexicographically on the rows of `B⁻¹`, which rules out cycling.
    fn leaving(&mut self, s: usize, opts: &SolverOptions) -> Result<Option<usize>, LpError> {
        let mut step = f64::INFINITY;
        let mut exact = f64::INFINITY;
        let mut tiny = false;
        for i in 0..self.sf.rows {
            let a = self.at(i, s);
            if a <= opts.pivot_tol {
                tiny |= a > 1e-13;
                continue;
            }
            let rhs = self.rhs(i).max(0.0);
            step = step.min((rhs + opts.tol) / a);
            exact = exact.min(rhs / a);
        }
        if !step.is_finite() {
            self.tiny_ray = tiny;
            return Ok(None);
        }
        let candidates = (0..self.sf.rows).filter(|&i| self.at(i, s) > opts.pivot_tol);
        if self.lexicographic {
            let cutoff = exact + 1e-12 * (1.0 + exact);
            let ties: Vec<usize> = candidates.filter(|&i| self.rhs(i).max(0.0) / self.at(i, s) <= cutoff).collect();
            return Ok(ties.into_iter().reduce(|best, i| if self.lex_less(i, best, s) { i } else { best }));
        }
        Ok(candidates
            .filter(|&i| self.rhs(i).max(0.0) / self.at(i, s) <= step)
            .reduce(|best, i| {
                let (a, b) = (self.at(i, s), self.at(best, s));
                if a > b || (a == b && self.basis[i] < self.basis[best]) {
                    i
                } else {
                    best
                }
            }))
    }

    /// Compares rows `i` and `k` of `B⁻¹`, each divided by its entry in
    /// column `s`. The starting basis is a unit matrix, so `B⁻¹` sits in the
    /// tableau columns of the starting basic variables.
    fn lex_less(&self, i: usize, k: usize, s: usize) -> bool {
        let (ai, ak) = (self.at(i, s), self.at(k, s));
        for &col in &self.sf.basis {
            let (u, v) = (self.at(i, col) / ai, self.at(k, col) / ak);
            if (u - v).abs() > 1e-11 * (1.0 + u.abs().max(v.abs())) {
                return u < v;
            }
        }
        i < k
    }

    fn run(&mut self, opts: &SolverOptions) -> Result<Outcome, LpError> {
        loop {
            if self.iterations >= opts.max_iterations {
                return Err(LpError::IterationLimit(opts.max_iterations));
            }
            let Some(s) = self.entering(opts) else {
                return Ok(Outcome::Optimal);
            };
            let Some(r) = self.leaving(s, opts)? else {
                return Ok(Outcome::Unbounded(s));
            };
            if self.rhs(r) <= opts.tol {
                self.degenerate_run += 1;
                self.lexicographic = self.degenerate_run > opts.lex_after;
            } else {
                self.degenerate_run = 0;
                self.lexicographic = false;
            }
            self.pivot(r, s);
        }
    }

    fn objective(&self) -> f64 {
        -self.d[self.sf.cols]
    }

    /// Removes artificial columns from the basis where possible. Rows whose
    /// artificial cannot leave are redundant and keep it at level zero.
    fn drive_out_artificials(&mut self, opts: &SolverOptions) {
        for r in 0..self.sf.rows {
            if !self.sf.artificial[self.basis[r]] {
                continue;
            }
            let s = (0..self.sf.cols)
                .filter(|&j| !self.sf.artificial[j])
                .max_by(|&a, &b| self.at(r, a).abs().total_cmp(&self.at(r, b).abs()).then(b.cmp(&a)));
            if let Some(s) = s {
                if self.at(r, s).abs() > opts.pivot_tol {
                    self.pivot(r, s);
                }
            }
        }
    }
}

fn scale_of(values: &[f64]) -> f64 {
    1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub(crate) fn solve(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let nonzeros = lp.nonzeros();
    if nonzeros > opts.max_nonzeros {
        return Err(LpError::SizeExceeded { nonzeros, limit: opts.max_nonzeros });
    }
    let sf = StandardForm::build(lp);
    let mut tab = Tableau::new(&sf);

    let phase1: Vec<f64> = sf.artificial.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
    if sf.artificial.iter().any(|&a| a) {
        tab.set_costs(&phase1);
        // Phase 1 is bounded below by zero; an "unbounded" outcome cannot occur.
        tab.run(opts)?;
        let infeasibility = tab.objective();
        if infeasibility > opts.tol * scale_of(&sf.b) {
            let y_std: Vec<f64> = (0..sf.rows).map(|i| phase1[sf.basis[i]] - tab.d[sf.basis[i]]).collect();
            let farkas = (0..lp.num_constraints()).map(|i| -sf.row_sign[i] * y_std[i]).collect();
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
                duals: Vec::new(),
                reduced_costs: Vec::new(),
                iterations: tab.iterations,
                ray: None,
                farkas: Some(farkas),
            });
        }
        tab.drive_out_artificials(opts);
    }

    tab.set_costs(&sf.c);
    match tab.run(opts)? {
        Outcome::Unbounded(s) => {
            let mut dz = vec![0.0; sf.cols];
            dz[s] = 1.0;
            for i in 0..sf.rows {
                dz[tab.basis[i]] = -tab.at(i, s);
            }
            let ray: Vec<f64> = sf.maps.iter().map(|m| m.direction(&dz)).collect();
            // Entries below the pivot tolerance are round-off only if the
            // direction checks out on the original program.
            if tab.tiny_ray && !verify_ray(lp, &ray, opts.tol * scale_of(&ray)) {
                return Err(LpError::NumericalBreakdown(format!(
                    "entering column {s} has only pivots below {}",
                    opts.pivot_tol
                )));
            }
            let objective = if lp.sense == Sense::Maximize { f64::INFINITY } else { f64::NEG_INFINITY };
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: Vec::new(),
                objective,
                duals: Vec::new(),
                reduced_costs: Vec::new(),
                iterations: tab.iterations,
                ray: Some(ray),
                farkas: None,
            })
        }
        Outcome::Optimal => Ok(extract(lp, &sf, &tab)),
    }
}

/// Reads the optimal basis, re-solving it from the original columns.
fn extract(lp: &LinearProgram, sf: &StandardForm, tab: &Tableau) -> LpSolution {
    let m = sf.rows;
    let mut z = vec![0.0; sf.cols];
    let mut y_std = vec![0.0; m];
    let refined = (m > 0)
        .then(|| {
            let bmat = DMatrix::from_fn(m, m, |i, k| sf.a[i * sf.cols + tab.basis[k]]);
            let lu = bmat.clone().lu();
            let xb = lu.solve(&DVector::from_column_slice(&sf.b))?;
            let cb = DVector::from_fn(m, |k, _| sf.c[tab.basis[k]]);
            let y = bmat.transpose().lu().solve(&cb)?;
            Some((xb, y))
        })
        .flatten();
    match refined {
        Some((xb, y)) => {
            for k in 0..m {
                z[tab.basis[k]] = xb[k].max(0.0);
                y_std[k] = y[k];
            }
        }
        None => {
            for k in 0..m {
                z[tab.basis[k]] = tab.rhs(k).max(0.0);
                // Unit starting columns carry B⁻¹: y_i = c_init_i - d_init_i.
                y_std[k] = sf.c[sf.basis[k]] - tab.d[sf.basis[k]];
            }
        }
    }
    let x: Vec<f64> = sf
        .maps
        .iter()
        .enumerate()
        .map(|(j, map)| map.value(&z).clamp(lp.lower[j], lp.upper[j]))
        .collect();
    let sense_sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let duals: Vec<f64> = (0..lp.num_constraints()).map(|i| sense_sign * sf.row_sign[i] * y_std[i]).collect();
    let reduced_costs = (0..lp.num_vars())
        .map(|j| {
            let ay: f64 = lp.constraints.iter().zip(&duals).map(|(c, y)| c.coefficients[j] * y).sum();
            lp.objective[j] - ay
        })
        .collect();
    LpSolution {
        status: LpStatus::Optimal,
        objective: dot(&lp.objective, &x),
        x,
        duals,
        reduced_costs,
        iterations: tab.iterations,
        ray: None,
        farkas: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{verify_certificates, verify_farkas, verify_ray};

    fn solve_default(lp: &LinearProgram) -> LpSolution {
        DenseSimplex::default().solve(lp).unwrap()
    }

    #[test]
    fn single_bound() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_constraint(vec![1.0], Relation::Le, 3.0);
        let s = solve_default(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![3.0]);
        assert_eq!(s.objective, 3.0);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
        assert!(verify_certificates(&lp, &s, 1e-9));
    }

    #[test]
    fn degenerate_vertex() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Le, 1.0);
        lp.add_constraint(vec![1.0, 0.0], Relation::Le, 1.0);
        lp.add_constraint(vec![0.0, 1.0], Relation::Le, 1.0);
        let s = solve_default(&lp);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!(verify_certificates(&lp, &s, 1e-9));
    }

    #[test]
    fn infeasible_with_certificate() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0]);
        lp.add_constraint(vec![1.0], Relation::Le, -1.0);
        let s = solve_default(&lp);
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(verify_farkas(&lp, s.farkas.as_ref().unwrap(), 1e-9));
    }

    #[test]
    fn unbounded_with_ray() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, -1.0]);
        lp.add_constraint(vec![1.0, -2.0], Relation::Le, 4.0);
        let s = solve_default(&lp);
        assert_eq!(s.status, LpStatus::Unbounded);
        assert!(verify_ray(&lp, s.ray.as_ref().unwrap(), 1e-9));
    }

    #[test]
    fn tiny_pivots_read_as_a_ray() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 0.0]);
        lp.add_constraint(vec![1e-13, 1.0], Relation::Le, 1.0);
        let s = solve_default(&lp);
        assert_eq!(s.status, LpStatus::Unbounded);
        assert!(verify_ray(&lp, s.ray.as_ref().unwrap(), 1e-9));
    }

    #[test]
    fn general_bounds_and_free_variables() {
        // min x + 2y, x free, -1 <= y <= 4, x + y >= 2, x - y <= 1, y <= 3
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        lp.set_bounds(1, -1.0, 4.0);
        lp.add_constraint(vec![1.0, 1.0], Relation::Ge, 2.0);
        lp.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
        let s = solve_default(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        // Vertex x = 1.5, y = 0.5.
        assert!((s.objective - 2.5).abs() < 1e-12, "{s:?}");
        assert!(verify_certificates(&lp, &s, 1e-9));
        assert!((s.duals[0] - 1.5).abs() < 1e-12);
        assert!((s.duals[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn upper_bounded_only_and_equality() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.set_bounds(0, f64::NEG_INFINITY, 2.0);
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 5.0);
        lp.add_constraint(vec![0.0, 1.0], Relation::Le, 10.0);
        let s = solve_default(&lp);
        assert!((s.objective - 5.0).abs() < 1e-12);
        assert!(verify_certificates(&lp, &s, 1e-9));
    }

    #[test]
    fn perturbed_primal_fails_certificates() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Le, 4.0);
        lp.add_constraint(vec![1.0, 3.0], Relation::Le, 6.0);
        let mut s = solve_default(&lp);
        assert!(verify_certificates(&lp, &s, 1e-9));
        s.x[0] += 1e-3;
        assert!(!verify_certificates(&lp, &s, 1e-9));
    }

    #[test]
    fn no_constraints() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, -1.0]);
        lp.set_bounds(1, 0.0, 2.0);
        let s = solve_default(&lp);
        assert_eq!(s.objective, -2.0);
        assert!(verify_certificates(&lp, &s, 1e-9));
    }

    #[test]
    fn iteration_limit_and_size() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, 2.0], Relation::Le, 4.0);
        lp.add_constraint(vec![2.0, 1.0], Relation::Le, 4.0);
        let opts = SolverOptions { max_iterations: 1, ..SolverOptions::default() };
        assert_eq!(DenseSimplex::new(opts).solve(&lp), Err(LpError::IterationLimit(1)));
        let opts = SolverOptions { max_nonzeros: 3, ..SolverOptions::default() };
        assert!(matches!(DenseSimplex::new(opts).solve(&lp), Err(LpError::SizeExceeded { .. })));
    }
}
