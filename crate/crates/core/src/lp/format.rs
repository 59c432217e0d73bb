use std::fmt::Write;

use super::{LinearProgram, Relation, Sense};

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.15}")
    }
}

fn linear_expr(coefficients: &[f64]) -> String {
    let terms: Vec<String> = coefficients
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(j, a)| {
            let sign = if *a < 0.0 { "-" } else { "+" };
            format!("{sign} {} x{j}", num(a.abs()))
        })
        .collect();
    if terms.is_empty() {
        "0 x0".into()
    } else {
        terms.join(" ")
    }
}

impl LinearProgram {
    /// CPLEX LP-format text for cross-checking with external solvers.
    ///
    /// Columns are named `x0, x1, …` in variable order and rows `c0, c1, …`
    /// in constraint order; every number is printed with 15 decimals and
    /// every bound is written explicitly.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ {} columns x0..x{}, {} rows c0..c{}", self.num_vars(), self.num_vars().saturating_sub(1), self.num_constraints(), self.num_constraints().saturating_sub(1));
        let _ = writeln!(out, "{}", if self.sense == Sense::Maximize { "Maximize" } else { "Minimize" });
        let _ = writeln!(out, " obj: {}", linear_expr(&self.objective));
        let _ = writeln!(out, "Subject To");
        for (i, c) in self.constraints.iter().enumerate() {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, " c{i}: {} {rel} {}", linear_expr(&c.coefficients), num(c.rhs));
        }
        let _ = writeln!(out, "Bounds");
        for j in 0..self.num_vars() {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l == f64::NEG_INFINITY && u == f64::INFINITY {
                let _ = writeln!(out, " x{j} free");
            } else {
                let _ = writeln!(out, " {} <= x{j} <= {}", num(l), num(u));
            }
        }
        let _ = writeln!(out, "End");
        out
    }
}
