//! Linear-program representation and a deterministic solver front-end.
//!
//! The solver is backed by a sparse revised-simplex implementation; every
//! solution is re-certified here from scratch (objective recomputation and
//! constraint residuals) so callers never depend on solver internals.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// Feasibility tolerance: a certified solution violates no constraint by more.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Optimality tolerance used when comparing objectives.
pub const OPTIMALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Lower-bound kind for a variable; upper bounds are never needed here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Ge,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse (variable index, coefficient) pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub bounds: Vec<VarBound>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            bounds: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable, returning its index.
    pub fn add_var(&mut self, objective: f64, bound: VarBound) -> usize {
        self.objective.push(objective);
        self.bounds.push(bound);
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let nv = self.num_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite objective coefficient".into()));
        }
        for row in &self.constraints {
            if !row.rhs.is_finite() {
                return Err(Error::DimensionMismatch("non-finite right-hand side".into()));
            }
            for &(i, c) in &row.coeffs {
                if i >= nv {
                    return Err(Error::IndexOutOfRange { index: i, limit: nv });
                }
                if !c.is_finite() {
                    return Err(Error::DimensionMismatch("non-finite constraint coefficient".into()));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump, one constraint per line, for diffing and external
    /// validation.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let verb = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        write!(out, "{verb}").unwrap();
        for (i, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                write!(out, " {c:+}*x{i}").unwrap();
            }
        }
        out.push('\n');
        for row in &self.constraints {
            let mut first = true;
            for &(i, c) in &row.coeffs {
                if first {
                    write!(out, "{c:+}*x{i}").unwrap();
                    first = false;
                } else {
                    write!(out, " {c:+}*x{i}").unwrap();
                }
            }
            let rel = match row.relation {
                Relation::Eq => "=",
                Relation::Ge => ">=",
                Relation::Le => "<=",
            };
            writeln!(out, " {} {}", rel, row.rhs).unwrap();
        }
        for (i, b) in self.bounds.iter().enumerate() {
            if *b == VarBound::Free {
                writeln!(out, "x{i} free").unwrap();
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    pub primal_values: Vec<f64>,
    pub max_constraint_residual: f64,
}

/// Residuals recomputed from scratch against the original program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub objective_delta: f64,
}

fn row_residual(row: &Constraint, x: &[f64]) -> f64 {
    let lhs: f64 = row.coeffs.iter().map(|&(i, c)| c * x[i]).sum();
    match row.relation {
        Relation::Eq => (lhs - row.rhs).abs(),
        Relation::Ge => (row.rhs - lhs).max(0.0),
        Relation::Le => (lhs - row.rhs).max(0.0),
    }
}

/// Recomputes the objective and every constraint residual of `sol` against
/// `lp`, independent of how the solution was produced.
pub fn lp_dual_gap_check(lp: &LinearProgram, sol: &LpSolution) -> ResidualReport {
    let x = &sol.primal_values;
    let objective: f64 = lp
        .objective
        .iter()
        .zip(x.iter())
        .map(|(c, v)| c * v)
        .sum();
    let mut max_residual: f64 = 0.0;
    for row in &lp.constraints {
        max_residual = max_residual.max(row_residual(row, x));
    }
    for (i, b) in lp.bounds.iter().enumerate() {
        if *b == VarBound::NonNegative {
            max_residual = max_residual.max(-x[i]);
        }
    }
    ResidualReport {
        max_residual,
        objective_delta: (objective - sol.objective_value).abs(),
    }
}

/// Solves `lp` deterministically. Infeasible and unbounded programs are
/// reported through [`LpStatus`]; `NumericalFailure` means the solver
/// returned an answer that failed re-certification.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let direction = match lp.sense {
        Sense::Minimize => OptimizationDirection::Minimize,
        Sense::Maximize => OptimizationDirection::Maximize,
    };
    let mut problem = Problem::new(direction);
    let vars: Vec<_> = lp
        .objective
        .iter()
        .zip(lp.bounds.iter())
        .map(|(&c, &b)| {
            let lo = match b {
                VarBound::NonNegative => 0.0,
                VarBound::Free => f64::NEG_INFINITY,
            };
            problem.add_var(c, (lo, f64::INFINITY))
        })
        .collect();
    for row in &lp.constraints {
        // Merge duplicate indices defensively; the backend expects each
        // variable at most once per row.
        let mut merged = std::collections::BTreeMap::new();
        for &(i, c) in &row.coeffs {
            *merged.entry(i).or_insert(0.0) += c;
        }
        let terms: Vec<_> = merged.into_iter().map(|(i, c)| (vars[i], c)).collect();
        let op = match row.relation {
            Relation::Eq => ComparisonOp::Eq,
            Relation::Ge => ComparisonOp::Ge,
            Relation::Le => ComparisonOp::Le,
        };
        problem.add_constraint(&terms, op, row.rhs);
    }
    match problem.solve() {
        Ok(solution) => {
            let primal_values: Vec<f64> = vars.iter().map(|&v| solution[v]).collect();
            let objective_value: f64 = lp
                .objective
                .iter()
                .zip(primal_values.iter())
                .map(|(c, v)| c * v)
                .sum();
            let mut sol = LpSolution {
                status: LpStatus::Optimal,
                objective_value,
                primal_values,
                max_constraint_residual: 0.0,
            };
            let report = lp_dual_gap_check(lp, &sol);
            sol.max_constraint_residual = report.max_residual;
            if report.max_residual > FEASIBILITY_TOL {
                return Err(Error::NumericalFailure(format!(
                    "solution violates a constraint by {:.3e}",
                    report.max_residual
                )));
            }
            Ok(sol)
        }
        Err(microlp::Error::Infeasible) => Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective_value: f64::NAN,
            primal_values: Vec::new(),
            max_constraint_residual: f64::NAN,
        }),
        Err(microlp::Error::Unbounded) => Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective_value: f64::NAN,
            primal_values: Vec::new(),
            max_constraint_residual: f64::NAN,
        }),
        Err(e) => Err(Error::NumericalFailure(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expect_optimal(lp: &LinearProgram) -> LpSolution {
        let sol = solve(lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        sol
    }

    #[test]
    fn forced_equality() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x, 1.0)], Relation::Eq, 1.0);
        let sol = expect_optimal(&lp);
        assert!((sol.objective_value - 1.0).abs() <= OPTIMALITY_TOL);
        assert!((sol.primal_values[x] - 1.0).abs() <= OPTIMALITY_TOL);
    }

    #[test]
    fn supporting_hyperplane() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        let y = lp.add_var(1.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, 1.0);
        let sol = expect_optimal(&lp);
        assert!((sol.objective_value - 1.0).abs() <= OPTIMALITY_TOL);
    }

    #[test]
    fn two_dimensional_vertex_enumeration() {
        // minimize 3x + 2y s.t. x + y >= 4, x + 3y >= 6, x, y >= 0.
        let rows: [([f64; 2], f64); 4] = [
            ([1.0, 1.0], 4.0),
            ([1.0, 3.0], 6.0),
            ([1.0, 0.0], 0.0),
            ([0.0, 1.0], 0.0),
        ];
        // Oracle: intersect every pair of active boundaries, keep feasible
        // points, take the best objective.
        let mut best = f64::INFINITY;
        for a in 0..rows.len() {
            for b in (a + 1)..rows.len() {
                let ([a0, a1], ra) = rows[a];
                let ([b0, b1], rb) = rows[b];
                let det = a0 * b1 - a1 * b0;
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (ra * b1 - a1 * rb) / det;
                let y = (a0 * rb - ra * b0) / det;
                if rows
                    .iter()
                    .all(|([c0, c1], r)| c0 * x + c1 * y >= r - 1e-9)
                {
                    best = best.min(3.0 * x + 2.0 * y);
                }
            }
        }

        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(3.0, VarBound::NonNegative);
        let y = lp.add_var(2.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, 4.0);
        lp.add_constraint(vec![(x, 1.0), (y, 3.0)], Relation::Ge, 6.0);
        let sol = expect_optimal(&lp);
        assert!((sol.objective_value - best).abs() <= 1e-9, "{} vs {best}", sol.objective_value);
    }

    #[test]
    fn maximization_and_free_variables() {
        // maximize x - y with x <= 3 (via Le row), y free pinned by equality.
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        let y = lp.add_var(-1.0, VarBound::Free);
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, 3.0);
        lp.add_constraint(vec![(y, 1.0)], Relation::Eq, -2.0);
        let sol = expect_optimal(&lp);
        assert!((sol.objective_value - 5.0).abs() <= OPTIMALITY_TOL);
        assert!((sol.primal_values[y] + 2.0).abs() <= OPTIMALITY_TOL);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, -1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 0.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn gap_check_self_consistency_and_perturbation() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        let y = lp.add_var(1.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, 1.0);
        let sol = expect_optimal(&lp);
        let report = lp_dual_gap_check(&lp, &sol);
        assert!(report.objective_delta <= 1e-9);
        assert!(report.max_residual <= FEASIBILITY_TOL);

        let mut bad = sol.clone();
        bad.primal_values[x] -= 1.0;
        let report = lp_dual_gap_check(&lp, &bad);
        assert!(report.max_residual > 0.0 || report.objective_delta > 0.0);
    }

    #[test]
    fn redundant_equality_rows_still_certify() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        let y = lp.add_var(2.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(x, 2.0), (y, 2.0)], Relation::Eq, 2.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 1.0);
        let sol = expect_optimal(&lp);
        assert!(sol.max_constraint_residual <= FEASIBILITY_TOL);
        assert!((sol.objective_value - 1.0).abs() <= OPTIMALITY_TOL);
    }

    #[test]
    fn deterministic_repeat_solves() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(3.0, VarBound::NonNegative);
        let y = lp.add_var(2.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, 4.0);
        lp.add_constraint(vec![(x, 1.0), (y, 3.0)], Relation::Ge, 6.0);
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
        assert_eq!(a.primal_values, b.primal_values);
    }

    #[test]
    fn rejects_bad_indices_and_nonfinite() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x + 5, 1.0)], Relation::Eq, 1.0);
        assert!(matches!(solve(&lp).unwrap_err(), Error::IndexOutOfRange { .. }));

        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        lp.add_constraint(vec![(x, f64::NAN)], Relation::Eq, 1.0);
        assert!(matches!(solve(&lp).unwrap_err(), Error::DimensionMismatch(_)));
    }

    #[test]
    fn dump_lists_one_constraint_per_line() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(1.0, VarBound::NonNegative);
        let y = lp.add_var(0.0, VarBound::Free);
        lp.add_constraint(vec![(x, 1.0), (y, -2.0)], Relation::Ge, 0.5);
        let text = lp.dump();
        assert!(text.starts_with("minimize"));
        assert!(text.contains(">= 0.5"));
        assert!(text.contains("x1 free"));
    }
}
