//! Exact worst-case bound: the primal LP over all joint distributions
//! consistent with a class-attribute matrix, and its adversarial witness.
//!
//! The feasible set is the polytope of joint PMFs q_{v,j} whose per-class
//! attribute marginals match every known matrix entry and whose class
//! marginals match the priors. Minimizing Σ_v λ_v with λ_v ≥ q_{v,j}
//! yields 1 − Q, where Q is the largest Bayes error any consistent
//! distribution can force.

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense, VarBound};
use crate::matrix::{AttributeOutcome, ClassAttributeMatrix, ClassPriors, Entry};
use crate::pmf::JointPMF;

/// Default limit on the attribute count; the LP has Θ(k·2^n) variables.
pub const DEFAULT_ATTRIBUTE_CAP: usize = 16;

/// The worst-case bound together with the distribution that attains it.
#[derive(Debug, Clone)]
pub struct BoundResult {
    /// Worst-case Bayes error Q in [0, 1].
    pub q_value: f64,
    /// A consistent distribution whose Bayes error equals `q_value`.
    pub adversarial_pmf: JointPMF,
    pub lp_status: LpStatus,
    /// Largest violation of the matrix/prior constraints by the witness.
    pub residual: f64,
}

pub(crate) fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::AttributeCapExceeded { n, cap });
    }
    Ok(())
}

fn check_dims(m: &ClassAttributeMatrix, priors: &ClassPriors) -> Result<()> {
    if priors.len() != m.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "{} prior weights for {} classes",
            priors.len(),
            m.num_classes()
        )));
    }
    Ok(())
}

/// Adds the feasible-set rows over variables q_{v,j} at index v·k + j: one
/// equality per known matrix entry (Σ_{v: v_i=1} q_{v,j} = A_{j,i}·prior_j,
/// class-major) and one class-marginal equality per class.
pub(crate) fn add_feasibility_rows(
    lp: &mut LinearProgram,
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
) {
    let n = m.num_attributes();
    let k = m.num_classes();
    let outcomes = 1usize << n;
    let q = |v: usize, j: usize| v * k + j;
    for j in 0..k {
        for i in 0..n {
            if let Entry::Known(a) = m.entry(j, i) {
                let coeffs = (0..outcomes)
                    .filter(|v| (v >> i) & 1 == 1)
                    .map(|v| (q(v, j), 1.0))
                    .collect();
                lp.add_constraint(coeffs, Relation::Eq, a * priors.weight(j));
            }
        }
    }
    for j in 0..k {
        let coeffs = (0..outcomes).map(|v| (q(v, j), 1.0)).collect();
        lp.add_constraint(coeffs, Relation::Eq, priors.weight(j));
    }
}

/// Builds the primal bound LP.
///
/// Variable layout: q_{v,j} at index v·k + j, then λ_v at index k·2^n + v.
/// Rows, in order: one equality per known entry (class-major), one class
/// marginal equality per class, then λ_v ≥ q_{v,j} for every (v, j).
pub fn build_primal_lp(
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
    cap: usize,
) -> Result<LinearProgram> {
    let n = m.num_attributes();
    let k = m.num_classes();
    check_cap(n, cap)?;
    check_dims(m, priors)?;
    let outcomes = 1usize << n;

    let mut lp = LinearProgram::new(Sense::Minimize);
    for _ in 0..outcomes * k {
        lp.add_var(0.0, VarBound::NonNegative);
    }
    let lambda_base = outcomes * k;
    for _ in 0..outcomes {
        lp.add_var(1.0, VarBound::NonNegative);
    }

    add_feasibility_rows(&mut lp, m, priors);
    let q = |v: usize, j: usize| v * k + j;
    for v in 0..outcomes {
        for j in 0..k {
            lp.add_constraint(
                vec![(lambda_base + v, 1.0), (q(v, j), -1.0)],
                Relation::Ge,
                0.0,
            );
        }
    }
    Ok(lp)
}

/// Solves the primal LP and packages Q with its adversarial witness.
pub fn compute_exact_bound_capped(
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
    cap: usize,
) -> Result<BoundResult> {
    let lp = build_primal_lp(m, priors, cap)?;
    let sol = lp::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        // The product distribution built from any known/0.5-filled entries is
        // always feasible, so a non-optimal status is a solver breakdown.
        return Err(Error::NumericalFailure(format!(
            "bound LP reported {:?} on a feasible instance",
            sol.status
        )));
    }
    let n = m.num_attributes();
    let k = m.num_classes();
    let mut pmf = JointPMF::empty(n, k);
    for v in 0..1usize << n {
        for j in 0..k {
            let mass = sol.primal_values[v * k + j];
            pmf.add(AttributeOutcome::new(v as u64, n), j, mass);
        }
    }
    pmf.cleanup();
    let residual = pmf.residual_against(m, priors);
    let q_value = (1.0 - sol.objective_value).clamp(0.0, 1.0);
    Ok(BoundResult {
        q_value,
        adversarial_pmf: pmf,
        lp_status: sol.status,
        residual,
    })
}

/// [`compute_exact_bound_capped`] with the default attribute cap.
pub fn compute_exact_bound(m: &ClassAttributeMatrix, priors: &ClassPriors) -> Result<BoundResult> {
    compute_exact_bound_capped(m, priors, DEFAULT_ATTRIBUTE_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Relation;
    use crate::pmf::bayes_error;

    fn matrix(csv: &str) -> ClassAttributeMatrix {
        ClassAttributeMatrix::from_csv(csv).unwrap()
    }

    fn row_counts(lp: &LinearProgram) -> (usize, usize) {
        let eq = lp
            .constraints
            .iter()
            .filter(|r| r.relation == Relation::Eq)
            .count();
        (eq, lp.constraints.len() - eq)
    }

    #[test]
    fn primal_lp_shape_for_two_by_two() {
        let m = matrix("class,a1,a2\nc1,0.5,0.5\nc2,0.5,0.5");
        let lp = build_primal_lp(&m, &ClassPriors::uniform(2), 16).unwrap();
        assert_eq!(lp.num_vars(), 12); // 8 q + 4 lambda
        let (eq, ge) = row_counts(&lp);
        assert_eq!(eq, 4 + 2); // one per known entry + one marginal per class
        assert_eq!(ge, 8);
    }

    #[test]
    fn unknown_entry_drops_exactly_one_row() {
        let full = matrix("class,a1,a2\nc1,0.5,0.5\nc2,0.5,0.5");
        let holed = matrix("class,a1,a2\nc1,0.5,*\nc2,0.5,0.5");
        let priors = ClassPriors::uniform(2);
        let (eq_full, _) = row_counts(&build_primal_lp(&full, &priors, 16).unwrap());
        let (eq_holed, _) = row_counts(&build_primal_lp(&holed, &priors, 16).unwrap());
        assert_eq!(eq_holed + 1, eq_full);
    }

    #[test]
    fn no_attributes_gives_best_constant_guess() {
        let m = matrix("class\nc1\nc2\nc3");
        let lp = build_primal_lp(&m, &ClassPriors::uniform(3), 16).unwrap();
        assert_eq!(lp.num_vars(), 4); // 3 q over the single outcome + 1 lambda
        let bound = compute_exact_bound(&m, &ClassPriors::uniform(3)).unwrap();
        assert!((bound.q_value - 2.0 / 3.0).abs() <= 1e-9);
    }

    #[test]
    fn all_half_matrix_is_worthless() {
        let m = matrix("class,a1,a2\nc1,0.5,0.5\nc2,0.5,0.5");
        let bound = compute_exact_bound(&m, &ClassPriors::uniform(2)).unwrap();
        assert!((bound.q_value - 0.5).abs() <= 1e-8);
        assert!(bound.residual <= 1e-8);
        assert!((bayes_error(&bound.adversarial_pmf) - bound.q_value).abs() <= 1e-8);
    }

    #[test]
    fn identical_rows_cap_at_best_prior() {
        let m = matrix("class,a1,a2\nc1,0.3,0.9\nc2,0.3,0.9\nc3,0.3,0.9");
        let bound = compute_exact_bound(&m, &ClassPriors::uniform(3)).unwrap();
        assert!((bound.q_value - 2.0 / 3.0).abs() <= 1e-8);
    }

    #[test]
    fn deterministic_distinct_rows_are_separable() {
        let m = matrix("class,a1,a2\nc1,1,0\nc2,0,1\nc3,1,1");
        let bound = compute_exact_bound(&m, &ClassPriors::uniform(3)).unwrap();
        assert!(bound.q_value.abs() <= 1e-8);
    }

    #[test]
    fn witness_is_consistent_and_attains_q() {
        let m = matrix("class,a1,a2,a3\nc1,0.9,0.2,0.6\nc2,0.1,0.8,0.5\nc3,0.4,0.4,0.3");
        let priors = ClassPriors::uniform(3);
        let bound = compute_exact_bound(&m, &priors).unwrap();
        bound.adversarial_pmf.validate().unwrap();
        assert!(bound.residual <= 1e-8);
        assert!((bayes_error(&bound.adversarial_pmf) - bound.q_value).abs() <= 1e-8);
        assert!(bound.q_value >= -1e-12 && bound.q_value <= 1.0 - 1.0 / 3.0 + 1e-8);
    }

    #[test]
    fn zero_prior_class_is_allowed() {
        let m = matrix("class,a1\nc1,0.9\nc2,0.1\nc3,0.5");
        let priors = ClassPriors::new(vec![0.5, 0.5, 0.0]).unwrap();
        let bound = compute_exact_bound(&m, &priors).unwrap();
        assert!((bound.adversarial_pmf.class_marginal(2)).abs() <= 1e-10);
        assert!(bound.q_value <= 0.5 + 1e-8);
    }

    #[test]
    fn cap_is_enforced() {
        let mut header = String::from("class");
        let mut r1 = String::from("c1");
        let mut r2 = String::from("c2");
        for i in 0..5 {
            header.push_str(&format!(",a{i}"));
            r1.push_str(",0.5");
            r2.push_str(",0.5");
        }
        let m = matrix(&format!("{header}\n{r1}\n{r2}"));
        assert!(matches!(
            compute_exact_bound_capped(&m, &ClassPriors::uniform(2), 4),
            Err(Error::AttributeCapExceeded { n: 5, cap: 4 })
        ));
        assert!(compute_exact_bound(&m, &ClassPriors::uniform(2)).is_ok());
    }

    #[test]
    fn non_uniform_priors_shift_the_bound() {
        let m = matrix("class,a1\nc1,0.5\nc2,0.5");
        let skewed = ClassPriors::new(vec![0.9, 0.1]).unwrap();
        let bound = compute_exact_bound(&m, &skewed).unwrap();
        // Indistinguishable classes: the best classifier guesses class 0.
        assert!((bound.q_value - 0.1).abs() <= 1e-8);
    }
}
