//! Minimax-optimal randomized classifier via the dual bound LP, and the
//! worst-case evaluation of arbitrary randomized classifiers.
//!
//! The dual has free variables a_j (one per class) and b_{j,i} (one per
//! known matrix entry), plus nonnegative w_{v,j}. Its optimal w rows,
//! normalized per outcome, form the right-stochastic classifier whose
//! worst-case expected error over the feasible set equals the bound Q.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{add_feasibility_rows, check_cap, DEFAULT_ATTRIBUTE_CAP};
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense, VarBound};
use crate::matrix::{AttributeOutcome, ClassAttributeMatrix, ClassPriors, Entry};
use crate::pmf::{DeterministicClassifier, JointPMF};

/// A right-stochastic attribute-to-class classifier: row v is the
/// distribution over predicted classes given outcome v.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedClassifier {
    n: usize,
    k: usize,
    /// rows[v.bits()] is a length-k probability vector.
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ClassifierRow {
    v: String,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawClassifier {
    n: usize,
    k: usize,
    rows: Vec<ClassifierRow>,
}

impl RandomizedClassifier {
    pub fn new(n: usize, k: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != 1usize << n {
            return Err(Error::DimensionMismatch(format!(
                "classifier has {} rows, expected 2^{n}",
                rows.len()
            )));
        }
        for (v, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "row {v} has {} entries, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::DimensionMismatch(format!(
                    "row {v} has a negative or non-finite probability"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::DimensionMismatch(format!(
                    "row {v} sums to {total}, expected 1"
                )));
            }
        }
        Ok(RandomizedClassifier { n, k, rows })
    }

    /// Embeds a deterministic classifier as unit-vector rows.
    pub fn from_deterministic(g: &DeterministicClassifier) -> Self {
        let rows = (0..1usize << g.n())
            .map(|v| {
                let mut row = vec![0.0; g.k()];
                row[g.classify(AttributeOutcome::new(v as u64, g.n()))] = 1.0;
                row
            })
            .collect();
        RandomizedClassifier {
            n: g.n(),
            k: g.k(),
            rows,
        }
    }

    /// The maximally uninformative classifier: 1/k everywhere.
    pub fn uniform(n: usize, k: usize) -> Self {
        RandomizedClassifier {
            n,
            k,
            rows: vec![vec![1.0 / k as f64; k]; 1usize << n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, v: AttributeOutcome) -> &[f64] {
        &self.rows[v.bits() as usize]
    }

    /// JSON listing all 2^n rows in ascending outcome order.
    pub fn to_json(&self) -> Result<String> {
        let raw = RawClassifier {
            n: self.n,
            k: self.k,
            rows: (0..self.rows.len())
                .map(|v| ClassifierRow {
                    v: AttributeOutcome::new(v as u64, self.n).to_bit_string(),
                    probs: self.rows[v].clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawClassifier = serde_json::from_str(text)?;
        let mut rows = vec![Vec::new(); 1usize << raw.n];
        for rec in raw.rows {
            let v = AttributeOutcome::from_bit_string(&rec.v)?;
            if v.len() != raw.n {
                return Err(Error::DimensionMismatch(format!(
                    "outcome string {:?} has length {}, expected {}",
                    rec.v,
                    v.len(),
                    raw.n
                )));
            }
            rows[v.bits() as usize] = rec.probs;
        }
        RandomizedClassifier::new(raw.n, raw.k, rows)
    }
}

/// Builds the dual bound LP. The objective carries the dual's "+1" constant
/// by giving every w_{v,j} a coefficient of 1/2^n: row stochasticity makes
/// those terms sum to exactly 1, so the LP optimum equals Q directly.
///
/// Variable layout: a_j at index j (free), then one free b variable per
/// known entry in class-major order, then w_{v,j} at w_base + v·k + j.
pub fn build_dual_lp(
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
    cap: usize,
) -> Result<LinearProgram> {
    let n = m.num_attributes();
    let k = m.num_classes();
    check_cap(n, cap)?;
    if priors.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} prior weights for {k} classes",
            priors.len()
        )));
    }
    let outcomes = 1usize << n;

    let mut lp = LinearProgram::new(Sense::Minimize);
    for j in 0..k {
        lp.add_var(priors.weight(j), VarBound::Free); // a_j
    }
    let mut b_index = vec![vec![None; n]; k];
    for j in 0..k {
        for i in 0..n {
            if let Entry::Known(a) = m.entry(j, i) {
                b_index[j][i] = Some(lp.add_var(priors.weight(j) * a, VarBound::Free));
            }
        }
    }
    let w_base = lp.num_vars();
    let fold = 1.0 / outcomes as f64;
    for _ in 0..outcomes * k {
        lp.add_var(fold, VarBound::NonNegative);
    }

    for v in 0..outcomes {
        for j in 0..k {
            let mut coeffs = vec![(j, 1.0), (w_base + v * k + j, 1.0)];
            for i in 0..n {
                if (v >> i) & 1 == 1 {
                    if let Some(b) = b_index[j][i] {
                        coeffs.push((b, 1.0));
                    }
                }
            }
            lp.add_constraint(coeffs, Relation::Ge, 0.0);
        }
    }
    for v in 0..outcomes {
        let coeffs = (0..k).map(|j| (w_base + v * k + j, 1.0)).collect();
        lp.add_constraint(coeffs, Relation::Eq, 1.0);
    }
    Ok(lp)
}

/// Solves the dual LP and assembles the minimax classifier from its w rows.
/// Returns the classifier and the bound value Q.
pub fn compute_optimal_classifier_capped(
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
    cap: usize,
) -> Result<(RandomizedClassifier, f64)> {
    let lp = build_dual_lp(m, priors, cap)?;
    let sol = lp::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericalFailure(format!(
            "dual LP reported {:?} on an always-feasible instance",
            sol.status
        )));
    }
    let n = m.num_attributes();
    let k = m.num_classes();
    let outcomes = 1usize << n;
    let w_base = lp.num_vars() - outcomes * k;
    let mut rows = Vec::with_capacity(outcomes);
    for v in 0..outcomes {
        let mut row: Vec<f64> = (0..k).map(|j| sol.primal_values[w_base + v * k + j]).collect();
        let clamp_mass: f64 = row.iter().filter(|p| **p < 0.0).map(|p| -p).sum();
        if clamp_mass >= 1e-9 {
            return Err(Error::NumericalFailure(format!(
                "dual w row {v} has negative mass {clamp_mass:.3e}"
            )));
        }
        for p in &mut row {
            *p = p.max(0.0);
        }
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::NumericalFailure(format!("dual w row {v} is all zero")));
        }
        for p in &mut row {
            *p /= total;
        }
        rows.push(row);
    }
    Ok((RandomizedClassifier::new(n, k, rows)?, sol.objective_value))
}

/// [`compute_optimal_classifier_capped`] with the default attribute cap.
pub fn compute_optimal_classifier(
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
) -> Result<(RandomizedClassifier, f64)> {
    compute_optimal_classifier_capped(m, priors, DEFAULT_ATTRIBUTE_CAP)
}

/// 1 − Σ_v Σ_j W[v][j] · p(v, j).
pub fn expected_error_randomized(p: &JointPMF, w: &RandomizedClassifier) -> Result<f64> {
    if w.n() != p.n() || w.k() != p.k() {
        return Err(Error::DimensionMismatch(format!(
            "classifier is over n={}, k={} but the PMF is over n={}, k={}",
            w.n(),
            w.k(),
            p.n(),
            p.k()
        )));
    }
    let hit: f64 = p.iter().map(|(v, j, mass)| w.row(v)[j] * mass).sum();
    Ok(1.0 - hit)
}

/// max over feasible p of the expected error of `w`, computed by LP over the
/// same feasible set as the bound.
pub fn worst_case_error_capped(
    w: &RandomizedClassifier,
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
    cap: usize,
) -> Result<f64> {
    let n = m.num_attributes();
    let k = m.num_classes();
    if w.n() != n || w.k() != k {
        return Err(Error::DimensionMismatch(format!(
            "classifier is over n={}, k={} but the matrix is {k}x{n}",
            w.n(),
            w.k()
        )));
    }
    check_cap(n, cap)?;
    if priors.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} prior weights for {k} classes",
            priors.len()
        )));
    }
    // Minimizing the hit probability Σ W[v][j]·q_{v,j} over the feasible set
    // maximizes the error.
    let mut lp = LinearProgram::new(Sense::Minimize);
    for v in 0..1usize << n {
        let outcome = AttributeOutcome::new(v as u64, n);
        for j in 0..k {
            lp.add_var(w.row(outcome)[j], VarBound::NonNegative);
        }
    }
    add_feasibility_rows(&mut lp, m, priors);
    let sol = lp::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericalFailure(format!(
            "worst-case LP reported {:?} on an always-feasible instance",
            sol.status
        )));
    }
    Ok(1.0 - sol.objective_value)
}

/// [`worst_case_error_capped`] with the default attribute cap.
pub fn worst_case_error(
    w: &RandomizedClassifier,
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
) -> Result<f64> {
    worst_case_error_capped(w, m, priors, DEFAULT_ATTRIBUTE_CAP)
}
