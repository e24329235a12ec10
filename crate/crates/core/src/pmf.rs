//! Sparse joint PMFs over (attribute outcome, class), deterministic
//! classifiers, and the error functionals connecting them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{AttributeOutcome, ClassAttributeMatrix, ClassPriors, Entry};

/// Entries smaller than this in magnitude are dropped by [`JointPMF::cleanup`].
pub const PMF_DROP_TOL: f64 = 1e-12;

/// A sparse joint distribution over attribute outcomes and classes.
///
/// Entries are keyed by (outcome bits, class index) and iterate in ascending
/// (outcome, class) order, which keeps every downstream computation
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPMF {
    n: usize,
    k: usize,
    entries: BTreeMap<(u64, usize), f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfRecord {
    v: String,
    class: usize,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPmf {
    n: usize,
    k: usize,
    entries: Vec<PmfRecord>,
}

impl JointPMF {
    /// An empty (all-zero) PMF shell; fill with [`JointPMF::add`].
    pub fn empty(n: usize, k: usize) -> Self {
        JointPMF {
            n,
            k,
            entries: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Accumulates mass onto (v, class).
    pub fn add(&mut self, v: AttributeOutcome, class: usize, p: f64) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert!(class < self.k);
        if p != 0.0 {
            *self.entries.entry((v.bits(), class)).or_insert(0.0) += p;
        }
    }

    pub fn prob(&self, v: AttributeOutcome, class: usize) -> f64 {
        self.entries.get(&(v.bits(), class)).copied().unwrap_or(0.0)
    }

    /// Ascending (outcome, class) iteration over nonzero entries.
    pub fn iter(&self) -> impl Iterator<Item = (AttributeOutcome, usize, f64)> + '_ {
        let n = self.n;
        self.entries
            .iter()
            .map(move |(&(bits, class), &p)| (AttributeOutcome::new(bits, n), class, p))
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// P(class = j).
    pub fn class_marginal(&self, class: usize) -> f64 {
        self.entries
            .iter()
            .filter(|(&(_, j), _)| j == class)
            .map(|(_, &p)| p)
            .sum()
    }

    /// P(attribute i = 1, class = j).
    pub fn attribute_class_mass(&self, attribute: usize, class: usize) -> f64 {
        self.entries
            .iter()
            .filter(|(&(bits, j), _)| j == class && (bits >> attribute) & 1 == 1)
            .map(|(_, &p)| p)
            .sum()
    }

    /// Drops entries with magnitude below 1e-12. No renormalization: the PMF
    /// is reported as-is so residual certificates stay meaningful.
    pub fn cleanup(&mut self) {
        self.entries.retain(|_, p| p.abs() >= PMF_DROP_TOL);
    }

    /// Checks nonnegativity and unit total mass (within 1e-9).
    pub fn validate(&self) -> Result<()> {
        for (&(_, class), &p) in &self.entries {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InconsistentPmf {
                    class,
                    total: p,
                    expected: 0.0,
                });
            }
        }
        let total = self.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InconsistentPmf {
                class: 0,
                total,
                expected: 1.0,
            });
        }
        Ok(())
    }

    /// Largest violation of the known matrix constraints and the prior
    /// marginals by this PMF.
    pub fn residual_against(&self, m: &ClassAttributeMatrix, priors: &ClassPriors) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..m.num_classes() {
            worst = worst.max((self.class_marginal(j) - priors.weight(j)).abs());
            for i in 0..m.num_attributes() {
                if let Entry::Known(a) = m.entry(j, i) {
                    worst = worst.max((self.attribute_class_mass(i, j) - a * priors.weight(j)).abs());
                }
            }
        }
        worst
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawPmf {
            n: self.n,
            k: self.k,
            entries: self
                .iter()
                .map(|(v, class, p)| PmfRecord {
                    v: v.to_bit_string(),
                    class,
                    p,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawPmf = serde_json::from_str(text)?;
        let mut pmf = JointPMF::empty(raw.n, raw.k);
        for rec in raw.entries {
            let v = AttributeOutcome::from_bit_string(&rec.v)?;
            if v.len() != raw.n {
                return Err(Error::DimensionMismatch(format!(
                    "outcome string {:?} has length {}, expected {}",
                    rec.v,
                    v.len(),
                    raw.n
                )));
            }
            if rec.class >= raw.k {
                return Err(Error::IndexOutOfRange {
                    index: rec.class,
                    limit: raw.k,
                });
            }
            pmf.add(v, rec.class, rec.p);
        }
        Ok(pmf)
    }
}

/// A total map from attribute outcomes to class indices, stored densely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicClassifier {
    n: usize,
    k: usize,
    /// assignment[v.bits()] = class index.
    assignment: Vec<usize>,
}

impl DeterministicClassifier {
    pub fn new(n: usize, k: usize, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != 1usize << n {
            return Err(Error::DimensionMismatch(format!(
                "classifier table has {} rows, expected 2^{n}",
                assignment.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&j| j >= k) {
            return Err(Error::IndexOutOfRange { index: bad, limit: k });
        }
        Ok(DeterministicClassifier { n, k, assignment })
    }

    /// The constant classifier v -> class.
    pub fn constant(n: usize, k: usize, class: usize) -> Result<Self> {
        DeterministicClassifier::new(n, k, vec![class; 1usize << n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn classify(&self, v: AttributeOutcome) -> usize {
        self.assignment[v.bits() as usize]
    }
}

/// 1 − Σ_v max_j p(v, j): the error of the best deterministic classifier
/// for `p`.
pub fn bayes_error(p: &JointPMF) -> f64 {
    let mut best_per_outcome: BTreeMap<u64, f64> = BTreeMap::new();
    for (v, _, mass) in p.iter() {
        let best = best_per_outcome.entry(v.bits()).or_insert(0.0);
        if mass > *best {
            *best = mass;
        }
    }
    1.0 - best_per_outcome.values().sum::<f64>()
}

/// 1 − Σ_v p(v, g(v)).
pub fn classifier_error(p: &JointPMF, g: &DeterministicClassifier) -> Result<f64> {
    if g.n() != p.n() || g.k() != p.k() {
        return Err(Error::DimensionMismatch(format!(
            "classifier is over n={}, k={} but the PMF is over n={}, k={}",
            g.n(),
            g.k(),
            p.n(),
            p.k()
        )));
    }
    let hit: f64 = p
        .iter()
        .filter(|&(v, class, _)| g.classify(v) == class)
        .map(|(_, _, mass)| mass)
        .sum();
    Ok(1.0 - hit)
}

/// Per-outcome argmax classifier, ties toward the smallest class index.
/// Outcomes with no mass also fall to class 0.
pub fn bayes_classifier(p: &JointPMF) -> DeterministicClassifier {
    let size = 1usize << p.n();
    let mut best_mass = vec![0.0f64; size];
    let mut assignment = vec![0usize; size];
    for (v, class, mass) in p.iter() {
        let idx = v.bits() as usize;
        if mass > best_mass[idx] {
            best_mass[idx] = mass;
            assignment[idx] = class;
        }
    }
    DeterministicClassifier {
        n: p.n(),
        k: p.k(),
        assignment,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(s: &str) -> AttributeOutcome {
        AttributeOutcome::from_bit_string(s).unwrap()
    }

    /// n=2, k=2 distribution putting 1/4 on (00, j) and (11, j) for both j.
    fn worst_case_two_attr() -> JointPMF {
        let mut p = JointPMF::empty(2, 2);
        for v in ["00", "11"] {
            for j in 0..2 {
                p.add(outcome(v), j, 0.25);
            }
        }
        p
    }

    #[test]
    fn point_mass_has_zero_bayes_error() {
        let mut p = JointPMF::empty(2, 3);
        p.add(outcome("10"), 2, 1.0);
        p.validate().unwrap();
        assert_eq!(bayes_error(&p), 0.0);
        let g = bayes_classifier(&p);
        assert_eq!(g.classify(outcome("10")), 2);
    }

    #[test]
    fn uniform_single_attribute_pmf() {
        let mut p = JointPMF::empty(1, 2);
        for v in ["0", "1"] {
            for j in 0..2 {
                p.add(outcome(v), j, 0.25);
            }
        }
        assert!((bayes_error(&p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_outcomes_or_none_pmf_errs_half_under_any_classifier() {
        let p = worst_case_two_attr();
        p.validate().unwrap();
        assert!((bayes_error(&p) - 0.5).abs() < 1e-15);
        // Every deterministic classifier is equally bad here.
        for table in 0..16usize {
            let assignment = (0..4).map(|v| (table >> v) & 1).collect();
            let g = DeterministicClassifier::new(2, 2, assignment).unwrap();
            assert!((classifier_error(&p, &g).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn bayes_classifier_matches_bayes_error() {
        let mut p = JointPMF::empty(2, 3);
        p.add(outcome("00"), 0, 0.3);
        p.add(outcome("00"), 1, 0.1);
        p.add(outcome("10"), 2, 0.35);
        p.add(outcome("01"), 1, 0.15);
        p.add(outcome("11"), 0, 0.1);
        p.validate().unwrap();
        let g = bayes_classifier(&p);
        assert!((classifier_error(&p, &g).unwrap() - bayes_error(&p)).abs() < 1e-15);
    }

    #[test]
    fn constant_classifier_error_is_class_marginal_complement() {
        let p = worst_case_two_attr();
        let g = DeterministicClassifier::constant(2, 2, 1).unwrap();
        assert!((classifier_error(&p, &g).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tie_breaks_toward_smallest_class() {
        let p = worst_case_two_attr();
        let g = bayes_classifier(&p);
        for v in AttributeOutcome::all(2) {
            assert_eq!(g.classify(v), 0);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = worst_case_two_attr();
        let g = DeterministicClassifier::constant(3, 2, 0).unwrap();
        assert!(matches!(classifier_error(&p, &g), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn json_round_trip() {
        let p = worst_case_two_attr();
        let text = p.to_json().unwrap();
        assert!(text.contains("\"v\""));
        let back = JointPMF::from_json(&text).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn json_rejects_bad_class_and_bad_outcome() {
        let bad_class = r#"{"n":1,"k":2,"entries":[{"v":"0","class":2,"p":1.0}]}"#;
        assert!(matches!(
            JointPMF::from_json(bad_class),
            Err(Error::IndexOutOfRange { .. })
        ));
        let bad_len = r#"{"n":2,"k":2,"entries":[{"v":"0","class":0,"p":1.0}]}"#;
        assert!(matches!(
            JointPMF::from_json(bad_len),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn cleanup_drops_dust_without_renormalizing() {
        let mut p = JointPMF::empty(1, 2);
        p.add(outcome("0"), 0, 1.0);
        p.add(outcome("1"), 1, 1e-13);
        p.cleanup();
        assert_eq!(p.prob(outcome("1"), 1), 0.0);
        assert_eq!(p.total(), 1.0);
    }

    #[test]
    fn residual_measures_constraint_violation() {
        let m = ClassAttributeMatrix::from_csv("class,a1\nc1,1\nc2,0").unwrap();
        let priors = ClassPriors::uniform(2);
        let mut p = JointPMF::empty(1, 2);
        p.add(outcome("1"), 0, 0.5);
        p.add(outcome("0"), 1, 0.5);
        assert!(p.residual_against(&m, &priors) < 1e-15);
        // Move half of class 0's mass to the wrong outcome.
        let mut q = JointPMF::empty(1, 2);
        q.add(outcome("1"), 0, 0.25);
        q.add(outcome("0"), 0, 0.25);
        q.add(outcome("0"), 1, 0.5);
        assert!((q.residual_against(&m, &priors) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn validate_rejects_negative_and_wrong_total() {
        let mut p = JointPMF::empty(1, 2);
        p.add(outcome("0"), 0, -0.1);
        p.add(outcome("1"), 1, 1.1);
        assert!(p.validate().is_err());
        let mut q = JointPMF::empty(1, 2);
        q.add(outcome("0"), 0, 0.4);
        assert!(q.validate().is_err());
    }
}
