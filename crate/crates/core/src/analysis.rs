//! Greedy attribute selection, confusion analysis of prediction sets, and
//! the skewness statistic relating observed errors to the pairwise bound
//! matrix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::binary::PairwiseBoundMatrix;
use crate::error::{Error, Result};
use crate::exact::{compute_exact_bound_capped, DEFAULT_ATTRIBUTE_CAP};
use crate::matching::matching_lower_bound;
use crate::matrix::{ClassAttributeMatrix, ClassPriors, SelectionMask};

/// Which bound the greedy search evaluates per candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyBound {
    /// Exact LP bound; O(n·budget) LP solves.
    Exact,
    /// Matching approximation; cheap, uniform priors only.
    Matching,
}

/// The greedy selection path: chosen attributes with the bound after each.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    /// Bound with no attributes: 1 − max prior.
    pub initial_q: f64,
    /// (attribute index, bound after adding it), in selection order.
    pub steps: Vec<(usize, f64)>,
}

impl SelectionTrace {
    /// Plot-ready CSV: `step,attribute,q`. Step 0 is the empty selection.
    pub fn to_csv(&self, attribute_names: &[String]) -> String {
        let mut out = String::from("step,attribute,q\n");
        out.push_str(&format!("0,,{}\n", crate::util::format_sig9(self.initial_q)));
        for (step, &(attr, q)) in self.steps.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                step + 1,
                attribute_names[attr],
                crate::util::format_sig9(q)
            ));
        }
        out
    }
}

/// Starting from no attributes, repeatedly adds the attribute whose
/// addition minimizes the bound (ties toward the smallest index).
/// Candidates within a step are evaluated in parallel.
pub fn greedy_select_with(
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
    budget: usize,
    bound: GreedyBound,
    cap: usize,
) -> Result<SelectionTrace> {
    let n = m.num_attributes();
    if budget > n {
        return Err(Error::DimensionMismatch(format!(
            "budget {budget} exceeds the {n} available attributes"
        )));
    }
    if budget > cap {
        return Err(Error::AttributeCapExceeded { n: budget, cap });
    }
    if priors.len() != m.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "{} prior weights for {} classes",
            priors.len(),
            m.num_classes()
        )));
    }
    let evaluate = |mask: &SelectionMask| -> Result<f64> {
        let sub = m.restrict(mask)?;
        match bound {
            GreedyBound::Exact => Ok(compute_exact_bound_capped(&sub, priors, cap)?.q_value),
            GreedyBound::Matching => Ok(matching_lower_bound(&sub, priors)?.0),
        }
    };

    let mut mask = SelectionMask::empty();
    let mut steps = Vec::with_capacity(budget);
    for _ in 0..budget {
        let candidates: Vec<usize> = (0..n).filter(|&i| !mask.contains(i)).collect();
        let scored: Vec<(f64, usize)> = candidates
            .par_iter()
            .map(|&i| {
                let mut trial = mask.clone();
                trial.push(i);
                Ok((evaluate(&trial)?, i))
            })
            .collect::<Result<_>>()?;
        let &(q, pick) = scored
            .iter()
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .expect("budget <= n guarantees a candidate");
        mask.push(pick);
        steps.push((pick, q));
    }
    Ok(SelectionTrace {
        initial_q: 1.0 - priors.max_weight(),
        steps,
    })
}

/// [`greedy_select_with`] using the exact bound and the default cap.
pub fn greedy_select(
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
    budget: usize,
) -> Result<SelectionTrace> {
    greedy_select_with(m, priors, budget, GreedyBound::Exact, DEFAULT_ATTRIBUTE_CAP)
}

/// (true class, predicted class) records.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredictionSet {
    pub records: Vec<(usize, usize)>,
}

impl PredictionSet {
    pub fn new(records: Vec<(usize, usize)>, k: usize) -> Result<Self> {
        for &(t, p) in &records {
            for idx in [t, p] {
                if idx >= k {
                    return Err(Error::IndexOutOfRange { index: idx, limit: k });
                }
            }
        }
        Ok(PredictionSet { records })
    }

    /// CSV `true,predicted` with class names per row.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("true,predicted\n");
        for &(t, p) in &self.records {
            out.push_str(&format!("{},{}\n", class_names[t], class_names[p]));
        }
        out
    }

    pub fn from_csv(text: &str, class_names: &[String]) -> Result<Self> {
        let mut records = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if idx == 0 {
                if line.trim() != "true,predicted" {
                    return Err(Error::MalformedCsv {
                        line: 1,
                        reason: "header must be \"true,predicted\"".into(),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let (t, p) = match (cells.next(), cells.next(), cells.next()) {
                (Some(t), Some(p), None) => (t.trim(), p.trim()),
                _ => {
                    return Err(Error::MalformedCsv {
                        line: idx + 1,
                        reason: "row must have exactly 2 cells".into(),
                    })
                }
            };
            let lookup = |name: &str| {
                class_names
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::UnknownClassName(name.to_owned()))
            };
            records.push((lookup(t)?, lookup(p)?));
        }
        Ok(PredictionSet { records })
    }
}

/// Symmetric pairwise misclassification rates with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MisclassificationMatrix {
    k: usize,
    values: Vec<f64>,
    /// Pairs (j, j') with no records of either true class, reported as 0.
    pub undefined_pairs: Vec<(usize, usize)>,
}

impl MisclassificationMatrix {
    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&self, j: usize, j2: usize) -> f64 {
        self.values[j * self.k + j2]
    }

    /// CSV in the same named-grid layout as the pairwise bound matrix.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("class");
        for name in class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for j in 0..self.k {
            out.push_str(&class_names[j]);
            for j2 in 0..self.k {
                out.push(',');
                out.push_str(&crate::util::format_sig9(self.get(j, j2)));
            }
            out.push('\n');
        }
        out
    }
}

/// M[j][j'] = (mix-ups between j and j') / (records whose true class is j
/// or j').
pub fn misclassification_matrix(preds: &PredictionSet, k: usize) -> Result<MisclassificationMatrix> {
    if preds.records.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    let mut true_counts = vec![0usize; k];
    let mut confusion = vec![0usize; k * k]; // confusion[p*k + t]
    for &(t, p) in &preds.records {
        if t >= k || p >= k {
            return Err(Error::IndexOutOfRange { index: t.max(p), limit: k });
        }
        true_counts[t] += 1;
        confusion[p * k + t] += 1;
    }
    let mut values = vec![0.0; k * k];
    let mut undefined_pairs = Vec::new();
    for j in 0..k {
        for j2 in (j + 1)..k {
            let denom = true_counts[j] + true_counts[j2];
            let rate = if denom == 0 {
                undefined_pairs.push((j, j2));
                0.0
            } else {
                (confusion[j * k + j2] + confusion[j2 * k + j]) as f64 / denom as f64
            };
            values[j * k + j2] = rate;
            values[j2 * k + j] = rate;
        }
    }
    Ok(MisclassificationMatrix {
        k,
        values,
        undefined_pairs,
    })
}

/// Skewness of an error set against the pairwise bound matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewnessReport {
    /// Mean pairwise bound over the misclassified (predicted, true) pairs.
    pub numerator: f64,
    /// Mean pairwise bound over all ordered class pairs.
    pub denominator: f64,
    pub ratio: f64,
    /// Number of misclassified records.
    pub m: usize,
}

impl SkewnessReport {
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Rounded {
            numerator: f64,
            denominator: f64,
            ratio: f64,
            m: usize,
        }
        Ok(serde_json::to_string_pretty(&Rounded {
            numerator: crate::util::round_sig9(self.numerator),
            denominator: crate::util::round_sig9(self.denominator),
            ratio: crate::util::round_sig9(self.ratio),
            m: self.m,
        })?)
    }
}

/// Ratio of the mean bound weight on actual confusion pairs to the mean
/// over all class pairs; > 1 means errors concentrate on intrinsically hard
/// pairs.
pub fn skewness(l: &PairwiseBoundMatrix, preds: &PredictionSet) -> Result<SkewnessReport> {
    let k = l.size();
    let errors: Vec<(usize, usize)> = preds
        .records
        .iter()
        .filter(|&&(t, p)| t != p)
        .map(|&(t, p)| (p, t))
        .collect();
    if errors.is_empty() {
        return Err(Error::NoErrors);
    }
    // Ordered-pair mean; w is symmetric so this equals the unordered mean.
    let total: f64 = (0..k)
        .flat_map(|j| (0..k).map(move |j2| (j, j2)))
        .filter(|&(j, j2)| j != j2)
        .map(|(j, j2)| l.get(j, j2))
        .sum();
    let denominator = total / (k * (k - 1)) as f64;
    if denominator == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let numerator =
        errors.iter().map(|&(p, t)| l.get(p, t)).sum::<f64>() / errors.len() as f64;
    Ok(SkewnessReport {
        numerator,
        denominator,
        ratio: numerator / denominator,
        m: errors.len(),
    })
}

/// Draws min-class-size items per class, without replacement, with a seeded
/// PRNG; output preserves input order.
pub fn balanced_subsample<T: Clone>(
    items: &[(usize, T)],
    k: usize,
    seed: u64,
) -> Result<Vec<(usize, T)>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (idx, &(class, _)) in items.iter().enumerate() {
        if class >= k {
            return Err(Error::IndexOutOfRange { index: class, limit: k });
        }
        by_class[class].push(idx);
    }
    if let Some(j) = by_class.iter().position(|c| c.is_empty()) {
        return Err(Error::EmptyClass(j));
    }
    let min_size = by_class.iter().map(Vec::len).min().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for indices in &by_class {
        let chosen = rand::seq::index::sample(&mut rng, indices.len(), min_size);
        keep.extend(chosen.iter().map(|pos| indices[pos]));
    }
    keep.sort_unstable();
    Ok(keep.into_iter().map(|idx| items[idx].clone()).collect())
}
