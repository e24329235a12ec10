//! Matching-based lower bound: pair up classes to maximize the total
//! pairwise binary bound, giving Q ≥ (2/k) Σ w_e, plus the composite
//! adversarial distribution witnessing it.

use rustworkx_core::max_weight_matching::max_weight_matching as blossom;
use rustworkx_core::petgraph::graph::UnGraph;
use serde::Serialize;

use crate::binary::{construct_binary_adversarial, PairwiseBoundMatrix};
use crate::error::{Error, Result};
use crate::matrix::{AttributeOutcome, ClassAttributeMatrix, ClassPriors, Entry};
use crate::pmf::JointPMF;

/// Weights are scaled by this factor and rounded to integers for the exact
/// blossom solver; ties below 1e-12 are treated as equal.
const WEIGHT_SCALE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    /// Matched class pairs, each with the smaller index first, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Sum of the pairwise weights over `edges`.
    pub total_weight: f64,
    /// Classes left out of the matching, ascending.
    pub unmatched: Vec<usize>,
}

fn assemble(k: usize, pairs: impl IntoIterator<Item = (usize, usize)>, l: &PairwiseBoundMatrix) -> MatchingResult {
    let mut edges: Vec<(usize, usize)> = pairs
        .into_iter()
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    let mut covered = vec![false; k];
    for &(a, b) in &edges {
        covered[a] = true;
        covered[b] = true;
    }
    let total_weight = edges.iter().map(|&(a, b)| l.get(a, b)).sum();
    MatchingResult {
        edges,
        total_weight,
        unmatched: (0..k).filter(|&j| !covered[j]).collect(),
    }
}

/// Exact maximum-weight matching of the complete graph on classes with
/// weights L[j][j'], via the blossom algorithm on integer-scaled weights.
pub fn max_weight_matching(l: &PairwiseBoundMatrix) -> MatchingResult {
    let k = l.size();
    let mut graph: UnGraph<(), i128> = UnGraph::default();
    let nodes: Vec<_> = (0..k).map(|_| graph.add_node(())).collect();
    for j in 0..k {
        for j2 in (j + 1)..k {
            let w = l.get(j, j2);
            if w > 0.0 {
                graph.add_edge(nodes[j], nodes[j2], (w * WEIGHT_SCALE).round() as i128);
            }
        }
    }
    let matched = blossom(&graph, false, |e| Ok::<i128, Error>(*e.weight()), true)
        .expect("weight callback is infallible");
    assemble(k, matched, l)
}

/// Exhaustive reference over all matchings; exponential, intended for
/// validation at k ≤ 10.
pub fn max_weight_matching_bruteforce(l: &PairwiseBoundMatrix) -> MatchingResult {
    let k = l.size();
    assert!(k <= 10, "exhaustive matching is limited to k <= 10");
    fn search(
        l: &PairwiseBoundMatrix,
        used: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        best: &mut (f64, Vec<(usize, usize)>),
        weight: f64,
    ) {
        let first = match used.iter().position(|&u| !u) {
            Some(f) => f,
            None => {
                if weight > best.0 {
                    *best = (weight, current.clone());
                }
                return;
            }
        };
        used[first] = true;
        // Leave `first` unmatched.
        search(l, used, current, best, weight);
        for j in (first + 1)..used.len() {
            if !used[j] {
                used[j] = true;
                current.push((first, j));
                search(l, used, current, best, weight + l.get(first, j));
                current.pop();
                used[j] = false;
            }
        }
        used[first] = false;
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    search(l, &mut vec![false; k], &mut Vec::new(), &mut best, 0.0);
    assemble(k, best.1, l)
}

/// The Q ≥ (2/k) Σ w_e bound from the maximum-weight matching of the
/// pairwise bound graph. Stated for balanced classes only.
pub fn matching_lower_bound(
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
) -> Result<(f64, MatchingResult)> {
    if priors.len() != m.num_classes() || !priors.is_uniform() {
        return Err(Error::NonUniformPriors);
    }
    let l = crate::binary::pairwise_bound_matrix(m)?;
    let matching = max_weight_matching(&l);
    let bound = 2.0 / m.num_classes() as f64 * matching.total_weight;
    Ok((bound, matching))
}

/// Product distribution over outcomes matching row j's attribute marginals
/// under independence; indexed by outcome bits.
pub fn independent_pmf_for_class(m: &ClassAttributeMatrix, j: usize) -> Result<Vec<f64>> {
    let n = m.num_attributes();
    let mut row = Vec::with_capacity(n);
    for i in 0..n {
        match m.entry(j, i) {
            Entry::Known(a) => row.push(a),
            Entry::Unknown => return Err(Error::UnknownEntry { class: j, attribute: i }),
        }
    }
    let mut out = vec![0.0; 1 << n];
    for (bits, slot) in out.iter_mut().enumerate() {
        let mut mass = 1.0;
        for (i, &a) in row.iter().enumerate() {
            mass *= if (bits >> i) & 1 == 1 { a } else { 1.0 - a };
        }
        *slot = mass;
    }
    Ok(out)
}

/// The composite adversarial distribution: each matched pair contributes its
/// two-class worst case at weight 2/k, each unmatched class its independent
/// product at weight 1/k. Balanced by construction and feasible for `m`.
pub fn construct_matching_adversarial(
    m: &ClassAttributeMatrix,
    matching: &MatchingResult,
) -> Result<JointPMF> {
    let n = m.num_attributes();
    let k = m.num_classes();
    let mut pmf = JointPMF::empty(n, k);
    for &(j, j2) in &matching.edges {
        let sub = m.pair_submatrix(j, j2)?;
        let pair_pmf = construct_binary_adversarial(&sub)?;
        for (v, cls, mass) in pair_pmf.iter() {
            let class = if cls == 0 { j } else { j2 };
            pmf.add(v, class, mass * 2.0 / k as f64);
        }
    }
    for &c in &matching.unmatched {
        for (bits, mass) in independent_pmf_for_class(m, c)?.into_iter().enumerate() {
            pmf.add(AttributeOutcome::new(bits as u64, n), c, mass / k as f64);
        }
    }
    pmf.cleanup();
    Ok(pmf)
}

#[derive(Serialize)]
struct ReportEdge {
    classes: [String; 2],
    weight: f64,
}

#[derive(Serialize)]
struct Report {
    edges: Vec<ReportEdge>,
    unmatched: Vec<String>,
    total_weight: f64,
    bound: f64,
}

/// JSON report naming matched pairs, per-edge weights, the total, and the
/// resulting bound.
pub fn matching_report_json(
    l: &PairwiseBoundMatrix,
    matching: &MatchingResult,
    bound: f64,
) -> Result<String> {
    let names = l.class_names();
    let report = Report {
        edges: matching
            .edges
            .iter()
            .map(|&(a, b)| ReportEdge {
                classes: [names[a].clone(), names[b].clone()],
                weight: crate::util::round_sig9(l.get(a, b)),
            })
            .collect(),
        unmatched: matching.unmatched.iter().map(|&c| names[c].clone()).collect(),
        total_weight: crate::util::round_sig9(matching.total_weight),
        bound: crate::util::round_sig9(bound),
    };
    Ok(serde_json::to_string_pretty(&report)?)
}
