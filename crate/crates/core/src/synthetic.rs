//! Seeded synthetic dataset generation from a joint PMF, and the empirical
//! re-estimation of matrices and error rates from the samples.
//!
//! Sampling is deterministic given the seed: records are drawn from one
//! ChaCha8 stream (a fixed, platform-independent algorithm), class first by
//! cumulative inversion over the priors, then outcome from the conditional
//! p(v | class) in ascending (outcome, class) entry order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{AttributeOutcome, ClassAttributeMatrix, ClassPriors};
use crate::pmf::{DeterministicClassifier, JointPMF};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub records: Vec<(AttributeOutcome, usize)>,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub source: String,
    pub class_names: Vec<String>,
    pub attribute_names: Vec<String>,
}

impl SyntheticDataset {
    /// Replaces the autogenerated class/attribute names.
    pub fn with_names(mut self, class_names: Vec<String>, attribute_names: Vec<String>) -> Result<Self> {
        if class_names.len() != self.k || attribute_names.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} class names and {} attribute names for a k={}, n={} dataset",
                class_names.len(),
                attribute_names.len(),
                self.k,
                self.n
            )));
        }
        self.class_names = class_names;
        self.attribute_names = attribute_names;
        Ok(self)
    }

    /// CSV with header `class,<attr names>`; one record per row, the class
    /// name followed by n binary cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class");
        for a in &self.attribute_names {
            out.push(',');
            out.push_str(a);
        }
        out.push('\n');
        for &(v, j) in &self.records {
            out.push_str(&self.class_names[j]);
            for i in 0..self.n {
                out.push(',');
                out.push(if v.get(i) == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, class_names: &[String]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        let mut attribute_names = Vec::new();
        let mut n = 0;
        for (row_idx, rec) in reader.records().enumerate() {
            let line = row_idx + 1;
            let rec = rec.map_err(|e| Error::MalformedCsv {
                line,
                reason: e.to_string(),
            })?;
            if row_idx == 0 {
                if rec.get(0) != Some("class") {
                    return Err(Error::MalformedCsv {
                        line,
                        reason: "first header cell must be the literal \"class\"".into(),
                    });
                }
                attribute_names = rec.iter().skip(1).map(str::to_owned).collect();
                n = attribute_names.len();
                continue;
            }
            if rec.len() != n + 1 {
                return Err(Error::MalformedCsv {
                    line,
                    reason: format!("row has {} cells, expected {}", rec.len(), n + 1),
                });
            }
            let class = class_names
                .iter()
                .position(|c| c == &rec[0])
                .ok_or_else(|| Error::UnknownClassName(rec[0].to_owned()))?;
            let mut bits = 0u64;
            for (i, cell) in rec.iter().skip(1).enumerate() {
                match cell {
                    "1" => bits |= 1 << i,
                    "0" => {}
                    other => {
                        return Err(Error::MalformedCsv {
                            line,
                            reason: format!("cell {other:?} is not a binary attribute value"),
                        })
                    }
                }
            }
            records.push((AttributeOutcome::new(bits, n), class));
        }
        Ok(SyntheticDataset {
            records,
            n,
            k: class_names.len(),
            seed: 0,
            source: "loaded from CSV".into(),
            class_names: class_names.to_vec(),
            attribute_names,
        })
    }
}

fn pick(cum: &[f64], r: f64) -> usize {
    // Strict inequality: zero-mass entries occupy an empty half-open
    // interval and can never be drawn.
    cum.iter()
        .position(|&c| r < c)
        .unwrap_or_else(|| cum.iter().rposition(|&c| c > 0.0).unwrap_or(0))
}

/// Draws `count` independent (outcome, class) records: class from the
/// priors, then outcome from p(v | class). Bit-identical across runs for the
/// same inputs and seed.
pub fn sample_dataset(
    p: &JointPMF,
    priors: &ClassPriors,
    count: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    let n = p.n();
    let k = p.k();
    if priors.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} prior weights for a k={k} PMF",
            priors.len()
        )));
    }
    // Per-class conditional tables in ascending entry order.
    let mut conditional: Vec<Vec<(u64, f64)>> = vec![Vec::new(); k];
    for (v, j, mass) in p.iter() {
        conditional[j].push((v.bits(), mass));
    }
    let mut cond_cum: Vec<Vec<(u64, f64)>> = Vec::with_capacity(k);
    for (j, entries) in conditional.into_iter().enumerate() {
        let prior = priors.weight(j);
        let total: f64 = entries.iter().map(|&(_, m)| m).sum();
        if prior > 0.0 {
            if (total - prior).abs() > 1e-6 {
                return Err(Error::InconsistentPmf {
                    class: j,
                    total,
                    expected: prior,
                });
            }
            let mut acc = 0.0;
            cond_cum.push(
                entries
                    .into_iter()
                    .map(|(bits, m)| {
                        acc += m / prior;
                        (bits, acc)
                    })
                    .collect(),
            );
        } else {
            cond_cum.push(Vec::new());
        }
    }
    let mut prior_cum = Vec::with_capacity(k);
    let mut acc = 0.0;
    for j in 0..k {
        acc += priors.weight(j);
        prior_cum.push(acc);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let class = pick(&prior_cum, rng.gen::<f64>());
        let table = &cond_cum[class];
        let r = rng.gen::<f64>();
        let idx = table
            .iter()
            .position(|&(_, c)| r < c)
            .unwrap_or(table.len() - 1);
        records.push((AttributeOutcome::new(table[idx].0, n), class));
    }
    Ok(SyntheticDataset {
        records,
        n,
        k,
        seed,
        source: format!("sampled from joint PMF (n={n}, k={k}, seed={seed})"),
        class_names: (0..k).map(|j| format!("c{j}")).collect(),
        attribute_names: (0..n).map(|i| format!("a{i}")).collect(),
    })
}

/// Per-class attribute frequencies of the dataset, as a fully known matrix.
pub fn empirical_matrix(d: &SyntheticDataset) -> Result<ClassAttributeMatrix> {
    let mut counts = vec![0usize; d.k];
    let mut hits = vec![0usize; d.k * d.n];
    for &(v, j) in &d.records {
        counts[j] += 1;
        for i in 0..d.n {
            hits[j * d.n + i] += v.get(i) as usize;
        }
    }
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(j));
    }
    let entries = (0..d.k * d.n)
        .map(|idx| crate::matrix::Entry::Known(hits[idx] as f64 / counts[idx / d.n] as f64))
        .collect();
    ClassAttributeMatrix::new(d.class_names.clone(), d.attribute_names.clone(), entries)
}

/// Fraction of records the classifier gets wrong.
pub fn empirical_error(d: &SyntheticDataset, g: &DeterministicClassifier) -> Result<f64> {
    if g.n() != d.n || g.k() != d.k {
        return Err(Error::DimensionMismatch(format!(
            "classifier is over n={}, k={} but the dataset is over n={}, k={}",
            g.n(),
            g.k(),
            d.n,
            d.k
        )));
    }
    if d.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let wrong = d
        .records
        .iter()
        .filter(|&&(v, j)| g.classify(v) != j)
        .count();
    Ok(wrong as f64 / d.records.len() as f64)
}
