//! Class-attribute matrices, class priors, attribute outcomes, and the
//! elementary transforms on them.
//!
//! A class-attribute matrix is a k x n table whose entry (j, i) is the
//! probability that an item of class j exhibits attribute i, or `Unknown`
//! when that relation is unspecified. All values are immutable after
//! construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for CSV rounding artifacts: values this far outside [0, 1] are
/// clamped, anything worse is rejected.
const ENTRY_SLACK: f64 = 1e-12;

/// A single cell of a class-attribute matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entry {
    Known(f64),
    Unknown,
}

impl Entry {
    pub fn known(self) -> Option<f64> {
        match self {
            Entry::Known(p) => Some(p),
            Entry::Unknown => None,
        }
    }

    pub fn is_known(self) -> bool {
        matches!(self, Entry::Known(_))
    }
}

impl Serialize for Entry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.known().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<f64>::deserialize(d)? {
            Some(p) => Entry::Known(p),
            None => Entry::Unknown,
        })
    }
}

/// A validated k x n class-attribute matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct ClassAttributeMatrix {
    class_names: Vec<String>,
    attribute_names: Vec<String>,
    /// Row-major, `k * n` cells.
    entries: Vec<Entry>,
}

/// Serde mirror of [`ClassAttributeMatrix`] without the validation.
#[derive(Serialize, Deserialize)]
struct RawMatrix {
    class_names: Vec<String>,
    attribute_names: Vec<String>,
    entries: Vec<Vec<Entry>>,
}

impl From<ClassAttributeMatrix> for RawMatrix {
    fn from(m: ClassAttributeMatrix) -> Self {
        let entries = (0..m.num_classes())
            .map(|j| m.row(j).to_vec())
            .collect();
        RawMatrix {
            class_names: m.class_names,
            attribute_names: m.attribute_names,
            entries,
        }
    }
}

impl TryFrom<RawMatrix> for ClassAttributeMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        let n = raw.attribute_names.len();
        let mut entries = Vec::with_capacity(raw.entries.len() * n);
        for (line, row) in raw.entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MalformedCsv {
                    line,
                    reason: format!("row has {} cells, expected {}", row.len(), n),
                });
            }
            entries.extend_from_slice(row);
        }
        ClassAttributeMatrix::new(raw.class_names, raw.attribute_names, entries)
    }
}

fn check_unique(names: &[String], kind: &'static str) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateName {
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

impl ClassAttributeMatrix {
    /// Validates and builds a matrix from row-major entries.
    pub fn new(
        class_names: Vec<String>,
        attribute_names: Vec<String>,
        mut entries: Vec<Entry>,
    ) -> Result<Self> {
        let k = class_names.len();
        let n = attribute_names.len();
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        check_unique(&class_names, "class")?;
        check_unique(&attribute_names, "attribute")?;
        if entries.len() != k * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                entries.len(),
                k,
                n
            )));
        }
        for (idx, cell) in entries.iter_mut().enumerate() {
            if let Entry::Known(p) = cell {
                if !p.is_finite() || *p < -ENTRY_SLACK || *p > 1.0 + ENTRY_SLACK {
                    return Err(Error::OutOfRange {
                        class: idx / n,
                        attribute: idx % n,
                        value: *p,
                    });
                }
                *p = p.clamp(0.0, 1.0);
            }
        }
        Ok(ClassAttributeMatrix {
            class_names,
            attribute_names,
            entries,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn entry(&self, class: usize, attribute: usize) -> Entry {
        self.entries[class * self.num_attributes() + attribute]
    }

    pub fn row(&self, class: usize) -> &[Entry] {
        let n = self.num_attributes();
        &self.entries[class * n..(class + 1) * n]
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attribute_names.iter().position(|a| a == name)
    }

    /// Parses the `class,<attr>,...` CSV format. `*` and empty cells map to
    /// `Unknown`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = match records.next() {
            Some(rec) => rec.map_err(|e| csv_error(0, e))?,
            None => {
                return Err(Error::MalformedCsv {
                    line: 0,
                    reason: "empty document".into(),
                })
            }
        };
        if header.get(0) != Some("class") {
            return Err(Error::MalformedCsv {
                line: 1,
                reason: "first header cell must be the literal \"class\"".into(),
            });
        }
        let attribute_names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let n = attribute_names.len();

        let mut class_names = Vec::new();
        let mut entries = Vec::new();
        for (row_idx, rec) in records.enumerate() {
            let line = row_idx + 2;
            let rec = rec.map_err(|e| csv_error(line, e))?;
            if rec.len() != n + 1 {
                return Err(Error::MalformedCsv {
                    line,
                    reason: format!("row has {} cells, expected {}", rec.len(), n + 1),
                });
            }
            class_names.push(rec[0].to_owned());
            for (i, cell) in rec.iter().skip(1).enumerate() {
                entries.push(parse_cell(cell, line, row_idx, i)?);
            }
        }
        ClassAttributeMatrix::new(class_names, attribute_names, entries)
    }

    /// Emits the same CSV format accepted by [`ClassAttributeMatrix::from_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class");
        for a in &self.attribute_names {
            out.push(',');
            out.push_str(a);
        }
        out.push('\n');
        for (j, c) in self.class_names.iter().enumerate() {
            out.push_str(c);
            for cell in self.row(j) {
                out.push(',');
                match cell {
                    Entry::Known(p) => out.push_str(&format!("{p}")),
                    Entry::Unknown => out.push('*'),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Keeps only the attribute columns selected by `mask`, in mask order.
    pub fn restrict(&self, mask: &SelectionMask) -> Result<Self> {
        mask.check(self.num_attributes())?;
        let attribute_names = mask
            .indices()
            .iter()
            .map(|&i| self.attribute_names[i].clone())
            .collect();
        let mut entries = Vec::with_capacity(self.num_classes() * mask.len());
        for j in 0..self.num_classes() {
            for &i in mask.indices() {
                entries.push(self.entry(j, i));
            }
        }
        ClassAttributeMatrix::new_unchecked_names(self.class_names.clone(), attribute_names, entries)
    }

    /// The 2 x n matrix of rows `a` (alpha row) and `b` (beta row).
    pub fn pair_submatrix(&self, a: usize, b: usize) -> Result<Self> {
        let k = self.num_classes();
        for idx in [a, b] {
            if idx >= k {
                return Err(Error::IndexOutOfRange { index: idx, limit: k });
            }
        }
        if a == b {
            return Err(Error::SameClass(a));
        }
        let mut entries = Vec::with_capacity(2 * self.num_attributes());
        entries.extend_from_slice(self.row(a));
        entries.extend_from_slice(self.row(b));
        ClassAttributeMatrix::new_unchecked_names(
            vec![self.class_names[a].clone(), self.class_names[b].clone()],
            self.attribute_names.clone(),
            entries,
        )
    }

    /// Replaces every entry `e` in column `i` by `1 - e`.
    pub fn flip_attribute(&self, i: usize) -> Result<Self> {
        let n = self.num_attributes();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, limit: n });
        }
        let mut entries = self.entries.clone();
        for j in 0..self.num_classes() {
            match &mut entries[j * n + i] {
                Entry::Known(p) => *p = 1.0 - *p,
                Entry::Unknown => return Err(Error::UnknownEntry { class: j, attribute: i }),
            }
        }
        Ok(ClassAttributeMatrix {
            class_names: self.class_names.clone(),
            attribute_names: self.attribute_names.clone(),
            entries,
        })
    }

    // Internal: entries already validated, names known unique (restrict and
    // pair_submatrix can produce a k x 0 matrix, which new() accepts too).
    fn new_unchecked_names(
        class_names: Vec<String>,
        attribute_names: Vec<String>,
        entries: Vec<Entry>,
    ) -> Result<Self> {
        ClassAttributeMatrix::new(class_names, attribute_names, entries)
    }
}

fn parse_cell(cell: &str, line: usize, class: usize, attribute: usize) -> Result<Entry> {
    if cell.is_empty() || cell == "*" {
        return Ok(Entry::Unknown);
    }
    let value: f64 = cell.parse().map_err(|_| Error::MalformedCsv {
        line,
        reason: format!("cell {cell:?} is not a probability, \"*\", or empty"),
    })?;
    if !value.is_finite() || value < -ENTRY_SLACK || value > 1.0 + ENTRY_SLACK {
        return Err(Error::OutOfRange {
            class,
            attribute,
            value,
        });
    }
    Ok(Entry::Known(value.clamp(0.0, 1.0)))
}

fn csv_error(line: usize, e: csv::Error) -> Error {
    Error::MalformedCsv {
        line,
        reason: e.to_string(),
    }
}

/// Per-class prior weights, in class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassPriors {
    weights: Vec<f64>,
}

impl From<ClassPriors> for Vec<f64> {
    fn from(p: ClassPriors) -> Self {
        p.weights
    }
}

impl TryFrom<Vec<f64>> for ClassPriors {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        ClassPriors::new(weights)
    }
}

impl ClassPriors {
    /// Validates weights: nonnegative, summing to 1 within 1e-12.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPriors("no classes".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidPriors(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPriors(format!("weights sum to {total}, expected 1")));
        }
        Ok(ClassPriors { weights })
    }

    /// The uniform prior 1/k per class.
    pub fn uniform(k: usize) -> Self {
        ClassPriors {
            weights: vec![1.0 / k as f64; k],
        }
    }

    /// Parses the `class,weight` CSV, aligning rows to `class_names` order.
    pub fn from_csv(text: &str, class_names: &[String]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut weights = vec![None; class_names.len()];
        for (row_idx, rec) in reader.records().enumerate() {
            let line = row_idx + 1;
            let rec = rec.map_err(|e| csv_error(line, e))?;
            // Tolerate an optional "class,weight" header row.
            if row_idx == 0 && rec.get(0) == Some("class") {
                continue;
            }
            if rec.len() != 2 {
                return Err(Error::MalformedCsv {
                    line,
                    reason: format!("row has {} cells, expected 2", rec.len()),
                });
            }
            let class = class_names
                .iter()
                .position(|c| c == &rec[0])
                .ok_or_else(|| Error::UnknownClassName(rec[0].to_owned()))?;
            let weight: f64 = rec[1].parse().map_err(|_| Error::MalformedCsv {
                line,
                reason: format!("weight {:?} is not a number", &rec[1]),
            })?;
            if weights[class].replace(weight).is_some() {
                return Err(Error::DuplicateName {
                    kind: "class",
                    name: rec[0].to_owned(),
                });
            }
        }
        let weights = weights
            .into_iter()
            .enumerate()
            .map(|(j, w)| {
                w.ok_or_else(|| Error::InvalidPriors(format!("missing weight for class {}", class_names[j])))
            })
            .collect::<Result<Vec<_>>>()?;
        ClassPriors::new(weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, class: usize) -> f64 {
        self.weights[class]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        let k = self.weights.len() as f64;
        self.weights.iter().all(|w| (w - 1.0 / k).abs() <= 1e-12)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }
}

/// A binary attribute vector of fixed length n.
///
/// Attribute i occupies zero-based bit i (LSB-first) of the integer
/// encoding; the binary-string form writes attribute 0 as the leftmost
/// character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeOutcome {
    bits: u64,
    n: usize,
}

impl AttributeOutcome {
    pub fn new(bits: u64, n: usize) -> Self {
        debug_assert!(n == 64 || bits < (1u64 << n));
        AttributeOutcome { bits, n }
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn len(self) -> usize {
        self.n
    }

    pub fn is_empty(self) -> bool {
        self.n == 0
    }

    /// Value of attribute i (0 or 1).
    pub fn get(self, i: usize) -> u8 {
        debug_assert!(i < self.n);
        ((self.bits >> i) & 1) as u8
    }

    /// All 2^n outcomes in ascending integer order.
    pub fn all(n: usize) -> impl Iterator<Item = AttributeOutcome> {
        assert!(n < 63, "outcome space 2^{n} is not enumerable");
        (0u64..(1u64 << n)).map(move |bits| AttributeOutcome { bits, n })
    }

    /// Binary-string form: character t (left-to-right) is attribute t.
    pub fn to_bit_string(self) -> String {
        (0..self.n)
            .map(|i| if self.get(i) == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self> {
        let n = s.len();
        if n > 62 {
            return Err(Error::DimensionMismatch(format!("{n} attributes is too many")));
        }
        let mut bits = 0u64;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '1' => bits |= 1 << i,
                '0' => {}
                other => {
                    return Err(Error::DimensionMismatch(format!(
                        "invalid bit character {other:?} in outcome string"
                    )))
                }
            }
        }
        Ok(AttributeOutcome { bits, n })
    }
}

/// An ordered selection of distinct attribute indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionMask {
    indices: Vec<usize>,
}

impl SelectionMask {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &i in &indices {
            if !seen.insert(i) {
                return Err(Error::DuplicateName {
                    kind: "attribute index",
                    name: i.to_string(),
                });
            }
        }
        Ok(SelectionMask { indices })
    }

    pub fn full(n: usize) -> Self {
        SelectionMask {
            indices: (0..n).collect(),
        }
    }

    pub fn empty() -> Self {
        SelectionMask { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn push(&mut self, i: usize) {
        debug_assert!(!self.contains(i));
        self.indices.push(i);
    }

    fn check(&self, n: usize) -> Result<()> {
        for &i in &self.indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, limit: n });
            }
        }
        Ok(())
    }
}
