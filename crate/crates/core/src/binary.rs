//! Closed-form worst-case bound for balanced binary tasks, the optimal
//! single-attribute classifier, the inductive adversarial construction, and
//! the pairwise bound matrix built from it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{AttributeOutcome, ClassAttributeMatrix, Entry};
use crate::pmf::JointPMF;

/// Closed-form bound for a balanced two-class task:
/// Q = ½(1 − max_i |β_i − α_i|) over fully known attribute columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryBound {
    pub q_value: f64,
    /// The gap-maximizing attribute; `None` when no column is fully known.
    pub best_attribute: Option<usize>,
    /// True when class 0's probability at the best attribute is the larger.
    pub alpha_dominant: bool,
}

fn require_binary(m: &ClassAttributeMatrix) -> Result<()> {
    if m.num_classes() != 2 {
        return Err(Error::NotBinary(m.num_classes()));
    }
    Ok(())
}

/// Q = ½(1 − max_i |β_i − α_i|), ties toward the smallest attribute index.
/// Columns containing an Unknown are skipped: an unconstrained attribute
/// offers the adversary a zero gap, so it can never raise the bound.
pub fn closed_form_q(m: &ClassAttributeMatrix) -> Result<BinaryBound> {
    require_binary(m)?;
    let mut best: Option<(usize, f64, bool)> = None;
    for i in 0..m.num_attributes() {
        if let (Entry::Known(a), Entry::Known(b)) = (m.entry(0, i), m.entry(1, i)) {
            let gap = (a - b).abs();
            if best.map_or(true, |(_, g, _)| gap > g) {
                best = Some((i, gap, a >= b));
            }
        }
    }
    Ok(match best {
        Some((i, gap, alpha_dominant)) => BinaryBound {
            q_value: 0.5 * (1.0 - gap),
            best_attribute: Some(i),
            alpha_dominant,
        },
        None => BinaryBound {
            q_value: 0.5,
            best_attribute: None,
            alpha_dominant: true,
        },
    })
}

/// The single-attribute classifier attaining the bound: look only at the
/// best attribute and pick the class whose probability of exhibiting it is
/// larger.
pub fn g_a_classify(v: AttributeOutcome, b: &BinaryBound) -> Result<usize> {
    let i = b.best_attribute.ok_or(Error::NoUsableAttribute)?;
    let bit = v.get(i) == 1;
    Ok(if bit == b.alpha_dominant { 0 } else { 1 })
}

/// `num / den`, defined as 0 on the exact-zero denominators the inductive
/// construction can produce (where the multiplied factor is also 0).
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Class-independent product distribution: both rows are identical, so the
/// joint factorizes as ½ · Π_i row[i]^{v_i} (1 − row[i])^{1−v_i}.
fn product_pmf(rows: &[Vec<f64>], weights: &[f64], n: usize) -> JointPMF {
    let k = rows.len();
    let mut pmf = JointPMF::empty(n, k);
    for v in AttributeOutcome::all(n) {
        for (j, row) in rows.iter().enumerate() {
            let mut mass = weights[j];
            for (i, &a) in row.iter().enumerate() {
                mass *= if v.get(i) == 1 { a } else { 1.0 - a };
            }
            pmf.add(v, j, mass);
        }
    }
    pmf
}

/// Builds the worst-case balanced distribution for a fully known 2 x n
/// matrix, one attribute at a time.
///
/// The construction first normalizes (flipping columns so the class-0 row
/// dominates and moving the max-gap attribute to the front), then extends a
/// two-outcome base distribution inductively, splitting each outcome's mass
/// so the new attribute's marginals come out right while the per-outcome
/// dominance pattern — class 0 ahead wherever the first attribute fires,
/// behind where it doesn't — is preserved. That pattern pins the Bayes
/// error of every intermediate distribution at Q.
pub fn construct_binary_adversarial(m: &ClassAttributeMatrix) -> Result<JointPMF> {
    require_binary(m)?;
    let n = m.num_attributes();
    if n == 0 {
        return Err(Error::NoUsableAttribute);
    }
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for i in 0..n {
        match (m.entry(0, i), m.entry(1, i)) {
            (Entry::Known(a), Entry::Known(b)) => {
                alpha.push(a);
                beta.push(b);
            }
            (Entry::Unknown, _) => return Err(Error::UnknownEntry { class: 0, attribute: i }),
            (_, Entry::Unknown) => return Err(Error::UnknownEntry { class: 1, attribute: i }),
        }
    }

    // Normalize: flip columns where class 1 dominates, then bring the
    // max-gap attribute to the front.
    let flips: Vec<bool> = (0..n).map(|i| alpha[i] < beta[i]).collect();
    for i in 0..n {
        if flips[i] {
            alpha[i] = 1.0 - alpha[i];
            beta[i] = 1.0 - beta[i];
        }
    }
    let star = (0..n)
        .max_by(|&a, &b| {
            (alpha[a] - beta[a])
                .partial_cmp(&(alpha[b] - beta[b]))
                .unwrap()
                .then(b.cmp(&a)) // ties toward the smallest index
        })
        .unwrap();
    if alpha[star] - beta[star] == 0.0 {
        // Zero gap everywhere: the two rows are identical and the
        // class-independent product distribution is already worst-case.
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|j| {
                (0..n)
                    .map(|i| m.entry(j, i).known().unwrap())
                    .collect()
            })
            .collect();
        return Ok(product_pmf(&rows, &[0.5, 0.5], n));
    }
    let mut perm = vec![star];
    perm.extend((0..n).filter(|&i| i != star));
    let a: Vec<f64> = perm.iter().map(|&i| alpha[i]).collect();
    let b: Vec<f64> = perm.iter().map(|&i| beta[i]).collect();
    let (a1, b1) = (a[0], b[0]);

    // Working coordinates: bit t of an outcome is permuted attribute t, so
    // bit 0 is the max-gap attribute and each step appends one bit.
    // p[v] = [mass for class 0, mass for class 1].
    let mut p: Vec<[f64; 2]> = vec![
        [(1.0 - a1) / 2.0, (1.0 - b1) / 2.0], // outcome 0
        [a1 / 2.0, b1 / 2.0],                 // outcome 1
    ];
    for t in 1..n {
        let (ai, bi) = (a[t], b[t]);
        let mut next = vec![[0.0f64; 2]; p.len() * 2];
        let hi = 1usize << t;
        for (u, &[p0, p1]) in p.iter().enumerate() {
            let first_fires = u & 1 == 1;
            let (lo_cell, hi_cell) = if ai > a1 {
                // The new attribute fires more often than the first even for
                // class 0: where the first fires, the new one always does;
                // elsewhere mass moves up to raise both marginals.
                debug_assert!(bi >= b1);
                if first_fires {
                    ([0.0, 0.0], [p0, p1])
                } else {
                    let d = p1 - p0;
                    let up0 = ratio(ai - a1, 1.0 - a1) * p0;
                    let lo0 = ratio(1.0 - ai, 1.0 - a1) * p0;
                    (
                        [lo0, lo0 + ratio(ai - bi, a1 - b1) * d],
                        [up0, up0 + ratio((a1 - b1) - (ai - bi), a1 - b1) * d],
                    )
                }
            } else if bi < b1 {
                // The new attribute fires less often than the first even for
                // class 1: where the first is silent, so is the new one;
                // elsewhere mass moves down.
                if first_fires {
                    let d = p0 - p1;
                    let up1 = ratio(bi, b1) * p1;
                    let lo1 = ratio(b1 - bi, b1) * p1;
                    (
                        [lo1 + ratio((a1 - b1) - (ai - bi), a1 - b1) * d, lo1],
                        [up1 + ratio(ai - bi, a1 - b1) * d, up1],
                    )
                } else {
                    ([p0, p1], [0.0, 0.0])
                }
            } else {
                // Nested interval b1 <= bi <= ai <= a1: class 1 keeps its
                // alignment with the first attribute; class 0 interpolates.
                debug_assert!(ai <= a1 && bi >= b1);
                if first_fires {
                    let d = p0 - p1;
                    (
                        [ratio(a1 - ai, a1 - b1) * d, 0.0],
                        [p1 + ratio(ai - b1, a1 - b1) * d, p1],
                    )
                } else {
                    let d = p1 - p0;
                    (
                        [p0, p0 + ratio(a1 - bi, a1 - b1) * d],
                        [0.0, ratio(bi - b1, a1 - b1) * d],
                    )
                }
            };
            next[u] = lo_cell;
            next[u | hi] = hi_cell;
        }
        p = next;
        #[cfg(debug_assertions)]
        for (u, &[p0, p1]) in p.iter().enumerate() {
            debug_assert!(p0 >= -1e-12 && p1 >= -1e-12, "negative mass at step {t}");
            if u & 1 == 1 {
                debug_assert!(p0 >= p1 - 1e-12, "dominance broken at step {t}");
            } else {
                debug_assert!(p0 <= p1 + 1e-12, "dominance broken at step {t}");
            }
        }
    }

    // Map back to original attribute coordinates, undoing the permutation
    // and the flips.
    let mut pmf = JointPMF::empty(n, 2);
    for (u, &cell) in p.iter().enumerate() {
        let mut bits = 0u64;
        for (t, &orig) in perm.iter().enumerate() {
            let mut bit = (u >> t) & 1 == 1;
            if flips[orig] {
                bit = !bit;
            }
            if bit {
                bits |= 1 << orig;
            }
        }
        let v = AttributeOutcome::new(bits, n);
        for (j, mass) in cell.into_iter().enumerate() {
            // Exact-arithmetic nonnegativity survives as float dust.
            pmf.add(v, j, mass.max(0.0));
        }
    }
    pmf.cleanup();
    Ok(pmf)
}

/// Symmetric k x k matrix of pairwise binary bounds, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseBoundMatrix {
    class_names: Vec<String>,
    /// Row-major k x k values in [0, ½].
    values: Vec<f64>,
}

impl PairwiseBoundMatrix {
    pub fn size(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn get(&self, j: usize, j2: usize) -> f64 {
        self.values[j * self.size() + j2]
    }

    pub fn from_values(class_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let k = class_names.len();
        if values.len() != k * k {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {k}x{k} pairwise matrix",
                values.len()
            )));
        }
        for j in 0..k {
            if values[j * k + j] != 0.0 {
                return Err(Error::DimensionMismatch(format!(
                    "nonzero diagonal at class {j}"
                )));
            }
            for j2 in 0..k {
                if (values[j * k + j2] - values[j2 * k + j]).abs() > 1e-12 {
                    return Err(Error::DimensionMismatch(format!(
                        "asymmetric pairwise matrix at ({j}, {j2})"
                    )));
                }
            }
        }
        Ok(PairwiseBoundMatrix { class_names, values })
    }

    /// CSV with a class-name header row and one named row per class,
    /// values at 9 significant digits.
    pub fn to_csv(&self) -> String {
        let k = self.size();
        let mut out = String::from("class");
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for j in 0..k {
            out.push_str(&self.class_names[j]);
            for j2 in 0..k {
                out.push(',');
                out.push_str(&crate::util::format_sig9(self.get(j, j2)));
            }
            out.push('\n');
        }
        out
    }
}

/// L[j][j'] = the balanced binary closed-form bound for classes j and j'.
/// Pairs are computed in parallel; assembly order is deterministic.
pub fn pairwise_bound_matrix(m: &ClassAttributeMatrix) -> Result<PairwiseBoundMatrix> {
    let k = m.num_classes();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|j| ((j + 1)..k).map(move |j2| (j, j2)))
        .collect();
    let bounds: Vec<((usize, usize), f64)> = pairs
        .par_iter()
        .map(|&(j, j2)| {
            let sub = m.pair_submatrix(j, j2)?;
            Ok(((j, j2), closed_form_q(&sub)?.q_value))
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; k * k];
    for ((j, j2), q) in bounds {
        values[j * k + j2] = q;
        values[j2 * k + j] = q;
    }
    PairwiseBoundMatrix::from_values(m.class_names().to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::compute_exact_bound;
    use crate::matrix::ClassPriors;
    use crate::pmf::bayes_error;

    fn matrix(csv: &str) -> ClassAttributeMatrix {
        ClassAttributeMatrix::from_csv(csv).unwrap()
    }

    fn outcome(s: &str) -> AttributeOutcome {
        AttributeOutcome::from_bit_string(s).unwrap()
    }

    #[test]
    fn closed_form_on_uninformative_matrix() {
        let m = matrix("class,a1,a2\nc1,0.5,0.5\nc2,0.5,0.5");
        let b = closed_form_q(&m).unwrap();
        assert_eq!(b.q_value, 0.5);
        assert_eq!(b.best_attribute, Some(0)); // gap 0 everywhere, smallest index
    }

    #[test]
    fn closed_form_on_deterministic_attribute() {
        let m = matrix("class,a1\nc1,1\nc2,0");
        let b = closed_form_q(&m).unwrap();
        assert_eq!(b.q_value, 0.0);
        assert_eq!(b.best_attribute, Some(0));
        assert!(b.alpha_dominant);
    }

    #[test]
    fn closed_form_picks_largest_gap() {
        let m = matrix("class,a1,a2\nc1,0.9,0.6\nc2,0.3,0.5");
        let b = closed_form_q(&m).unwrap();
        assert!((b.q_value - 0.2).abs() < 1e-15);
        assert_eq!(b.best_attribute, Some(0));
    }

    #[test]
    fn closed_form_skips_unknown_columns() {
        let m = matrix("class,a1,a2\nc1,*,0.9\nc2,0.5,0.1");
        let b = closed_form_q(&m).unwrap();
        assert!((b.q_value - 0.1).abs() < 1e-15);
        assert_eq!(b.best_attribute, Some(1));

        let all_unknown = matrix("class,a1\nc1,*\nc2,*");
        let b = closed_form_q(&all_unknown).unwrap();
        assert_eq!(b.q_value, 0.5);
        assert_eq!(b.best_attribute, None);
        assert!(matches!(
            g_a_classify(outcome("0"), &b),
            Err(Error::NoUsableAttribute)
        ));
    }

    #[test]
    fn closed_form_rejects_multiclass() {
        let m = matrix("class,a1\nc1,0.5\nc2,0.5\nc3,0.5");
        assert!(matches!(closed_form_q(&m), Err(Error::NotBinary(3))));
    }

    #[test]
    fn single_attribute_classifier_follows_the_dominant_row() {
        let m = matrix("class,a1,a2\nc1,0.9,0.6\nc2,0.3,0.5");
        let b = closed_form_q(&m).unwrap();
        assert_eq!(g_a_classify(outcome("10"), &b).unwrap(), 0);
        assert_eq!(g_a_classify(outcome("00"), &b).unwrap(), 1);

        let flipped = matrix("class,a1\nc1,0.2\nc2,0.8");
        let b = closed_form_q(&flipped).unwrap();
        assert!(!b.alpha_dominant);
        assert_eq!(g_a_classify(outcome("1"), &b).unwrap(), 1);
        assert_eq!(g_a_classify(outcome("0"), &b).unwrap(), 0);
    }

    #[test]
    fn base_case_masses() {
        let m = matrix("class,a1\nc1,0.8\nc2,0.2");
        let p = construct_binary_adversarial(&m).unwrap();
        assert!((p.prob(outcome("1"), 0) - 0.4).abs() < 1e-15);
        assert!((p.prob(outcome("0"), 0) - 0.1).abs() < 1e-15);
        assert!((p.prob(outcome("1"), 1) - 0.1).abs() < 1e-15);
        assert!((p.prob(outcome("0"), 1) - 0.4).abs() < 1e-15);
    }

    fn check_witness(m: &ClassAttributeMatrix) {
        let p = construct_binary_adversarial(m).unwrap();
        p.validate().unwrap();
        let priors = ClassPriors::uniform(2);
        assert!(p.residual_against(m, &priors) < 1e-9, "{}", m.to_csv());
        let q = closed_form_q(m).unwrap().q_value;
        assert!((bayes_error(&p) - q).abs() < 1e-9, "{}", m.to_csv());
        let exact = compute_exact_bound(m, &priors).unwrap().q_value;
        assert!((q - exact).abs() < 1e-8, "{}", m.to_csv());
    }

    #[test]
    fn zero_gap_matrix_yields_product_pmf() {
        let m = matrix("class,a1,a2\nc1,0.5,0.5\nc2,0.5,0.5");
        let p = construct_binary_adversarial(&m).unwrap();
        for v in AttributeOutcome::all(2) {
            for j in 0..2 {
                assert!((p.prob(v, j) - 0.125).abs() < 1e-15);
            }
        }
        assert!((bayes_error(&p) - 0.5).abs() < 1e-15);
        check_witness(&m);
    }

    #[test]
    fn nested_interval_construction_matches_lp() {
        // Second attribute's interval [0.1, 0.6] nested in [0.2, 0.8].
        let m = matrix("class,a1,a2\nc1,0.8,0.6\nc2,0.2,0.1");
        check_witness(&m);
        let p = construct_binary_adversarial(&m).unwrap();
        assert!((bayes_error(&p) - 0.2).abs() < 1e-9);
    }

    #[test]
    fn right_shifted_interval_construction_matches_lp() {
        // alpha_2 > alpha_1 after normalization.
        let m = matrix("class,a1,a2\nc1,0.7,0.9\nc2,0.2,0.6");
        check_witness(&m);
    }

    #[test]
    fn left_shifted_interval_construction_matches_lp() {
        // beta_2 < beta_1.
        let m = matrix("class,a1,a2\nc1,0.7,0.5\nc2,0.2,0.05");
        check_witness(&m);
    }

    #[test]
    fn flipped_columns_are_normalized() {
        let m = matrix("class,a1,a2\nc1,0.2,0.6\nc2,0.8,0.1");
        check_witness(&m);
    }

    #[test]
    fn zero_denominator_boundaries() {
        // beta_1 = 0 forces the left-shifted split's 0/0 ratios.
        check_witness(&matrix("class,a1,a2\nc1,0.7,0.4\nc2,0,0"));
        // Deterministic first attribute.
        check_witness(&matrix("class,a1,a2\nc1,1,0.6\nc2,0,0.3"));
        check_witness(&matrix("class,a1,a2\nc1,1,1\nc2,0,1"));
    }

    #[test]
    fn longer_chains_cover_all_cases() {
        check_witness(&matrix(
            "class,a1,a2,a3,a4\nc1,0.6,0.9,0.3,0.5\nc2,0.3,0.7,0.1,0.5",
        ));
        check_witness(&matrix(
            "class,a1,a2,a3\nc1,0.5,0.25,0.75\nc2,0.5,0.25,0.75",
        ));
    }

    #[test]
    fn construction_requires_known_entries() {
        let m = matrix("class,a1\nc1,*\nc2,0.5");
        assert!(matches!(
            construct_binary_adversarial(&m),
            Err(Error::UnknownEntry { class: 0, attribute: 0 })
        ));
    }

    #[test]
    fn pairwise_matrix_identical_and_disjoint_rows() {
        let m = matrix("class,a1,a2\nc1,1,0.3\nc2,0,0.3\nc3,1,0.3");
        let l = pairwise_bound_matrix(&m).unwrap();
        assert_eq!(l.get(0, 1), 0.0); // gap-1 attribute separates them
        assert_eq!(l.get(0, 2), 0.5); // identical rows
        for j in 0..3 {
            assert_eq!(l.get(j, j), 0.0);
            for j2 in 0..3 {
                assert_eq!(l.get(j, j2), l.get(j2, j));
            }
        }
    }

    #[test]
    fn pairwise_matrix_matches_per_pair_closed_form() {
        let m = matrix(
            "class,a1,a2,a3\nc1,0.9,0.2,0.6\nc2,0.1,0.8,0.5\nc3,0.4,0.4,0.3\nc4,0.7,0.7,0.9",
        );
        let l = pairwise_bound_matrix(&m).unwrap();
        for j in 0..4 {
            for j2 in (j + 1)..4 {
                let expect = closed_form_q(&m.pair_submatrix(j, j2).unwrap())
                    .unwrap()
                    .q_value;
                assert_eq!(l.get(j, j2), expect);
                assert!(l.get(j, j2) >= 0.0 && l.get(j, j2) <= 0.5);
            }
        }
    }

    #[test]
    fn pairwise_csv_has_named_header_and_rows() {
        let m = matrix("class,a1\nc1,1\nc2,0");
        let csv = pairwise_bound_matrix(&m).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "class,c1,c2");
        assert!(lines.next().unwrap().starts_with("c1,0,"));
    }
}
