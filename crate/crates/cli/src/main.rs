//! Batch command-line front end: computes worst-case error bounds and their
//! witnesses from class-attribute matrices, with stable machine-readable
//! JSON/CSV outputs and human summaries on standard error.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use zsl_bound::analysis::{
    balanced_subsample, greedy_select_with, misclassification_matrix, skewness, GreedyBound,
    PredictionSet,
};
use zsl_bound::binary::pairwise_bound_matrix;
use zsl_bound::exact::{compute_exact_bound_capped, DEFAULT_ATTRIBUTE_CAP};
use zsl_bound::matching::{matching_lower_bound, matching_report_json};
use zsl_bound::minimax::{
    compute_optimal_classifier_capped, worst_case_error_capped, RandomizedClassifier,
};
use zsl_bound::pmf::{bayes_error, JointPMF};
use zsl_bound::synthetic::sample_dataset;
use zsl_bound::util::{format_sig9, round_sig9};
use zsl_bound::{ClassAttributeMatrix, ClassPriors, Error, SelectionMask};

#[derive(Parser)]
#[command(
    name = "zslb",
    about = "Worst-case error bounds for attribute-based zero-shot classification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand that reads a class-attribute matrix.
#[derive(Args)]
struct MatrixArgs {
    /// Class-attribute matrix CSV (header: class,<attribute names>).
    #[arg(long)]
    matrix: PathBuf,
    /// Class priors CSV (class,weight); uniform when omitted.
    #[arg(long)]
    priors: Option<PathBuf>,
    /// Comma-separated attribute names or indices to keep; empty keeps none.
    #[arg(long)]
    attrs: Option<String>,
    /// Maximum attribute count accepted by the 2^n-outcome solvers.
    #[arg(long, default_value_t = DEFAULT_ATTRIBUTE_CAP)]
    cap: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Exact worst-case Bayes error Q with its adversarial distribution.
    Bound {
        #[command(flatten)]
        matrix: MatrixArgs,
        /// Report JSON path; the witness PMF lands next to it.
        #[arg(long)]
        out: PathBuf,
        /// Re-derive Q independently (dual value, witness Bayes error,
        /// feasibility residuals) and fail on any disagreement.
        #[arg(long)]
        verify: bool,
    },
    /// Pairwise two-class bound matrix L as a named CSV grid.
    Pairwise {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Matching-based lower bound (2/k)·Σ w_e with the matched pairs.
    Matching {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimax-optimal randomized classifier W*.
    Classifier {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic dataset sampled from the adversarial distribution.
    Generate {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        out: PathBuf,
        /// Number of records to draw.
        #[arg(long)]
        samples: usize,
        /// PRNG seed; reruns with the same seed are byte-identical.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Greedy attribute selection trace (step,attribute,q CSV).
    Select {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        out: PathBuf,
        /// Number of attributes to select.
        #[arg(long)]
        budget: usize,
        /// Score candidates with the cheaper matching bound instead of the
        /// exact LP.
        #[arg(long)]
        approx: bool,
    },
    /// Evaluate a classifier or a prediction set against the bound.
    Eval {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        out: PathBuf,
        /// Randomized classifier JSON: report its worst-case expected error.
        #[arg(long, conflicts_with = "predictions")]
        classifier: Option<PathBuf>,
        /// Predictions CSV (true,predicted): emit the misclassification
        /// matrix and a skewness report.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Compute skewness on a balanced subsample (min class size per
        /// class) instead of the full prediction set.
        #[arg(long, requires = "predictions")]
        balanced: bool,
        /// PRNG seed for the balanced subsample.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericalFailure(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, content: &str) -> Result<(), Error> {
    std::fs::write(path, content)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Loads the matrix, applies any --attrs restriction, and resolves priors.
fn load(args: &MatrixArgs) -> Result<(ClassAttributeMatrix, ClassPriors), Error> {
    let mut m = ClassAttributeMatrix::from_csv(&read(&args.matrix)?)?;
    if let Some(list) = &args.attrs {
        m = m.restrict(&parse_attrs(list, &m)?)?;
    }
    let priors = match &args.priors {
        Some(path) => ClassPriors::from_csv(&read(path)?, m.class_names())?,
        None => ClassPriors::uniform(m.num_classes()),
    };
    Ok((m, priors))
}

/// Comma-separated attribute names or zero-based indices; empty keeps none.
fn parse_attrs(list: &str, m: &ClassAttributeMatrix) -> Result<SelectionMask, Error> {
    let mut indices = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let i = match m.attribute_index(token) {
            Some(i) => i,
            None => token.parse::<usize>().map_err(|_| {
                Error::DimensionMismatch(format!("unknown attribute '{token}' in --attrs"))
            })?,
        };
        if i >= m.num_attributes() {
            return Err(Error::IndexOutOfRange { index: i, limit: m.num_attributes() });
        }
        indices.push(i);
    }
    SelectionMask::new(indices)
}

/// Derived artifact path: `report.json` + `pmf.json` -> `report.pmf.json`.
fn sibling(out: &Path, extension: &str) -> PathBuf {
    out.with_extension(extension)
}

#[derive(Serialize)]
struct BoundReport {
    q: f64,
    lp_status: String,
    residual: f64,
    adversarial_pmf_path: String,
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Bound { matrix, out, verify } => cmd_bound(&matrix, &out, verify),
        Command::Pairwise { matrix, out } => {
            let (m, _) = load(&matrix)?;
            let l = pairwise_bound_matrix(&m)?;
            write(&out, &l.to_csv())?;
            eprintln!("pairwise bound matrix for {} classes -> {}", l.size(), out.display());
            Ok(())
        }
        Command::Matching { matrix, out } => {
            let (m, priors) = load(&matrix)?;
            let l = pairwise_bound_matrix(&m)?;
            let (bound, result) = matching_lower_bound(&m, &priors)?;
            write(&out, &matching_report_json(&l, &result, bound)?)?;
            eprintln!(
                "matching bound {} over {} matched pairs -> {}",
                format_sig9(bound),
                result.edges.len(),
                out.display()
            );
            Ok(())
        }
        Command::Classifier { matrix, out } => {
            let (m, priors) = load(&matrix)?;
            let (w, q) = compute_optimal_classifier_capped(&m, &priors, matrix.cap)?;
            write(&out, &w.to_json()?)?;
            eprintln!(
                "minimax classifier with worst-case error <= {} -> {}",
                format_sig9(q),
                out.display()
            );
            Ok(())
        }
        Command::Generate { matrix, out, samples, seed } => {
            let (m, priors) = load(&matrix)?;
            let bound = compute_exact_bound_capped(&m, &priors, matrix.cap)?;
            let dataset = sample_dataset(&bound.adversarial_pmf, &priors, samples, seed)?
                .with_names(m.class_names().to_vec(), m.attribute_names().to_vec())?;
            write(&out, &dataset.to_csv())?;
            eprintln!(
                "{samples} records from the adversarial distribution (Q = {}, seed {seed}) -> {}",
                format_sig9(bound.q_value),
                out.display()
            );
            Ok(())
        }
        Command::Select { matrix, out, budget, approx } => {
            let (m, priors) = load(&matrix)?;
            let bound = if approx { GreedyBound::Matching } else { GreedyBound::Exact };
            let trace = greedy_select_with(&m, &priors, budget, bound, matrix.cap)?;
            write(&out, &trace.to_csv(m.attribute_names()))?;
            let last = trace.steps.last().map_or(trace.initial_q, |&(_, q)| q);
            eprintln!(
                "selected {budget} attributes, q {} -> {} ({})",
                format_sig9(last),
                out.display(),
                if approx { "matching bound" } else { "exact bound" }
            );
            Ok(())
        }
        Command::Eval { matrix, out, classifier, predictions, balanced, seed } => cmd_eval(
            &matrix,
            &out,
            classifier.as_deref(),
            predictions.as_deref(),
            balanced,
            seed,
        ),
    }
}

fn cmd_bound(matrix: &MatrixArgs, out: &Path, verify: bool) -> Result<(), Error> {
    let (m, priors) = load(matrix)?;
    let bound = compute_exact_bound_capped(&m, &priors, matrix.cap)?;
    let pmf_path = sibling(out, "pmf.json");
    write(&pmf_path, &bound.adversarial_pmf.to_json()?)?;
    let report = BoundReport {
        q: round_sig9(bound.q_value),
        lp_status: format!("{:?}", bound.lp_status),
        residual: round_sig9(bound.residual),
        adversarial_pmf_path: pmf_path.display().to_string(),
    };
    write(out, &serde_json::to_string_pretty(&report)?)?;
    eprintln!(
        "worst-case Bayes error Q = {} (residual {}) -> {}",
        format_sig9(bound.q_value),
        format_sig9(bound.residual),
        out.display()
    );
    if verify {
        verify_bound(&m, &priors, matrix.cap, &bound.adversarial_pmf, bound.q_value)?;
        eprintln!("verify: witness feasible, Bayes error and dual value agree with Q");
    }
    Ok(())
}

/// Independent witness chain: feasibility residual of p*, Bayes error of p*,
/// dual LP value, and the worst-case error of the dual's classifier.
fn verify_bound(
    m: &ClassAttributeMatrix,
    priors: &ClassPriors,
    cap: usize,
    pmf: &JointPMF,
    q: f64,
) -> Result<(), Error> {
    pmf.validate()?;
    let residual = pmf.residual_against(m, priors);
    if residual > 1e-8 {
        return Err(Error::NumericalFailure(format!(
            "witness PMF violates feasibility by {residual:.3e}"
        )));
    }
    let witness_error = bayes_error(pmf);
    if (witness_error - q).abs() > 1e-8 {
        return Err(Error::NumericalFailure(format!(
            "witness Bayes error {witness_error} disagrees with Q = {q}"
        )));
    }
    let (w, dual) = compute_optimal_classifier_capped(m, priors, cap)?;
    if (dual - q).abs() > 1e-6 {
        return Err(Error::NumericalFailure(format!(
            "dual value {dual} disagrees with Q = {q}"
        )));
    }
    let guarantee = worst_case_error_capped(&w, m, priors, cap)?;
    if guarantee > q + 1e-6 {
        return Err(Error::NumericalFailure(format!(
            "minimax classifier's worst-case error {guarantee} exceeds Q = {q}"
        )));
    }
    Ok(())
}

/// [`zsl_bound::analysis::SkewnessReport`] labeled with the sampling mode.
#[derive(Serialize)]
struct SkewnessFile {
    numerator: f64,
    denominator: f64,
    ratio: f64,
    m: usize,
    balanced: bool,
}

fn cmd_eval(
    matrix: &MatrixArgs,
    out: &Path,
    classifier: Option<&Path>,
    predictions: Option<&Path>,
    balanced: bool,
    seed: u64,
) -> Result<(), Error> {
    let (m, priors) = load(matrix)?;
    match (classifier, predictions) {
        (Some(path), None) => {
            let w = RandomizedClassifier::from_json(&read(path)?)?;
            let worst = worst_case_error_capped(&w, &m, &priors, matrix.cap)?;
            #[derive(Serialize)]
            struct Report {
                worst_case_error: f64,
            }
            write(out, &serde_json::to_string_pretty(&Report { worst_case_error: round_sig9(worst) })?)?;
            eprintln!("worst-case expected error {} -> {}", format_sig9(worst), out.display());
            Ok(())
        }
        (None, Some(path)) => {
            let preds = PredictionSet::from_csv(&read(path)?, m.class_names())?;
            let k = m.num_classes();
            let confusion = misclassification_matrix(&preds, k)?;
            write(out, &confusion.to_csv(m.class_names()))?;
            let skew_path = sibling(out, "skewness.json");
            let l = pairwise_bound_matrix(&m)?;
            let scored = if balanced {
                PredictionSet::new(balanced_subsample(&preds.records, k, seed)?, k)?
            } else {
                preds
            };
            match skewness(&l, &scored) {
                Ok(report) => {
                    let file = SkewnessFile {
                        numerator: round_sig9(report.numerator),
                        denominator: round_sig9(report.denominator),
                        ratio: round_sig9(report.ratio),
                        m: report.m,
                        balanced,
                    };
                    write(&skew_path, &serde_json::to_string_pretty(&file)?)?;
                    eprintln!(
                        "confusion -> {}; skewness {} over {} errors -> {}",
                        out.display(),
                        format_sig9(report.ratio),
                        report.m,
                        skew_path.display()
                    );
                }
                Err(Error::NoErrors) => {
                    eprintln!(
                        "confusion -> {}; no misclassified records, skewness undefined",
                        out.display()
                    );
                }
                Err(e) => return Err(e),
            }
            Ok(())
        }
        _ => Err(Error::DimensionMismatch(
            "eval requires exactly one of --classifier or --predictions".into(),
        )),
    }
}
