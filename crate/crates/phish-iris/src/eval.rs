//! Confusion matrices, the TPR/FPR/F1 metrics, cross-validation and
//! hold-out evaluation.
//!
//! Summary metrics are support-weighted averages of the per-class
//! values; cross-validation pools every fold's predictions into one
//! matrix before computing them. F1 is the harmonic mean of precision
//! and recall.

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{stratified_fold_assignment, CorpusError, FeatureTable};
use crate::ml::{train, LearnerSpec, MlError, TrainedModel};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Square count grid: rows are truth, columns are prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_labels(
        truth: &[String],
        predicted: &[String],
        classes: &[String],
    ) -> Result<Self, EvalError> {
        if truth.len() != predicted.len() {
            return Err(EvalError::Input(format!(
                "{} truth labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let index_of = |label: &String| {
            classes
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| EvalError::Input(format!("label '{label}' not in class list")))
        };
        let mut counts = vec![vec![0usize; classes.len()]; classes.len()];
        for (t, p) in truth.iter().zip(predicted) {
            counts[index_of(t)?][index_of(p)?] += 1;
        }
        Ok(Self {
            classes: classes.to_vec(),
            counts,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Per-class support (row sums).
    pub fn supports(&self) -> Vec<usize> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: String,
    pub support: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedMetrics {
    pub tpr: f64,
    pub fpr: f64,
    pub f1: f64,
}

/// Per-class TPR/FPR/precision/F1 and their support-weighted averages.
///
/// Division-by-zero corners are pinned: precision is 0 when nothing was
/// predicted for the class, F1 is 0 when precision and recall are both
/// 0, and a class with no support contributes 0 weight.
pub fn weighted_metrics(
    cm: &ConfusionMatrix,
) -> Result<(WeightedMetrics, Vec<ClassMetrics>), EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Input("empty confusion matrix".into()));
    }
    let n = cm.classes().len();
    let supports = cm.supports();
    let mut per_class = Vec::with_capacity(n);
    let mut weighted = WeightedMetrics {
        tpr: 0.0,
        fpr: 0.0,
        f1: 0.0,
    };
    for (c, &support) in supports.iter().enumerate() {
        let tp = cm.counts()[c][c];
        let fn_ = support - tp;
        let fp = (0..n).filter(|&r| r != c).map(|r| cm.counts()[r][c]).sum::<usize>();
        let tn = total - tp - fn_ - fp;

        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let tpr = ratio(tp, tp + fn_);
        let fpr = ratio(fp, fp + tn);
        let precision = ratio(tp, tp + fp);
        let f1 = if precision + tpr == 0.0 {
            0.0
        } else {
            2.0 * precision * tpr / (precision + tpr)
        };

        let weight = support as f64 / total as f64;
        weighted.tpr += weight * tpr;
        weighted.fpr += weight * fpr;
        weighted.f1 += weight * f1;
        per_class.push(ClassMetrics {
            class: cm.classes()[c].clone(),
            support,
            tpr,
            fpr,
            precision,
            f1,
        });
    }
    Ok((weighted, per_class))
}

/// Identifies a run: what was extracted, how, and with which learner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub descriptor: String,
    pub config: String,
    pub classifier: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub metadata: RunMetadata,
    pub matrix: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub weighted: WeightedMetrics,
    /// Set when the run had a single class and the metrics are trivial.
    pub single_class: bool,
}

impl EvalReport {
    fn assemble(
        metadata: RunMetadata,
        matrix: ConfusionMatrix,
    ) -> Result<EvalReport, EvalError> {
        let (weighted, per_class) = weighted_metrics(&matrix)?;
        let single_class = matrix.classes().len() < 2;
        Ok(EvalReport {
            metadata,
            matrix,
            per_class,
            weighted,
            single_class,
        })
    }

    /// Aligned, human-readable rendering.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let m = &self.metadata;
        let _ = writeln!(
            out,
            "descriptor={} config={} classifier={} seed={}",
            m.descriptor, m.config, m.classifier, m.seed
        );
        if self.single_class {
            let _ = writeln!(out, "note: single-class run; metrics are degenerate");
        }
        let name_width = self
            .per_class
            .iter()
            .map(|c| c.class.len())
            .chain(["weighted".len()])
            .max()
            .unwrap_or(8);
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>7}  {:>6}  {:>6}  {:>9}  {:>6}",
            "class", "support", "tpr", "fpr", "precision", "f1"
        );
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:<name_width$}  {:>7}  {:>6.3}  {:>6.3}  {:>9.3}  {:>6.3}",
                c.class, c.support, c.tpr, c.fpr, c.precision, c.f1
            );
        }
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>7}  {:>6.3}  {:>6.3}  {:>9}  {:>6.3}",
            "weighted",
            self.matrix.total(),
            self.weighted.tpr,
            self.weighted.fpr,
            "-",
            self.weighted.f1
        );
        let _ = writeln!(out, "\nconfusion matrix (rows=truth, columns=prediction):");
        for (class, row) in self.matrix.classes().iter().zip(self.matrix.counts()) {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
            let _ = writeln!(out, "{class:<name_width$} {}", cells.join(" "));
        }
        out
    }

    /// Machine-readable rendering: one record per class plus a summary
    /// record, stable across reruns.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

/// Stratified k-fold cross-validation: train on k-1 folds, predict the
/// held-out fold, pool all predictions into one confusion matrix.
pub fn cross_validate(
    table: &FeatureTable,
    k: usize,
    learner: &LearnerSpec,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if table.len() < k {
        return Err(EvalError::Input(format!(
            "{} samples cannot fill {k} folds",
            table.len()
        )));
    }
    let labels: Vec<String> = table.rows().iter().map(|r| r.label.clone()).collect();
    let folds = stratified_fold_assignment(&labels, k, seed)?;
    let spec = learner.with_seed(seed);

    let mut predicted = vec![String::new(); table.len()];
    for fold in 0..k {
        let (test_rows, train_rows): (Vec<usize>, Vec<usize>) =
            (0..table.len()).partition(|&i| folds.fold_of[i] == fold);
        if test_rows.is_empty() {
            continue;
        }
        let model = train(&table.subset(&train_rows), &spec)?;
        for &row in &test_rows {
            predicted[row] = model.predict(&table.rows()[row].values)?.label;
        }
    }

    let classes = table.classes();
    let matrix = ConfusionMatrix::from_labels(&labels, &predicted, &classes)?;
    EvalReport::assemble(
        RunMetadata {
            descriptor: table.schema().kind.to_string(),
            config: table.schema().config.to_string(),
            classifier: format!("{spec} cv(k={k})"),
            seed,
        },
        matrix,
    )
}

/// Train once on `train_table`, predict all of `test_table`.
pub fn holdout_evaluate(
    train_table: &FeatureTable,
    test_table: &FeatureTable,
    learner: &LearnerSpec,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if train_table.schema() != test_table.schema() {
        return Err(EvalError::Input(format!(
            "schema mismatch: train has {}, test has {}",
            train_table.schema(),
            test_table.schema()
        )));
    }
    let spec = learner.with_seed(seed);
    let model = train(train_table, &spec)?;
    let mut report = evaluate_model(&model, test_table)?;
    report.metadata.classifier = spec.to_string();
    report.metadata.seed = seed;
    Ok(report)
}

/// Predict a feature table with an existing model and report metrics.
/// Classes are the union of the model's and the table's, so unknown
/// truth labels count as misses rather than erroring.
pub fn evaluate_model(
    model: &TrainedModel,
    test_table: &FeatureTable,
) -> Result<EvalReport, EvalError> {
    if model.schema.dim != test_table.schema().dim {
        return Err(EvalError::Input(format!(
            "schema mismatch: model expects {}, table has {}",
            model.schema,
            test_table.schema()
        )));
    }
    let truth: Vec<String> = test_table.rows().iter().map(|r| r.label.clone()).collect();
    let mut predicted = Vec::with_capacity(test_table.len());
    for row in test_table.rows() {
        predicted.push(model.predict(&row.values)?.label);
    }
    let mut classes = model.classes.clone();
    classes.extend(test_table.classes());
    classes.sort();
    classes.dedup();
    let matrix = ConfusionMatrix::from_labels(&truth, &predicted, &classes)?;
    EvalReport::assemble(
        RunMetadata {
            descriptor: model.schema.kind.to_string(),
            config: model.schema.config.to_string(),
            classifier: model.learner.to_string(),
            seed: model.learner.seed(),
        },
        matrix,
    )
}
