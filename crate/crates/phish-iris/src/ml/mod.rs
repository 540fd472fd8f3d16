//! The two classifier families: Random Forest and RBF-kernel SVM, plus
//! the versioned model file they share.

mod svm;
mod tree;

pub use svm::{PairModel, SvmModel, KKT_TOLERANCE};
pub use tree::{DecisionTree, Node};

use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{FeatureSchema, FeatureTable};

#[derive(Debug, Error)]
pub enum MlError {
    #[error("training error: {0}")]
    Training(String),
    #[error("schema error: input has {got} values, model expects {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("model format error: {0}")]
    Format(String),
    #[error("unsupported model version {found}, this build reads {supported}")]
    Version { found: u32, supported: u32 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// Random-forest knobs. `features_per_split` and `max_depth` default to
/// floor(log2(dim)) + 1 and unlimited; bootstrap resampling to the
/// training size is always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomForestParams {
    pub n_trees: usize,
    pub features_per_split: Option<usize>,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            features_per_split: None,
            max_depth: None,
            seed: 0,
        }
    }
}

/// RBF-SVM knobs. `gamma` defaults to 1/dim; multiclass handling is
/// one-vs-one with majority vote. No feature scaling is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub cost: f64,
    pub gamma: Option<f64>,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            cost: 40.0,
            gamma: None,
            seed: 0,
        }
    }
}

/// Which classifier to train, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LearnerSpec {
    RandomForest(RandomForestParams),
    SvmRbf(SvmParams),
}

impl LearnerSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            LearnerSpec::RandomForest(_) => "random_forest",
            LearnerSpec::SvmRbf(_) => "svm_rbf",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            LearnerSpec::RandomForest(p) => p.seed,
            LearnerSpec::SvmRbf(p) => p.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            LearnerSpec::RandomForest(p) => p.seed = seed,
            LearnerSpec::SvmRbf(p) => p.seed = seed,
        }
        self
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::RandomForest(p) => {
                let mtry = p
                    .features_per_split
                    .map_or("auto".to_string(), |m| m.to_string());
                let depth = p.max_depth.map_or("none".to_string(), |d| d.to_string());
                write!(
                    f,
                    "random_forest(trees={},mtry={mtry},max_depth={depth},seed={})",
                    p.n_trees, p.seed
                )
            }
            LearnerSpec::SvmRbf(p) => {
                let gamma = p.gamma.map_or("1/dim".to_string(), |g| g.to_string());
                write!(f, "svm_rbf(cost={},gamma={gamma},seed={})", p.cost, p.seed)
            }
        }
    }
}

const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ModelKind {
    Forest { trees: Vec<DecisionTree> },
    SvmRbf(SvmModel),
}

/// Serialized classifier plus the feature schema, class list and
/// training parameters it was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    version: u32,
    pub schema: FeatureSchema,
    pub classes: Vec<String>,
    pub learner: LearnerSpec,
    kind: ModelKind,
}

/// Prediction outcome: the winning label and the per-class score
/// distribution (tree-vote or pairwise-win fractions, summing to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub scores: Vec<(String, f64)>,
}

fn table_class_indices(table: &FeatureTable) -> (Vec<String>, Vec<usize>) {
    let classes = table.classes();
    let labels = table
        .rows()
        .iter()
        .map(|r| {
            classes
                .binary_search(&r.label)
                .expect("classes() contains every row label")
        })
        .collect();
    (classes, labels)
}

fn flatten(table: &FeatureTable) -> Vec<f64> {
    let mut values = Vec::with_capacity(table.len() * table.schema().dim);
    for row in table.rows() {
        values.extend_from_slice(&row.values);
    }
    values
}

pub fn train_random_forest(
    table: &FeatureTable,
    params: &RandomForestParams,
) -> Result<TrainedModel, MlError> {
    if table.len() < 2 {
        return Err(MlError::Training(format!(
            "need at least 2 rows, got {}",
            table.len()
        )));
    }
    if params.n_trees == 0 {
        return Err(MlError::Training("need at least one tree".into()));
    }
    let dim = table.schema().dim;
    let (classes, labels) = table_class_indices(table);
    let values = flatten(table);
    let data = tree::TrainingData {
        values: &values,
        dim,
        labels: &labels,
        n_classes: classes.len(),
    };
    let mtry = params
        .features_per_split
        .unwrap_or_else(|| (dim as f64).log2().floor() as usize + 1)
        .clamp(1, dim);
    let grow = tree::GrowParams {
        features_per_split: mtry,
        max_depth: params.max_depth,
    };

    let trees: Vec<DecisionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|tree_idx| {
            // independent, reproducible stream per tree
            let stream = params
                .seed
                .wrapping_add((tree_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            tree::grow_tree(&data, &grow, &mut rng)
        })
        .collect();

    Ok(TrainedModel {
        version: MODEL_VERSION,
        schema: table.schema().clone(),
        classes,
        learner: LearnerSpec::RandomForest(*params),
        kind: ModelKind::Forest { trees },
    })
}

pub fn train_svm_rbf(table: &FeatureTable, params: &SvmParams) -> Result<TrainedModel, MlError> {
    if table.len() < 2 {
        return Err(MlError::Training(format!(
            "need at least 2 rows, got {}",
            table.len()
        )));
    }
    if params.cost <= 0.0 {
        return Err(MlError::Training("cost must be positive".into()));
    }
    let (classes, labels) = table_class_indices(table);
    if classes.len() < 2 {
        return Err(MlError::Training(
            "a discriminative SVM needs at least 2 classes; train a constant model instead".into(),
        ));
    }
    let dim = table.schema().dim;
    let gamma = params.gamma.unwrap_or(1.0 / dim as f64);
    if gamma <= 0.0 {
        return Err(MlError::Training("gamma must be positive".into()));
    }
    let values = flatten(table);
    let mut rows_by_class = vec![Vec::new(); classes.len()];
    for (row, &class) in labels.iter().enumerate() {
        rows_by_class[class].push(row);
    }
    let model = svm::train_one_vs_one(&values, dim, &rows_by_class, params.cost, gamma);
    Ok(TrainedModel {
        version: MODEL_VERSION,
        schema: table.schema().clone(),
        classes,
        learner: LearnerSpec::SvmRbf(*params),
        kind: ModelKind::SvmRbf(model),
    })
}

/// Train whichever family the spec names.
pub fn train(table: &FeatureTable, spec: &LearnerSpec) -> Result<TrainedModel, MlError> {
    match spec {
        LearnerSpec::RandomForest(p) => train_random_forest(table, p),
        LearnerSpec::SvmRbf(p) => train_svm_rbf(table, p),
    }
}

impl TrainedModel {
    pub fn family_name(&self) -> &'static str {
        match &self.kind {
            ModelKind::Forest { .. } => "random_forest",
            ModelKind::SvmRbf(_) => "svm_rbf",
        }
    }

    /// Borrow the forest, when this is one. Exists for white-box tests
    /// and diagnostics.
    pub fn forest(&self) -> Option<&[DecisionTree]> {
        match &self.kind {
            ModelKind::Forest { trees } => Some(trees),
            ModelKind::SvmRbf(_) => None,
        }
    }

    pub fn svm(&self) -> Option<&SvmModel> {
        match &self.kind {
            ModelKind::SvmRbf(m) => Some(m),
            ModelKind::Forest { .. } => None,
        }
    }

    /// Assemble a model directly from grown trees; the test-facing
    /// constructor for hand-built forests.
    pub fn from_trees(
        schema: FeatureSchema,
        classes: Vec<String>,
        trees: Vec<DecisionTree>,
    ) -> Self {
        let learner = LearnerSpec::RandomForest(RandomForestParams {
            n_trees: trees.len(),
            ..Default::default()
        });
        Self {
            version: MODEL_VERSION,
            schema,
            classes,
            learner,
            kind: ModelKind::Forest { trees },
        }
    }

    pub fn predict(&self, values: &[f64]) -> Result<Prediction, MlError> {
        if values.len() != self.schema.dim {
            return Err(MlError::DimMismatch {
                expected: self.schema.dim,
                got: values.len(),
            });
        }
        let fractions: Vec<f64> = match &self.kind {
            ModelKind::Forest { trees } => {
                let mut votes = vec![0u32; self.classes.len()];
                for tree in trees {
                    votes[tree.vote(values)] += 1;
                }
                let total = f64::from(votes.iter().sum::<u32>().max(1));
                votes.iter().map(|&v| f64::from(v) / total).collect()
            }
            ModelKind::SvmRbf(m) => {
                let wins = m.wins(values, self.classes.len());
                let total = f64::from(wins.iter().sum::<u32>().max(1));
                wins.iter().map(|&v| f64::from(v) / total).collect()
            }
        };
        let mut best = 0;
        for (i, &f) in fractions.iter().enumerate() {
            if f > fractions[best] {
                best = i;
            }
        }
        Ok(Prediction {
            label: self.classes[best].clone(),
            scores: self
                .classes
                .iter()
                .cloned()
                .zip(fractions.iter().copied())
                .collect(),
        })
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("model serialization is infallible")
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, MlError> {
        // surface version mismatches distinctly from shape errors
        #[derive(Deserialize)]
        struct VersionProbe {
            version: u32,
        }
        let probe: VersionProbe = serde_json::from_slice(bytes)
            .map_err(|e| MlError::Format(format!("not a model file: {e}")))?;
        if probe.version != MODEL_VERSION {
            return Err(MlError::Version {
                found: probe.version,
                supported: MODEL_VERSION,
            });
        }
        serde_json::from_slice(bytes).map_err(|e| MlError::Format(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), MlError> {
        std::fs::write(path, self.to_json_bytes()).map_err(|source| MlError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, MlError> {
        let bytes = std::fs::read(path).map_err(|source| MlError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FeatureRow;
    use crate::descriptors::DescriptorKind;
    use crate::pyramid::ExtractionConfig;

    fn schema(dim: usize) -> FeatureSchema {
        FeatureSchema {
            kind: DescriptorKind::Scd,
            config: ExtractionConfig::holistic(),
            dim,
        }
    }

    fn table_from(rows: Vec<(&str, Vec<f64>)>, dim: usize) -> FeatureTable {
        let mut t = FeatureTable::new(schema(dim));
        for (i, (label, values)) in rows.into_iter().enumerate() {
            t.push_row(FeatureRow {
                label: label.to_string(),
                path: format!("row{i}"),
                values,
            })
            .unwrap();
        }
        t
    }

    /// Deterministic, well-separated 2-class blobs.
    fn blob_table(n_per_class: usize, separation: f64) -> FeatureTable {
        let mut rows = Vec::new();
        for i in 0..n_per_class {
            let jitter = (i as f64 * 0.7919).sin(); // in [-1, 1], sigma-ish 1
            rows.push(("a", vec![jitter, (i as f64 * 0.33).cos()]));
            rows.push((
                "b",
                vec![separation + jitter, separation + (i as f64 * 0.41).cos()],
            ));
        }
        table_from(rows, 2)
    }

    #[test]
    fn forest_nails_well_separated_blobs() {
        let table = blob_table(200, 10.0);
        let model = train_random_forest(
            &table,
            &RandomForestParams {
                n_trees: 25,
                seed: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let correct = table
            .rows()
            .iter()
            .filter(|r| model.predict(&r.values).unwrap().label == r.label)
            .count();
        assert!(correct as f64 / table.len() as f64 >= 0.99);
    }

    #[test]
    fn single_class_forest_predicts_that_class() {
        let table = table_from(vec![("only", vec![1.0]), ("only", vec![2.0])], 1);
        let model = train_random_forest(&table, &RandomForestParams::default()).unwrap();
        let p = model.predict(&[500.0]).unwrap();
        assert_eq!(p.label, "only");
        assert_eq!(p.scores[0].1, 1.0);
    }

    #[test]
    fn single_fully_grown_tree_memorizes_distinct_vectors() {
        // no duplicate vectors with conflicting labels, blobs far apart:
        // every training point classifies correctly even out-of-bag
        let table = blob_table(100, 10.0);
        let model = train_random_forest(
            &table,
            &RandomForestParams {
                n_trees: 1,
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        for row in table.rows() {
            assert_eq!(model.predict(&row.values).unwrap().label, row.label);
        }
    }

    #[test]
    fn forest_training_is_byte_identical_per_seed() {
        let table = blob_table(30, 8.0);
        let params = RandomForestParams {
            n_trees: 12,
            seed: 77,
            ..Default::default()
        };
        let a = train_random_forest(&table, &params).unwrap();
        let b = train_random_forest(&table, &params).unwrap();
        assert_eq!(a.to_json_bytes(), b.to_json_bytes());
    }

    #[test]
    fn hand_built_forest_votes_as_expected() {
        let leaf_for = |class: usize| DecisionTree {
            nodes: vec![Node::Leaf {
                counts: if class == 0 { vec![5, 0] } else { vec![0, 5] },
            }],
        };
        let model = TrainedModel::from_trees(
            schema(1),
            vec!["a".into(), "b".into()],
            vec![leaf_for(0), leaf_for(0), leaf_for(1)],
        );
        let p = model.predict(&[0.0]).unwrap();
        assert_eq!(p.label, "a");
        assert!((p.scores[0].1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.scores[1].1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn forest_scores_sum_to_one_and_match_label() {
        let table = blob_table(50, 6.0);
        let model = train_random_forest(
            &table,
            &RandomForestParams {
                n_trees: 33,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let p = model.predict(&[0.2, 0.1]).unwrap();
        let total: f64 = p.scores.iter().map(|(_, s)| s).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let best = p
            .scores
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_eq!(best.0, p.label);
    }

    #[test]
    fn duplicating_a_training_point_keeps_its_prediction() {
        let base = blob_table(40, 9.0);
        let params = RandomForestParams {
            n_trees: 25,
            seed: 11,
            ..Default::default()
        };
        let model = train_random_forest(&base, &params).unwrap();
        let target = base.rows()[0].clone();
        let before = model.predict(&target.values).unwrap();
        assert_eq!(before.label, target.label);

        let mut grown = base.clone();
        for i in 0..10 {
            grown
                .push_row(FeatureRow {
                    label: target.label.clone(),
                    path: format!("dup{i}"),
                    values: target.values.clone(),
                })
                .unwrap();
        }
        let model2 = train_random_forest(&grown, &params).unwrap();
        let after = model2.predict(&target.values).unwrap();
        assert_eq!(after.label, target.label, "duplicates must not flip the label");
    }

    #[test]
    fn svm_separates_xor_blobs() {
        // four clusters in an XOR layout: RBF-separable, linearly not
        let mut rows = Vec::new();
        for i in 0..50 {
            let dx = (i as f64 * 0.37).sin() * 0.4;
            let dy = (i as f64 * 0.59).cos() * 0.4;
            rows.push(("p", vec![0.0 + dx, 0.0 + dy]));
            rows.push(("p", vec![4.0 + dx, 4.0 + dy]));
            rows.push(("q", vec![0.0 + dx, 4.0 + dy]));
            rows.push(("q", vec![4.0 + dx, 0.0 + dy]));
        }
        let table = table_from(rows, 2);
        let model = train_svm_rbf(
            &table,
            &SvmParams {
                cost: 40.0,
                gamma: Some(0.5),
                seed: 0,
            },
        )
        .unwrap();
        let correct = table
            .rows()
            .iter()
            .filter(|r| model.predict(&r.values).unwrap().label == r.label)
            .count();
        assert!(correct as f64 / table.len() as f64 >= 0.95);
    }

    #[test]
    fn svm_rejects_single_class_tables() {
        let table = table_from(vec![("one", vec![0.0]), ("one", vec![1.0])], 1);
        assert!(matches!(
            train_svm_rbf(&table, &SvmParams::default()),
            Err(MlError::Training(_))
        ));
    }

    #[test]
    fn wrong_dimension_is_a_schema_error() {
        let table = blob_table(10, 5.0);
        let model = train_random_forest(&table, &RandomForestParams::default()).unwrap();
        assert!(matches!(
            model.predict(&[1.0, 2.0, 3.0]),
            Err(MlError::DimMismatch { .. })
        ));
    }

    #[test]
    fn model_round_trip_preserves_predictions() {
        let table = blob_table(30, 7.0);
        for spec in [
            LearnerSpec::RandomForest(RandomForestParams {
                n_trees: 9,
                seed: 3,
                ..Default::default()
            }),
            LearnerSpec::SvmRbf(SvmParams {
                cost: 40.0,
                gamma: None,
                seed: 0,
            }),
        ] {
            let model = train(&table, &spec).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            model.save(&path).unwrap();
            let back = TrainedModel::load(&path).unwrap();
            for i in 0..100 {
                let x = vec![(i as f64 * 0.173).sin() * 12.0, (i as f64 * 0.311).cos() * 12.0];
                assert_eq!(model.predict(&x).unwrap(), back.predict(&x).unwrap());
            }
        }
    }

    #[test]
    fn unknown_version_is_a_format_error() {
        let table = blob_table(5, 5.0);
        let model = train_random_forest(&table, &RandomForestParams::default()).unwrap();
        let mut json: serde_json::Value =
            serde_json::from_slice(&model.to_json_bytes()).unwrap();
        json["version"] = serde_json::json!(99);
        let bytes = serde_json::to_vec(&json).unwrap();
        assert!(matches!(
            TrainedModel::from_json_bytes(&bytes),
            Err(MlError::Version { found: 99, .. })
        ));
    }
}
