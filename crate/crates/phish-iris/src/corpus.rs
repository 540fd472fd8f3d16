//! Dataset ingestion, class statistics, stratified folds, and the
//! on-disk feature cache.
//!
//! Dataset layout: one sub-directory per class under a split root, with
//! PNG/JPEG screenshots inside. Directory names are the ground-truth
//! labels and are matched case-insensitively (stored lowercase).

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::DescriptorKind;
use crate::pyramid::ExtractionConfig;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("corpus root {0} contains no class directories")]
    NoClasses(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("cache schema error: {0}")]
    Schema(String),
    #[error("cache format error: {0}")]
    Format(String),
}

/// Which half of the dataset a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}' (expected train|test)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub path: PathBuf,
    pub label: String,
    pub split: Split,
}

#[derive(Debug, Clone)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

/// Labeled screenshot set: samples in lexicographic path order plus the
/// sorted class list, with unreadable files kept on a skip list.
#[derive(Debug, Clone)]
pub struct Corpus {
    samples: Vec<SampleRecord>,
    classes: Vec<String>,
    skipped: Vec<SkippedFile>,
}

impl Corpus {
    pub fn samples(&self) -> &[SampleRecord] {
        &self.samples
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn skipped(&self) -> &[SkippedFile] {
        &self.skipped
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Scan a split root: every immediate sub-directory is a class, every
/// readable PNG/JPEG inside becomes one record. Files whose headers do
/// not parse go on the skip list with a reason instead of being dropped
/// silently.
pub fn scan_corpus(root: &Path, split: Split) -> Result<Corpus, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::MissingRoot(root.to_path_buf()));
    }
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: std::io::Error| CorpusError::Io {
            path: path.clone(),
            source,
        }
    };

    let mut class_dirs: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let path = entry.path();
        if path.is_dir() {
            let label = entry.file_name().to_string_lossy().to_lowercase();
            class_dirs.push((label, path));
        }
    }
    if class_dirs.is_empty() {
        return Err(CorpusError::NoClasses(root.to_path_buf()));
    }
    class_dirs.sort();

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (label, dir) in &class_dirs {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_lowercase().as_str()))
            })
            .collect();
        files.sort();
        for path in files {
            // cheap header probe; full decode happens at extraction time
            match image::ImageReader::open(&path)
                .map_err(|e| e.to_string())
                .and_then(|r| r.with_guessed_format().map_err(|e| e.to_string()))
                .and_then(|r| r.into_dimensions().map_err(|e| e.to_string()))
            {
                Ok((w, h)) if w > 0 && h > 0 => samples.push(SampleRecord {
                    path,
                    label: label.clone(),
                    split,
                }),
                Ok(_) => skipped.push(SkippedFile {
                    path,
                    reason: "zero-dimension image".into(),
                }),
                Err(reason) => skipped.push(SkippedFile { path, reason }),
            }
        }
    }

    let classes = class_dirs.into_iter().map(|(label, _)| label).collect();
    Ok(Corpus {
        samples,
        classes,
        skipped,
    })
}

/// Exact per-class counts, in class order, plus the total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDistribution {
    pub counts: Vec<(String, usize)>,
    pub total: usize,
}

pub fn class_distribution(corpus: &Corpus) -> ClassDistribution {
    let counts: Vec<(String, usize)> = corpus
        .classes()
        .iter()
        .map(|class| {
            let n = corpus
                .samples()
                .iter()
                .filter(|s| &s.label == class)
                .count();
            (class.clone(), n)
        })
        .collect();
    ClassDistribution {
        total: counts.iter().map(|(_, n)| n).sum(),
        counts,
    }
}

/// Fold id per sample, plus any warnings raised while building them.
#[derive(Debug, Clone)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub warnings: Vec<String>,
}

impl FoldAssignment {
    /// Sample indices of one fold.
    pub fn fold_members(&self, fold: usize) -> Vec<usize> {
        self.fold_of
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f == fold).then_some(i))
            .collect()
    }
}

/// Stratified k-fold assignment over a label sequence: each class's
/// samples are shuffled with a seeded generator and dealt round-robin,
/// so per-class fold counts differ by at most one and identical inputs
/// reproduce identical folds.
pub fn stratified_fold_assignment(
    labels: &[String],
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, CorpusError> {
    if k < 2 {
        return Err(CorpusError::TooFewFolds(k));
    }
    let mut classes: Vec<&String> = labels.iter().collect();
    classes.sort();
    classes.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut warnings = Vec::new();
    for (class_idx, class) in classes.iter().enumerate() {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| (l == *class).then_some(i))
            .collect();
        if members.len() < k {
            warnings.push(format!(
                "class '{class}' has {} samples for {k} folds; some folds hold none",
                members.len()
            ));
        }
        members.shuffle(&mut rng);
        // rotate the starting fold per class so small classes do not all
        // land in fold 0
        for (i, sample) in members.into_iter().enumerate() {
            fold_of[sample] = (i + class_idx) % k;
        }
    }
    Ok(FoldAssignment { fold_of, warnings })
}

/// Stratified folds over a corpus.
pub fn stratified_folds(
    corpus: &Corpus,
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, CorpusError> {
    let labels: Vec<String> = corpus.samples().iter().map(|s| s.label.clone()).collect();
    stratified_fold_assignment(&labels, k, seed)
}

/// What a feature table holds: descriptor kind, extraction config and
/// the resulting vector length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub kind: DescriptorKind,
    pub config: ExtractionConfig,
    pub dim: usize,
}

impl fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={} config={} dim={}", self.kind, self.config, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub label: String,
    pub path: String,
    pub values: Vec<f64>,
}

/// Uniform table of extracted feature vectors with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    schema: FeatureSchema,
    rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(schema: FeatureSchema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Push one row; its vector length must match the schema.
    pub fn push_row(&mut self, row: FeatureRow) -> Result<(), CorpusError> {
        if row.values.len() != self.schema.dim {
            return Err(CorpusError::Schema(format!(
                "row for {} has {} values, schema says {}",
                row.path,
                row.values.len(),
                self.schema.dim
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Sorted distinct labels present in the table.
    pub fn classes(&self) -> Vec<String> {
        let mut classes: Vec<String> = self.rows.iter().map(|r| r.label.clone()).collect();
        classes.sort();
        classes.dedup();
        classes
    }

    /// Sub-table of the given row indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

const CACHE_MAGIC: &str = "#phish-iris-features";
const CACHE_VERSION: &str = "v1";

/// Write the cache: a one-line header followed by one CSV line per row
/// (`label,path,v0,...`), values printed to 6 significant digits.
///
/// Labels and paths containing commas or newlines are not representable
/// and are rejected.
pub fn write_feature_cache(table: &FeatureTable, path: &Path) -> Result<(), CorpusError> {
    let io_err = |source: std::io::Error| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    writeln!(
        out,
        "{CACHE_MAGIC} {CACHE_VERSION} kind={} config={} dim={}",
        table.schema().kind,
        table.schema().config,
        table.schema().dim
    )
    .map_err(io_err)?;
    for row in table.rows() {
        for field in [&row.label, &row.path] {
            if field.contains(',') || field.contains('\n') {
                return Err(CorpusError::Schema(format!(
                    "'{field}' contains a separator and cannot be cached"
                )));
            }
        }
        write!(out, "{},{}", row.label, row.path).map_err(io_err)?;
        for v in &row.values {
            write!(out, ",{v:.5e}").map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Read a cache written by [`write_feature_cache`], validating the
/// header and the per-row value count.
pub fn read_feature_cache(path: &Path) -> Result<FeatureTable, CorpusError> {
    let io_err = |source: std::io::Error| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let mut lines = BufReader::new(file).lines();

    let header = match lines.next() {
        Some(line) => line.map_err(io_err)?,
        None => return Err(CorpusError::Format("empty cache file".into())),
    };
    let schema = parse_header(&header)?;

    let mut table = FeatureTable::new(schema);
    for (line_no, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != table.schema().dim + 2 {
            return Err(CorpusError::Schema(format!(
                "line {}: {} fields, expected {} (label, path, {} values)",
                line_no + 2,
                fields.len(),
                table.schema().dim + 2,
                table.schema().dim
            )));
        }
        let mut values = Vec::with_capacity(table.schema().dim);
        for field in &fields[2..] {
            let v: f64 = field.parse().map_err(|_| {
                CorpusError::Format(format!("line {}: bad value '{field}'", line_no + 2))
            })?;
            values.push(v);
        }
        table.push_row(FeatureRow {
            label: fields[0].to_string(),
            path: fields[1].to_string(),
            values,
        })?;
    }
    Ok(table)
}

fn parse_header(header: &str) -> Result<FeatureSchema, CorpusError> {
    let bad = |why: &str| CorpusError::Format(format!("bad cache header ({why}): '{header}'"));
    let mut parts = header.split_whitespace();
    if parts.next() != Some(CACHE_MAGIC) {
        return Err(bad("wrong magic"));
    }
    if parts.next() != Some(CACHE_VERSION) {
        return Err(bad("unsupported version"));
    }
    let (mut kind, mut config, mut dim) = (None, None, None);
    for part in parts {
        match part.split_once('=') {
            Some(("kind", v)) => kind = Some(v.parse::<DescriptorKind>().map_err(|e| bad(&e))?),
            Some(("config", v)) => {
                config = Some(v.parse::<ExtractionConfig>().map_err(|e| bad(&e))?)
            }
            Some(("dim", v)) => {
                dim = Some(v.parse::<usize>().map_err(|_| bad("dim not a number"))?)
            }
            _ => return Err(bad("unknown field")),
        }
    }
    match (kind, config, dim) {
        (Some(kind), Some(config), Some(dim)) => {
            config
                .validate_for(kind)
                .map_err(|e| bad(&e.to_string()))?;
            Ok(FeatureSchema { kind, config, dim })
        }
        _ => Err(bad("missing field")),
    }
}
