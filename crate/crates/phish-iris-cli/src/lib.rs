//! Command-line front end wiring extraction, training, prediction and
//! evaluation into reproducible runs.
//!
//! Every subcommand accepts `--config <file>`, a flat `key=value` file
//! whose keys mirror the long flag names; explicit flags override it.
//! Exit codes: 0 success, 2 usage error, 1 runtime error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use phish_iris::corpus::{
    class_distribution, read_feature_cache, scan_corpus, write_feature_cache, Corpus, FeatureRow,
    FeatureSchema, FeatureTable, Split,
};
use phish_iris::descriptors::DescriptorKind;
use phish_iris::eval::{cross_validate, evaluate_model, holdout_evaluate, EvalReport};
use phish_iris::imaging::{decode_image, resize, RasterImage};
use phish_iris::ml::{
    train, LearnerSpec, RandomForestParams, SvmParams, TrainedModel,
};
use phish_iris::pyramid::{extract, ExtractionConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "phish-iris",
    about = "Classify web-page screenshots by phished brand using compact visual descriptors",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract descriptor vectors from a screenshot corpus into a feature cache
    Extract(ExtractArgs),
    /// Train a classifier from a feature cache
    Train(TrainArgs),
    /// Predict the brand of one or more screenshots with a trained model
    Predict(PredictArgs),
    /// Evaluate a model (or train-and-test caches) and emit a report
    Evaluate(EvaluateArgs),
    /// Stratified k-fold cross-validation over a feature cache
    CrossValidate(CrossValidateArgs),
    /// Per-class sample counts of a corpus directory
    Stats(StatsArgs),
    /// Dump a feature cache as a plain matrix for external embedding tools
    Export(ExportArgs),
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Descriptor: scd | cld | cedd | fcth | jcd | hog
    #[arg(long)]
    descriptor: Option<String>,
    /// Pyramid config in patch counts, e.g. 1, 1+4, 1+4+9+16
    #[arg(long)]
    pyramid: Option<String>,
    /// HOG geometry as block-stride-cell-bins, e.g. 80-40-20-9
    #[arg(long)]
    hog_params: Option<String>,
    /// Resize every screenshot to WxH before extraction, e.g. 640x480
    #[arg(long)]
    resize: Option<String>,
    /// Corpus root: one sub-directory per class
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output feature cache path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Split tag recorded while scanning (train | test)
    #[arg(long)]
    split: Option<String>,
    /// Worker threads for per-image extraction (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input feature cache
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Output model path
    #[arg(long)]
    model: Option<PathBuf>,
    /// Classifier family: rf | svm
    #[arg(long)]
    classifier: Option<String>,
    /// Random-forest tree count
    #[arg(long)]
    trees: Option<usize>,
    /// Random-forest features per split (default floor(log2 dim)+1)
    #[arg(long)]
    mtry: Option<usize>,
    /// Random-forest depth cap (default unlimited)
    #[arg(long)]
    max_depth: Option<usize>,
    /// SVM soft-margin cost
    #[arg(long)]
    cost: Option<f64>,
    /// SVM RBF gamma (default 1/dim)
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trained model path
    #[arg(long)]
    model: Option<PathBuf>,
    /// Screenshot(s) to classify
    #[arg(long = "image")]
    images: Vec<PathBuf>,
    /// Resize to WxH before extraction (use the training-time value)
    #[arg(long)]
    resize: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Evaluate an existing model against --cache
    #[arg(long)]
    model: Option<PathBuf>,
    /// Feature cache to score when --model is given
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Train a fresh model from this cache...
    #[arg(long)]
    train_cache: Option<PathBuf>,
    /// ...and score this one
    #[arg(long)]
    test_cache: Option<PathBuf>,
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    cost: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the human-readable report here (always printed to stdout)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the machine-readable JSON report here
    #[arg(long)]
    report_json: Option<PathBuf>,
}

#[derive(Args)]
struct CrossValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Fold count
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    cost: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    report_json: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus root: one sub-directory per class
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Output matrix path: one CSV row per sample, label first
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Run one subcommand; arguments exclude the program name. Prints to
/// stdout/stderr and returns the process exit code.
pub fn run_command<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("phish-iris"))
        .chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::CrossValidate(args) => cmd_cross_validate(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Export(args) => cmd_export(args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

/// Flat key=value config file; keys mirror the long flag names.
struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (line_no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(usage(format!(
                        "{}:{}: expected key=value, got '{line}'",
                        path.display(),
                        line_no + 1
                    )));
                };
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self { values })
    }

    /// Flag wins over file; parse errors are usage errors.
    fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| usage(format!("config key {key}={raw}: {e}"))),
        }
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("missing required option {what}")))
}

fn parse_resize(token: &str) -> Result<(u32, u32), String> {
    let (w, h) = token
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("invalid size '{token}': expected WxH"))?;
    let parse = |s: &str| {
        s.parse::<u32>()
            .ok()
            .filter(|&v| v >= 1)
            .ok_or_else(|| format!("invalid size '{token}': expected positive integers"))
    };
    Ok((parse(w)?, parse(h)?))
}

struct ResizeSpec(Option<(u32, u32)>);

impl ResizeSpec {
    fn from(cfg: &ConfigFile, flag: Option<String>) -> Result<Self, CliError> {
        let token = cfg.resolve(flag, "resize")?;
        match token {
            None => Ok(Self(None)),
            Some(t) => parse_resize(&t).map(|wh| Self(Some(wh))).map_err(usage),
        }
    }

    fn apply(&self, img: RasterImage) -> RasterImage {
        match self.0 {
            Some((w, h)) => resize(&img, w, h),
            None => img,
        }
    }
}

fn load_and_extract(
    path: &Path,
    schema_kind: DescriptorKind,
    config: &ExtractionConfig,
    resize_spec: &ResizeSpec,
) -> anyhow::Result<Vec<f64>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let img = resize_spec.apply(decode_image(&bytes)?);
    let vector = extract(&img, schema_kind, config)?;
    Ok(vector.into_values())
}

/// Shared flags -> learner spec for train/evaluate/cross-validate.
#[allow(clippy::too_many_arguments)]
fn learner_from(
    cfg: &ConfigFile,
    classifier: Option<String>,
    trees: Option<usize>,
    mtry: Option<usize>,
    max_depth: Option<usize>,
    cost: Option<f64>,
    gamma: Option<f64>,
    seed: Option<u64>,
) -> Result<(LearnerSpec, u64), CliError> {
    let family = cfg
        .resolve(classifier, "classifier")?
        .unwrap_or_else(|| "rf".to_string());
    let seed = cfg.resolve(seed, "seed")?.unwrap_or(0);
    let spec = match family.as_str() {
        "rf" | "random-forest" | "random_forest" => LearnerSpec::RandomForest(RandomForestParams {
            n_trees: cfg.resolve(trees, "trees")?.unwrap_or(100),
            features_per_split: cfg.resolve(mtry, "mtry")?,
            max_depth: cfg.resolve(max_depth, "max-depth")?,
            seed,
        }),
        "svm" | "svm-rbf" | "svm_rbf" => LearnerSpec::SvmRbf(SvmParams {
            cost: cfg.resolve(cost, "cost")?.unwrap_or(40.0),
            gamma: cfg.resolve(gamma, "gamma")?,
            seed,
        }),
        other => return Err(usage(format!("unknown classifier '{other}' (expected rf|svm)"))),
    };
    Ok((spec, seed))
}

fn cmd_extract(args: ExtractArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let kind: DescriptorKind = {
        let token = require(cfg.resolve(args.descriptor, "descriptor")?, "--descriptor")?;
        token.parse().map_err(usage)?
    };
    let pyramid = cfg.resolve(args.pyramid, "pyramid")?;
    let hog_params = cfg.resolve(args.hog_params, "hog-params")?;
    let extraction = match (kind, hog_params) {
        (DescriptorKind::Hog, Some(token)) => {
            ExtractionConfig::Hog(token.parse().map_err(usage)?)
        }
        (DescriptorKind::Hog, None) => {
            return Err(usage("--descriptor hog requires --hog-params block-stride-cell-bins"))
        }
        (_, Some(_)) => return Err(usage("--hog-params only applies to --descriptor hog")),
        (_, None) => match &pyramid {
            Some(token) => ExtractionConfig::Pyramid(
                token.parse().map_err(|e: phish_iris::pyramid::PyramidError| usage(e.to_string()))?,
            ),
            None => ExtractionConfig::holistic(),
        },
    };
    let resize_spec = ResizeSpec::from(&cfg, args.resize)?;
    let input = require(cfg.resolve(args.input, "in")?, "--in")?;
    let out = require(cfg.resolve(args.out, "out")?, "--out")?;
    let split = match cfg.resolve(args.split, "split")? {
        Some(token) => token.parse::<Split>().map_err(usage)?,
        None => Split::Train,
    };
    let workers = cfg.resolve(args.workers, "workers")?;

    let corpus = scan_corpus(&input, split).map_err(|e| CliError::Runtime(e.into()))?;
    report_skips(&corpus);

    let results = in_pool(workers, || {
        use rayon::prelude::*;
        corpus
            .samples()
            .par_iter()
            .map(|s| (s, load_and_extract(&s.path, kind, &extraction, &resize_spec)))
            .collect::<Vec<_>>()
    })?;

    let mut dim: Option<usize> = None;
    let mut rows = Vec::new();
    let mut failed = 0usize;
    for (sample, result) in results {
        match result {
            Ok(values) => {
                match dim {
                    None => dim = Some(values.len()),
                    Some(d) if d != values.len() => {
                        return Err(CliError::Runtime(anyhow!(
                            "{} produced {} values but the cache dimension is {d}; \
                             resize the corpus to a uniform size (--resize) for this descriptor",
                            sample.path.display(),
                            values.len()
                        )))
                    }
                    Some(_) => {}
                }
                rows.push(FeatureRow {
                    label: sample.label.clone(),
                    path: sample.path.display().to_string(),
                    values,
                });
            }
            Err(e) => {
                failed += 1;
                eprintln!("skip {}: {e:#}", sample.path.display());
            }
        }
    }
    let dim = dim.ok_or_else(|| anyhow!("no image in {} was extractable", input.display()))?;

    let mut table = FeatureTable::new(FeatureSchema {
        kind,
        config: extraction,
        dim,
    });
    for row in rows {
        table.push_row(row).map_err(|e| CliError::Runtime(e.into()))?;
    }
    write_feature_cache(&table, &out).map_err(|e| CliError::Runtime(e.into()))?;
    println!(
        "wrote {} rows (dim {}) to {}{}",
        table.len(),
        dim,
        out.display(),
        if failed > 0 {
            format!("; skipped {failed}")
        } else {
            String::new()
        }
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let cache = require(cfg.resolve(args.cache, "cache")?, "--cache")?;
    let model_path = require(cfg.resolve(args.model, "model")?, "--model")?;
    let (spec, _) = learner_from(
        &cfg,
        args.classifier,
        args.trees,
        args.mtry,
        args.max_depth,
        args.cost,
        args.gamma,
        args.seed,
    )?;

    let table = read_feature_cache(&cache).map_err(|e| CliError::Runtime(e.into()))?;
    let model = train(&table, &spec).map_err(|e| CliError::Runtime(e.into()))?;
    model.save(&model_path).map_err(|e| CliError::Runtime(e.into()))?;
    println!(
        "trained {} on {} rows ({} classes) -> {}",
        spec,
        table.len(),
        model.classes.len(),
        model_path.display()
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let model_path = require(cfg.resolve(args.model, "model")?, "--model")?;
    let mut images = args.images;
    if images.is_empty() {
        if let Some(path) = cfg.resolve::<PathBuf>(None, "image")? {
            images.push(path);
        }
    }
    if images.is_empty() {
        return Err(usage("missing required option --image"));
    }
    let resize_spec = ResizeSpec::from(&cfg, args.resize)?;

    let model = TrainedModel::load(&model_path).map_err(|e| CliError::Runtime(e.into()))?;
    for path in &images {
        let values = load_and_extract(path, model.schema.kind, &model.schema.config, &resize_spec)?;
        let prediction = model.predict(&values).map_err(|e| CliError::Runtime(e.into()))?;
        let score = prediction
            .scores
            .iter()
            .find(|(label, _)| *label == prediction.label)
            .map(|(_, s)| *s)
            .unwrap_or(0.0);
        println!("{} {} {:.4}", path.display(), prediction.label, score);
    }
    Ok(())
}

fn emit_report(
    report: &EvalReport,
    text_path: Option<&Path>,
    json_path: Option<&Path>,
) -> Result<(), CliError> {
    let text = report.to_text();
    print!("{text}");
    if let Some(path) = text_path {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = json_path {
        fs::write(path, report.to_json())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let model_path = cfg.resolve(args.model, "model")?;
    let cache = cfg.resolve(args.cache, "cache")?;
    let train_cache = cfg.resolve(args.train_cache, "train-cache")?;
    let test_cache = cfg.resolve(args.test_cache, "test-cache")?;
    let report_path = cfg.resolve(args.report, "report")?;
    let json_path = cfg.resolve(args.report_json, "report-json")?;

    let report = match (model_path, cache, train_cache, test_cache) {
        (Some(model_path), Some(cache), None, None) => {
            let model = TrainedModel::load(&model_path).map_err(|e| CliError::Runtime(e.into()))?;
            let table = read_feature_cache(&cache).map_err(|e| CliError::Runtime(e.into()))?;
            evaluate_model(&model, &table).map_err(|e| CliError::Runtime(e.into()))?
        }
        (None, None, Some(train_path), Some(test_path)) => {
            let (spec, seed) = learner_from(
                &cfg,
                args.classifier,
                args.trees,
                args.mtry,
                args.max_depth,
                args.cost,
                args.gamma,
                args.seed,
            )?;
            let train_table =
                read_feature_cache(&train_path).map_err(|e| CliError::Runtime(e.into()))?;
            let test_table =
                read_feature_cache(&test_path).map_err(|e| CliError::Runtime(e.into()))?;
            holdout_evaluate(&train_table, &test_table, &spec, seed)
                .map_err(|e| CliError::Runtime(e.into()))?
        }
        _ => {
            return Err(usage(
                "evaluate needs either --model with --cache, or --train-cache with --test-cache",
            ))
        }
    };
    emit_report(&report, report_path.as_deref(), json_path.as_deref())
}

fn cmd_cross_validate(args: CrossValidateArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let cache = require(cfg.resolve(args.cache, "cache")?, "--cache")?;
    let k = cfg.resolve(args.k, "k")?.unwrap_or(5);
    let report_path = cfg.resolve(args.report, "report")?;
    let json_path = cfg.resolve(args.report_json, "report-json")?;
    let (spec, seed) = learner_from(
        &cfg,
        args.classifier,
        args.trees,
        args.mtry,
        args.max_depth,
        args.cost,
        args.gamma,
        args.seed,
    )?;

    let table = read_feature_cache(&cache).map_err(|e| CliError::Runtime(e.into()))?;
    let report =
        cross_validate(&table, k, &spec, seed).map_err(|e| CliError::Runtime(e.into()))?;
    emit_report(&report, report_path.as_deref(), json_path.as_deref())
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let input = require(cfg.resolve(args.input, "in")?, "--in")?;
    let split = match cfg.resolve(args.split, "split")? {
        Some(token) => token.parse::<Split>().map_err(usage)?,
        None => Split::Train,
    };
    let corpus = scan_corpus(&input, split).map_err(|e| CliError::Runtime(e.into()))?;
    report_skips(&corpus);

    let dist = class_distribution(&corpus);
    let width = dist
        .counts
        .iter()
        .map(|(c, _)| c.len())
        .chain(["total".len()])
        .max()
        .unwrap_or(5);
    println!("{:<width$}  {:>7}", "class", "samples");
    for (class, count) in &dist.counts {
        println!("{class:<width$}  {count:>7}");
    }
    println!("{:<width$}  {:>7}", "total", dist.total);
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let cache = require(cfg.resolve(args.cache, "cache")?, "--cache")?;
    let out = require(cfg.resolve(args.out, "out")?, "--out")?;

    let table = read_feature_cache(&cache).map_err(|e| CliError::Runtime(e.into()))?;
    let mut text = String::new();
    for row in table.rows() {
        text.push_str(&row.label);
        for v in &row.values {
            text.push_str(&format!(",{v:.5e}"));
        }
        text.push('\n');
    }
    fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "exported {} rows x {} values to {}",
        table.len(),
        table.schema().dim,
        out.display()
    );
    Ok(())
}

fn report_skips(corpus: &Corpus) {
    for skip in corpus.skipped() {
        eprintln!("skip {}: {}", skip.path.display(), skip.reason);
    }
}

/// Run inside a rayon pool of the requested size (or the global default).
fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Runtime(anyhow!("building worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
