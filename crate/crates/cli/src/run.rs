use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use deephate::data::{self, DataError, TaskSpec};
use deephate::embeddings::EmbeddingError;
use deephate::eval::{EvalError, EvalReport, RepeatedReport};
use deephate::interpret::{self, HighlightReport, InterpretError, MapPoint, TsneConfig};
use deephate::nn::{CheckpointError, NnError};
use deephate::training::{self, grid, ConfigError, TrainConfig, TrainError};
use deephate::{CharFallbackConfig, Checkpoint, CleanPost, Embedder, EmbeddingTable, Matrix};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
    fn io(what: &Path, e: impl fmt::Display) -> Self {
        Self::new(1, format!("{}: {e}", what.display()))
    }
    fn data(message: impl Into<String>) -> Self {
        Self::new(3, message)
    }
    pub fn code(&self) -> u8 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::new(2, format!("config: {e}"))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        Self::data(format!("embeddings: {e}"))
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        Self::data(format!("checkpoint: {e}"))
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::NonFiniteGradient => Self::new(4, e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<InterpretError> for CliError {
    fn from(e: InterpretError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let code = match &e {
            TrainError::Config(_) => 2,
            TrainError::Data(_) | TrainError::EmptyClass(_) | TrainError::ClassTooSmall { .. } => 3,
            TrainError::NonFiniteLoss { .. } | TrainError::Numeric { .. } => 4,
            TrainError::Model(NnError::NonFiniteGradient) => 4,
            TrainError::Model(_) => 1,
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Everything needed to reproduce a training run.
#[derive(Debug, Serialize)]
struct RunManifest {
    engine_version: &'static str,
    seed: u64,
    config: String,
    inputs: Vec<FileDigest>,
    artifacts: Vec<FileDigest>,
}

fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn build_embedder(cfg: &TrainConfig) -> Result<Embedder, CliError> {
    let fallback = CharFallbackConfig {
        ngram_len: cfg.embeddings.ngram_len,
        seed: cfg.embeddings.seed,
    };
    let table = match &cfg.embeddings.path {
        Some(path) => {
            let loaded = EmbeddingTable::load(path)?;
            for w in &loaded.warnings {
                log::warn!("{}: {w}", path.display());
            }
            if loaded.table.dim() != cfg.embeddings.dim {
                log::info!(
                    "using the file's dimension {} instead of embeddings.dim = {}",
                    loaded.table.dim(),
                    cfg.embeddings.dim
                );
            }
            loaded.table
        }
        None => EmbeddingTable::empty(cfg.embeddings.dim)?,
    };
    Ok(Embedder::new(table, fallback))
}

fn load_tasks(cfg: &TrainConfig) -> Result<Vec<(deephate::TaskInfo, Vec<CleanPost>)>, CliError> {
    cfg.tasks
        .iter()
        .map(|spec| {
            let posts = data::load_task(spec)?;
            log::info!("task {}: {} posts from {}", spec.name, posts.len(), spec.path.display());
            Ok((
                deephate::TaskInfo {
                    name: spec.name.clone(),
                    labels: spec.labels.clone(),
                },
                posts,
            ))
        })
        .collect()
}

pub fn preprocess(input: &Path, output: &Path) -> Result<(), CliError> {
    let rows = data::preprocess_file(input, output)?;
    log::info!("wrote {rows} rows to {}", output.display());
    Ok(())
}

pub fn train(config: &Path, out_dir: &Path, repetitions: Option<usize>) -> Result<(), CliError> {
    let cfg = TrainConfig::load(config)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;

    // Input digests are fixed before any training happens.
    let mut inputs = cfg
        .tasks
        .iter()
        .map(|t| digest(&t.path))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(p) = &cfg.embeddings.path {
        inputs.push(digest(p)?);
    }
    let mut manifest = RunManifest {
        engine_version: deephate::VERSION,
        seed: cfg.seed,
        config: cfg.to_config_string(),
        inputs,
        artifacts: Vec::new(),
    };
    let manifest_path = out_dir.join("manifest.json");
    let write_manifest = |m: &RunManifest| {
        write_file(&manifest_path, serde_json::to_string_pretty(m).expect("manifest serializes") + "\n")
    };
    write_manifest(&manifest)?;
    write_file(&out_dir.join("config.txt"), cfg.to_config_string())?;

    let tasks = load_tasks(&cfg)?;
    let embedder = build_embedder(&cfg)?;
    let splits = training::split_tasks(&tasks, cfg.seed)?;
    let outcome = training::train(&cfg, &splits, &embedder)?;

    let ckpt_path = out_dir.join("checkpoint.bin");
    outcome.checkpoint.save(&ckpt_path)?;
    let history_path = out_dir.join("history.csv");
    outcome
        .history
        .write_csv(create(&history_path)?)
        .map_err(|e| CliError::io(&history_path, e))?;
    let mut artifacts = vec![ckpt_path, history_path];

    println!("best epoch {}", outcome.best_epoch);
    for (t, score) in splits.iter().zip(&outcome.best_scores) {
        println!("{}: validation macro-F1 {score:.4}", t.info.name);
    }

    if let Some(reps) = repetitions {
        let report = repeated(&cfg, &tasks, &embedder, reps)?;
        let runs_path = out_dir.join("runs.csv");
        report
            .write_csv(create(&runs_path)?)
            .map_err(|e| CliError::io(&runs_path, e))?;
        let summary_path = out_dir.join("summary.json");
        write_file(&summary_path, report.summary_json() + "\n")?;
        for s in &report.summary {
            println!("{}: macro-F1 {:.4} ± {:.4} over {} runs", s.task, s.mean, s.std, s.runs);
        }
        artifacts.push(runs_path);
        artifacts.push(summary_path);
    }

    manifest.artifacts = artifacts
        .iter()
        .map(|p| {
            digest(p).map(|mut d| {
                d.path = p.file_name().expect("artifact file name").to_string_lossy().into_owned();
                d
            })
        })
        .collect::<Result<_, _>>()?;
    write_manifest(&manifest)
}

fn repeated(
    cfg: &TrainConfig,
    tasks: &[(deephate::TaskInfo, Vec<CleanPost>)],
    embedder: &Embedder,
    reps: usize,
) -> Result<RepeatedReport, CliError> {
    deephate::eval::repeated_experiment(tasks, reps, cfg.seed, |seed, splits| {
        log::info!("repetition with seed {seed}");
        let run_cfg = TrainConfig {
            seed,
            ..cfg.clone()
        };
        let out = training::train(&run_cfg, splits, embedder)?;
        splits
            .iter()
            .enumerate()
            .map(|(t, s)| {
                training::predict_labels(&out.checkpoint.params, embedder, &s.validation, t)
                    .map_err(CliError::from)
            })
            .collect()
    })
}

pub fn grid(config: &Path, hidden: &[usize], batch: &[usize], out: &Path) -> Result<(), CliError> {
    let cfg = TrainConfig::load(config)?;
    let tasks = load_tasks(&cfg)?;
    let embedder = build_embedder(&cfg)?;
    let splits = training::split_tasks(&tasks, cfg.seed)?;
    let rows = grid::grid_search(&cfg, hidden, batch, &splits, &embedder)?;
    grid::write_grid_csv(&rows, create(out)?).map_err(|e| CliError::io(out, e))?;
    if let Some(best) = grid::best_cell(&rows) {
        println!(
            "best: hidden_size = {}, batch_size = {} (macro-F1 {:.4})",
            best.hidden_size, best.batch_size, best.macro_f1
        );
    }
    Ok(())
}

/// Checkpoint, embedder, and the data of one task checked against the
/// checkpoint's task table.
struct Loaded {
    ckpt: Checkpoint,
    embedder: Embedder,
}

impl Loaded {
    fn open(config: &Path, checkpoint: &Path) -> Result<Self, CliError> {
        let cfg = TrainConfig::load(config)?;
        let ckpt = Checkpoint::load(checkpoint)?;
        for spec in &cfg.tasks {
            if let Some(t) = ckpt.task_index(&spec.name) {
                if ckpt.tasks[t].labels != spec.labels {
                    return Err(CliError::data(format!(
                        "task table mismatch: config labels for {} are {:?}, checkpoint has {:?}",
                        spec.name, spec.labels, ckpt.tasks[t].labels
                    )));
                }
            }
        }
        let embedder = build_embedder(&cfg)?;
        if embedder.dim() != ckpt.params.embed_dim {
            return Err(CliError::data(format!(
                "embedding dimension {} does not match the checkpoint's {}",
                embedder.dim(),
                ckpt.params.embed_dim
            )));
        }
        Ok(Self { ckpt, embedder })
    }

    fn task(&self, name: &str, data: &Path) -> Result<(usize, Vec<CleanPost>), CliError> {
        let t = self.ckpt.task_index(name).ok_or_else(|| {
            let known: Vec<&str> = self.ckpt.tasks.iter().map(|t| t.name.as_str()).collect();
            CliError::data(format!(
                "task table mismatch: checkpoint has no task {name:?} (tasks: {})",
                known.join(", ")
            ))
        })?;
        let spec = TaskSpec {
            name: name.to_string(),
            labels: self.ckpt.tasks[t].labels.clone(),
            path: data.to_path_buf(),
        };
        Ok((t, data::load_task(&spec)?))
    }
}

#[derive(Debug, Serialize)]
struct EvalOutput<'a> {
    task: &'a str,
    samples: usize,
    labels: &'a [String],
    #[serde(flatten)]
    report: &'a EvalReport,
}

pub fn eval(config: &Path, checkpoint: &Path, data: &Path, task: &str, out: &Path) -> Result<(), CliError> {
    let m = Loaded::open(config, checkpoint)?;
    let (t, posts) = m.task(task, data)?;
    let pred = training::predict_labels(&m.ckpt.params, &m.embedder, &posts, t)?;
    let gold: Vec<usize> = posts.iter().map(|p| p.label_id).collect();
    let labels = &m.ckpt.tasks[t].labels;
    let report = EvalReport::new(&gold, &pred, labels)?;

    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let json = serde_json::to_string_pretty(&EvalOutput {
        task,
        samples: posts.len(),
        labels,
        report: &report,
    })
    .expect("report serializes");
    write_file(&out.join("report.json"), json + "\n")?;
    let cm_path = out.join("confusion.csv");
    report
        .confusion
        .write_csv(create(&cm_path)?)
        .map_err(|e| CliError::io(&cm_path, e))?;

    println!("{task}: macro-F1 {:.4} on {} posts", report.macro_f1, posts.len());
    for (label, s) in labels.iter().zip(&report.per_class) {
        println!(
            "  {label}: precision {:.4} recall {:.4} F1 {:.4} (support {})",
            s.precision, s.recall, s.f1, s.support
        );
    }
    Ok(())
}

pub fn highlight(
    config: &Path,
    checkpoint: &Path,
    data: &Path,
    task: &str,
    id: Option<&str>,
    out: &Path,
) -> Result<(), CliError> {
    let m = Loaded::open(config, checkpoint)?;
    let (t, posts) = m.task(task, data)?;
    let post = match id {
        Some(id) => posts
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| CliError::data(format!("no post with id {id:?} in {}", data.display())))?,
        None => posts
            .first()
            .ok_or_else(|| CliError::data(format!("{} has no posts", data.display())))?,
    };
    let tokens = if post.tokens.is_empty() {
        vec![training::EMPTY_POST_TOKEN.to_string()]
    } else {
        post.tokens.clone()
    };
    let pred = m.ckpt.params.predict(&m.embedder.embed_sequence(&tokens), t)?;
    let scores = interpret::word_scores(&pred.provenance, tokens.len(), m.ckpt.params.hidden)?;
    let labels = &m.ckpt.tasks[t].labels;
    let report = HighlightReport::new(
        tokens,
        scores,
        labels[pred.label].clone(),
        labels[post.label_id].clone(),
        task.to_string(),
    )?;
    write_file(out, interpret::render_highlight(&report))?;
    log::info!("wrote {}", out.display());
    Ok(())
}

pub fn map(
    config: &Path,
    checkpoint: &Path,
    data: &[PathBuf],
    tasks: &[String],
    out: &Path,
    tsne: &TsneConfig,
) -> Result<(), CliError> {
    if data.len() != tasks.len() {
        return Err(CliError::new(2, "--data and --task must be given the same number of times"));
    }
    let m = Loaded::open(config, checkpoint)?;
    let mut points = Vec::new();
    let mut pooled = Vec::new();
    for (path, name) in data.iter().zip(tasks) {
        let (t, posts) = m.task(name, path)?;
        let labels = &m.ckpt.tasks[t].labels;
        for p in &posts {
            let pred = m.ckpt.params.predict(&training::embed_post(&m.embedder, p), t)?;
            pooled.push(pred.pooled);
            points.push(MapPoint {
                id: p.id.clone(),
                x: 0.0,
                y: 0.0,
                task: name.clone(),
                gold: labels[p.label_id].clone(),
                predicted: labels[pred.label].clone(),
            });
        }
    }
    let n = points.len();
    let mut cfg = *tsne;
    let max_perplexity = (n.saturating_sub(1)) as f64 / 3.0;
    if n >= 4 && cfg.perplexity > max_perplexity {
        log::warn!("perplexity {} is too large for {n} points; using {max_perplexity}", cfg.perplexity);
        cfg.perplexity = max_perplexity;
    }
    let x = Matrix::from_rows(m.ckpt.params.hidden, &pooled);
    let proj = interpret::tsne_project(&x, &cfg)?;
    for (i, p) in points.iter_mut().enumerate() {
        p.x = proj.coords.get(i, 0);
        p.y = proj.coords.get(i, 1);
    }
    if let Some(kl) = proj.kl_trace.last() {
        log::info!("t-SNE KL divergence after {} iterations: {:.4}", kl.0, kl.1);
    }
    write_file(out, interpret::render_map(&points)?)?;
    let coords = out.with_extension("csv");
    interpret::write_coordinates_csv(&points, create(&coords)?).map_err(|e| CliError::io(&coords, e))?;
    println!("{n} points: {} and {}", out.display(), coords.display());
    Ok(())
}
