//! Flat `key = value` run configuration.
//!
//! Recognized keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `hidden_size` | LSTM hidden size per direction |
//! | `batch_size` | samples per gradient step |
//! | `epochs` | passes over the balanced training data |
//! | `lr` | Adam learning rate |
//! | `weight_decay` | L2 decay added to gradients |
//! | `eval_every` | validation period in epochs; must divide `epochs` |
//! | `seed` | root seed for every random stream |
//! | `mode` | `single-task` or `transfer` |
//! | `task.<name>.path` | corpus CSV for task `<name>` |
//! | `task.<name>.labels` | comma-separated ordered label names |
//! | `embeddings.path` | GloVe text file (optional) |
//! | `embeddings.dim` | vector size when no file is given |
//! | `embeddings.ngram` | character n-gram length of the OOV encoder |
//! | `embeddings.seed` | seed of the OOV encoder |
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys and
//! repeated keys are errors. Relative paths resolve against the config
//! file's directory.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::TaskSpec;
use crate::nn::AdamConfig;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: invalid value {value:?} for {key}")]
    Value { line: usize, key: String, value: String },
    #[error("line {line}: key {key:?} given twice")]
    Duplicate { line: usize, key: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    SingleTask,
    Transfer,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SingleTask => "single-task",
            Mode::Transfer => "transfer",
        }
    }
}

impl FromStr for Mode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "single-task" | "single" => Ok(Mode::SingleTask),
            "transfer" => Ok(Mode::Transfer),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSource {
    pub path: Option<PathBuf>,
    pub dim: usize,
    pub ngram_len: usize,
    pub seed: u64,
}

impl Default for EmbeddingSource {
    fn default() -> Self {
        Self {
            path: None,
            dim: 8,
            ngram_len: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub eval_every: usize,
    pub seed: u64,
    pub mode: Mode,
    pub tasks: Vec<TaskSpec>,
    pub embeddings: EmbeddingSource,
}

impl Default for TrainConfig {
    /// Desk-scale defaults.
    fn default() -> Self {
        Self {
            hidden_size: 64,
            batch_size: 32,
            epochs: 300,
            lr: 1e-3,
            weight_decay: 1e-3,
            eval_every: 10,
            seed: 0,
            mode: Mode::SingleTask,
            tasks: Vec::new(),
            embeddings: EmbeddingSource::default(),
        }
    }
}

impl TrainConfig {
    /// Full-scale operating point: 512 hidden units, batches of 350,
    /// 1000 epochs.
    pub fn full_scale() -> Self {
        Self {
            hidden_size: 512,
            batch_size: 350,
            epochs: 1000,
            embeddings: EmbeddingSource {
                dim: 200,
                ..EmbeddingSource::default()
            },
            ..Self::default()
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("hidden_size", self.hidden_size),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("eval_every", self.eval_every),
            ("embeddings.dim", self.embeddings.dim),
            ("embeddings.ngram", self.embeddings.ngram_len),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(ConfigError::Invalid(format!("{k} must be positive")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(ConfigError::Invalid("lr must be positive".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(ConfigError::Invalid("weight_decay must be non-negative".into()));
        }
        if !self.epochs.is_multiple_of(self.eval_every) {
            return Err(ConfigError::Invalid(format!(
                "eval_every ({}) must divide epochs ({})",
                self.eval_every, self.epochs
            )));
        }
        if self.tasks.is_empty() {
            return Err(ConfigError::Invalid("no tasks configured".into()));
        }
        for t in &self.tasks {
            t.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if self.mode == Mode::SingleTask && self.tasks.len() > 1 {
            return Err(ConfigError::Invalid(
                "single-task mode takes exactly one task; use mode = transfer".into(),
            ));
        }
        Ok(())
    }

    /// Parses config text; relative paths are joined onto `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        let mut task_paths: Vec<(String, Option<PathBuf>, Option<Vec<String>>)> = Vec::new();
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or(ConfigError::Syntax { line })?;
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            let bad = || ConfigError::Value {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            fn num<T: FromStr>(v: &str, bad: impl Fn() -> ConfigError) -> Result<T, ConfigError> {
                v.parse().map_err(|_| bad())
            }
            match key {
                "hidden_size" => cfg.hidden_size = num(value, bad)?,
                "batch_size" => cfg.batch_size = num(value, bad)?,
                "epochs" => cfg.epochs = num(value, bad)?,
                "lr" => cfg.lr = num(value, bad)?,
                "weight_decay" => cfg.weight_decay = num(value, bad)?,
                "eval_every" => cfg.eval_every = num(value, bad)?,
                "seed" => cfg.seed = num(value, bad)?,
                "mode" => cfg.mode = value.parse().map_err(|_| bad())?,
                "embeddings.path" => cfg.embeddings.path = Some(resolve(value)),
                "embeddings.dim" => cfg.embeddings.dim = num(value, bad)?,
                "embeddings.ngram" => cfg.embeddings.ngram_len = num(value, bad)?,
                "embeddings.seed" => cfg.embeddings.seed = num(value, bad)?,
                _ => {
                    let Some(rest) = key.strip_prefix("task.") else {
                        return Err(ConfigError::UnknownKey { line, key: key.to_string() });
                    };
                    let Some((name, field)) = rest.rsplit_once('.') else {
                        return Err(ConfigError::UnknownKey { line, key: key.to_string() });
                    };
                    if name.is_empty() || !matches!(field, "path" | "labels") {
                        return Err(ConfigError::UnknownKey { line, key: key.to_string() });
                    }
                    let idx = match task_paths.iter().position(|t| t.0 == name) {
                        Some(i) => i,
                        None => {
                            task_paths.push((name.to_string(), None, None));
                            task_paths.len() - 1
                        }
                    };
                    if field == "path" {
                        task_paths[idx].1 = Some(resolve(value));
                    } else {
                        let labels: Vec<String> = value
                            .split(',')
                            .map(|s| s.trim().to_string())
                            .collect();
                        if labels.iter().any(String::is_empty) {
                            return Err(bad());
                        }
                        task_paths[idx].2 = Some(labels);
                    }
                }
            }
        }
        for (name, path, labels) in task_paths {
            let path = path.ok_or_else(|| ConfigError::Invalid(format!("task.{name}.path missing")))?;
            let labels =
                labels.ok_or_else(|| ConfigError::Invalid(format!("task.{name}.labels missing")))?;
            cfg.tasks.push(TaskSpec { name, labels, path });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Serializes back to the key-value format (absolute paths as given).
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "hidden_size = {}", self.hidden_size);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "weight_decay = {}", self.weight_decay);
        let _ = writeln!(s, "eval_every = {}", self.eval_every);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "mode = {}", self.mode.as_str());
        if let Some(p) = &self.embeddings.path {
            let _ = writeln!(s, "embeddings.path = {}", p.display());
        }
        let _ = writeln!(s, "embeddings.dim = {}", self.embeddings.dim);
        let _ = writeln!(s, "embeddings.ngram = {}", self.embeddings.ngram_len);
        let _ = writeln!(s, "embeddings.seed = {}", self.embeddings.seed);
        for t in &self.tasks {
            let _ = writeln!(s, "task.{}.path = {}", t.name, t.path.display());
            let _ = writeln!(s, "task.{}.labels = {}", t.name, t.labels.join(","));
        }
        s
    }
}
