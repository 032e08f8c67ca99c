use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{AnalysisOptions, Components};
use crate::corpus::{Language, SplitPoint};
use crate::error::{Error, Result};
use crate::llm::{BackendKind, ModelParams, RetryPolicy};
use crate::metrics::Metric;
use crate::prompt::PromptConfig;
use crate::retrieval::{Bm25Params, TokenizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    #[default]
    Summarize,
    Complete,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Summarize => "summarize",
            Task::Complete => "complete",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "summarize" | "summarization" => Ok(Task::Summarize),
            "complete" | "completion" => Ok(Task::Complete),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

/// Which test samples to run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Selection {
    /// Seeded uniform subset of this size; all samples when absent.
    pub n: Option<usize>,
    pub seed: u64,
    /// Golden subset file of `{"id": ...}` lines; overrides `n`.
    pub ids_file: Option<PathBuf>,
    /// Same-project temporal split: earlier samples of this repository are
    /// the exemplar pool, later ones are tested.
    pub project: Option<String>,
    pub split: Option<SplitPoint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub params: Bm25Params,
    pub tokenizer: TokenizerConfig,
    /// Snapshot written by `asap index`; rebuilt in memory when absent.
    pub index_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub task: Task,
    pub language: Language,
    /// Corpus holding the test samples.
    pub test_pool: PathBuf,
    /// Corpus to retrieve exemplars from; the test pool when absent.
    pub exemplar_pool: Option<PathBuf>,
    /// JSONL of `{"id", "created_at"}` attached before a project split.
    pub metadata: Option<PathBuf>,
    pub selection: Selection,
    pub components: Components,
    pub analysis: AnalysisOptions,
    pub prompt: PromptConfig,
    pub shots: usize,
    /// Extra shots tried after an empty completion.
    pub max_extra_shots: usize,
    pub retrieval: RetrievalConfig,
    pub backend: BackendKind,
    pub model: ModelParams,
    pub retry: RetryPolicy,
    /// Average request rate limit; unlimited when absent.
    pub requests_per_minute: Option<f64>,
    pub workers: usize,
    pub cache_dir: Option<PathBuf>,
    /// Metrics to score; the task's full set when empty.
    pub metrics: Vec<Metric>,
    /// Seed for choosing the completion target line.
    pub line_seed: u64,
    /// Records of a baseline run to pair against.
    pub baseline: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: Task::Summarize,
            language: Language::Java,
            test_pool: PathBuf::new(),
            exemplar_pool: None,
            metadata: None,
            selection: Selection::default(),
            components: Components::ALL,
            analysis: AnalysisOptions::default(),
            prompt: PromptConfig::default(),
            shots: 3,
            max_extra_shots: 2,
            retrieval: RetrievalConfig::default(),
            backend: BackendKind::Mock,
            model: ModelParams::summarization(),
            retry: RetryPolicy::default(),
            requests_per_minute: None,
            workers: 4,
            cache_dir: None,
            metrics: Vec::new(),
            line_seed: 0,
            baseline: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Defaults for a task, including its model parameters.
    pub fn for_task(task: Task) -> Self {
        let model = match task {
            Task::Summarize => ModelParams::summarization(),
            Task::Complete => ModelParams::completion(),
        };
        ExperimentConfig { task, model, ..ExperimentConfig::default() }
    }

    pub fn metrics(&self) -> Vec<Metric> {
        if !self.metrics.is_empty() {
            return self.metrics.clone();
        }
        match self.task {
            Task::Summarize => Metric::SUMMARY.to_vec(),
            Task::Complete => Metric::COMPLETION.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.task == Task::Summarize && self.shots == 0 && self.max_extra_shots > 0 {
            log::info!("zero-shot run: empty completions will be retried with exemplars");
        }
        if self.prompt.budget <= self.prompt.reserve {
            return Err(Error::Config("prompt.budget must exceed prompt.reserve".into()));
        }
        Ok(())
    }

    /// Reads a JSON config, starting from the task defaults, then applies
    /// `key.path=value` overrides. Values parse as JSON when they can and
    /// are taken as strings otherwise.
    pub fn load(path: Option<&Path>, task: Task, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(ExperimentConfig::for_task(task))?;
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let file: Value = serde_json::from_str(&text)?;
            merge(&mut value, file);
        }
        value["task"] = serde_json::to_value(task)?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: ExperimentConfig = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// Applies one `a.b.c=value` override to a JSON tree.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) =
        assignment.split_once('=').ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("override key {key:?} has an empty segment")));
        }
        if !cur.is_object() {
            *cur = Value::Object(Default::default());
        }
        let map = cur.as_object_mut().expect("just made an object");
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), parsed);
            return Ok(());
        }
        cur = map.entry((*part).to_string()).or_insert(Value::Null);
    }
    Ok(())
}
