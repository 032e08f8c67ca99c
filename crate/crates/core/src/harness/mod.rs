//! Experiment orchestration: summarization and completion runs, component
//! ablations, rescoring and paired comparisons.
//!
//! Every run writes `records.jsonl` (one record per test sample, in id
//! order), `aggregates.csv` and `report.json` into its output directory.
//! Reports carry no timestamps or latencies, so a run repeated with the same
//! config and model behaviour reproduces them byte for byte.

mod ablate;
mod complete;
pub mod config;
mod score;
mod summarize;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    attach_created_at, load_pool, read_id_list, sample_uniform, split_same_project, Sample, SamplePool, SplitPoint,
};
use crate::error::{Error, Result};
use crate::llm::{BackendKind, Cache, Client, HttpBackend, MockBackend, RateLimiter};
use crate::metrics::Metric;
use crate::retrieval::Bm25Index;
use crate::stats::{benjamini_hochberg, mcnemar, wilcoxon_one_sided, PairedTestResult};

pub use ablate::{run_ablation, AblationReport, AblationRow, Variant};
pub use complete::{choose_target_line, complete_sample, run_completion, split_at_line};
pub use config::{ExperimentConfig, RetrievalConfig, Selection, Task};
pub use score::{compare_runs, score_files, write_score_csv, ComparisonReport, ScoreRow};
pub use summarize::{run_summarization, summarize_sample};

pub const REPORT_FORMAT_VERSION: u32 = 1;
/// Share of failed samples above which a run is flagged.
pub const FAILURE_WARN_RATE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Failed,
    Skipped,
}

/// Outcome for one test sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub status: RecordStatus,
    pub prompt_hash: Option<String>,
    pub shots_used: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exemplar_ids: Vec<String>,
    /// 0-based line of the code completed (completion runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_line: Option<usize>,
    pub prediction: Option<String>,
    pub reference: String,
    pub scores: BTreeMap<Metric, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub(crate) fn new(id: &str, reference: &str) -> Self {
        RunRecord {
            id: id.to_string(),
            status: RecordStatus::Ok,
            prompt_hash: None,
            shots_used: 0,
            exemplar_ids: Vec::new(),
            target_line: None,
            prediction: None,
            reference: reference.to_string(),
            scores: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub(crate) fn fail(mut self, reason: String) -> Self {
        self.status = RecordStatus::Failed;
        self.warnings.push(reason);
        self
    }
}

/// One paired test between two runs on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: Metric,
    pub baseline: String,
    pub treatment: String,
    pub n_pairs: usize,
    pub baseline_mean: f64,
    pub treatment_mean: f64,
    pub result: Option<PairedTestResult>,
    /// Why no test result is available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Benjamini-Hochberg adjusted p-value within the comparison family.
    pub adjusted_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub prompt_format_version: u32,
    pub task: Task,
    pub backend: String,
    pub config: ExperimentConfig,
    pub samples: usize,
    pub completed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub failure_rate: f64,
    pub aggregates: BTreeMap<Metric, f64>,
    /// How many samples ended with each shot count.
    pub shots_used: BTreeMap<usize, usize>,
    pub comparisons: Vec<Comparison>,
    pub warnings: Vec<String>,
}

/// Test samples, the exemplar pool and its index.
pub struct Prepared {
    pub tests: SamplePool,
    pub exemplars: SamplePool,
    /// Built for summarization only.
    pub index: Option<Bm25Index>,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let mut pool = load_pool(&config.test_pool, config.language)?;
    if let Some(meta) = &config.metadata {
        pool = attach_created_at(&pool, meta)?;
    }
    let (mut tests, exemplars) = match &config.selection.project {
        Some(project) => {
            let split = config.selection.split.unwrap_or(SplitPoint::Fraction(0.5));
            let (train, test) = split_same_project(&pool, project, split)?;
            (test, train)
        }
        None => {
            let exemplars = match &config.exemplar_pool {
                Some(p) => load_pool(p, config.language)?,
                None => pool.clone(),
            };
            (pool, exemplars)
        }
    };
    if let Some(ids_file) = &config.selection.ids_file {
        let ids = read_id_list(ids_file)?.into_iter().collect();
        tests = tests.restrict_to(&ids);
    } else if let Some(n) = config.selection.n {
        tests = sample_uniform(&tests, n, config.selection.seed)?;
    }
    if tests.is_empty() {
        return Err(Error::Config("no test samples selected".into()));
    }
    let index = match config.task {
        Task::Summarize => Some(load_or_build_index(&config.retrieval, &exemplars)?),
        Task::Complete => None,
    };
    Ok(Prepared { tests, exemplars, index })
}

fn load_or_build_index(config: &RetrievalConfig, exemplars: &SamplePool) -> Result<Bm25Index> {
    if let Some(path) = config.index_path.as_deref().filter(|p| p.exists()) {
        let index = Bm25Index::load(path)?;
        if index.len() != exemplars.len() || index.doc_ids().iter().any(|id| exemplars.get(id).is_none()) {
            return Err(Error::Snapshot(format!("{} does not index the configured exemplar pool", path.display())));
        }
        return Ok(index);
    }
    Bm25Index::build(exemplars, config.params, config.tokenizer)
}

pub fn build_client(config: &ExperimentConfig) -> Result<Client> {
    let mut client = match config.backend {
        BackendKind::Mock => Client::new(Box::new(MockBackend)),
        BackendKind::Http => Client::new(Box::new(HttpBackend::new(config.retry.clone())?)),
    };
    if let Some(dir) = &config.cache_dir {
        client = client.with_cache(Cache::open(dir)?);
    }
    if let Some(rpm) = config.requests_per_minute.filter(|r| *r > 0.0) {
        client = client.with_rate_limiter(RateLimiter::per_minute(rpm, config.workers as u32));
    }
    Ok(client)
}

/// Applies `f` to every sample on a pool of `workers` threads. Results come
/// back in input order; the first hard error wins.
pub(crate) fn run_parallel<T, F>(workers: usize, samples: &[Sample], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Sample) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| samples.par_iter().map(&f).collect())
}

pub(crate) fn summarize_records(
    config: &ExperimentConfig,
    backend: &str,
    mut records: Vec<RunRecord>,
) -> (Vec<RunRecord>, Report) {
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let count = |s: RecordStatus| records.iter().filter(|r| r.status == s).count();
    let (completed, failed, skipped) =
        (count(RecordStatus::Ok), count(RecordStatus::Failed), count(RecordStatus::Skipped));
    let attempted = records.len() - skipped;
    let failure_rate = if attempted == 0 { 0.0 } else { failed as f64 / attempted as f64 };

    let mut sums: BTreeMap<Metric, f64> = BTreeMap::new();
    let mut shots_used = BTreeMap::new();
    for r in records.iter().filter(|r| r.status == RecordStatus::Ok) {
        for (m, v) in &r.scores {
            *sums.entry(*m).or_default() += v;
        }
        *shots_used.entry(r.shots_used).or_default() += 1;
    }
    let aggregates = sums.into_iter().map(|(m, s)| (m, s / completed as f64)).collect();

    let mut warnings = Vec::new();
    if failure_rate > FAILURE_WARN_RATE {
        let w = format!(
            "{failed} of {attempted} samples failed ({:.1}%), above the {:.0}% threshold; they are excluded from aggregates and pairing",
            failure_rate * 100.0,
            FAILURE_WARN_RATE * 100.0
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    let report = Report {
        format_version: REPORT_FORMAT_VERSION,
        prompt_format_version: crate::prompt::FORMAT_VERSION,
        task: config.task,
        backend: backend.to_string(),
        config: config.clone(),
        samples: records.len(),
        completed,
        failed,
        skipped,
        failure_rate,
        aggregates,
        shots_used,
        comparisons: Vec::new(),
        warnings,
    };
    (records, report)
}

fn completed_scores(records: &[RunRecord]) -> BTreeMap<&str, &BTreeMap<Metric, f64>> {
    records.iter().filter(|r| r.status == RecordStatus::Ok).map(|r| (r.id.as_str(), &r.scores)).collect()
}

/// Pairs two runs on one metric over the samples both completed. EM is
/// tested with McNemar, every other metric with a one-sided Wilcoxon test
/// of `treatment > baseline`. `adjusted_p` is left empty.
pub fn paired_comparison(
    baseline: (&str, &[RunRecord]),
    treatment: (&str, &[RunRecord]),
    metric: Metric,
) -> Comparison {
    let (base, treat) = (completed_scores(baseline.1), completed_scores(treatment.1));
    let pairs: Vec<(f64, f64)> =
        base.iter().filter_map(|(id, b)| Some((*b.get(&metric)?, *treat.get(id)?.get(&metric)?))).collect();
    let mean = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    let b: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let t: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let test = if metric == Metric::Em {
        let only_base = pairs.iter().filter(|(b, t)| *b >= 100.0 && *t < 100.0).count() as u64;
        let only_treat = pairs.iter().filter(|(b, t)| *b < 100.0 && *t >= 100.0).count() as u64;
        mcnemar(only_base, only_treat)
    } else {
        wilcoxon_one_sided(&t, &b)
    };
    let (result, error) = match test {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Comparison {
        metric,
        baseline: baseline.0.to_string(),
        treatment: treatment.0.to_string(),
        n_pairs: pairs.len(),
        baseline_mean: mean(&b),
        treatment_mean: mean(&t),
        result,
        error,
        adjusted_p: None,
    }
}

/// [`paired_comparison`] for each metric, with B-H across the metrics.
pub fn paired_comparisons(
    baseline: (&str, &[RunRecord]),
    treatment: (&str, &[RunRecord]),
    metrics: &[Metric],
) -> Vec<Comparison> {
    let mut out: Vec<Comparison> = metrics.iter().map(|&m| paired_comparison(baseline, treatment, m)).collect();
    adjust_family(&mut out);
    out
}

/// Fills `adjusted_p` with B-H over the comparisons that have a result.
pub fn adjust_family(comparisons: &mut [Comparison]) {
    let idx: Vec<usize> = (0..comparisons.len()).filter(|&i| comparisons[i].result.is_some()).collect();
    let raw: Vec<f64> = idx.iter().map(|&i| comparisons[i].result.as_ref().expect("filtered").p_value).collect();
    for (&i, adj) in idx.iter().zip(benjamini_hochberg(&raw)) {
        comparisons[i].adjusted_p = Some(adj);
    }
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `records.jsonl`, `aggregates.csv` and `report.json`.
pub fn write_run(dir: &Path, records: &[RunRecord], report: &Report) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut lines = Vec::new();
    for r in records {
        serde_json::to_writer(&mut lines, r)?;
        lines.push(b'\n');
    }
    let path = dir.join("records.jsonl");
    fs::write(&path, lines).map_err(|e| Error::io(&path, e))?;

    let path = dir.join("aggregates.csv");
    let mut csv = csv::Writer::from_path(&path)?;
    csv.write_record(["metric", "mean", "n"])?;
    for (m, v) in &report.aggregates {
        csv.write_record([m.as_str(), &format!("{v:.6}"), &report.completed.to_string()])?;
    }
    csv.flush().map_err(|e| Error::io(&path, e))?;

    write_json(&dir.join("report.json"), report)
}

/// Reads the baseline named in the config, if any, and attaches the
/// comparisons to the report.
pub(crate) fn compare_with_baseline(
    config: &ExperimentConfig,
    records: &[RunRecord],
    report: &mut Report,
) -> Result<()> {
    if let Some(path) = &config.baseline {
        let baseline = read_records(path)?;
        report.comparisons = paired_comparisons(("baseline", &baseline), ("run", records), &config.metrics());
    }
    Ok(())
}
