use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{score_completion, score_summary, Metric};

use super::{paired_comparisons, read_records, Comparison, Task};

/// Scores of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    pub scores: BTreeMap<Metric, f64>,
}

#[derive(Deserialize)]
struct IdText {
    id: String,
    #[serde(alias = "prediction", alias = "reference", alias = "summary")]
    text: String,
}

fn read_texts(path: &Path) -> Result<Vec<IdText>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Record {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Scores a predictions file against a references file, both JSONL with an
/// `id` and a `prediction` or `reference` field. Rows follow the
/// predictions file; every prediction needs a reference.
pub fn score_files(
    task: Task,
    predictions: &Path,
    references: &Path,
) -> Result<(Vec<ScoreRow>, BTreeMap<Metric, f64>)> {
    let refs: HashMap<String, String> = read_texts(references)?.into_iter().map(|r| (r.id, r.text)).collect();
    let preds = read_texts(predictions)?;
    let mut rows = Vec::with_capacity(preds.len());
    for p in preds {
        let reference = refs.get(&p.id).ok_or_else(|| Error::Config(format!("no reference for id {}", p.id)))?;
        let scores = match task {
            Task::Summarize => score_summary(&p.text, reference)?,
            Task::Complete => score_completion(&p.text, reference),
        };
        rows.push(ScoreRow { id: p.id, scores });
    }
    let mut sums: BTreeMap<Metric, f64> = BTreeMap::new();
    for r in &rows {
        for (m, v) in &r.scores {
            *sums.entry(*m).or_default() += v;
        }
    }
    let n = rows.len().max(1) as f64;
    Ok((rows, sums.into_iter().map(|(m, s)| (m, s / n)).collect()))
}

/// Writes one CSV row per prediction with a column per metric.
pub fn write_score_csv(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    let metrics: Vec<Metric> = rows.first().map(|r| r.scores.keys().copied().collect()).unwrap_or_default();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(metrics.iter().map(|m| m.as_str().to_string()));
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![r.id.clone()];
        row.extend(metrics.iter().map(|m| format!("{:.6}", r.scores[m])));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: String,
    pub treatment: String,
    pub comparisons: Vec<Comparison>,
}

/// Paired tests of `treatment > baseline` between two `records.jsonl`
/// files, with B-H across the metrics.
pub fn compare_runs(baseline: &Path, treatment: &Path, metrics: &[Metric]) -> Result<ComparisonReport> {
    let b = read_records(baseline)?;
    let t = read_records(treatment)?;
    let metrics: Vec<Metric> = if metrics.is_empty() {
        let mut seen: Vec<Metric> = b.iter().flat_map(|r| r.scores.keys().copied()).collect();
        seen.sort();
        seen.dedup();
        seen
    } else {
        metrics.to_vec()
    };
    let (bn, tn) = (baseline.display().to_string(), treatment.display().to_string());
    Ok(ComparisonReport {
        comparisons: paired_comparisons((&bn, &b), (&tn, &t), &metrics),
        baseline: bn,
        treatment: tn,
    })
}
