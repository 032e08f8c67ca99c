use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::Components;
use crate::error::{Error, Result};
use crate::llm::Client;
use crate::metrics::Metric;

use super::complete::complete_all;
use super::summarize::{retrieve_all, summarize_all};
use super::{
    adjust_family, paired_comparison, prepare, summarize_records, write_json, write_run, Comparison, ExperimentConfig,
    Task,
};

/// A named component selection. `-repo` style labels remove one component
/// from the full set; anything else parses as a component list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    pub components: Components,
}

impl Variant {
    /// All components, then each one removed in turn.
    pub fn defaults() -> Vec<Variant> {
        ["all", "-repo", "-id", "-dfg"].iter().map(|s| s.parse().expect("default variants parse")).collect()
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let components = match s.strip_prefix('-') {
            Some(removed) => {
                let removed: Components = removed.parse()?;
                Components { repo: !removed.repo, identifiers: !removed.identifiers, dfg: !removed.dfg }
            }
            None => s.parse()?,
        };
        Ok(Variant { label: s.to_string(), components })
    }
}

impl Variant {
    /// Directory name for the variant's run: `-repo` becomes `without-repo`.
    pub fn dir_name(&self) -> String {
        let name = match self.label.strip_prefix('-') {
            Some(rest) => format!("without-{rest}"),
            None => self.label.clone(),
        };
        name.chars().map(|c| if c.is_alphanumeric() || c == '-' { c } else { '_' }).collect()
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.label, self.components)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub completed: usize,
    pub failed: usize,
    pub aggregates: BTreeMap<Metric, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub format_version: u32,
    pub task: Task,
    pub reference: String,
    pub rows: Vec<AblationRow>,
    /// The first variant against each other one, per metric. B-H runs
    /// across the variants within each metric.
    pub comparisons: Vec<Comparison>,
}

/// Runs every variant over the same test samples and retrieved exemplars.
/// Each variant's run goes to `output_dir/<dir_name>/`; the summary goes to
/// `output_dir/ablation.json`.
pub fn run_ablation(config: &ExperimentConfig, variants: &[Variant], client: &Client) -> Result<AblationReport> {
    config.validate()?;
    if variants.len() < 2 {
        return Err(Error::Config("an ablation needs at least two variants".into()));
    }
    let prepared = prepare(config)?;
    let hits = match config.task {
        Task::Summarize => Some(retrieve_all(config, &prepared)),
        Task::Complete => None,
    };
    let mut runs = Vec::new();
    for variant in variants {
        log::info!("ablation variant {variant}");
        let records = match &hits {
            Some(h) => summarize_all(config, &prepared, client, h, variant.components)?,
            None => complete_all(config, &prepared, client, variant.components)?,
        };
        let run_config = ExperimentConfig {
            components: variant.components,
            output_dir: config.output_dir.join(variant.dir_name()),
            ..config.clone()
        };
        let (records, report) = summarize_records(&run_config, client.backend_name(), records);
        write_run(&run_config.output_dir, &records, &report)?;
        runs.push((variant.clone(), records, report));
    }

    let (reference, ref_records, _) = &runs[0];
    let mut comparisons = Vec::new();
    for metric in config.metrics() {
        let mut family: Vec<Comparison> = runs[1..]
            .iter()
            .map(|(v, records, _)| paired_comparison((&v.label, records), (&reference.label, ref_records), metric))
            .collect();
        adjust_family(&mut family);
        comparisons.extend(family);
    }
    let report = AblationReport {
        format_version: super::REPORT_FORMAT_VERSION,
        task: config.task,
        reference: reference.label.clone(),
        rows: runs
            .iter()
            .map(|(v, _, r)| AblationRow {
                variant: v.clone(),
                completed: r.completed,
                failed: r.failed,
                aggregates: r.aggregates.clone(),
            })
            .collect(),
        comparisons,
    };
    write_json(&config.output_dir.join("ablation.json"), &report)?;
    Ok(report)
}
