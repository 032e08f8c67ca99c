use std::collections::HashMap;

use crate::analysis::{analyze, AnalysisProduct, Components};
use crate::corpus::{Sample, SamplePool};
use crate::error::{Error, Result};
use crate::llm::Client;
use crate::metrics::score_summary;
use crate::prompt::{assemble_summarization_prompt, Exemplar};
use crate::retrieval::Hit;

use super::{
    compare_with_baseline, prepare, run_parallel, summarize_records, write_run, ExperimentConfig, Prepared, Report,
    RunRecord,
};

/// Retrieval results for every test sample, excluding the sample itself.
pub(crate) fn retrieve_all(config: &ExperimentConfig, prepared: &Prepared) -> HashMap<String, Vec<Hit>> {
    let index = prepared.index.as_ref().expect("summarization runs build an index");
    let k = config.shots + config.max_extra_shots;
    prepared.tests.samples().iter().map(|s| (s.id.clone(), index.retrieve(&s.code, k, Some(&s.id)))).collect()
}

fn facts(
    sample: &Sample,
    components: Components,
    config: &ExperimentConfig,
    warnings: &mut Vec<String>,
) -> Option<AnalysisProduct> {
    if components.is_empty() {
        return None;
    }
    match analyze(sample, components, &config.analysis) {
        Ok(p) => {
            warnings.extend(p.warnings.iter().map(|w| format!("{}: {w}", sample.id)));
            Some(p)
        }
        Err(e) => {
            warnings.push(format!("{}: analysis failed, facts omitted: {e}", sample.id));
            None
        }
    }
}

/// Text of the summary: the first non-empty paragraph, whitespace-collapsed.
fn summary_text(completion: &str) -> String {
    completion
        .split("\n\n")
        .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
        .find(|p| !p.is_empty())
        .unwrap_or_default()
}

/// Summarizes one sample with the given ranked exemplars.
///
/// An empty completion is retried with one more shot at a time, up to
/// `shots + max_extra_shots`. Samples that stay empty, or whose prompt
/// cannot fit even one exemplar, come back as failed records. Errors that
/// would affect every sample (authentication, exhausted retries) are
/// returned.
pub fn summarize_sample(
    config: &ExperimentConfig,
    exemplars: &SamplePool,
    client: &Client,
    sample: &Sample,
    hits: &[Hit],
    components: Components,
) -> Result<RunRecord> {
    let mut record = RunRecord::new(&sample.id, &sample.summary);
    let mut warnings = Vec::new();
    let target_facts = facts(sample, components, config, &mut warnings);
    let mut chosen: Vec<(&Sample, Option<AnalysisProduct>)> = Vec::new();
    for hit in hits {
        let Some(ex) = exemplars.get(&hit.id) else {
            warnings.push(format!("retrieved id {} is not in the exemplar pool", hit.id));
            continue;
        };
        chosen.push((ex, facts(ex, components, config, &mut warnings)));
    }
    if chosen.len() < config.shots {
        warnings.push(format!("{} exemplars available for {} shots", chosen.len(), config.shots));
    }
    let ranked: Vec<Exemplar<'_>> = chosen.iter().map(|(s, p)| Exemplar { sample: s, product: p.as_ref() }).collect();

    let max_shots = config.shots + config.max_extra_shots;
    let mut shots = config.shots;
    let result = loop {
        let prompt = match assemble_summarization_prompt(&ranked, sample, target_facts.as_ref(), shots, &config.prompt)
        {
            Ok(p) => p,
            Err(e @ Error::OversizePrompt { .. }) => {
                record.warnings = warnings;
                return Ok(record.fail(e.to_string()));
            }
            Err(e) => return Err(e),
        };
        if prompt.shots_used < shots.min(ranked.len()) {
            warnings.push(format!("prompt budget fits {} of {} exemplars", prompt.shots_used, shots.min(ranked.len())));
        }
        record.shots_used = prompt.shots_used;
        record.exemplar_ids = ranked[..prompt.shots_used].iter().map(|e| e.sample.id.clone()).collect();
        match client.complete(&prompt.text, &config.model) {
            Ok(r) => break r,
            Err(Error::EmptyCompletion) if shots < max_shots => {
                warnings.push(format!("empty completion with {shots} shots; retrying with {}", shots + 1));
                shots += 1;
            }
            Err(Error::EmptyCompletion) => {
                record.warnings = warnings;
                return Ok(record.fail(format!("empty completion with {shots} shots")));
            }
            Err(e) => return Err(e),
        }
    };
    record.prompt_hash = Some(result.request_hash);
    let prediction = summary_text(&result.text);
    record.warnings = warnings;
    match score_summary(&prediction, &sample.summary) {
        Ok(scores) => {
            let wanted = config.metrics();
            record.scores = scores.into_iter().filter(|(m, _)| wanted.contains(m)).collect();
            record.prediction = Some(prediction);
            Ok(record)
        }
        Err(e) => {
            record.prediction = Some(prediction);
            Ok(record.fail(e.to_string()))
        }
    }
}

pub(crate) fn summarize_all(
    config: &ExperimentConfig,
    prepared: &Prepared,
    client: &Client,
    hits: &HashMap<String, Vec<Hit>>,
    components: Components,
) -> Result<Vec<RunRecord>> {
    run_parallel(config.workers, prepared.tests.samples(), |s| {
        summarize_sample(config, &prepared.exemplars, client, s, &hits[&s.id], components)
    })
}

/// Runs a summarization experiment and writes its outputs to
/// `config.output_dir`.
pub fn run_summarization(config: &ExperimentConfig, client: &Client) -> Result<(Vec<RunRecord>, Report)> {
    config.validate()?;
    let prepared = prepare(config)?;
    let hits = retrieve_all(config, &prepared);
    let records = summarize_all(config, &prepared, client, &hits, config.components)?;
    let (records, mut report) = summarize_records(config, client.backend_name(), records);
    compare_with_baseline(config, &records, &mut report)?;
    write_run(&config.output_dir, &records, &report)?;
    Ok((records, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_text_takes_first_paragraph() {
        assert_eq!(summary_text("\n\n Adds  two\nnumbers.\n\nMore."), "Adds two numbers.");
        assert_eq!(summary_text("one"), "one");
    }
}
