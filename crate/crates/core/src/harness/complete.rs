use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::analysis::{analyze_prefix, AnalysisProduct, Components, RepoFact};
use crate::corpus::{Language, Sample};
use crate::error::{Error, Result};
use crate::llm::{first_line, Client};
use crate::metrics::score_completion;
use crate::prompt::assemble_completion_prompt;

use super::{
    compare_with_baseline, prepare, run_parallel, summarize_records, write_run, ExperimentConfig, Prepared,
    RecordStatus, Report, RunRecord,
};

fn id_seed(seed: u64, id: &str) -> u64 {
    let digest = Sha256::digest(id.as_bytes());
    seed ^ u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Picks the line to complete: never the first line, a blank line or a
/// comment line. The choice depends only on the seed and the sample id.
pub fn choose_target_line(code: &str, language: Language, seed: u64, id: &str) -> Option<usize> {
    let eligible: Vec<usize> = code
        .lines()
        .enumerate()
        .skip(1)
        .filter(|(_, line)| {
            let t = line.trim();
            !t.is_empty() && !language.comment_prefixes().iter().any(|p| t.starts_with(p))
        })
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(id_seed(seed, id));
    eligible.choose(&mut rng).copied()
}

/// The code before line `target` and that line's trimmed text.
pub fn split_at_line(code: &str, target: usize) -> (String, String) {
    let lines: Vec<&str> = code.lines().collect();
    let prefix = lines[..target.min(lines.len())].join("\n");
    let gold = lines.get(target).map(|l| l.trim().to_string()).unwrap_or_default();
    (prefix, gold)
}

fn completion_facts(
    sample: &Sample,
    prefix: &str,
    config: &ExperimentConfig,
    warnings: &mut Vec<String>,
) -> AnalysisProduct {
    let components = config.components;
    let mut product = if components.identifiers || components.dfg {
        match analyze_prefix(prefix, sample.language, &config.analysis) {
            Ok(p) => p.restricted(components),
            Err(e) => {
                warnings.push(format!("prefix analysis failed, facts omitted: {e}"));
                AnalysisProduct::default()
            }
        }
    } else {
        AnalysisProduct::default()
    };
    if components.repo {
        match RepoFact::from_sample(sample, config.analysis.tokenized_path) {
            Ok(f) => product.repo_fact = Some(f),
            Err(e) => warnings.push(format!("repo fact omitted: {e}")),
        }
    }
    product
}

/// Completes one line of one sample.
pub fn complete_sample(config: &ExperimentConfig, client: &Client, sample: &Sample) -> Result<RunRecord> {
    let Some(target) = choose_target_line(&sample.code, sample.language, config.line_seed, &sample.id) else {
        let mut record = RunRecord::new(&sample.id, "");
        record.status = RecordStatus::Skipped;
        record.warnings.push("no eligible target line".into());
        return Ok(record);
    };
    let (prefix, gold) = split_at_line(&sample.code, target);
    let mut record = RunRecord::new(&sample.id, &gold);
    record.target_line = Some(target);
    let mut warnings = Vec::new();
    let product = completion_facts(sample, &prefix, config, &mut warnings);
    let prompt = match assemble_completion_prompt(&sample.id, &prefix, &product, &config.prompt) {
        Ok(p) => p,
        Err(e @ (Error::OversizePrompt { .. } | Error::Config(_))) => {
            record.warnings = warnings;
            return Ok(record.fail(e.to_string()));
        }
        Err(e) => return Err(e),
    };
    for dropped in &prompt.dropped_facts {
        warnings.push(format!("{dropped} facts dropped to fit the budget"));
    }
    record.warnings = warnings;
    let result = match client.complete(&prompt.text, &config.model) {
        Ok(r) => r,
        Err(Error::EmptyCompletion) => return Ok(record.fail("empty completion".into())),
        Err(e) => return Err(e),
    };
    record.prompt_hash = Some(result.request_hash);
    let prediction = first_line(&result.text).to_string();
    let wanted = config.metrics();
    record.scores = score_completion(&prediction, &gold).into_iter().filter(|(m, _)| wanted.contains(m)).collect();
    record.prediction = Some(prediction);
    Ok(record)
}

pub(crate) fn complete_all(
    config: &ExperimentConfig,
    prepared: &Prepared,
    client: &Client,
    components: Components,
) -> Result<Vec<RunRecord>> {
    let config = ExperimentConfig { components, ..config.clone() };
    run_parallel(config.workers, prepared.tests.samples(), |s| complete_sample(&config, client, s))
}

/// Runs a line-completion experiment and writes its outputs to
/// `config.output_dir`.
pub fn run_completion(config: &ExperimentConfig, client: &Client) -> Result<(Vec<RunRecord>, Report)> {
    config.validate()?;
    let prepared = prepare(config)?;
    let records = complete_all(config, &prepared, client, config.components)?;
    let (records, mut report) = summarize_records(config, client.backend_name(), records);
    compare_with_baseline(config, &records, &mut report)?;
    write_run(&config.output_dir, &records, &report)?;
    Ok((records, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CODE: &str = "def f(a):\n    # note\n\n    b = a + 1\n    return b\n";

    #[test]
    fn target_lines_skip_first_blank_and_comment_lines() {
        for seed in 0..50 {
            let t = choose_target_line(CODE, Language::Python, seed, "x").unwrap();
            assert!(t == 3 || t == 4, "{t}");
        }
        assert_eq!(choose_target_line("one line", Language::Python, 0, "x"), None);
        let a = choose_target_line(CODE, Language::Python, 9, "id");
        assert_eq!(a, choose_target_line(CODE, Language::Python, 9, "id"));
    }

    #[test]
    fn prefix_excludes_the_target_line() {
        let (prefix, gold) = split_at_line(CODE, 3);
        assert_eq!(prefix, "def f(a):\n    # note\n");
        assert_eq!(gold, "b = a + 1");
    }
}
