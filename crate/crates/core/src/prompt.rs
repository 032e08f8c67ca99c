//! Prompt rendering and budgeted assembly.
//!
//! Format v1. An exemplar block is the code, then its fact lines, then a
//! `Summary:` line; the target block ends at `Summary:`. Blocks are joined
//! by one blank line. Completion prompts put the fact lines, a blank line,
//! and the raw prefix.
//!
//! ```text
//! public int add(int a, int b) { return a + b; }
//! # Repository: owner/name
//! # Path: src/Calc.java
//! # Function: Calc.add
//! # Identifiers:
//! #   function_name: add
//! #   parameter: a
//! # Dataflow:
//! #   a(3) comes_from a(1)
//! Summary: Adds two numbers.
//! ```

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisProduct, RepoFact};
use crate::corpus::Sample;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_BUDGET: usize = 4000;
pub const DEFAULT_RESERVE: usize = 256;
pub const DEFAULT_MAX_DFG_LINES: usize = 30;
pub const BLOCK_SEPARATOR: &str = "\n\n";
pub const SUMMARY_CUE: &str = "Summary:";

/// `ceil(bytes / 4)`.
///
/// ```
/// assert_eq!(asap::prompt::estimate_tokens(""), 0);
/// assert_eq!(asap::prompt::estimate_tokens("12345678"), 2);
/// assert_eq!(asap::prompt::estimate_tokens("123456789"), 3);
/// ```
pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

/// Where the best-ranked exemplar goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExemplarOrder {
    /// Lowest-ranked first, so the best match sits next to the target.
    #[default]
    BestLast,
    BestFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub budget: usize,
    pub reserve: usize,
    pub max_dfg_lines: usize,
    /// Render identifiers as `tag: name`; otherwise names only.
    pub tagged_identifiers: bool,
    pub order: ExemplarOrder,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            budget: DEFAULT_BUDGET,
            reserve: DEFAULT_RESERVE,
            max_dfg_lines: DEFAULT_MAX_DFG_LINES,
            tagged_identifiers: true,
            order: ExemplarOrder::BestLast,
        }
    }
}

impl PromptConfig {
    pub fn limit(&self) -> usize {
        self.budget.saturating_sub(self.reserve)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarBlock {
    pub sample_id: String,
    pub code: String,
    pub facts_text: String,
    /// Gold summary; `None` for the target block.
    pub output: Option<String>,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub blocks: Vec<ExemplarBlock>,
    pub text: String,
    pub estimated_tokens: usize,
    pub shots_used: usize,
    pub budget: usize,
    /// Fact sections dropped to fit the budget (completion prompts).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_facts: Vec<String>,
}

/// A ranked retrieval result with its facts, if any.
#[derive(Debug, Clone, Copy)]
pub struct Exemplar<'a> {
    pub sample: &'a Sample,
    pub product: Option<&'a AnalysisProduct>,
}

fn quoted_list(s: &str) -> String {
    let parts: Vec<String> =
        s.split('/').filter(|p| !p.is_empty()).map(|p| serde_json::to_string(p).expect("strings serialize")).collect();
    format!("[{}]", parts.join(", "))
}

fn render_repo(fact: &RepoFact, out: &mut String) {
    let (repo, path) = if fact.tokenized {
        (quoted_list(&fact.repo), quoted_list(&fact.path))
    } else {
        (fact.repo.clone(), fact.path.clone())
    };
    out.push_str(&format!("# Repository: {repo}\n"));
    out.push_str(&format!("# Path: {path}\n"));
    out.push_str(&format!("# Function: {}\n", fact.func_name));
}

/// Fact lines for `product`, each ending in a newline. Identifiers are
/// listed once per distinct `(tag, name)`, in order of first occurrence.
pub fn render_facts(product: &AnalysisProduct, config: &PromptConfig) -> String {
    let mut out = String::new();
    if let Some(fact) = &product.repo_fact {
        render_repo(fact, &mut out);
    }
    if let Some(ids) = product.identifiers.as_ref().filter(|ids| !ids.is_empty()) {
        out.push_str("# Identifiers:\n");
        let mut seen = HashSet::new();
        for ident in ids {
            let line = if config.tagged_identifiers {
                format!("#   {}: {}\n", ident.tag, ident.name)
            } else {
                format!("#   {}\n", ident.name)
            };
            if seen.insert(line.clone()) {
                out.push_str(&line);
            }
        }
    }
    if let Some(edges) = product.dfg.as_ref().filter(|e| !e.is_empty()) {
        out.push_str("# Dataflow:\n");
        for edge in edges.iter().take(config.max_dfg_lines) {
            let sources: Vec<String> =
                edge.source_names.iter().zip(&edge.source_indices).map(|(n, i)| format!("{n}({i})")).collect();
            out.push_str(&format!(
                "#   {}({}) {} {}\n",
                edge.target_name,
                edge.target_index,
                edge.kind.as_str(),
                sources.join(", ")
            ));
        }
        if edges.len() > config.max_dfg_lines {
            out.push_str(&format!("#   ... {} more\n", edges.len() - config.max_dfg_lines));
        }
    }
    out
}

/// One block: code, facts, then `Summary:` with or without the gold text.
pub fn render_exemplar(
    sample: &Sample,
    product: Option<&AnalysisProduct>,
    include_output: bool,
    config: &PromptConfig,
) -> ExemplarBlock {
    let code = sample.code.trim_end().to_string();
    let facts_text = product.map(|p| render_facts(p, config)).unwrap_or_default();
    let output = include_output.then(|| sample.summary.trim().to_string());
    let mut rendered = format!("{code}\n{facts_text}{SUMMARY_CUE}");
    if let Some(summary) = &output {
        rendered.push(' ');
        rendered.push_str(summary);
    }
    ExemplarBlock { sample_id: sample.id.clone(), code, facts_text, output, rendered }
}

fn join(blocks: Vec<ExemplarBlock>, shots: usize, budget: usize) -> Prompt {
    let text = blocks.iter().map(|b| b.rendered.as_str()).collect::<Vec<_>>().join(BLOCK_SEPARATOR);
    Prompt {
        estimated_tokens: estimate_tokens(&text),
        blocks,
        text,
        shots_used: shots,
        budget,
        dropped_facts: Vec::new(),
    }
}

/// Few-shot summarization prompt from exemplars ranked best first.
///
/// Uses the top `shots` exemplars. While the estimate exceeds the budget
/// minus the reserve, the lowest-ranked exemplar is dropped, down to one.
pub fn assemble_summarization_prompt(
    exemplars: &[Exemplar<'_>],
    target: &Sample,
    target_product: Option<&AnalysisProduct>,
    shots: usize,
    config: &PromptConfig,
) -> Result<Prompt> {
    if exemplars.len() < shots {
        log::warn!("sample {}: {} exemplars available for {shots} shots", target.id, exemplars.len());
    }
    let target_block = render_exemplar(target, target_product, false, config);
    let rendered: Vec<ExemplarBlock> =
        exemplars.iter().take(shots).map(|e| render_exemplar(e.sample, e.product, true, config)).collect();

    let mut k = rendered.len();
    loop {
        let mut blocks: Vec<ExemplarBlock> = rendered[..k].to_vec();
        if config.order == ExemplarOrder::BestLast {
            blocks.reverse();
        }
        blocks.push(target_block.clone());
        let prompt = join(blocks, k, config.budget);
        if prompt.estimated_tokens <= config.limit() {
            return Ok(prompt);
        }
        if k <= 1 {
            return Err(Error::OversizePrompt {
                sample_id: target.id.clone(),
                estimated: prompt.estimated_tokens,
                limit: config.limit(),
            });
        }
        k -= 1;
    }
}

/// Completion prompt: fact lines, a blank line, then the prefix verbatim.
/// With no facts the prompt is exactly the prefix. Over budget, the
/// dataflow, then the identifiers, then the repository fact are dropped.
pub fn assemble_completion_prompt(
    sample_id: &str,
    prefix: &str,
    product: &AnalysisProduct,
    config: &PromptConfig,
) -> Result<Prompt> {
    if prefix.trim().is_empty() {
        return Err(Error::Config(format!("sample {sample_id}: completion prefix is empty")));
    }
    let mut product = product.clone();
    let mut dropped = Vec::new();
    loop {
        let facts = render_facts(&product, config);
        let text = if facts.is_empty() { prefix.to_string() } else { format!("{facts}\n{prefix}") };
        let estimated = estimate_tokens(&text);
        if estimated <= config.limit() {
            let block = ExemplarBlock {
                sample_id: sample_id.to_string(),
                code: prefix.to_string(),
                facts_text: facts,
                output: None,
                rendered: text.clone(),
            };
            return Ok(Prompt {
                blocks: vec![block],
                text,
                estimated_tokens: estimated,
                shots_used: 0,
                budget: config.budget,
                dropped_facts: dropped,
            });
        }
        if product.dfg.take().is_some() {
            dropped.push("dfg".to_string());
        } else if product.identifiers.take().is_some() {
            dropped.push("identifiers".to_string());
        } else if product.repo_fact.take().is_some() {
            dropped.push("repo".to_string());
        } else {
            return Err(Error::OversizePrompt { sample_id: sample_id.to_string(), estimated, limit: config.limit() });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{DfgEdge, EdgeKind, Tag, TaggedIdentifier};
    use crate::corpus::Language;

    fn sample(id: &str, code: &str, summary: &str) -> Sample {
        Sample {
            id: id.into(),
            repo: "tony19/logback-android".into(),
            path: "src/main/java/Foo.java".into(),
            func_name: "Foo.bar".into(),
            code: code.into(),
            summary: summary.into(),
            language: Language::Java,
            created_at: None,
        }
    }

    fn repo_only(tokenized: bool) -> AnalysisProduct {
        AnalysisProduct {
            repo_fact: Some(RepoFact {
                repo: "tony19/logback-android".into(),
                path: "src/Foo.java".into(),
                func_name: "Foo.bar".into(),
                signature: "void bar()".into(),
                tokenized,
            }),
            ..AnalysisProduct::default()
        }
    }

    fn edges(n: usize) -> Vec<DfgEdge> {
        (0..n)
            .map(|i| DfgEdge {
                target_name: "x".into(),
                target_index: i + 1,
                kind: EdgeKind::ComesFrom,
                source_indices: vec![i],
                source_names: vec!["x".into()],
            })
            .collect()
    }

    #[test]
    fn tokenized_repo_renders_as_list() {
        let facts = render_facts(&repo_only(true), &PromptConfig::default());
        assert!(facts.contains("# Repository: [\"tony19\", \"logback-android\"]\n"));
        let plain = render_facts(&repo_only(false), &PromptConfig::default());
        assert!(plain.contains("# Repository: tony19/logback-android\n"));
    }

    #[test]
    fn dfg_is_truncated() {
        let product = AnalysisProduct { dfg: Some(edges(45)), ..AnalysisProduct::default() };
        let facts = render_facts(&product, &PromptConfig::default());
        let lines: Vec<&str> = facts.lines().collect();
        assert_eq!(lines.len(), 1 + 30 + 1);
        assert_eq!(lines[31], "#   ... 15 more");
        assert_eq!(lines[1], "#   x(1) comes_from x(0)");
    }

    #[test]
    fn identifiers_render_unique() {
        let ids = vec![
            TaggedIdentifier { name: "f".into(), tag: Tag::FunctionName, occurrence: 0 },
            TaggedIdentifier { name: "a".into(), tag: Tag::Parameter, occurrence: 1 },
            TaggedIdentifier { name: "a".into(), tag: Tag::Identifier, occurrence: 2 },
            TaggedIdentifier { name: "a".into(), tag: Tag::Identifier, occurrence: 3 },
        ];
        let product = AnalysisProduct { identifiers: Some(ids), ..AnalysisProduct::default() };
        let facts = render_facts(&product, &PromptConfig::default());
        assert_eq!(facts, "# Identifiers:\n#   function_name: f\n#   parameter: a\n#   identifier: a\n");
        let untagged = PromptConfig { tagged_identifiers: false, ..PromptConfig::default() };
        assert_eq!(render_facts(&product, &untagged), "# Identifiers:\n#   f\n#   a\n");
    }

    #[test]
    fn target_block_has_no_output() {
        let s = sample("t", "void bar() {}\n", "Does bar.");
        let block = render_exemplar(&s, None, false, &PromptConfig::default());
        assert_eq!(block.rendered, "void bar() {}\nSummary:");
        let block = render_exemplar(&s, Some(&repo_only(false)), true, &PromptConfig::default());
        assert!(block.rendered.starts_with("void bar() {}\n# Repository:"));
        assert!(block.rendered.ends_with("# Function: Foo.bar\nSummary: Does bar."));
    }

    #[test]
    fn best_exemplar_is_adjacent_to_target() {
        let ex: Vec<Sample> = (1..=3).map(|i| sample(&format!("r{i}"), "x()", &format!("s{i}"))).collect();
        let ranked: Vec<Exemplar> = ex.iter().map(|s| Exemplar { sample: s, product: None }).collect();
        let target = sample("t", "y()", "");
        let p = assemble_summarization_prompt(&ranked, &target, None, 3, &PromptConfig::default()).unwrap();
        let ids: Vec<&str> = p.blocks.iter().map(|b| b.sample_id.as_str()).collect();
        assert_eq!(ids, ["r3", "r2", "r1", "t"]);
        assert_eq!(p.shots_used, 3);
        assert!(p.text.ends_with("Summary:"));
        assert_eq!(p.text, p.blocks.iter().map(|b| b.rendered.clone()).collect::<Vec<_>>().join("\n\n"));
    }

    #[test]
    fn oversize_exemplar_is_dropped() {
        // The rank-3 block alone is about 3000 tokens; the rest is about 300.
        let big = "x".repeat(12_000);
        let small = "y".repeat(400);
        let ex = [sample("r1", &small, "s"), sample("r2", &small, "s"), sample("r3", &big, "s")];
        let ranked: Vec<Exemplar> = ex.iter().map(|s| Exemplar { sample: s, product: None }).collect();
        let config = PromptConfig { budget: 3500, ..PromptConfig::default() };
        let p = assemble_summarization_prompt(&ranked, &sample("t", &small, ""), None, 3, &config).unwrap();
        assert_eq!(p.shots_used, 2);
        assert!(p.estimated_tokens <= config.limit());
    }

    #[test]
    fn zero_shot_and_hopeless() {
        let target = sample("t", "y()", "");
        let p = assemble_summarization_prompt(&[], &target, None, 3, &PromptConfig::default()).unwrap();
        assert_eq!(p.text, "y()\nSummary:");
        assert_eq!(p.shots_used, 0);
        let huge = sample("t", &"z".repeat(20_000), "");
        assert!(matches!(
            assemble_summarization_prompt(&[], &huge, None, 3, &PromptConfig::default()),
            Err(Error::OversizePrompt { .. })
        ));
    }

    #[test]
    fn completion_prompt_layout_and_drops() {
        let prefix = "def f(a):\n    b = a\n    c = b\n    d = c";
        let p = assemble_completion_prompt("s", prefix, &AnalysisProduct::default(), &PromptConfig::default()).unwrap();
        assert_eq!(p.text, prefix);

        let mut product = repo_only(false);
        product.dfg = Some(edges(30));
        let p = assemble_completion_prompt("s", prefix, &product, &PromptConfig::default()).unwrap();
        assert!(p.text.starts_with("# Repository:"));
        assert!(p.text.ends_with(prefix));

        let tight = PromptConfig { budget: 256 + 60, ..PromptConfig::default() };
        let p = assemble_completion_prompt("s", prefix, &product, &tight).unwrap();
        assert_eq!(p.dropped_facts, ["dfg"]);
        assert!(p.text.contains("# Function:"));
    }
}
