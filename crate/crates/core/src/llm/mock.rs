//! Offline backend whose output is a pure function of the prompt text.
//!
//! - Summarization prompts (ending in `Summary:`) get the summary of the
//!   exemplar nearest the target, or a line derived from the code when
//!   there is none.
//! - If the target block contains `asap-mock:empty-until=N`, the answer is
//!   empty while fewer than `N` exemplar summaries are present.
//! - Any other prompt gets the first 40 characters of its last line with
//!   the case of every letter swapped.

use super::{Backend, FinishReason, ModelParams, RawCompletion};
use crate::error::Result;
use crate::prompt::SUMMARY_CUE;

pub const MOCK_EMPTY_MARKER: &str = "asap-mock:empty-until=";

#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

fn swap_case(s: &str) -> String {
    s.chars()
        .flat_map(|c| -> Box<dyn Iterator<Item = char>> {
            if c.is_uppercase() {
                Box::new(c.to_lowercase())
            } else if c.is_lowercase() {
                Box::new(c.to_uppercase())
            } else {
                Box::new(std::iter::once(c))
            }
        })
        .collect()
}

fn summarize(prompt: &str) -> String {
    let lines: Vec<&str> = prompt.lines().collect();
    let cue = format!("{SUMMARY_CUE} ");
    let summaries: Vec<(usize, &str)> =
        lines.iter().enumerate().filter_map(|(i, l)| l.strip_prefix(cue.as_str()).map(|s| (i, s))).collect();
    let target_start = summaries.last().map_or(0, |(i, _)| i + 1);
    let target = lines[target_start..].join("\n");
    if let Some(pos) = target.find(MOCK_EMPTY_MARKER) {
        let digits: String = target[pos + MOCK_EMPTY_MARKER.len()..].chars().take_while(char::is_ascii_digit).collect();
        if let Ok(needed) = digits.parse::<usize>() {
            if summaries.len() < needed {
                return String::new();
            }
        }
    }
    if let Some((_, summary)) = summaries.last() {
        return summary.trim().to_string();
    }
    let words: Vec<String> = lines
        .first()
        .unwrap_or(&"")
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .take(6)
        .map(str::to_lowercase)
        .collect();
    if words.is_empty() {
        "Summarizes the code.".to_string()
    } else {
        format!("Summarizes {}.", words.join(" "))
    }
}

impl MockBackend {
    pub fn respond(prompt: &str) -> String {
        if prompt.trim_end().ends_with(SUMMARY_CUE) {
            summarize(prompt)
        } else {
            let last = prompt.lines().last().unwrap_or("");
            swap_case(&last.chars().take(40).collect::<String>())
        }
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &'static str {
        "mock"
    }

    fn complete(&self, prompt: &str, _params: &ModelParams) -> Result<RawCompletion> {
        Ok(RawCompletion { text: MockBackend::respond(prompt), finish_reason: FinishReason::Stop })
    }
}
