//! Summary metrics (BLEU-CN, BLEU-DC, ROUGE-L, METEOR) over a shared
//! tokenizer, and line-completion metrics (exact match, edit similarity).
//!
//! Every score is on a 0..=100 scale.

mod bleu;
mod completion;
mod meteor;
mod rouge;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bleu::{bleu_cn, bleu_cn_tokens, bleu_dc, bleu_dc_tokens};
pub use completion::{edit_similarity, exact_match, levenshtein, normalize_whitespace};
pub use meteor::{meteor, meteor_tokens, MeteorParams};
pub use rouge::{lcs_len, rouge_l, rouge_l_tokens, ROUGE_BETA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    BleuCn,
    BleuDc,
    RougeL,
    Meteor,
    Em,
    Es,
}

impl Metric {
    pub const SUMMARY: [Metric; 4] = [Metric::BleuCn, Metric::BleuDc, Metric::RougeL, Metric::Meteor];
    pub const COMPLETION: [Metric; 2] = [Metric::Em, Metric::Es];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::BleuCn => "bleu_cn",
            Metric::BleuDc => "bleu_dc",
            Metric::RougeL => "rouge_l",
            Metric::Meteor => "meteor",
            Metric::Em => "em",
            Metric::Es => "es",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Metric::SUMMARY.as_slice(), Metric::COMPLETION.as_slice()]
            .concat()
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric: Metric,
    pub value: f64,
    pub candidate_id: String,
}

/// Lowercases, keeps runs of letters, digits and `_` together, and makes
/// every other non-space character its own token.
///
/// ```
/// assert_eq!(asap::metrics::tokenize_summary("Element-wise."), ["element", "-", "wise", "."]);
/// ```
pub fn tokenize_summary(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_alphanumeric() || ch == '_' {
            word.push(ch);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            tokens.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

pub(crate) fn reference_tokens(reference: &str) -> Result<Vec<String>> {
    let tokens = tokenize_summary(reference);
    if tokens.is_empty() {
        return Err(Error::EmptyReference);
    }
    Ok(tokens)
}

/// All four summary metrics for one pair, tokenizing once.
pub fn score_summary(candidate: &str, reference: &str) -> Result<BTreeMap<Metric, f64>> {
    let r = reference_tokens(reference)?;
    let c = tokenize_summary(candidate);
    Ok(BTreeMap::from([
        (Metric::BleuCn, bleu_cn_tokens(&c, &r)),
        (Metric::BleuDc, bleu_dc_tokens(&c, &r)),
        (Metric::RougeL, rouge_l_tokens(&c, &r)),
        (Metric::Meteor, meteor_tokens(&c, &r, &MeteorParams::default())),
    ]))
}

pub fn score_completion(candidate: &str, reference: &str) -> BTreeMap<Metric, f64> {
    BTreeMap::from([
        (Metric::Em, exact_match(candidate, reference)),
        (Metric::Es, edit_similarity(candidate, reference)),
    ])
}

/// Mean value per metric.
pub fn aggregate(scores: &[MetricScore]) -> BTreeMap<Metric, f64> {
    let mut sums: BTreeMap<Metric, (f64, usize)> = BTreeMap::new();
    for s in scores {
        let e = sums.entry(s.metric).or_default();
        e.0 += s.value;
        e.1 += 1;
    }
    sums.into_iter().map(|(m, (sum, n))| (m, sum / n as f64)).collect()
}
