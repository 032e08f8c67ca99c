//! Sentence-level BLEU-4 with two smoothing schemes.

use std::collections::HashMap;

use super::{reference_tokens, tokenize_summary};
use crate::error::Result;

const MAX_N: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// `(clipped matches, candidate n-grams)` for each order 1..=4.
fn overlaps(candidate: &[String], reference: &[String]) -> [(usize, usize); MAX_N] {
    let mut out = [(0, 0); MAX_N];
    for (i, slot) in out.iter_mut().enumerate() {
        let n = i + 1;
        let refs = ngram_counts(reference, n);
        let correct =
            ngram_counts(candidate, n).into_iter().map(|(g, c)| c.min(refs.get(g).copied().unwrap_or(0))).sum();
        *slot = (correct, candidate.len().saturating_sub(i));
    }
    out
}

/// BLEU-CN: add-one smoothing on orders 2..=4 and the brevity penalty
/// `min(0, 1 - (r+1)/(c+1))` in log space.
///
/// An empty candidate scores 0.
pub fn bleu_cn_tokens(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let tiny = f64::MIN_POSITIVE;
    let mut log_bleu = 0.0;
    for (i, (correct, guess)) in overlaps(candidate, reference).into_iter().enumerate() {
        let smooth = if i > 0 { 1.0 } else { 0.0 };
        log_bleu += (correct as f64 + smooth + tiny).ln() - (guess as f64 + smooth + tiny).ln();
    }
    log_bleu /= MAX_N as f64;
    let (r, c) = (reference.len() as f64, candidate.len() as f64);
    log_bleu += f64::min(0.0, 1.0 - (r + 1.0) / (c + 1.0));
    (log_bleu.exp() * 100.0).clamp(0.0, 100.0)
}

/// BLEU-CN on raw strings.
///
/// ```
/// let s = asap::metrics::bleu_cn(
///     "Round a tensor to the nearest integer",
///     "Rounds the values of a tensor to the nearest integer element - wise",
/// ).unwrap();
/// assert!((s - 39.52).abs() < 0.01);
/// ```
pub fn bleu_cn(candidate: &str, reference: &str) -> Result<f64> {
    let r = reference_tokens(reference)?;
    Ok(bleu_cn_tokens(&tokenize_summary(candidate), &r))
}

/// BLEU-DC: uniform BLEU-4 with Chen and Cherry's smoothing method 4
/// (`k = 5`). Orders with no match get `1 / (2^i * k / ln c)` as numerator,
/// `i` counting such orders from 1; orders that stay at zero are left out
/// of the geometric mean. Without a single unigram match the score is 0.
pub fn bleu_dc_tokens(candidate: &[String], reference: &[String]) -> f64 {
    const K: f64 = 5.0;
    let stats = overlaps(candidate, reference);
    if stats[0].0 == 0 {
        return 0.0;
    }
    let c = candidate.len();
    let r = reference.len();
    let mut inverse = 1;
    let mut log_sum = 0.0;
    for (correct, guess) in stats {
        let denominator = guess.max(1) as f64;
        let p = if correct == 0 && c > 1 {
            let numerator = 1.0 / (2f64.powi(inverse) * K / (c as f64).ln());
            inverse += 1;
            numerator / denominator
        } else {
            correct as f64 / denominator
        };
        if p > 0.0 {
            log_sum += 0.25 * p.ln();
        }
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    (bp * log_sum.exp() * 100.0).clamp(0.0, 100.0)
}

pub fn bleu_dc(candidate: &str, reference: &str) -> Result<f64> {
    let r = reference_tokens(reference)?;
    Ok(bleu_dc_tokens(&tokenize_summary(candidate), &r))
}
