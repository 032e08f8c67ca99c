//! METEOR with exact and stem matching stages (no synonym stage).
//!
//! The alignment maximizes exact matches, then stem matches, then
//! minimizes the number of chunks. The first two counts have closed forms;
//! the chunk minimization is a bounded depth-first search.

use std::collections::HashMap;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

use super::{reference_tokens, tokenize_summary};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Search nodes before settling for the best alignment found so far.
    pub node_budget: usize,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams { alpha: 0.9, beta: 3.0, gamma: 0.5, node_budget: 200_000 }
    }
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

struct Interner(HashMap<String, usize>);

impl Interner {
    fn id(&mut self, s: &str) -> usize {
        let next = self.0.len();
        *self.0.entry(s.to_string()).or_insert(next)
    }
}

struct Search {
    c_words: Vec<usize>,
    c_stems: Vec<usize>,
    r_words: Vec<usize>,
    r_stems: Vec<usize>,
    used: Vec<bool>,
    rem_c_word: Vec<usize>,
    rem_c_stem: Vec<usize>,
    free_r_word: Vec<usize>,
    free_r_stem: Vec<usize>,
    need_exact: usize,
    need_total: usize,
    best_chunks: usize,
    nodes: usize,
    budget: usize,
}

fn optimistic(rem: &[usize], free: &[usize]) -> usize {
    rem.iter().zip(free).map(|(a, b)| *a.min(b)).sum()
}

impl Search {
    fn take(&mut self, j: usize, delta: isize) {
        self.used[j] = delta < 0;
        let w = self.r_words[j];
        let s = self.r_stems[j];
        self.free_r_word[w] = (self.free_r_word[w] as isize + delta) as usize;
        self.free_r_stem[s] = (self.free_r_stem[s] as isize + delta) as usize;
    }

    fn dfs(&mut self, i: usize, exact: usize, total: usize, chunks: usize, last: Option<(usize, usize)>) {
        self.nodes += 1;
        if self.nodes > self.budget && self.best_chunks != usize::MAX {
            return;
        }
        if chunks >= self.best_chunks {
            return;
        }
        if exact + optimistic(&self.rem_c_word, &self.free_r_word) < self.need_exact
            || total + optimistic(&self.rem_c_stem, &self.free_r_stem) < self.need_total
        {
            return;
        }
        if i == self.c_words.len() {
            self.best_chunks = chunks;
            return;
        }
        let (w, s) = (self.c_words[i], self.c_stems[i]);
        self.rem_c_word[w] -= 1;
        self.rem_c_stem[s] -= 1;

        let mut options: Vec<(usize, bool)> = (0..self.r_words.len())
            .filter(|&j| !self.used[j])
            .filter_map(|j| {
                if self.r_words[j] == w {
                    Some((j, true))
                } else if self.r_stems[j] == s {
                    Some((j, false))
                } else {
                    None
                }
            })
            .collect();
        // Extending the current chunk first finds good bounds early.
        let follows = |j: usize| last.is_some_and(|(li, lj)| li + 1 == i && lj + 1 == j);
        options.sort_by_key(|&(j, is_exact)| (!follows(j), !is_exact, j));

        for (j, is_exact) in options {
            let extra = usize::from(!follows(j));
            self.take(j, -1);
            self.dfs(i + 1, exact + usize::from(is_exact), total + 1, chunks + extra, Some((i, j)));
            self.take(j, 1);
        }
        self.dfs(i + 1, exact, total, chunks, last);

        self.rem_c_word[w] += 1;
        self.rem_c_stem[s] += 1;
    }
}

/// `(matches, chunks)` of the best alignment.
pub(crate) fn align(candidate: &[String], reference: &[String], budget: usize) -> (usize, usize) {
    let mut words = Interner(HashMap::new());
    let mut stems = Interner(HashMap::new());
    let mut ids = |tokens: &[String]| -> (Vec<usize>, Vec<usize>) {
        tokens.iter().map(|t| (words.id(t), stems.id(&stemmer().stem(t)))).unzip()
    };
    let (c_words, c_stems) = ids(candidate);
    let (r_words, r_stems) = ids(reference);
    let (nw, ns) = (words.0.len(), stems.0.len());

    let count = |xs: &[usize], n: usize| {
        let mut v = vec![0usize; n];
        for &x in xs {
            v[x] += 1;
        }
        v
    };
    let (cw, rw) = (count(&c_words, nw), count(&r_words, nw));
    let need_exact = optimistic(&cw, &rw);
    // Leftovers after exact matching, pooled by stem.
    let mut cl = vec![0usize; ns];
    let mut rl = vec![0usize; ns];
    for (tokens, stems_of, left, counts, other) in
        [(&c_words, &c_stems, &mut cl, &cw, &rw), (&r_words, &r_stems, &mut rl, &rw, &cw)]
    {
        let mut seen = vec![false; nw];
        for (&w, &s) in tokens.iter().zip(stems_of.iter()) {
            if !seen[w] {
                seen[w] = true;
                left[s] += counts[w] - counts[w].min(other[w]);
            }
        }
    }
    let need_total = need_exact + optimistic(&cl, &rl);
    if need_total == 0 {
        return (0, 0);
    }

    let mut search = Search {
        rem_c_word: cw,
        rem_c_stem: count(&c_stems, ns),
        free_r_word: rw,
        free_r_stem: count(&r_stems, ns),
        used: vec![false; r_words.len()],
        c_words,
        c_stems,
        r_words,
        r_stems,
        need_exact,
        need_total,
        best_chunks: usize::MAX,
        nodes: 0,
        budget,
    };
    search.dfs(0, 0, 0, 0, None);
    (need_total, search.best_chunks)
}

/// METEOR from a given match count and chunk count.
pub(crate) fn meteor_formula(matches: usize, chunks: usize, c: usize, r: usize, params: &MeteorParams) -> f64 {
    if matches == 0 {
        return 0.0;
    }
    let m = matches as f64;
    let p = m / c as f64;
    let rec = m / r as f64;
    let fmean = p * rec / (params.alpha * p + (1.0 - params.alpha) * rec);
    let penalty = params.gamma * (chunks as f64 / m).powf(params.beta);
    100.0 * fmean * (1.0 - penalty)
}

pub fn meteor_tokens(candidate: &[String], reference: &[String], params: &MeteorParams) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let (matches, chunks) = align(candidate, reference, params.node_budget);
    meteor_formula(matches, chunks, candidate.len(), reference.len(), params)
}

/// ```
/// let s = asap::metrics::meteor("the cat sat", "the cat sat down").unwrap();
/// assert!((s - 75.4986).abs() < 1e-3);
/// ```
pub fn meteor(candidate: &str, reference: &str) -> Result<f64> {
    let r = reference_tokens(reference)?;
    Ok(meteor_tokens(&tokenize_summary(candidate), &r, &MeteorParams::default()))
}
