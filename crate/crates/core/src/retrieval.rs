//! BM25 exemplar retrieval over function bodies.
//!
//! Scoring is Okapi BM25 with the non-negative IDF variant
//!
//! ```text
//! idf(t)      = max(0, ln((N - df(t) + 0.5) / (df(t) + 0.5) + 1))
//! score(q, d) = Σ_{t ∈ q} idf(t) · tf(t,d)·(k1 + 1) / (tf(t,d) + k1·(1 - b + b·|d|/avgdl))
//! ```
//!
//! Query tokens are summed with multiplicity. Only code is indexed; the gold
//! summary never enters the index.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SamplePool;
use crate::error::{Error, Result};

pub const SNAPSHOT_FORMAT: &str = "asap-bm25";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    /// Also emit camelCase / snake_case subtokens after each compound token.
    pub split_subtokens: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig { split_subtokens: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

fn split_identifier(word: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for piece in word.split('_').filter(|p| !p.is_empty()) {
        let chars: Vec<char> = piece.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let prev = chars[i - 1];
            let cur = chars[i];
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (cur.is_uppercase() && (prev.is_lowercase() || prev.is_ascii_digit()))
                || (cur.is_uppercase() && prev.is_uppercase() && next_lower);
            if boundary {
                parts.push(chars[start..i].iter().collect::<String>());
                start = i;
            }
        }
        parts.push(chars[start..].iter().collect::<String>());
    }
    parts.into_iter().map(|p| p.to_lowercase()).collect()
}

/// Splits source text into lowercase word tokens. Anything that is neither
/// alphanumeric nor `_` separates tokens. With subtoken splitting on, each
/// compound identifier is followed by its camelCase / snake_case parts.
///
/// ```
/// use asap::retrieval::{tokenize_code, TokenizerConfig};
/// let toks = tokenize_code("fooBar_baz", TokenizerConfig::default());
/// assert_eq!(toks, ["foobar_baz", "foo", "bar", "baz"]);
/// ```
pub fn tokenize_code(text: &str, config: TokenizerConfig) -> Vec<String> {
    let mut out = Vec::new();
    for word in
        text.split(|c: char| !(c.is_alphanumeric() || c == '_')).filter(|w| w.chars().any(char::is_alphanumeric))
    {
        let compound = word.to_lowercase();
        if config.split_subtokens {
            let parts = split_identifier(word);
            let redundant = parts.len() == 1 && parts[0] == compound;
            out.push(compound);
            if !redundant {
                out.extend(parts);
            }
        } else {
            out.push(compound);
        }
    }
    out
}

/// Inverted BM25 index. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    params: Bm25Params,
    tokenizer: TokenizerConfig,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    doc_term_freqs: Vec<HashMap<String, u32>>,
    #[serde(skip)]
    avg_doc_length: f64,
    #[serde(skip)]
    doc_freqs: HashMap<String, u32>,
    #[serde(skip)]
    postings: HashMap<String, Vec<(u32, u32)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
}

impl Bm25Index {
    pub fn build(pool: &SamplePool, params: Bm25Params, tokenizer: TokenizerConfig) -> Result<Self> {
        let docs: Vec<(String, Vec<String>)> =
            pool.samples().iter().map(|s| (s.id.clone(), tokenize_code(&s.code, tokenizer))).collect();
        Self::from_tokens(docs, params, tokenizer)
    }

    /// Builds from pre-tokenized documents.
    pub fn from_tokens(
        docs: Vec<(String, Vec<String>)>,
        params: Bm25Params,
        tokenizer: TokenizerConfig,
    ) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut doc_term_freqs = Vec::with_capacity(docs.len());
        for (id, tokens) in docs {
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_default() += 1;
            }
            doc_ids.push(id);
            doc_lengths.push(tokens.len() as u32);
            doc_term_freqs.push(tf);
        }
        let mut index = Bm25Index {
            params,
            tokenizer,
            doc_ids,
            doc_lengths,
            doc_term_freqs,
            avg_doc_length: 0.0,
            doc_freqs: HashMap::new(),
            postings: HashMap::new(),
        };
        index.derive_statistics()?;
        Ok(index)
    }

    fn derive_statistics(&mut self) -> Result<()> {
        let total: u64 = self.doc_lengths.iter().map(|&l| l as u64).sum();
        if total == 0 {
            return Err(Error::Snapshot("every document is empty; average length would be zero".into()));
        }
        self.avg_doc_length = total as f64 / self.doc_lengths.len() as f64;
        self.doc_freqs.clear();
        self.postings.clear();
        for (doc, tf) in self.doc_term_freqs.iter().enumerate() {
            for (term, &count) in tf {
                *self.doc_freqs.entry(term.clone()).or_default() += 1;
                self.postings.entry(term.clone()).or_default().push((doc as u32, count));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn tokenizer(&self) -> TokenizerConfig {
        self.tokenizer
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_freq(&self, term: &str) -> u32 {
        self.doc_freqs.get(term).copied().unwrap_or(0)
    }

    pub fn term_freq(&self, doc: usize, term: &str) -> u32 {
        self.doc_term_freqs[doc].get(term).copied().unwrap_or(0)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = self.doc_freq(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln().max(0.0)
    }

    fn term_weight(&self, idf: f64, tf: u32, doc: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        let norm = 1.0 - b + b * self.doc_lengths[doc] as f64 / self.avg_doc_length;
        idf * tf * (k1 + 1.0) / (tf + k1 * norm)
    }

    /// BM25 score of one document. Panics if `doc` is out of range.
    pub fn score(&self, query_tokens: &[String], doc: usize) -> f64 {
        assert!(doc < self.doc_ids.len(), "document {doc} out of range");
        query_tokens
            .iter()
            .map(|t| match self.doc_term_freqs[doc].get(t) {
                Some(&tf) => self.term_weight(self.idf(t), tf, doc),
                None => 0.0,
            })
            .sum()
    }

    /// Top-`k` documents for a code query, by descending score and then
    /// ascending id. `exclude` drops a document by id (self-match).
    pub fn retrieve(&self, code: &str, k: usize, exclude: Option<&str>) -> Vec<Hit> {
        let query = tokenize_code(code, self.tokenizer);
        self.retrieve_tokens(&query, k, exclude)
    }

    pub fn retrieve_tokens(&self, query: &[String], k: usize, exclude: Option<&str>) -> Vec<Hit> {
        if k == 0 {
            return Vec::new();
        }
        let mut scores = vec![0.0f64; self.doc_ids.len()];
        for t in query {
            let Some(postings) = self.postings.get(t) else {
                continue;
            };
            let idf = self.idf(t);
            for &(doc, tf) in postings {
                let doc = doc as usize;
                scores[doc] += self.term_weight(idf, tf, doc);
            }
        }
        let mut ranked: Vec<usize> =
            (0..self.doc_ids.len()).filter(|&d| exclude != Some(self.doc_ids[d].as_str())).collect();
        ranked.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.doc_ids[a].cmp(&self.doc_ids[b]))
        });
        ranked.truncate(k);
        ranked.into_iter().map(|d| Hit { id: self.doc_ids[d].clone(), score: scores[d] }).collect()
    }

    /// Writes a versioned JSON snapshot.
    pub fn save(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Snapshot<'a> {
            format: &'static str,
            version: u32,
            index: &'a Bm25Index,
        }
        let bytes = serde_json::to_vec(&Snapshot { format: SNAPSHOT_FORMAT, version: SNAPSHOT_VERSION, index: self })?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Snapshot {
            format: String,
            version: u32,
            index: Bm25Index,
        }
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let snap: Snapshot = serde_json::from_slice(&bytes)?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(Error::Snapshot(format!("unexpected format `{}`", snap.format)));
        }
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {} (expected {SNAPSHOT_VERSION})", snap.version)));
        }
        let mut index = snap.index;
        if index.doc_ids.len() != index.doc_lengths.len() || index.doc_ids.len() != index.doc_term_freqs.len() {
            return Err(Error::Snapshot("inconsistent document tables".into()));
        }
        if index.doc_ids.is_empty() {
            return Err(Error::EmptyIndex);
        }
        index.derive_statistics()?;
        Ok(index)
    }
}

/// Builds an index over a pool's code with the given parameters.
pub fn build_index(pool: &SamplePool, params: Bm25Params) -> Result<Bm25Index> {
    Bm25Index::build(pool, params, TokenizerConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize_code(s, TokenizerConfig::default())
    }

    fn index(docs: &[&str]) -> Bm25Index {
        let docs = docs.iter().enumerate().map(|(i, d)| (format!("d{i:03}"), toks(d))).collect();
        Bm25Index::from_tokens(docs, Bm25Params::default(), TokenizerConfig::default()).unwrap()
    }

    #[test]
    fn tokenizer_rules() {
        assert!(toks("").is_empty());
        assert_eq!(toks("fooBar_baz"), ["foobar_baz", "foo", "bar", "baz"]);
        assert_eq!(toks("x = a+b;"), ["x", "a", "b"]);
        assert_eq!(toks("HTTPServer"), ["httpserver", "http", "server"]);
        assert_eq!(toks("__init__"), ["__init__", "init"]);
        assert_eq!(toks("a.b()"), ["a", "b"]);
        assert!(toks("_ __ ;;").is_empty());
        let plain = tokenize_code("fooBar_baz", TokenizerConfig { split_subtokens: false });
        assert_eq!(plain, ["foobar_baz"]);
    }

    #[test]
    fn single_doc_statistics() {
        let idx = index(&["alpha beta beta"]);
        assert_eq!(idx.avg_doc_length(), 3.0);
        assert_eq!(idx.doc_freq("beta"), 1);
    }

    #[test]
    fn identical_docs_are_symmetric() {
        let idx = index(&["int x = y;", "int x = y;"]);
        assert_eq!(idx.doc_lengths()[0], idx.doc_lengths()[1]);
        for t in ["int", "x", "y"] {
            assert_eq!(idx.doc_freq(t), 2);
        }
    }

    #[test]
    fn no_shared_terms_scores_zero() {
        let idx = index(&["alpha beta", "gamma"]);
        assert_eq!(idx.score(&toks("delta"), 0), 0.0);
    }

    #[test]
    fn single_doc_matches_expanded_formula() {
        let idx = index(&["alpha beta beta gamma"]);
        let (k1, b) = (1.2, 0.75);
        let idf = ((1.0 - 1.0 + 0.5) / (1.0 + 0.5) + 1.0f64).ln();
        let tf = 1.0;
        let expected = idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * 4.0 / 4.0));
        assert!((idx.score(&toks("alpha"), 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_pool_rejected() {
        assert!(matches!(
            Bm25Index::from_tokens(Vec::new(), Bm25Params::default(), TokenizerConfig::default()),
            Err(Error::EmptyIndex)
        ));
    }

    #[test]
    fn retrieve_orders_and_excludes() {
        let idx = index(&["alpha beta", "alpha", "zeta marker5", "beta beta"]);
        let hits = idx.retrieve("marker5 alpha", 10, None);
        assert_eq!(hits[0].id, "d002");
        assert_eq!(hits.len(), 4);
        let hits = idx.retrieve("marker5 alpha", 10, Some("d002"));
        assert!(hits.iter().all(|h| h.id != "d002"));
        assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
        assert!(idx.retrieve("alpha", 0, None).is_empty());
    }

    #[test]
    fn ties_break_by_id() {
        let idx = index(&["same text", "same text", "other"]);
        let hits = idx.retrieve("same", 3, None);
        assert_eq!(hits[0].id, "d000");
        assert_eq!(hits[1].id, "d001");
        assert_eq!(hits[2].score, 0.0);
    }

    #[test]
    fn snapshot_round_trip() {
        let idx = index(&["alpha beta", "gamma delta alpha"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx.json");
        idx.save(&path).unwrap();
        let back = Bm25Index::load(&path).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.retrieve("alpha", 2, None), idx.retrieve("alpha", 2, None));

        let text = std::fs::read_to_string(&path).unwrap().replace("\"version\":1", "\"version\":9");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(Bm25Index::load(&path), Err(Error::Snapshot(_))));
    }
}
