//! CodeSearchNet-style corpora: loading, seeded subsetting and same-project
//! temporal splits.
//!
//! Input files are JSONL with one function per line. The fields read are
//! `repo`, `path`, `func_name`, `original_string` (falling back to `code`),
//! `docstring`, `language` and an optional ISO-8601 `created_at`. An `id`
//! field is honoured when present; otherwise a stable id is derived from the
//! content. Unknown fields are ignored.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    Python,
    Ruby,
    Javascript,
    Go,
    Php,
}

impl Language {
    pub const ALL: [Language; 6] =
        [Language::Java, Language::Python, Language::Ruby, Language::Javascript, Language::Go, Language::Php];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::Python => "python",
            Language::Ruby => "ruby",
            Language::Javascript => "javascript",
            Language::Go => "go",
            Language::Php => "php",
        }
    }

    /// Prefixes that start a line comment (or a block comment line) in this language.
    pub fn comment_prefixes(self) -> &'static [&'static str] {
        match self {
            Language::Python => &["#", "\"\"\"", "'''"],
            Language::Ruby => &["#", "=begin", "=end"],
            Language::Php => &["//", "#", "/*", "*"],
            Language::Java | Language::Javascript | Language::Go => &["//", "/*", "*"],
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "java" => Ok(Language::Java),
            "python" | "py" => Ok(Language::Python),
            "ruby" | "rb" => Ok(Language::Ruby),
            "javascript" | "js" => Ok(Language::Javascript),
            "go" => Ok(Language::Go),
            "php" => Ok(Language::Php),
            other => Err(Error::UnsupportedLanguage(other.to_string())),
        }
    }
}

/// One corpus entry: a function body with its gold summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub repo: String,
    pub path: String,
    pub func_name: String,
    pub code: String,
    pub summary: String,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<DateTime<Utc>>,
}

impl Sample {
    /// Content-derived id, stable across runs and machines.
    pub fn derive_id(repo: &str, path: &str, func_name: &str, code: &str) -> String {
        let mut hasher = Sha256::new();
        for part in [repo, path, func_name, code] {
            hasher.update(part.as_bytes());
            hasher.update([0u8]);
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: PathBuf,
    /// Human-readable description of how the pool was derived.
    pub derivation: Vec<String>,
    pub skipped_records: usize,
}

/// An ordered, language-homogeneous set of samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePool {
    samples: Vec<Sample>,
    language: Language,
    pub provenance: Provenance,
}

impl SamplePool {
    /// Builds a pool, checking the language and id invariants.
    pub fn new(language: Language, samples: Vec<Sample>, provenance: Provenance) -> Result<Self> {
        let mut ids = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.language != language {
                return Err(Error::Config(format!("sample {} is {}, pool is {}", s.id, s.language, language)));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Config(format!("duplicate sample id {}", s.id)));
            }
        }
        Ok(SamplePool { samples, language, provenance })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|s| s.id.as_str())
    }

    fn derived(&self, samples: Vec<Sample>, step: String) -> SamplePool {
        let mut provenance = self.provenance.clone();
        provenance.derivation.push(step);
        SamplePool { samples, language: self.language, provenance }
    }

    /// Keeps only samples whose id is in `ids`, preserving pool order.
    pub fn restrict_to(&self, ids: &HashSet<String>) -> SamplePool {
        let samples = self.samples.iter().filter(|s| ids.contains(&s.id)).cloned().collect();
        self.derived(samples, format!("restricted to {} ids", ids.len()))
    }

    /// Writes the pool back out in the input JSONL layout.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for s in &self.samples {
            let record = RawRecord {
                id: Some(s.id.clone()),
                repo: Some(s.repo.clone()),
                path: Some(s.path.clone()),
                func_name: Some(s.func_name.clone()),
                original_string: Some(s.code.clone()),
                code: None,
                docstring: Some(s.summary.clone()),
                language: Some(s.language.as_str().to_string()),
                created_at: s.created_at.map(|t| t.to_rfc3339()),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.push(b'\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default)]
    repo: Option<String>,
    #[serde(default)]
    path: Option<String>,
    #[serde(default)]
    func_name: Option<String>,
    #[serde(default)]
    original_string: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    code: Option<String>,
    #[serde(default)]
    docstring: Option<String>,
    #[serde(default)]
    language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    created_at: Option<String>,
}

/// First paragraph of a doc comment, whitespace-collapsed.
pub fn first_paragraph(docstring: &str) -> String {
    let mut words = Vec::new();
    let mut started = false;
    for line in docstring.lines() {
        let line = line.trim();
        if line.is_empty() {
            if started {
                break;
            }
            continue;
        }
        started = true;
        words.extend(line.split_whitespace());
    }
    words.join(" ")
}

const DOC_DELIMITERS: &[(&str, &str)] = &[("\"\"\"", "\"\"\""), ("'''", "'''"), ("/**", "*/")];

/// Removes the doc comment or docstring literal holding `docstring` from
/// `code`, so the gold summary cannot leak into a prompt. Whole lines are
/// removed when the literal stands on its own lines.
pub fn strip_docstring(code: &str, docstring: &str) -> String {
    let mut doc = docstring.trim();
    if !doc.is_empty() && !code.contains(doc) {
        // Dedented multi-line docstrings only match on their first line.
        doc = doc.lines().next().unwrap_or_default().trim();
    }
    let Some(pos) = (!doc.is_empty()).then(|| code.find(doc)).flatten() else {
        return code.to_string();
    };
    let Some((open, close)) = DOC_DELIMITERS
        .iter()
        .filter_map(|&(o, c)| code[..pos].rfind(o).map(|i| (i, o, c)))
        .max_by_key(|&(i, _, _)| i)
        .and_then(|(i, _, c)| {
            let after = pos + doc.len();
            code[after..].find(c).map(|j| (i, after + j + c.len()))
        })
    else {
        return code.to_string();
    };
    let line_start = code[..open].rfind('\n').map_or(0, |i| i + 1);
    let lead = code[line_start..open].trim_start();
    let own_line = lead.chars().all(|c| "rRuUbB".contains(c));
    let line_end = code[close..].find('\n').map_or(code.len(), |i| close + i + 1);
    let own_line = own_line && code[close..line_end].trim().is_empty();
    let (from, to) = if own_line { (line_start, line_end) } else { (open, close) };
    let mut out = String::with_capacity(code.len());
    out.push_str(&code[..from]);
    out.push_str(&code[to..]);
    out
}

/// Parses RFC 3339 timestamps, or bare `YYYY-MM-DD` dates as midnight UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)).map(|t| t.and_utc())
}

/// Loads a JSONL corpus file. Records without code or summary are skipped and
/// counted in [`Provenance::skipped_records`], as are exact duplicates.
pub fn load_pool(path: &Path, language: Language) -> Result<SamplePool> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    let mut skipped = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;

        if let Some(lang) = raw.language.as_deref() {
            let found = Language::from_str(lang).map_err(|_| Error::LanguageMismatch {
                path: path.to_path_buf(),
                line: line_no,
                expected: language.to_string(),
                found: lang.to_string(),
            })?;
            if found != language {
                return Err(Error::LanguageMismatch {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected: language.to_string(),
                    found: lang.to_string(),
                });
            }
        }

        let docstring = raw.docstring.as_deref().unwrap_or_default();
        let code = strip_docstring(&raw.original_string.or(raw.code).unwrap_or_default(), docstring);
        let summary = first_paragraph(docstring);
        if code.trim().is_empty() || summary.is_empty() {
            skipped += 1;
            continue;
        }
        let repo = raw.repo.unwrap_or_default();
        let file_path = raw.path.unwrap_or_default();
        let func_name = raw.func_name.unwrap_or_default();
        if !seen.insert((repo.clone(), file_path.clone(), func_name.clone(), code.clone())) {
            skipped += 1;
            continue;
        }
        let created_at = match raw.created_at.as_deref() {
            Some(t) => Some(parse_timestamp(t).ok_or_else(|| Error::Record {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("unparseable created_at `{t}`"),
            })?),
            None => None,
        };
        let id = raw.id.unwrap_or_else(|| Sample::derive_id(&repo, &file_path, &func_name, &code));
        samples.push(Sample { id, repo, path: file_path, func_name, code, summary, language, created_at });
    }

    if samples.is_empty() {
        return Err(Error::EmptyPool { path: path.to_path_buf() });
    }
    if skipped > 0 {
        log::info!("{}: skipped {skipped} records", path.display());
    }
    let provenance = Provenance {
        source: path.to_path_buf(),
        derivation: vec![format!("load_pool(language={language})")],
        skipped_records: skipped,
    };
    SamplePool::new(language, samples, provenance)
}

/// Reads `{"id": ..., "created_at": ...}` lines and fills in timestamps for
/// matching samples. Existing timestamps are overwritten.
pub fn attach_created_at(pool: &SamplePool, metadata: &Path) -> Result<SamplePool> {
    #[derive(Deserialize)]
    struct Meta {
        id: String,
        created_at: String,
    }
    let text = fs::read_to_string(metadata).map_err(|e| Error::io(metadata, e))?;
    let mut stamps = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let meta: Meta = serde_json::from_str(line).map_err(|e| Error::Record {
            path: metadata.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let ts = parse_timestamp(&meta.created_at).ok_or_else(|| Error::Record {
            path: metadata.to_path_buf(),
            line: idx + 1,
            message: format!("unparseable created_at `{}`", meta.created_at),
        })?;
        stamps.insert(meta.id, ts);
    }
    let samples = pool
        .samples
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if let Some(ts) = stamps.get(&s.id) {
                s.created_at = Some(*ts);
            }
            s
        })
        .collect();
    Ok(pool.derived(samples, format!("created_at from {}", metadata.display())))
}

/// Seeded uniform selection of `n` samples without replacement. The result
/// keeps the pool's original relative order.
pub fn sample_uniform(pool: &SamplePool, n: usize, seed: u64) -> Result<SamplePool> {
    if n > pool.len() {
        return Err(Error::SampleTooLarge { requested: n, available: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, pool.len(), n).into_vec();
    picked.sort_unstable();
    let samples = picked.into_iter().map(|i| pool.samples[i].clone()).collect();
    Ok(pool.derived(samples, format!("sample_uniform(n={n}, seed={seed})")))
}

/// Where to cut a time-ordered project history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPoint {
    /// The first `n` samples (plus boundary ties) become exemplars.
    Count(usize),
    /// `floor(fraction * len)` samples (plus boundary ties) become exemplars.
    Fraction(f64),
}

/// Splits one project's samples into an earlier exemplar pool and a later
/// test pool. Samples sharing the boundary timestamp all go to the train side,
/// so a contemporaneous sample never acts as future data.
pub fn split_same_project(pool: &SamplePool, project: &str, split: SplitPoint) -> Result<(SamplePool, SamplePool)> {
    let mut members: Vec<&Sample> = pool.samples.iter().filter(|s| s.repo == project).collect();
    if members.is_empty() {
        return Err(Error::ProjectNotFound(project.to_string()));
    }
    if let Some(s) = members.iter().find(|s| s.created_at.is_none()) {
        return Err(Error::MissingCreatedAt { id: s.id.clone() });
    }
    members.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));

    let mut cut = match split {
        SplitPoint::Count(n) => n.min(members.len()),
        SplitPoint::Fraction(f) => {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!("split fraction {f} outside [0, 1]")));
            }
            ((members.len() as f64) * f).floor() as usize
        }
    };
    if cut > 0 {
        let boundary = members[cut - 1].created_at;
        while cut < members.len() && members[cut].created_at == boundary {
            cut += 1;
        }
    }

    let train: Vec<Sample> = members[..cut].iter().map(|s| (*s).clone()).collect();
    let test: Vec<Sample> = members[cut..].iter().map(|s| (*s).clone()).collect();
    let step = format!("split_same_project({project}, {split:?})");
    Ok((pool.derived(train, format!("{step}: train")), pool.derived(test, format!("{step}: test"))))
}

#[derive(Serialize, Deserialize)]
struct IdLine {
    id: String,
}

/// Writes a golden subset file: one `{"id": ...}` object per line.
pub fn write_id_list(path: &Path, ids: impl IntoIterator<Item = impl AsRef<str>>) -> Result<()> {
    let mut out = Vec::new();
    for id in ids {
        serde_json::to_writer(&mut out, &IdLine { id: id.as_ref().to_string() })?;
        out.write_all(b"\n").expect("writing to a Vec cannot fail");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str::<IdLine>(l)?.id)).collect()
}
