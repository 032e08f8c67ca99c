//! Semantic facts about a function: repository context, tagged identifiers
//! and a dataflow graph.
//!
//! Everything here is structured data; rendering into prompt text lives in
//! [`crate::prompt`].

mod dfg;
mod identifiers;
mod rules;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Language, Sample};
use crate::error::{Error, Result};
pub use tree::{NodeId, SyntaxBackend, SyntaxNode, SyntaxTree, TreeSitterBackend};

/// Syntactic role of an identifier occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    FunctionName,
    Parameter,
    LocalVariable,
    Call,
    Type,
    Attribute,
    Identifier,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::FunctionName => "function_name",
            Tag::Parameter => "parameter",
            Tag::LocalVariable => "local_variable",
            Tag::Call => "call",
            Tag::Type => "type",
            Tag::Attribute => "attribute",
            Tag::Identifier => "identifier",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which tag set to report. `Minimal` keeps only function names and
/// parameters distinct and folds everything else into `identifier`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagVocabulary {
    #[default]
    Extended,
    Minimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedIdentifier {
    pub name: String,
    pub tag: Tag,
    /// 0-based index among the identifier occurrences of the function.
    pub occurrence: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    ComesFrom,
    ComputedFrom,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::ComesFrom => "comes_from",
            EdgeKind::ComputedFrom => "computed_from",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfgEdge {
    pub target_name: String,
    pub target_index: usize,
    pub kind: EdgeKind,
    pub source_indices: Vec<usize>,
    /// Names at `source_indices`, kept so an edge renders without the
    /// identifier list.
    pub source_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoFact {
    pub repo: String,
    pub path: String,
    pub func_name: String,
    pub signature: String,
    /// Render the repository as a `/`-split token list.
    pub tokenized: bool,
}

impl RepoFact {
    pub fn from_sample(sample: &Sample, tokenized: bool) -> Result<Self> {
        if sample.repo.matches('/').count() != 1 || sample.repo.starts_with('/') || sample.repo.ends_with('/') {
            return Err(Error::Analysis(format!("repository {:?} is not of the form owner/name", sample.repo)));
        }
        let signature = sample.code.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or_default().to_string();
        Ok(RepoFact {
            repo: sample.repo.clone(),
            path: sample.path.clone(),
            func_name: sample.func_name.clone(),
            signature,
            tokenized,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisProduct {
    pub repo_fact: Option<RepoFact>,
    pub identifiers: Option<Vec<TaggedIdentifier>>,
    pub dfg: Option<Vec<DfgEdge>>,
    /// Extractors that were requested but degraded, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl AnalysisProduct {
    pub fn is_empty(&self) -> bool {
        self.repo_fact.is_none() && self.identifiers.is_none() && self.dfg.is_none()
    }

    /// Drops the facts not selected by `components`.
    pub fn restricted(mut self, components: Components) -> Self {
        if !components.repo {
            self.repo_fact = None;
        }
        if !components.identifiers {
            self.identifiers = None;
        }
        if !components.dfg {
            self.dfg = None;
        }
        self
    }
}

/// Which extractors to run. Serialized as `"repo,id,dfg"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Components {
    pub repo: bool,
    pub identifiers: bool,
    pub dfg: bool,
}

impl Components {
    pub const NONE: Components = Components { repo: false, identifiers: false, dfg: false };
    pub const ALL: Components = Components { repo: true, identifiers: true, dfg: true };

    pub fn is_empty(self) -> bool {
        !(self.repo || self.identifiers || self.dfg)
    }
}

impl fmt::Display for Components {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.repo {
            parts.push("repo");
        }
        if self.identifiers {
            parts.push("id");
        }
        if self.dfg {
            parts.push("dfg");
        }
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

impl From<Components> for String {
    fn from(c: Components) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Components {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Components {
    type Err = Error;

    /// Parses `"repo,id,dfg"`, `"all"` or `"none"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Components::NONE;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "repo" => out.repo = true,
                "id" | "ids" | "identifiers" => out.identifiers = true,
                "dfg" => out.dfg = true,
                "all" | "asap" => out = Components::ALL,
                "none" | "bm25" => {}
                other => return Err(Error::Config(format!("unknown component {other:?}"))),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub vocabulary: TagVocabulary,
    pub tokenized_path: bool,
    /// Code whose error nodes cover at least this fraction of its
    /// non-whitespace characters is treated as unparseable.
    pub unparseable_threshold: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { vocabulary: TagVocabulary::Extended, tokenized_path: false, unparseable_threshold: 0.5 }
    }
}

/// Parses with the default backend.
pub fn parse(code: &str, language: Language) -> Result<SyntaxTree> {
    let backend = TreeSitterBackend;
    if !backend.supports(language) {
        return Err(Error::UnsupportedLanguage(language.to_string()));
    }
    backend.parse(code, language)
}

fn extract(tree: &SyntaxTree, vocabulary: TagVocabulary) -> (Vec<TaggedIdentifier>, Vec<DfgEdge>) {
    let ex = identifiers::Extraction::new(tree);
    let edges = dfg::build(&ex);
    let mut idents = ex.identifiers;
    identifiers::apply_vocabulary(&mut idents, vocabulary);
    (idents, edges)
}

/// Identifier occurrences in source order with their roles.
///
/// ```
/// use asap::analysis::{tag_identifiers, Tag};
/// use asap::corpus::Language;
///
/// let ids = tag_identifiers("def add(a,b): return a+b", Language::Python).unwrap();
/// let tags: Vec<_> = ids.iter().map(|i| (i.name.as_str(), i.tag)).collect();
/// assert_eq!(tags[0], ("add", Tag::FunctionName));
/// assert_eq!(tags[1], ("a", Tag::Parameter));
/// assert_eq!(tags[3], ("a", Tag::Identifier));
/// ```
pub fn tag_identifiers(code: &str, language: Language) -> Result<Vec<TaggedIdentifier>> {
    let tree = parse(code, language)?;
    Ok(identifiers::Extraction::new(&tree).identifiers)
}

/// Reaching-definition edges, ordered by target occurrence.
pub fn build_dfg(code: &str, language: Language) -> Result<Vec<DfgEdge>> {
    let tree = parse(code, language)?;
    let ex = identifiers::Extraction::new(&tree);
    Ok(dfg::build(&ex))
}

/// Runs the selected extractors on one sample.
///
/// A failing extractor is dropped from the product and noted in
/// `warnings`; only when every requested extractor fails is this an error.
pub fn analyze(sample: &Sample, components: Components, options: &AnalysisOptions) -> Result<AnalysisProduct> {
    if components.is_empty() {
        return Err(Error::Config("analysis needs at least one component".into()));
    }
    let mut product = AnalysisProduct::default();

    if components.repo {
        match RepoFact::from_sample(sample, options.tokenized_path) {
            Ok(fact) => product.repo_fact = Some(fact),
            Err(e) => product.warnings.push(format!("repo: {e}")),
        }
    }

    if components.identifiers || components.dfg {
        match parse(&sample.code, sample.language) {
            Ok(tree) if tree.error_coverage() < options.unparseable_threshold => {
                let (idents, edges) = extract(&tree, options.vocabulary);
                if components.identifiers {
                    product.identifiers = Some(idents);
                }
                if components.dfg {
                    product.dfg = Some(edges);
                }
            }
            Ok(tree) => product.warnings.push(format!(
                "code is unparseable ({:.0}% inside error nodes); identifiers and dataflow omitted",
                tree.error_coverage() * 100.0
            )),
            Err(e) => product.warnings.push(format!("parse: {e}")),
        }
    }

    if product.is_empty() {
        return Err(Error::Analysis(format!(
            "all extractors failed for sample {}: {}",
            sample.id,
            product.warnings.join("; ")
        )));
    }
    for w in &product.warnings {
        log::warn!("sample {}: {w}", sample.id);
    }
    Ok(product)
}

/// Identifiers and dataflow of a code prefix, for line completion.
///
/// Only the prefix text is parsed, so nothing after it can influence the
/// result. An all-whitespace prefix gives an empty product. Callers attach
/// a repository fact themselves when they want one.
pub fn analyze_prefix(prefix: &str, language: Language, options: &AnalysisOptions) -> Result<AnalysisProduct> {
    if prefix.trim().is_empty() {
        return Ok(AnalysisProduct::default());
    }
    let tree = parse(prefix, language)?;
    let (idents, edges) = extract(&tree, options.vocabulary);
    Ok(AnalysisProduct { repo_fact: None, identifiers: Some(idents), dfg: Some(edges), warnings: Vec::new() })
}
