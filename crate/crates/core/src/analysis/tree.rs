//! Backend-neutral concrete syntax trees.
//!
//! Extractors never see a parser library type. A [`SyntaxBackend`] turns
//! source text into an owned [`SyntaxTree`] arena, which is `Send` and can be
//! inspected without holding on to parser state.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ops::Range;

use crate::corpus::Language;
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxNode {
    pub kind: String,
    /// Field name this node occupies in its parent, if any.
    pub field: Option<String>,
    pub named: bool,
    pub is_error: bool,
    pub is_missing: bool,
    /// Byte range in [`SyntaxTree::parsed_text`].
    pub span: Range<usize>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

/// Owned syntax tree. Node 0 is the root.
///
/// Some languages need a synthetic wrapper before a lone function parses
/// (PHP needs `<?php`, a bare Java/JS method may need a class body). The
/// wrapper is kept in `parsed_text`; `region` marks the caller's code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxTree {
    language: Language,
    parsed_text: String,
    region: Range<usize>,
    nodes: Vec<SyntaxNode>,
}

impl SyntaxTree {
    pub fn new(language: Language, parsed_text: String, region: Range<usize>, nodes: Vec<SyntaxNode>) -> Self {
        assert!(!nodes.is_empty(), "a syntax tree needs a root");
        SyntaxTree { language, parsed_text, region, nodes }
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &SyntaxNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parsed_text(&self) -> &str {
        &self.parsed_text
    }

    /// The caller's source, without any wrapper.
    pub fn source(&self) -> &str {
        &self.parsed_text[self.region.clone()]
    }

    pub fn text(&self, id: NodeId) -> &str {
        &self.parsed_text[self.nodes[id].span.clone()]
    }

    /// Whether the node lies entirely inside the caller's code.
    pub fn in_region(&self, id: NodeId) -> bool {
        let span = &self.nodes[id].span;
        span.start >= self.region.start && span.end <= self.region.end
    }

    /// Node ids in pre-order (source order).
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.nodes[id].parent, move |&p| self.nodes[p].parent)
    }

    pub fn child_by_field(&self, id: NodeId, field: &str) -> Option<NodeId> {
        self.children_by_field(id, field).next()
    }

    pub fn children_by_field<'a>(&'a self, id: NodeId, field: &'a str) -> impl Iterator<Item = NodeId> + 'a {
        self.nodes[id].children.iter().copied().filter(move |&c| self.nodes[c].field.as_deref() == Some(field))
    }

    pub fn error_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_error || n.is_missing).count()
    }

    /// Fraction of non-whitespace characters of the caller's code covered by
    /// error nodes.
    pub fn error_coverage(&self) -> f64 {
        let mut covered = vec![false; self.parsed_text.len()];
        for n in self.nodes.iter().filter(|n| n.is_error) {
            for flag in &mut covered[n.span.clone()] {
                *flag = true;
            }
        }
        let mut total = 0usize;
        let mut bad = 0usize;
        for (offset, ch) in self.source().char_indices() {
            if ch.is_whitespace() {
                continue;
            }
            total += 1;
            if covered[self.region.start + offset] {
                bad += 1;
            }
        }
        if total == 0 {
            0.0
        } else {
            bad as f64 / total as f64
        }
    }

    /// Named node kinds in source order, restricted to the caller's code.
    /// Useful as a compact, stable fingerprint of a parse.
    pub fn named_kinds(&self) -> Vec<&str> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.nodes[id].named && self.in_region(id))
            .map(|id| self.nodes[id].kind.as_str())
            .collect()
    }

    /// S-expression rendering of the named nodes, fields included.
    pub fn to_sexp(&self) -> String {
        fn go(tree: &SyntaxTree, id: NodeId, out: &mut String) {
            let node = tree.node(id);
            if let Some(f) = &node.field {
                out.push_str(f);
                out.push_str(": ");
            }
            out.push('(');
            out.push_str(&node.kind);
            for &c in &node.children {
                if tree.node(c).named {
                    out.push(' ');
                    go(tree, c, out);
                }
            }
            out.push(')');
        }
        let mut out = String::new();
        go(self, self.root(), &mut out);
        out
    }
}

/// A grammar backend producing [`SyntaxTree`]s.
pub trait SyntaxBackend: Send + Sync {
    fn name(&self) -> &'static str;

    fn supports(&self, language: Language) -> bool;

    fn parse(&self, code: &str, language: Language) -> Result<SyntaxTree>;
}

/// Tree-sitter grammars for all six CodeSearchNet languages.
#[derive(Debug, Clone, Copy, Default)]
pub struct TreeSitterBackend;

thread_local! {
    // One parser per language per thread; parser handles never cross threads.
    static PARSERS: RefCell<HashMap<Language, tree_sitter::Parser>> = RefCell::new(HashMap::new());
}

fn grammar(language: Language) -> tree_sitter::Language {
    match language {
        Language::Java => tree_sitter_java::LANGUAGE.into(),
        Language::Python => tree_sitter_python::LANGUAGE.into(),
        Language::Ruby => tree_sitter_ruby::LANGUAGE.into(),
        Language::Javascript => tree_sitter_javascript::LANGUAGE.into(),
        Language::Go => tree_sitter_go::LANGUAGE.into(),
        Language::Php => tree_sitter_php::LANGUAGE_PHP.into(),
    }
}

/// Wrappers tried in order; the parse with the fewest errors wins.
fn wrappers(language: Language) -> &'static [(&'static str, &'static str)] {
    match language {
        Language::Java => &[("", ""), ("class __Wrapper__ {\n", "\n}")],
        Language::Javascript => &[("", ""), ("class __Wrapper__ {\n", "\n}")],
        Language::Php => &[("<?php\n", ""), ("<?php\nclass __Wrapper__ {\n", "\n}")],
        Language::Python | Language::Ruby | Language::Go => &[("", "")],
    }
}

fn convert(raw: &tree_sitter::Tree) -> Vec<SyntaxNode> {
    let mut nodes: Vec<SyntaxNode> = Vec::new();
    let mut cursor = raw.walk();
    // Stack of ancestor ids matching the cursor depth.
    let mut path: Vec<NodeId> = Vec::new();
    loop {
        let n = cursor.node();
        let id = nodes.len();
        let parent = path.last().copied();
        nodes.push(SyntaxNode {
            kind: n.kind().to_string(),
            field: cursor.field_name().map(str::to_string),
            named: n.is_named(),
            is_error: n.is_error(),
            is_missing: n.is_missing(),
            span: n.start_byte()..n.end_byte(),
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        if cursor.goto_first_child() {
            path.push(id);
            continue;
        }
        loop {
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                return nodes;
            }
            path.pop();
        }
    }
}

impl TreeSitterBackend {
    fn parse_once(&self, text: &str, language: Language) -> Result<Vec<SyntaxNode>> {
        PARSERS.with(|cell| {
            let mut parsers = cell.borrow_mut();
            let parser = match parsers.entry(language) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(v) => {
                    let mut p = tree_sitter::Parser::new();
                    p.set_language(&grammar(language))
                        .map_err(|e| Error::Analysis(format!("grammar for {language}: {e}")))?;
                    v.insert(p)
                }
            };
            let tree = parser.parse(text, None).ok_or_else(|| Error::Analysis("parser returned no tree".into()))?;
            Ok(convert(&tree))
        })
    }
}

impl SyntaxBackend for TreeSitterBackend {
    fn name(&self) -> &'static str {
        "tree-sitter"
    }

    fn supports(&self, _language: Language) -> bool {
        true
    }

    fn parse(&self, code: &str, language: Language) -> Result<SyntaxTree> {
        let mut best: Option<SyntaxTree> = None;
        for (prefix, suffix) in wrappers(language) {
            let text = format!("{prefix}{code}{suffix}");
            let region = prefix.len()..prefix.len() + code.len();
            let nodes = self.parse_once(&text, language)?;
            let tree = SyntaxTree::new(language, text, region, nodes);
            let clean = tree.error_count() == 0;
            let better = match &best {
                None => true,
                Some(b) => tree.error_count() < b.error_count(),
            };
            if better {
                best = Some(tree);
            }
            if clean {
                break;
            }
        }
        Ok(best.expect("at least one wrapper per language"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_python_function() {
        let tree = TreeSitterBackend.parse("def f(): pass", Language::Python).unwrap();
        let root = tree.node(tree.root());
        assert_eq!(root.kind, "module");
        let named: Vec<_> = root.children.iter().filter(|&&c| tree.node(c).named).collect();
        assert_eq!(named.len(), 1);
        assert_eq!(tree.node(*named[0]).kind, "function_definition");
        assert_eq!(tree.error_count(), 0);
    }

    #[test]
    fn broken_code_yields_error_nodes() {
        let tree = TreeSitterBackend.parse("def f(:\n    return ((", Language::Python).unwrap();
        assert!(tree.error_count() >= 1);
    }

    #[test]
    fn php_is_wrapped() {
        let code = "public function add($a) { return $a; }";
        let tree = TreeSitterBackend.parse(code, Language::Php).unwrap();
        assert_eq!(tree.source(), code);
        assert_eq!(tree.error_count(), 0);
        assert!(tree.parsed_text().starts_with("<?php"));
    }

    #[test]
    fn preorder_is_source_order() {
        let tree = TreeSitterBackend.parse("x = a + b", Language::Python).unwrap();
        let starts: Vec<usize> = tree
            .preorder()
            .into_iter()
            .filter(|&id| tree.node(id).children.is_empty())
            .map(|id| tree.node(id).span.start)
            .collect();
        assert!(starts.windows(2).all(|w| w[0] <= w[1]));
    }
}
