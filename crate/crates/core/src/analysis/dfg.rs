//! Intra-procedural reaching-definition dataflow.
//!
//! A single forward pass over the tree. Definitions are assignment and
//! declarator targets, loop variables and parameters. Branch arms start from
//! the same state and are unioned at the join; loop bodies are treated as
//! arms that may not execute. There is no alias or inter-procedural
//! analysis, and no back edges, so every `comes_from` source precedes its
//! target.

use std::collections::{BTreeMap, BTreeSet};

use super::identifiers::Extraction;
use super::tree::NodeId;
use super::{DfgEdge, EdgeKind, Tag};

type Defs = BTreeMap<String, BTreeSet<usize>>;

const ARM_FIELDS: &[&str] = &["consequence", "alternative", "body"];
const ARM_KINDS: &[&str] = &["else_clause", "else", "elif_clause", "elsif", "when", "default_case"];
const ELSE_KINDS: &[&str] = &["else_clause", "else", "default_case"];
const NOT_AUGMENTED: &[&str] = &["=", ":=", "==", "!=", "<=", ">=", "=>", "==="];

fn union_into(target: &mut Defs, other: &Defs) {
    for (name, set) in other {
        target.entry(name.clone()).or_default().extend(set.iter().copied());
    }
}

struct Builder<'a, 't> {
    ex: &'a Extraction<'t>,
    edges: Vec<DfgEdge>,
}

impl Builder<'_, '_> {
    fn kind(&self, id: NodeId) -> &str {
        self.ex.tree.node(id).kind.as_str()
    }

    fn field(&self, id: NodeId) -> Option<&str> {
        self.ex.tree.node(id).field.as_deref()
    }

    fn children(&self, id: NodeId) -> Vec<NodeId> {
        self.ex.tree.node(id).children.clone()
    }

    fn push(&mut self, target: usize, kind: EdgeKind, sources: BTreeSet<usize>) {
        if sources.is_empty() {
            return;
        }
        self.edges.push(DfgEdge {
            target_name: self.ex.identifiers[target].name.clone(),
            target_index: target,
            kind,
            source_names: sources.iter().map(|&s| self.ex.identifiers[s].name.clone()).collect(),
            source_indices: sources.into_iter().collect(),
        });
    }

    /// Occurrence indices under `roots`, filtered by `keep`.
    fn occurrences_under(&self, roots: &[NodeId], keep: impl Fn(usize) -> bool) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<NodeId> = roots.to_vec();
        while let Some(id) = stack.pop() {
            if let Some(&occ) = self.ex.occurrence_of.get(&id) {
                if keep(occ) {
                    out.insert(occ);
                }
                continue;
            }
            stack.extend(self.ex.tree.node(id).children.iter().copied());
        }
        out
    }

    fn value_sources(&self, roots: &[NodeId]) -> BTreeSet<usize> {
        self.occurrences_under(roots, |occ| self.ex.is_value[occ])
    }

    fn binding_targets(&self, roots: &[NodeId]) -> BTreeSet<usize> {
        self.occurrences_under(roots, |occ| self.ex.identifiers[occ].tag == Tag::LocalVariable)
    }

    fn walk(&mut self, id: NodeId, defs: &mut Defs) {
        if let Some(&occ) = self.ex.occurrence_of.get(&id) {
            self.identifier(occ, defs);
            return;
        }
        let rules = self.ex.rules;
        let kind = self.kind(id).to_string();
        let kind = kind.as_str();
        if rules.identifiers.contains(&kind) {
            return;
        }
        if let Some(&(_, target, value)) = rules.assignments.iter().find(|b| b.0 == kind) {
            let augmented = rules.augmented.contains(&kind) || self.has_augmented_operator(id);
            self.assignment(id, target, value, augmented, defs);
        } else if let Some(&(_, target, value)) = rules.declarators.iter().find(|b| b.0 == kind) {
            self.assignment(id, target, value, false, defs);
        } else if rules.updates.contains(&kind) {
            self.update(id, defs);
        } else if let Some(&(_, var, iter)) = rules.foreach.iter().find(|f| f.0 == kind) {
            self.foreach(id, var, iter, defs);
        } else if rules.conditionals.contains(&kind) || kind == "elif_clause" || kind == "elsif" {
            self.conditional(id, defs);
        } else if rules.loops.contains(&kind) {
            self.repeat(id, defs);
        } else if rules.tries.contains(&kind) {
            self.try_block(id, defs);
        } else {
            for c in self.children(id) {
                self.walk(c, defs);
            }
        }
    }

    fn identifier(&mut self, occ: usize, defs: &mut Defs) {
        if !self.ex.is_value[occ] {
            return;
        }
        let ident = &self.ex.identifiers[occ];
        match ident.tag {
            Tag::Parameter => {
                defs.insert(ident.name.clone(), BTreeSet::from([occ]));
            }
            // Bindings are handled by the construct that owns them.
            Tag::LocalVariable => {}
            _ => {
                let sources = defs.get(&ident.name).cloned().unwrap_or_default();
                self.push(occ, EdgeKind::ComesFrom, sources);
            }
        }
    }

    fn has_augmented_operator(&self, id: NodeId) -> bool {
        let tree = self.ex.tree;
        tree.node(id).children.iter().any(|&c| {
            let n = tree.node(c);
            if n.named || n.field.is_some() {
                return false;
            }
            let text = tree.text(c);
            text.len() >= 2 && text.ends_with('=') && !NOT_AUGMENTED.contains(&text)
        })
    }

    fn define(&mut self, targets: &BTreeSet<usize>, sources: &BTreeSet<usize>, augmented: bool, defs: &mut Defs) {
        for &t in targets {
            let name = self.ex.identifiers[t].name.clone();
            if augmented {
                let prior = defs.get(&name).cloned().unwrap_or_default();
                self.push(t, EdgeKind::ComesFrom, prior);
            }
            self.push(t, EdgeKind::ComputedFrom, sources.clone());
            defs.insert(name, BTreeSet::from([t]));
        }
    }

    fn assignment(&mut self, id: NodeId, target_field: &str, value_field: &str, augmented: bool, defs: &mut Defs) {
        let children = self.children(id);
        let targets: Vec<NodeId> = children.iter().copied().filter(|&c| self.field(c) == Some(target_field)).collect();
        let values: Vec<NodeId> = children
            .iter()
            .copied()
            .filter(|&c| {
                if value_field.is_empty() {
                    self.field(c) != Some(target_field)
                } else {
                    self.field(c) == Some(value_field)
                }
            })
            .collect();
        for &v in &values {
            self.walk(v, defs);
        }
        // Non-binding parts of the left side (subscripts, receivers) are reads.
        for &t in &targets {
            self.walk(t, defs);
        }
        let sources = self.value_sources(&values);
        let bound = self.binding_targets(&targets);
        self.define(&bound, &sources, augmented, defs);
    }

    fn update(&mut self, id: NodeId, defs: &mut Defs) {
        let direct: Vec<usize> = self
            .children(id)
            .into_iter()
            .filter_map(|c| self.ex.occurrence_of.get(&c).copied())
            .filter(|&occ| self.ex.is_value[occ])
            .collect();
        if direct.is_empty() {
            for c in self.children(id) {
                self.walk(c, defs);
            }
            return;
        }
        for occ in direct {
            let name = self.ex.identifiers[occ].name.clone();
            let prior = defs.get(&name).cloned().unwrap_or_default();
            self.push(occ, EdgeKind::ComesFrom, prior);
            defs.insert(name, BTreeSet::from([occ]));
        }
    }

    fn foreach(&mut self, id: NodeId, var_field: &str, iter_field: &str, defs: &mut Defs) {
        let children = self.children(id);
        let by_field =
            |f: &str| -> Vec<NodeId> { children.iter().copied().filter(|&c| self.field(c) == Some(f)).collect() };
        let vars = by_field(var_field);
        let iters = by_field(iter_field);
        let bodies = by_field("body");
        let after = by_field("alternative");

        for &i in &iters {
            self.walk(i, defs);
        }
        for &v in &vars {
            self.walk(v, defs);
        }
        let sources = self.value_sources(&iters);
        let bound = self.binding_targets(&vars);
        let mut body_defs = defs.clone();
        self.define(&bound, &sources, false, &mut body_defs);
        for &c in &children {
            let f = self.field(c);
            if ![Some(var_field), Some(iter_field), Some("body"), Some("alternative")].contains(&f) {
                self.walk(c, &mut body_defs);
            }
        }
        for &b in &bodies {
            self.walk(b, &mut body_defs);
        }
        union_into(defs, &body_defs);
        for &a in &after {
            self.walk(a, defs);
        }
    }

    fn is_arm(&self, id: NodeId) -> bool {
        self.field(id).is_some_and(|f| ARM_FIELDS.contains(&f))
            || ARM_KINDS.contains(&self.kind(id))
            || self.kind(id).ends_with("_case")
    }

    fn conditional(&mut self, id: NodeId, defs: &mut Defs) {
        let children = self.children(id);
        let mut arms = Vec::new();
        for &c in &children {
            if self.is_arm(c) {
                arms.push(c);
            } else {
                self.walk(c, defs);
            }
        }
        let has_else = arms.iter().any(|&a| {
            let kind = self.kind(a);
            ELSE_KINDS.contains(&kind)
                || (self.field(a) == Some("alternative") && kind != "elif_clause" && kind != "elsif")
        });
        let entry = defs.clone();
        let mut joined = if has_else { Defs::new() } else { entry.clone() };
        for a in arms {
            let mut branch = entry.clone();
            self.walk(a, &mut branch);
            union_into(&mut joined, &branch);
        }
        *defs = joined;
    }

    fn repeat(&mut self, id: NodeId, defs: &mut Defs) {
        let children = self.children(id);
        let (mut bodies, mut updates, mut after) = (Vec::new(), Vec::new(), Vec::new());
        for &c in &children {
            match self.field(c) {
                Some("body") => bodies.push(c),
                Some("update") => updates.push(c),
                Some("alternative") => after.push(c),
                _ => self.walk(c, defs),
            }
        }
        let mut body_defs = defs.clone();
        for c in bodies.into_iter().chain(updates) {
            self.walk(c, &mut body_defs);
        }
        union_into(defs, &body_defs);
        for a in after {
            self.walk(a, defs);
        }
    }

    fn try_block(&mut self, id: NodeId, defs: &mut Defs) {
        let rules = self.ex.rules;
        let children = self.children(id);
        let entry = defs.clone();
        let (mut handlers, mut finals) = (Vec::new(), Vec::new());
        for &c in &children {
            let kind = self.kind(c);
            if rules.handlers.contains(&kind) {
                handlers.push(c);
            } else if rules.finally.contains(&kind) {
                finals.push(c);
            } else {
                self.walk(c, defs);
            }
        }
        let mut handler_entry = entry;
        union_into(&mut handler_entry, defs);
        for h in handlers {
            let mut branch = handler_entry.clone();
            self.walk(h, &mut branch);
            union_into(defs, &branch);
        }
        for f in finals {
            self.walk(f, defs);
        }
    }
}

pub(crate) fn build(ex: &Extraction<'_>) -> Vec<DfgEdge> {
    let mut builder = Builder { ex, edges: Vec::new() };
    let mut defs = Defs::new();
    builder.walk(ex.tree.root(), &mut defs);
    let mut edges = builder.edges;
    edges.sort_by_key(|e| (e.target_index, e.kind));
    edges
}
