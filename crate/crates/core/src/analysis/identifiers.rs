//! Identifier occurrences and their syntactic roles.

use std::collections::HashMap;

use super::rules::{matches_field, rules, Rules};
use super::tree::{NodeId, SyntaxTree};
use super::{Tag, TagVocabulary, TaggedIdentifier};

/// Identifier occurrences of one tree, with the bookkeeping the dataflow
/// builder needs.
pub(crate) struct Extraction<'t> {
    pub tree: &'t SyntaxTree,
    pub rules: &'static Rules,
    pub identifiers: Vec<TaggedIdentifier>,
    pub occurrence_of: HashMap<NodeId, usize>,
    /// Whether each occurrence denotes a runtime value (as opposed to a call
    /// target, type, member or label).
    pub is_value: Vec<bool>,
}

impl<'t> Extraction<'t> {
    pub fn new(tree: &'t SyntaxTree) -> Self {
        let rules = rules(tree.language());
        let mut identifiers = Vec::new();
        let mut occurrence_of = HashMap::new();
        let mut is_value = Vec::new();

        let mut stack = vec![tree.root()];
        while let Some(id) = stack.pop() {
            let node = tree.node(id);
            if rules.identifiers.contains(&node.kind.as_str()) {
                if tree.in_region(id) && !node.is_missing && !tree.text(id).is_empty() {
                    let (tag, value) = classify(tree, rules, id);
                    occurrence_of.insert(id, identifiers.len());
                    identifiers.push(TaggedIdentifier {
                        name: tree.text(id).to_string(),
                        tag,
                        occurrence: identifiers.len(),
                    });
                    is_value.push(value);
                }
                continue;
            }
            stack.extend(node.children.iter().rev());
        }

        Extraction { tree, rules, identifiers, occurrence_of, is_value }
    }
}

fn parent_and_field(tree: &SyntaxTree, id: NodeId) -> Option<(NodeId, &str, Option<&str>)> {
    let node = tree.node(id);
    node.parent.map(|p| (p, tree.node(p).kind.as_str(), node.field.as_deref()))
}

/// Whether `id` is the target of an assignment, declarator or loop variable,
/// possibly nested in a destructuring pattern.
pub(crate) fn is_binding(tree: &SyntaxTree, rules: &Rules, id: NodeId) -> bool {
    let mut cur = id;
    while let Some((parent, kind, field)) = parent_and_field(tree, cur) {
        let field = field.unwrap_or("");
        if rules.assignments.iter().chain(rules.declarators).any(|&(k, target, _)| k == kind && target == field) {
            return true;
        }
        if rules.foreach.iter().any(|&(k, var, _)| k == kind && var == field) {
            return true;
        }
        if rules.patterns.contains(&kind) {
            cur = parent;
            continue;
        }
        return false;
    }
    false
}

fn is_parameter(tree: &SyntaxTree, rules: &Rules, id: NodeId) -> bool {
    let mut cur = id;
    while let Some((parent, kind, field)) = parent_and_field(tree, cur) {
        if field.is_some_and(|f| rules.parameter_value_fields.contains(&f)) {
            return false;
        }
        if rules.parameter_lists.contains(&kind) {
            return true;
        }
        if rules.functions.contains(&kind) {
            return false;
        }
        cur = parent;
    }
    false
}

fn in_type(tree: &SyntaxTree, rules: &Rules, id: NodeId) -> bool {
    if rules.type_identifiers.contains(&tree.node(id).kind.as_str()) {
        return true;
    }
    for a in tree.ancestors(id) {
        let kind = tree.node(a).kind.as_str();
        if rules.type_containers.contains(&kind) {
            return true;
        }
        if rules.functions.contains(&kind) {
            break;
        }
    }
    false
}

fn classify(tree: &SyntaxTree, rules: &Rules, id: NodeId) -> (Tag, bool) {
    let Some((parent, parent_kind, field)) = parent_and_field(tree, id) else {
        return (Tag::Identifier, true);
    };
    if rules.functions.contains(&parent_kind) && field == Some("name") {
        return (Tag::FunctionName, false);
    }
    if matches_field(rules.labels, parent_kind, field) {
        return (Tag::Identifier, false);
    }
    if matches_field(rules.calls, parent_kind, field) {
        return (Tag::Call, false);
    }
    if matches_field(rules.members, parent_kind, field) {
        let callee = parent_and_field(tree, parent)
            .is_some_and(|(_, gp_kind, p_field)| matches_field(rules.calls, gp_kind, p_field));
        return if callee { (Tag::Call, false) } else { (Tag::Attribute, false) };
    }
    if in_type(tree, rules, id) {
        return (Tag::Type, false);
    }
    if is_parameter(tree, rules, id) {
        return (Tag::Parameter, true);
    }
    if is_binding(tree, rules, id) {
        return (Tag::LocalVariable, true);
    }
    (Tag::Identifier, true)
}

/// Maps the extended tag set onto the three-tag vocabulary when requested.
pub(crate) fn apply_vocabulary(identifiers: &mut [TaggedIdentifier], vocabulary: TagVocabulary) {
    if vocabulary == TagVocabulary::Minimal {
        for ident in identifiers {
            ident.tag = match ident.tag {
                Tag::FunctionName => Tag::FunctionName,
                Tag::Parameter => Tag::Parameter,
                _ => Tag::Identifier,
            };
        }
    }
}
