//! Per-language node-kind tables consumed by the identifier tagger and the
//! dataflow builder. Java and Python are covered in detail; the other
//! grammars get the common constructs.

use crate::corpus::Language;

/// `(node kind, target field, value field)`. An empty value field means
/// "every named child outside the target field".
pub(crate) type Binding = (&'static str, &'static str, &'static str);

pub(crate) struct Rules {
    /// Node kinds that are identifier occurrences. They are never descended.
    pub identifiers: &'static [&'static str],
    /// Identifier kinds that always name a type.
    pub type_identifiers: &'static [&'static str],
    /// Subtrees that are type annotations.
    pub type_containers: &'static [&'static str],
    /// Definitions whose `name` field is the function name.
    pub functions: &'static [&'static str],
    pub parameter_lists: &'static [&'static str],
    /// Fields under a parameter list whose contents are not declared names.
    pub parameter_value_fields: &'static [&'static str],
    /// `(kind, field)` holding the callee of a call.
    pub calls: &'static [(&'static str, &'static str)],
    /// `(kind, field)` holding a member name.
    pub members: &'static [(&'static str, &'static str)],
    /// `(kind, field)` positions that label something rather than use a value.
    pub labels: &'static [(&'static str, &'static str)],
    /// Assignment-like nodes: target field, value field.
    pub assignments: &'static [Binding],
    /// Declarators: name field, optional initializer field.
    pub declarators: &'static [Binding],
    /// Kinds that always make the assignment augmented (`x += y`).
    pub augmented: &'static [&'static str],
    /// `x++`-style nodes: the identifier is read and rewritten.
    pub updates: &'static [&'static str],
    /// Kinds that bracket a nested target list on the left-hand side.
    pub patterns: &'static [&'static str],
    pub conditionals: &'static [&'static str],
    pub loops: &'static [&'static str],
    /// `(kind, variable field, iterable field)` for for-each loops.
    pub foreach: &'static [(&'static str, &'static str, &'static str)],
    pub tries: &'static [&'static str],
    pub handlers: &'static [&'static str],
    pub finally: &'static [&'static str],
}

const PYTHON: Rules = Rules {
    identifiers: &["identifier"],
    type_identifiers: &[],
    type_containers: &["type"],
    functions: &["function_definition"],
    parameter_lists: &["parameters", "lambda_parameters"],
    parameter_value_fields: &["value", "type"],
    calls: &[("call", "function"), ("decorator", "")],
    members: &[("attribute", "attribute")],
    labels: &[("keyword_argument", "name")],
    assignments: &[
        ("assignment", "left", "right"),
        ("augmented_assignment", "left", "right"),
        ("named_expression", "name", "value"),
        ("as_pattern", "alias", ""),
    ],
    declarators: &[],
    augmented: &["augmented_assignment"],
    updates: &[],
    patterns: &[
        "pattern_list",
        "tuple_pattern",
        "list_pattern",
        "expression_list",
        "tuple",
        "list",
        "parenthesized_expression",
        "as_pattern_target",
        "list_splat_pattern",
    ],
    conditionals: &["if_statement"],
    loops: &["while_statement"],
    foreach: &[("for_statement", "left", "right")],
    tries: &["try_statement"],
    handlers: &["except_clause", "except_group_clause"],
    finally: &["finally_clause"],
};

const JAVA: Rules = Rules {
    identifiers: &["identifier", "type_identifier"],
    type_identifiers: &["type_identifier"],
    type_containers: &[
        "generic_type",
        "array_type",
        "scoped_type_identifier",
        "type_arguments",
        "annotation",
        "marker_annotation",
    ],
    functions: &["method_declaration", "constructor_declaration"],
    parameter_lists: &["formal_parameters", "inferred_parameters", "lambda_expression"],
    parameter_value_fields: &["type", "dimensions", "body"],
    calls: &[("method_invocation", "name")],
    members: &[("field_access", "field")],
    labels: &[("labeled_statement", "")],
    assignments: &[("assignment_expression", "left", "right")],
    declarators: &[
        ("variable_declarator", "name", "value"),
        ("resource", "name", "value"),
        ("catch_formal_parameter", "name", ""),
    ],
    augmented: &[],
    updates: &["update_expression"],
    patterns: &[],
    conditionals: &["if_statement"],
    loops: &["while_statement", "for_statement", "do_statement"],
    foreach: &[("enhanced_for_statement", "name", "value")],
    tries: &["try_statement", "try_with_resources_statement"],
    handlers: &["catch_clause"],
    finally: &["finally_clause"],
};

const JAVASCRIPT: Rules = Rules {
    identifiers: &[
        "identifier",
        "property_identifier",
        "shorthand_property_identifier",
        "shorthand_property_identifier_pattern",
    ],
    type_identifiers: &[],
    type_containers: &[],
    functions: &["function_declaration", "function_expression", "generator_function_declaration", "method_definition"],
    parameter_lists: &["formal_parameters"],
    parameter_value_fields: &["right", "value"],
    calls: &[("call_expression", "function"), ("new_expression", "constructor")],
    members: &[("member_expression", "property")],
    labels: &[("pair", "key")],
    assignments: &[("assignment_expression", "left", "right"), ("augmented_assignment_expression", "left", "right")],
    declarators: &[("variable_declarator", "name", "value")],
    augmented: &["augmented_assignment_expression"],
    updates: &["update_expression"],
    patterns: &["array_pattern", "object_pattern", "parenthesized_expression"],
    conditionals: &["if_statement"],
    loops: &["while_statement", "for_statement", "do_statement"],
    foreach: &[("for_in_statement", "left", "right")],
    tries: &["try_statement"],
    handlers: &["catch_clause"],
    finally: &["finally_clause"],
};

const GO: Rules = Rules {
    identifiers: &["identifier", "field_identifier", "type_identifier", "package_identifier"],
    type_identifiers: &["type_identifier"],
    type_containers: &["qualified_type", "pointer_type", "slice_type", "map_type", "array_type"],
    functions: &["function_declaration", "method_declaration"],
    parameter_lists: &["parameter_list"],
    parameter_value_fields: &["type"],
    calls: &[("call_expression", "function")],
    members: &[("selector_expression", "field")],
    labels: &[("keyed_element", "key"), ("labeled_statement", "label")],
    assignments: &[
        ("short_var_declaration", "left", "right"),
        ("assignment_statement", "left", "right"),
        ("range_clause", "left", "right"),
    ],
    declarators: &[("var_spec", "name", "value"), ("const_spec", "name", "value")],
    augmented: &[],
    updates: &["inc_statement", "dec_statement"],
    patterns: &["expression_list"],
    conditionals: &["if_statement", "expression_switch_statement"],
    loops: &["for_statement"],
    foreach: &[],
    tries: &[],
    handlers: &[],
    finally: &[],
};

const RUBY: Rules = Rules {
    identifiers: &["identifier", "constant", "instance_variable", "class_variable", "global_variable"],
    type_identifiers: &["constant"],
    type_containers: &["scope_resolution"],
    functions: &["method", "singleton_method"],
    parameter_lists: &["method_parameters", "lambda_parameters", "block_parameters"],
    parameter_value_fields: &["value"],
    calls: &[("call", "method")],
    members: &[],
    labels: &[],
    assignments: &[("assignment", "left", "right"), ("operator_assignment", "left", "right")],
    declarators: &[],
    augmented: &["operator_assignment"],
    updates: &[],
    patterns: &["left_assignment_list", "destructured_left_assignment"],
    conditionals: &["if", "unless", "if_modifier", "unless_modifier", "case"],
    loops: &["while", "until", "while_modifier", "until_modifier"],
    foreach: &[("for", "pattern", "value")],
    tries: &["begin"],
    handlers: &["rescue"],
    finally: &["ensure"],
};

const PHP: Rules = Rules {
    identifiers: &["name", "variable_name"],
    type_identifiers: &[],
    type_containers: &["named_type", "optional_type", "union_type", "qualified_name"],
    functions: &["function_definition", "method_declaration"],
    parameter_lists: &["formal_parameters"],
    parameter_value_fields: &["type", "default_value"],
    calls: &[
        ("function_call_expression", "function"),
        ("member_call_expression", "name"),
        ("scoped_call_expression", "name"),
    ],
    members: &[("member_access_expression", "name")],
    labels: &[],
    assignments: &[("assignment_expression", "left", "right"), ("augmented_assignment_expression", "left", "right")],
    declarators: &[],
    augmented: &["augmented_assignment_expression"],
    updates: &["update_expression"],
    patterns: &["list_literal"],
    conditionals: &["if_statement"],
    loops: &["while_statement", "for_statement", "do_statement", "foreach_statement"],
    foreach: &[],
    tries: &["try_statement"],
    handlers: &["catch_clause"],
    finally: &["finally_clause"],
};

pub(crate) fn rules(language: Language) -> &'static Rules {
    match language {
        Language::Python => &PYTHON,
        Language::Java => &JAVA,
        Language::Javascript => &JAVASCRIPT,
        Language::Go => &GO,
        Language::Ruby => &RUBY,
        Language::Php => &PHP,
    }
}

pub(crate) fn matches_field(table: &[(&str, &str)], kind: &str, field: Option<&str>) -> bool {
    table.iter().any(|&(k, f)| k == kind && (f.is_empty() || Some(f) == field))
}
