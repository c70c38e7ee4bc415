//! Java adapter backed by the tree-sitter Java grammar.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::path::Path;

use tree_sitter::{Node, Parser, Tree};

use super::{is_accessor_name, CallSite, LanguageAdapter, ParseError, ParsedUnit, SyntaxIssue};
use crate::scanner::{ClassInfo, InvokedMethod, MethodInfo};

/// Annotation that marks a test method.
pub const TEST_MARKER: &str = "@Test";

const PRIMITIVES: &[&str] = &[
    "byte", "short", "int", "long", "float", "double", "boolean", "char", "void", "var",
];

const TYPE_DECLARATIONS: &[&str] = &[
    "class_declaration",
    "interface_declaration",
    "enum_declaration",
    "record_declaration",
    "annotation_type_declaration",
];

thread_local! {
    static PARSER: RefCell<Parser> = RefCell::new({
        let mut parser = Parser::new();
        parser
            .set_language(&tree_sitter_java::LANGUAGE.into())
            .expect("bundled Java grammar is ABI compatible");
        parser
    });
}

fn parse_tree(source: &str) -> Tree {
    PARSER.with(|p| p.borrow_mut().parse(source, None).expect("parser has a language and no timeout"))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct JavaAdapter;

impl JavaAdapter {
    pub fn new() -> Self {
        Self
    }
}

impl LanguageAdapter for JavaAdapter {
    fn name(&self) -> &'static str {
        "java"
    }

    fn handles(&self, path: &Path) -> bool {
        path.extension().is_some_and(|e| e == "java")
    }

    fn parse_unit(&self, path: &str, source: &str) -> Result<ParsedUnit, ParseError> {
        let tree = parse_tree(source);
        let root = tree.root_node();
        if root.has_error() {
            let (line, message) = first_error(root, source.as_bytes());
            return Err(ParseError::Syntax { line, message });
        }
        UnitExtractor::new(source, path).extract(root)
    }

    fn check_syntax(&self, source: &str) -> Result<(), SyntaxIssue> {
        let tree = parse_tree(source);
        let root = tree.root_node();
        if root.has_error() {
            let (line, message) = first_error(root, source.as_bytes());
            return Err(SyntaxIssue { message, line: Some(line) });
        }
        let mut cursor = root.walk();
        for child in root.named_children(&mut cursor) {
            let ok = matches!(
                child.kind(),
                "package_declaration" | "import_declaration" | "module_declaration" | "line_comment" | "block_comment"
            ) || TYPE_DECLARATIONS.contains(&child.kind());
            if !ok {
                return Err(SyntaxIssue {
                    message: format!("`{}` is not allowed at top level", child.kind()),
                    line: Some(child.start_position().row + 1),
                });
            }
        }
        Ok(())
    }

    fn signature_key(&self, declaration: &str) -> Option<String> {
        let wrapped = format!("interface K__ {{ {}; }}", declaration.trim().trim_end_matches(';'));
        let tree = parse_tree(&wrapped);
        let root = tree.root_node();
        if root.has_error() {
            return None;
        }
        let method = find_first(root, "method_declaration")?;
        Some(method_key(method, wrapped.as_bytes()))
    }

    fn qualify(&self, name: &str, context: &ClassInfo, known: &dyn Fn(&str) -> bool) -> String {
        qualify_name(name, context, known)
    }

    fn is_builtin_type(&self, name: &str) -> bool {
        PRIMITIVES.contains(&name)
    }

    fn implicit_constructor(&self, class: &ClassInfo) -> String {
        format!("public {}()", class.simple_name())
    }

    fn call_sites(&self, source: &str) -> Vec<CallSite> {
        let tree = parse_tree(source);
        let bytes = source.as_bytes();
        let mut sites = Vec::new();
        visit(tree.root_node(), &mut |node| match node.kind() {
            "method_invocation" => {
                if let Some(name) = node.child_by_field_name("name") {
                    let arity = node
                        .child_by_field_name("arguments")
                        .map(|a| a.named_child_count())
                        .unwrap_or(0);
                    sites.push(CallSite { name: text(name, bytes).to_string(), arity });
                }
            }
            "assert_statement" => sites.push(CallSite { name: "assert".into(), arity: 1 }),
            _ => {}
        });
        sites
    }
}

fn visit<'t>(node: Node<'t>, f: &mut impl FnMut(Node<'t>)) {
    f(node);
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        visit(child, f);
    }
}

fn find_first<'t>(node: Node<'t>, kind: &str) -> Option<Node<'t>> {
    if node.kind() == kind {
        return Some(node);
    }
    let mut cursor = node.walk();
    let children: Vec<_> = node.children(&mut cursor).collect();
    children.into_iter().find_map(|c| find_first(c, kind))
}

fn first_error(root: Node<'_>, src: &[u8]) -> (usize, String) {
    let mut found = None;
    visit(root, &mut |n| {
        if found.is_none() && (n.is_error() || n.is_missing()) {
            let line = n.start_position().row + 1;
            let msg = if n.is_missing() {
                format!("missing `{}`", n.kind())
            } else {
                let snippet: String = text(n, src).chars().take(40).collect();
                format!("unexpected `{}`", snippet.trim())
            };
            found = Some((line, msg));
        }
    });
    found.unwrap_or((root.start_position().row + 1, "syntax error".into()))
}

fn text<'s>(node: Node<'_>, src: &'s [u8]) -> &'s str {
    std::str::from_utf8(&src[node.byte_range()]).unwrap_or("")
}

/// Collapse whitespace runs to single spaces.
fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Drop generic arguments and whitespace: `Map<K, V>[]` becomes `Map[]`.
pub fn erase_type(type_text: &str) -> String {
    let mut out = String::with_capacity(type_text.len());
    let mut depth = 0usize;
    for c in type_text.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth = depth.saturating_sub(1),
            c if depth == 0 && !c.is_whitespace() => out.push(c),
            _ => {}
        }
    }
    out
}

fn is_annotation(kind: &str) -> bool {
    matches!(kind, "annotation" | "marker_annotation")
}

/// Header text of a declaration: everything but the body and annotations.
fn declaration_header(node: Node<'_>, src: &[u8]) -> String {
    let body = node.child_by_field_name("body");
    let mut out = String::new();
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        if Some(child) == body || is_annotation(child.kind()) || child.kind() == ";" {
            continue;
        }
        let part = if child.kind() == "modifiers" {
            let mut c2 = child.walk();
            child
                .children(&mut c2)
                .filter(|m| !is_annotation(m.kind()))
                .map(|m| normalize(text(m, src)))
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            normalize(text(child, src))
        };
        if part.is_empty() {
            continue;
        }
        let glue = matches!(child.kind(), "formal_parameters" | "type_parameters" | "dimensions");
        if !out.is_empty() && !glue {
            out.push(' ');
        }
        out.push_str(&part);
    }
    out
}

fn parameter_types(params: Node<'_>, src: &[u8]) -> Vec<String> {
    let mut types = Vec::new();
    let mut cursor = params.walk();
    for p in params.named_children(&mut cursor) {
        match p.kind() {
            "formal_parameter" => {
                let mut t = p.child_by_field_name("type").map(|t| erase_type(text(t, src))).unwrap_or_default();
                if let Some(d) = p.child_by_field_name("dimensions") {
                    t.push_str(&erase_type(text(d, src)));
                }
                types.push(t);
            }
            "spread_parameter" => {
                let mut c2 = p.walk();
                let t = p
                    .named_children(&mut c2)
                    .find(|c| !matches!(c.kind(), "modifiers" | "variable_declarator") && !is_annotation(c.kind()))
                    .map(|t| erase_type(text(t, src)))
                    .unwrap_or_default();
                types.push(format!("{t}..."));
            }
            _ => {}
        }
    }
    types
}

fn method_key(method: Node<'_>, src: &[u8]) -> String {
    let name = method.child_by_field_name("name").map(|n| text(n, src)).unwrap_or("");
    let params = method
        .child_by_field_name("parameters")
        .map(|p| parameter_types(p, src))
        .unwrap_or_default();
    format!("{name}({})", params.join(", "))
}

fn type_parameter_names(node: Node<'_>, src: &[u8]) -> Vec<String> {
    let Some(tp) = node.child_by_field_name("type_parameters") else {
        return Vec::new();
    };
    let mut cursor = tp.walk();
    tp.named_children(&mut cursor)
        .filter(|c| c.kind() == "type_parameter")
        .filter_map(|c| {
            let mut c2 = c.walk();
            let name = c.named_children(&mut c2).find(|n| matches!(n.kind(), "type_identifier" | "identifier"));
            name.map(|n| text(n, src).to_string())
        })
        .collect()
}

/// Non-primitive type names mentioned by a type node, generics included.
fn referenced_types(node: Node<'_>, src: &[u8], out: &mut Vec<String>) {
    match node.kind() {
        "type_identifier" => out.push(text(node, src).to_string()),
        "scoped_type_identifier" => out.push(erase_type(text(node, src))),
        "integral_type" | "floating_point_type" | "boolean_type" | "void_type" => {}
        _ => {
            let mut cursor = node.walk();
            for child in node.named_children(&mut cursor) {
                if !is_annotation(child.kind()) {
                    referenced_types(child, src, out);
                }
            }
        }
    }
}

fn push_unique(list: &mut Vec<String>, item: String) {
    if !list.contains(&item) {
        list.push(item);
    }
}

/// Per-class facts needed while walking method bodies.
struct ClassCtx {
    qualified: String,
    fields: HashMap<String, String>,
    /// (name, arity) → (key, erased return type)
    methods: HashMap<(String, usize), Vec<(String, String)>>,
    type_params: Vec<String>,
}

struct UnitExtractor<'s> {
    src: &'s [u8],
    path: &'s str,
    package: String,
    package_decl: String,
    imports: Vec<String>,
    unit: ParsedUnit,
}

impl<'s> UnitExtractor<'s> {
    fn new(source: &'s str, path: &'s str) -> Self {
        Self {
            src: source.as_bytes(),
            path,
            package: String::new(),
            package_decl: String::new(),
            imports: Vec::new(),
            unit: ParsedUnit::default(),
        }
    }

    fn extract(mut self, root: Node<'_>) -> Result<ParsedUnit, ParseError> {
        let mut cursor = root.walk();
        let children: Vec<_> = root.named_children(&mut cursor).collect();
        for child in &children {
            match child.kind() {
                "package_declaration" => {
                    self.package_decl = normalize(text(*child, self.src));
                    let mut c2 = child.walk();
                    let name = child
                        .named_children(&mut c2)
                        .find(|n| matches!(n.kind(), "scoped_identifier" | "identifier"));
                    if let Some(name) = name {
                        self.package = text(name, self.src).to_string();
                    }
                }
                "import_declaration" => push_unique(&mut self.imports, normalize(text(*child, self.src))),
                _ => {}
            }
        }
        for child in children {
            if TYPE_DECLARATIONS.contains(&child.kind()) {
                self.extract_type(child, None)?;
            }
        }
        Ok(self.unit)
    }

    fn extract_type(&mut self, node: Node<'_>, enclosing: Option<&str>) -> Result<(), ParseError> {
        let name = node
            .child_by_field_name("name")
            .map(|n| text(n, self.src).to_string())
            .ok_or_else(|| unresolvable(node))?;
        let qualified = match enclosing {
            Some(outer) => format!("{outer}${name}"),
            None if self.package.is_empty() => name.clone(),
            None => format!("{}.{}", self.package, name),
        };

        let members = class_members(node);
        let mut fields = Vec::new();
        let mut field_types = HashMap::new();
        let mut ctors = Vec::new();
        let mut headers = Vec::new();
        let mut accessors = Vec::new();
        let mut methods: HashMap<(String, usize), Vec<(String, String)>> = HashMap::new();

        if node.kind() == "record_declaration" {
            if let Some(params) = node.child_by_field_name("parameters") {
                let mut c = params.walk();
                for p in params.named_children(&mut c).filter(|p| p.kind() == "formal_parameter") {
                    if let (Some(t), Some(n)) = (p.child_by_field_name("type"), p.child_by_field_name("name")) {
                        field_types.insert(text(n, self.src).to_string(), erase_type(text(t, self.src)));
                    }
                }
            }
        }

        for m in &members {
            match m.kind() {
                "field_declaration" | "constant_declaration" => {
                    fields.push(normalize(text(*m, self.src)));
                    let ty = m.child_by_field_name("type").map(|t| erase_type(text(t, self.src)));
                    let mut c = m.walk();
                    for d in m.children_by_field_name("declarator", &mut c) {
                        if let (Some(n), Some(t)) = (d.child_by_field_name("name"), ty.as_ref()) {
                            field_types.insert(text(n, self.src).to_string(), t.clone());
                        }
                    }
                }
                "constructor_declaration" | "compact_constructor_declaration" => {
                    ctors.push(declaration_header(*m, self.src));
                }
                "method_declaration" => {
                    let header = declaration_header(*m, self.src);
                    let key = method_key(*m, self.src);
                    let name = m.child_by_field_name("name").map(|n| text(n, self.src)).unwrap_or("");
                    let ret = m.child_by_field_name("type").map(|t| erase_type(text(t, self.src))).unwrap_or_default();
                    let arity = super::super::scanner::signature_arity(&key);
                    let accessor = is_accessor_name(name, arity)
                        && if arity == 0 { ret != "void" } else { ret == "void" };
                    if accessor {
                        accessors.push(header.clone());
                    }
                    methods.entry((name.to_string(), arity)).or_default().push((key, ret));
                    headers.push(header);
                }
                _ => {}
            }
        }

        let info = ClassInfo {
            qualified_name: qualified.clone(),
            package_decl: self.package_decl.clone(),
            imports: self.imports.clone(),
            class_signature: declaration_header(node, self.src),
            fields,
            constructor_signatures: ctors,
            method_signatures: headers,
            getter_setter_signatures: accessors,
            source_path: self.path.to_string(),
        };
        self.unit.classes.push(info);

        let ctx = ClassCtx {
            qualified: qualified.clone(),
            fields: field_types,
            methods,
            type_params: type_parameter_names(node, self.src),
        };

        for m in &members {
            match m.kind() {
                // methods of nested types are not focal candidates
                "method_declaration" if enclosing.is_none() && m.child_by_field_name("body").is_some() => {
                    let info = extract_method(&ctx, *m, self.src)?;
                    if !self.unit.methods.iter().any(|x| x.signature == info.signature && x.owner_class == info.owner_class) {
                        self.unit.methods.push(info);
                    }
                }
                k if TYPE_DECLARATIONS.contains(&k) => self.extract_type(*m, Some(&qualified))?,
                _ => {}
            }
        }
        Ok(())
    }
}

fn unresolvable(node: Node<'_>) -> ParseError {
    ParseError::UnresolvableNode { kind: node.kind().to_string(), line: node.start_position().row + 1 }
}

/// Member declarations of a type, looking through enum body declarations.
fn class_members(node: Node<'_>) -> Vec<Node<'_>> {
    let Some(body) = node.child_by_field_name("body") else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut cursor = body.walk();
    for child in body.named_children(&mut cursor) {
        if child.kind() == "enum_body_declarations" {
            let mut c2 = child.walk();
            out.extend(child.named_children(&mut c2));
        } else {
            out.push(child);
        }
    }
    out
}

/// Build the method-level record for `method`, declared in `class`.
///
/// Type names in `dependent_class_names` and invocation owners are left as
/// written; the scanner qualifies them against the whole project.
fn extract_method(class: &ClassCtx, method: Node<'_>, src: &[u8]) -> Result<MethodInfo, ParseError> {
    if method.kind() != "method_declaration" || method.child_by_field_name("name").is_none() {
        return Err(unresolvable(method));
    }
    let mut walker = MethodWalker {
        src,
        class,
        locals: HashMap::new(),
        type_params: class.type_params.iter().cloned().collect(),
        field_accesses: Vec::new(),
        accessor_calls: Vec::new(),
        dependents: Vec::new(),
        invoked: Vec::new(),
    };
    walker.type_params.extend(type_parameter_names(method, src));

    if let Some(ret) = method.child_by_field_name("type") {
        walker.note_types(ret);
    }
    if let Some(params) = method.child_by_field_name("parameters") {
        walker.collect_locals(params);
        let mut c = params.walk();
        for p in params.named_children(&mut c) {
            walker.note_types_in_declaration(p);
        }
    }
    if let Some(body) = method.child_by_field_name("body") {
        walker.collect_locals(body);
        walker.walk(body);
    }

    let owner = &class.qualified;
    let simple = owner.rsplit(['.', '$']).next().unwrap_or(owner).to_string();
    let dependents = walker
        .dependents
        .into_iter()
        .filter(|d| d != &simple && d != owner)
        .collect();

    Ok(MethodInfo {
        owner_class: owner.clone(),
        signature: method_key(method, src),
        body: text(method, src).to_string(),
        field_accesses: walker.field_accesses,
        getter_setter_invocations: walker.accessor_calls,
        dependent_class_names: dependents,
        invoked_methods: walker.invoked,
    })
}

/// Parse `class_source` and extract the method whose key is `signature`.
pub fn extract_method_info(class_source: &str, signature: &str) -> Result<MethodInfo, ParseError> {
    let tree = parse_tree(class_source);
    let root = tree.root_node();
    let unit = UnitExtractor::new(class_source, "").extract(root)?;
    unit.methods
        .into_iter()
        .find(|m| m.signature == signature)
        .ok_or(ParseError::UnresolvableNode { kind: format!("method {signature}"), line: 0 })
}

struct MethodWalker<'a> {
    src: &'a [u8],
    class: &'a ClassCtx,
    /// Variable name → erased type; empty string for inferred lambda params.
    locals: HashMap<String, String>,
    type_params: HashSet<String>,
    field_accesses: Vec<String>,
    accessor_calls: Vec<String>,
    dependents: Vec<String>,
    invoked: Vec<InvokedMethod>,
}

impl<'a> MethodWalker<'a> {
    fn text(&self, node: Node<'_>) -> &'a str {
        text(node, self.src)
    }

    fn note_type_name(&mut self, name: String) {
        let base = name.trim_end_matches("[]").trim_end_matches("...").to_string();
        if base.is_empty() || PRIMITIVES.contains(&base.as_str()) || self.type_params.contains(&base) {
            return;
        }
        push_unique(&mut self.dependents, base);
    }

    fn note_types(&mut self, type_node: Node<'_>) {
        let mut names = Vec::new();
        referenced_types(type_node, self.src, &mut names);
        for n in names {
            self.note_type_name(n);
        }
    }

    fn note_types_in_declaration(&mut self, decl: Node<'_>) {
        if let Some(t) = decl.child_by_field_name("type") {
            self.note_types(t);
        } else if decl.kind() == "spread_parameter" {
            let mut c = decl.walk();
            let ty = decl
                .named_children(&mut c)
                .find(|n| !matches!(n.kind(), "modifiers" | "variable_declarator") && !is_annotation(n.kind()));
            if let Some(t) = ty {
                self.note_types(t);
            }
        }
    }

    /// Flat pass over all declarations in scope; shadowing is ignored.
    fn collect_locals(&mut self, node: Node<'_>) {
        let src = self.src;
        visit(node, &mut |n| match n.kind() {
            "formal_parameter" | "catch_formal_parameter" | "enhanced_for_statement" | "resource" => {
                if let Some(name) = n.child_by_field_name("name") {
                    let ty = n
                        .child_by_field_name("type")
                        .map(|t| erase_type(text(t, src)))
                        .or_else(|| {
                            // catch parameters carry their type in a catch_type child
                            let mut c = n.walk();
                            let found = n.named_children(&mut c).find(|x| x.kind() == "catch_type");
                            found.map(|t| erase_type(text(t, src)))
                        })
                        .unwrap_or_default();
                    self.locals.insert(text(name, src).to_string(), ty);
                }
            }
            "spread_parameter" => {
                let mut c = n.walk();
                let children: Vec<_> = n.named_children(&mut c).collect();
                let ty = children
                    .iter()
                    .find(|x| !matches!(x.kind(), "modifiers" | "variable_declarator") && !is_annotation(x.kind()))
                    .map(|t| format!("{}[]", erase_type(text(*t, src))))
                    .unwrap_or_default();
                if let Some(d) = children.iter().find(|x| x.kind() == "variable_declarator") {
                    if let Some(name) = d.child_by_field_name("name") {
                        self.locals.insert(text(name, src).to_string(), ty);
                    }
                }
            }
            "local_variable_declaration" => {
                let ty = n.child_by_field_name("type").map(|t| erase_type(text(t, src))).unwrap_or_default();
                let mut c = n.walk();
                for d in n.children_by_field_name("declarator", &mut c) {
                    if let Some(name) = d.child_by_field_name("name") {
                        let mut t = ty.clone();
                        if let Some(dims) = d.child_by_field_name("dimensions") {
                            t.push_str(&erase_type(text(dims, src)));
                        }
                        self.locals.insert(text(name, src).to_string(), t);
                    }
                }
            }
            "instanceof_expression" => {
                if let (Some(name), Some(ty)) = (n.child_by_field_name("name"), n.child_by_field_name("right")) {
                    self.locals.insert(text(name, src).to_string(), erase_type(text(ty, src)));
                }
            }
            "lambda_expression" => {
                if let Some(p) = n.child_by_field_name("parameters") {
                    match p.kind() {
                        "identifier" => {
                            self.locals.insert(text(p, src).to_string(), String::new());
                        }
                        "inferred_parameters" => {
                            let mut c = p.walk();
                            for id in p.named_children(&mut c) {
                                self.locals.insert(text(id, src).to_string(), String::new());
                            }
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        });
    }

    fn walk(&mut self, node: Node<'_>) {
        match node.kind() {
            "method_invocation" => {
                self.invocation(node);
                if let Some(obj) = node.child_by_field_name("object") {
                    self.walk(obj);
                }
                if let Some(args) = node.child_by_field_name("arguments") {
                    self.walk(args);
                }
                return;
            }
            "object_creation_expression" => {
                if let Some(t) = node.child_by_field_name("type") {
                    self.note_types(t);
                }
            }
            "field_access" => {
                let obj = node.child_by_field_name("object");
                let field = node.child_by_field_name("field");
                if let (Some(obj), Some(field)) = (obj, field) {
                    if obj.kind() == "this" {
                        let name = self.text(field);
                        if self.class.fields.contains_key(name) {
                            push_unique(&mut self.field_accesses, name.to_string());
                        }
                        return;
                    }
                    if self.is_type_reference(obj) {
                        let name = erase_type(self.text(obj));
                        self.note_type_name(name);
                        return;
                    }
                    self.walk(obj);
                }
                return;
            }
            "identifier" => {
                if self.is_variable_read(node) {
                    let name = self.text(node);
                    if !self.locals.contains_key(name) && self.class.fields.contains_key(name) {
                        push_unique(&mut self.field_accesses, name.to_string());
                    }
                }
                return;
            }
            "local_variable_declaration"
            | "catch_formal_parameter"
            | "enhanced_for_statement"
            | "resource"
            | "formal_parameter"
            | "spread_parameter" => self.note_types_in_declaration(node),
            "cast_expression" | "array_creation_expression" | "class_literal" => {
                if let Some(t) = node.child_by_field_name("type") {
                    self.note_types(t);
                } else if let Some(t) = node.named_child(0) {
                    self.note_types(t);
                }
            }
            "instanceof_expression" => {
                if let Some(t) = node.child_by_field_name("right") {
                    self.note_types(t);
                }
            }
            "method_reference" | "marker_annotation" | "annotation" => return,
            _ => {}
        }
        let mut cursor = node.walk();
        let children: Vec<_> = node.children(&mut cursor).collect();
        for child in children {
            self.walk(child);
        }
    }

    /// Whether an identifier node is a read of a variable (not a declaration,
    /// label, or member name).
    fn is_variable_read(&self, node: Node<'_>) -> bool {
        let Some(parent) = node.parent() else {
            return true;
        };
        let is_field = |f: &str| parent.child_by_field_name(f) == Some(node);
        match parent.kind() {
            "variable_declarator" | "formal_parameter" | "catch_formal_parameter" | "enhanced_for_statement"
            | "resource" | "instanceof_expression" => !is_field("name"),
            "method_invocation" => !is_field("name"),
            "field_access" => !is_field("field"),
            "lambda_expression" => !is_field("parameters"),
            "labeled_statement" | "break_statement" | "continue_statement" | "inferred_parameters"
            | "scoped_identifier" | "method_reference" => false,
            _ => true,
        }
    }

    /// An identifier or dotted name that refers to a type rather than a value.
    fn is_type_reference(&self, node: Node<'_>) -> bool {
        match node.kind() {
            "identifier" => {
                let name = self.text(node);
                !self.locals.contains_key(name)
                    && !self.class.fields.contains_key(name)
                    && name.chars().next().is_some_and(char::is_uppercase)
            }
            "field_access" => {
                let t = self.text(node);
                t.chars().all(|c| c.is_alphanumeric() || c == '.' || c == '_' || c == '$')
                    && t.rsplit('.').next().and_then(|s| s.chars().next()).is_some_and(char::is_uppercase)
                    && t.split('.').next().is_some_and(|first| {
                        !self.locals.contains_key(first) && !self.class.fields.contains_key(first)
                    })
            }
            _ => false,
        }
    }

    fn invocation(&mut self, node: Node<'_>) {
        let Some(name_node) = node.child_by_field_name("name") else {
            return;
        };
        let name = self.text(name_node).to_string();
        let args: Vec<Node<'_>> = node
            .child_by_field_name("arguments")
            .map(|a| {
                let mut c = a.walk();
                a.named_children(&mut c).collect()
            })
            .unwrap_or_default();
        let arg_types: Vec<Option<String>> = args.iter().map(|a| self.infer(*a)).collect();

        let owner: Option<String> = match node.child_by_field_name("object") {
            None => Some(self.class.qualified.clone()),
            Some(obj) => match obj.kind() {
                "this" => Some(self.class.qualified.clone()),
                "super" => None,
                _ if self.is_type_reference(obj) => Some(erase_type(self.text(obj))),
                _ => self.infer(obj).filter(|t| is_class_type(t)),
            },
        };

        let signature = match owner.as_deref() {
            Some(o) if o == self.class.qualified => self.own_method_key(&name, &arg_types),
            _ => None,
        }
        .unwrap_or_else(|| render_call(&name, &arg_types));

        if let Some(o) = &owner {
            if o != &self.class.qualified {
                self.note_type_name(o.clone());
            }
        }
        if is_accessor_name(&name, args.len()) {
            push_unique(&mut self.accessor_calls, signature.clone());
        }
        let call = InvokedMethod { owner, signature };
        if !self.invoked.contains(&call) {
            self.invoked.push(call);
        }
    }

    fn own_method_key(&self, name: &str, arg_types: &[Option<String>]) -> Option<String> {
        let candidates = self.class.methods.get(&(name.to_string(), arg_types.len()))?;
        pick_overload(candidates.iter().map(|(k, _)| k.as_str()), arg_types).map(str::to_string)
    }

    /// Static type of an expression where it is evident from the source.
    fn infer(&self, node: Node<'_>) -> Option<String> {
        let t = self.text(node);
        let s = |x: &str| Some(x.to_string());
        match node.kind() {
            "decimal_integer_literal" | "hex_integer_literal" | "octal_integer_literal" | "binary_integer_literal" => {
                if t.ends_with(['l', 'L']) {
                    s("long")
                } else {
                    s("int")
                }
            }
            "decimal_floating_point_literal" | "hex_floating_point_literal" => {
                if t.ends_with(['f', 'F']) {
                    s("float")
                } else {
                    s("double")
                }
            }
            "true" | "false" => s("boolean"),
            "character_literal" => s("char"),
            "string_literal" | "text_block" => s("String"),
            "this" => Some(self.class.qualified.rsplit(['.', '$']).next().unwrap_or("").to_string()),
            "identifier" => match self.locals.get(t) {
                Some(ty) if !ty.is_empty() => Some(ty.clone()),
                Some(_) => None,
                None => self.class.fields.get(t).cloned(),
            },
            "field_access" => {
                let obj = node.child_by_field_name("object")?;
                let field = node.child_by_field_name("field")?;
                if obj.kind() == "this" {
                    self.class.fields.get(self.text(field)).cloned()
                } else {
                    None
                }
            }
            "parenthesized_expression" => node.named_child(0).and_then(|n| self.infer(n)),
            "cast_expression" | "object_creation_expression" => {
                node.child_by_field_name("type").map(|t| erase_type(self.text(t)))
            }
            "array_creation_expression" => {
                let base = erase_type(self.text(node.child_by_field_name("type")?));
                let mut dims = 0;
                let mut c = node.walk();
                for d in node.children_by_field_name("dimensions", &mut c) {
                    dims += self.text(d).matches('[').count();
                }
                Some(format!("{base}{}", "[]".repeat(dims.max(1))))
            }
            "unary_expression" => {
                let op = node.child_by_field_name("operator").map(|o| o.kind());
                if op == Some("!") {
                    s("boolean")
                } else {
                    node.child_by_field_name("operand").and_then(|o| self.infer(o)).map(|t| promote(&t, "int"))
                }
            }
            "update_expression" => node.named_child(0).and_then(|n| self.infer(n)),
            "instanceof_expression" => s("boolean"),
            "binary_expression" => {
                let op = node.child_by_field_name("operator")?.kind();
                let left = node.child_by_field_name("left").and_then(|n| self.infer(n));
                let right = node.child_by_field_name("right").and_then(|n| self.infer(n));
                match op {
                    "&&" | "||" | "==" | "!=" | "<" | ">" | "<=" | ">=" => s("boolean"),
                    "+" if left.as_deref() == Some("String") || right.as_deref() == Some("String") => s("String"),
                    "<<" | ">>" | ">>>" => left.map(|l| promote(&l, "int")),
                    "&" | "|" | "^" if left.as_deref() == Some("boolean") => s("boolean"),
                    _ => match (left, right) {
                        (Some(l), Some(r)) => Some(promote(&l, &r)),
                        _ => None,
                    },
                }
            }
            "ternary_expression" => node.child_by_field_name("consequence").and_then(|n| self.infer(n)),
            "assignment_expression" => node.child_by_field_name("left").and_then(|n| self.infer(n)),
            "array_access" => {
                let arr = self.infer(node.child_by_field_name("array")?)?;
                arr.strip_suffix("[]").map(str::to_string)
            }
            "method_invocation" => {
                let obj = node.child_by_field_name("object");
                if obj.is_some_and(|o| o.kind() != "this") {
                    return None;
                }
                let name = self.text(node.child_by_field_name("name")?);
                let arity = node.child_by_field_name("arguments").map(|a| a.named_child_count()).unwrap_or(0);
                let candidates = self.class.methods.get(&(name.to_string(), arity))?;
                match candidates.as_slice() {
                    [(_, ret)] if ret != "void" => Some(ret.clone()),
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

fn is_class_type(t: &str) -> bool {
    !t.is_empty() && !t.ends_with("[]") && !PRIMITIVES.contains(&t)
}

/// Binary numeric promotion over primitive names; non-numeric falls through to the left type.
fn promote(left: &str, right: &str) -> String {
    const ORDER: &[&str] = &["double", "float", "long", "int"];
    const SMALL: &[&str] = &["byte", "short", "char", "int"];
    for wide in ORDER {
        if left == *wide || right == *wide {
            return (*wide).to_string();
        }
    }
    if SMALL.contains(&left) && SMALL.contains(&right) {
        return "int".into();
    }
    left.to_string()
}

fn render_call(name: &str, arg_types: &[Option<String>]) -> String {
    let args: Vec<&str> = arg_types.iter().map(|t| t.as_deref().unwrap_or("Object")).collect();
    format!("{name}({})", args.join(", "))
}

fn key_params(key: &str) -> Vec<&str> {
    let inner = key.split_once('(').map(|(_, r)| r.trim_end_matches(')')).unwrap_or("");
    if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(", ").collect()
    }
}

/// Choose among same-name, same-arity declarations. Unknown argument types
/// match anything; a unique candidate is taken as-is.
pub(crate) fn pick_overload<'k>(
    candidates: impl Iterator<Item = &'k str>,
    arg_types: &[Option<String>],
) -> Option<&'k str> {
    let all: Vec<&str> = candidates.collect();
    if all.len() == 1 {
        return Some(all[0]);
    }
    all.into_iter().find(|key| {
        let params = key_params(key);
        params.len() == arg_types.len()
            && params.iter().zip(arg_types).all(|(p, a)| match a {
                None => true,
                Some(a) => a == p || p.trim_end_matches("...") == a,
            })
    })
}

/// Inferred-argument key to candidate match used when canonicalizing calls
/// against another class: `Object` in the rendered call acts as a wildcard.
pub(crate) fn parse_call_types(signature: &str) -> Vec<Option<String>> {
    key_params(signature)
        .into_iter()
        .map(|t| if t == "Object" { None } else { Some(t.to_string()) })
        .collect()
}

fn import_target(import: &str) -> Option<(&str, bool)> {
    let body = import.strip_prefix("import")?.trim().trim_end_matches(';').trim();
    if body.starts_with("static ") {
        return None;
    }
    match body.strip_suffix(".*") {
        Some(pkg) => Some((pkg, true)),
        None => Some((body, false)),
    }
}

fn qualify_name(name: &str, context: &ClassInfo, known: &dyn Fn(&str) -> bool) -> String {
    let name = name.trim_end_matches("[]").trim_end_matches("...");
    if known(name) {
        return name.to_string();
    }
    let (first, rest) = match name.split_once('.') {
        Some((f, r)) => (f, Some(r)),
        None => (name, None),
    };
    let with_rest = |base: String| -> String {
        match rest {
            Some(r) => format!("{base}${}", r.replace('.', "$")),
            None => base,
        }
    };

    // member type of the context class or one of its enclosing classes
    let mut scope = context.qualified_name.as_str();
    loop {
        let candidate = with_rest(format!("{scope}${first}"));
        if known(&candidate) {
            return candidate;
        }
        match scope.rfind('$') {
            Some(i) => scope = &scope[..i],
            None => break,
        }
    }

    for import in &context.imports {
        if let Some((target, false)) = import_target(import) {
            if target.rsplit('.').next() == Some(first) {
                let nested = with_rest(target.to_string());
                if known(&nested) {
                    return nested;
                }
                return match rest {
                    Some(r) => format!("{target}.{r}"),
                    None => target.to_string(),
                };
            }
        }
    }

    let package = context.package();
    let same_pkg = if package.is_empty() { with_rest(first.to_string()) } else { with_rest(format!("{package}.{first}")) };
    if known(&same_pkg) {
        return same_pkg;
    }

    for import in &context.imports {
        if let Some((pkg, true)) = import_target(import) {
            let candidate = with_rest(format!("{pkg}.{first}"));
            if known(&candidate) {
                return candidate;
            }
        }
    }
    name.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adapter() -> JavaAdapter {
        JavaAdapter
    }

    #[test]
    fn erase_strips_generics_and_spaces() {
        assert_eq!(erase_type("Map<String, List<Integer>>"), "Map");
        assert_eq!(erase_type("List<String>[]"), "List[]");
        assert_eq!(erase_type("int"), "int");
    }

    #[test]
    fn syntax_check_rejects_top_level_statements() {
        let a = adapter();
        assert!(a.check_syntax("class A { void f() { int x = 1; } }").is_ok());
        assert!(a.check_syntax("assertTrue(x);").is_err());
        assert!(a.check_syntax("class A { void f() { ").is_err());
        assert!(a.check_syntax("").is_ok());
    }

    #[test]
    fn syntax_issue_carries_line() {
        let err = adapter().check_syntax("class A {\n void f() {\n int x = ;\n }\n}").unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn signature_key_from_header() {
        let a = adapter();
        assert_eq!(a.signature_key("public static int max(byte a, byte b, byte c)").as_deref(), Some("max(byte, byte, byte)"));
        assert_eq!(
            a.signature_key("public <T> List<T> wrap(Map<String, T> m, int[] xs, String... rest)").as_deref(),
            Some("wrap(Map, int[], String...)")
        );
        assert_eq!(a.signature_key("void run()").as_deref(), Some("run()"));
    }

    #[test]
    fn header_drops_annotations_and_body() {
        let src = "class A {\n  @Override\n  public   String toString() throws IllegalStateException { return \"\"; }\n}";
        let unit = adapter().parse_unit("A.java", src).unwrap();
        assert_eq!(unit.classes[0].method_signatures, vec!["public String toString() throws IllegalStateException"]);
        assert_eq!(unit.classes[0].class_signature, "class A");
    }

    #[test]
    fn math_max_on_bytes_is_fully_typed() {
        let src = r#"
public class Util {
    public static byte biggest(byte a, byte b, byte c) {
        return (byte) Math.max(a, b, c);
    }
}"#;
        let m = extract_method_info(src, "biggest(byte, byte, byte)").unwrap();
        assert_eq!(m.invoked_method_signatures().collect::<Vec<_>>(), vec!["max(byte, byte, byte)"]);
        assert_eq!(m.invoked_methods[0].owner.as_deref(), Some("Math"));
        assert_eq!(m.dependent_class_names, vec!["Math"]);
    }

    #[test]
    fn empty_body_has_no_accesses_or_dependencies() {
        let src = "class A { int count; void noop() {} }";
        let m = extract_method_info(src, "noop()").unwrap();
        assert!(m.field_accesses.is_empty());
        assert!(m.dependent_class_names.is_empty());
        assert!(m.invoked_methods.is_empty());
        assert!(m.getter_setter_invocations.is_empty());
    }

    #[test]
    fn field_read_and_getter_call() {
        let src = r#"
class Counter {
    private int count;
    String describe(Helper helper) {
        return helper.getName() + count;
    }
}"#;
        let m = extract_method_info(src, "describe(Helper)").unwrap();
        assert_eq!(m.field_accesses, vec!["count"]);
        assert_eq!(m.getter_setter_invocations, vec!["getName()"]);
        assert_eq!(m.invoked_methods[0].owner.as_deref(), Some("Helper"));
    }

    #[test]
    fn locals_shadow_fields() {
        let src = "class A { int n; int f() { int n = 2; return n + this.n; } }";
        let m = extract_method_info(src, "f()").unwrap();
        assert_eq!(m.field_accesses, vec!["n"]);
        let src = "class A { int n; int f() { int n = 2; return n; } }";
        let m = extract_method_info(src, "f()").unwrap();
        assert!(m.field_accesses.is_empty());
    }

    #[test]
    fn unqualified_calls_resolve_to_own_overloads() {
        let src = r#"
class A {
    int add(int a, int b) { return a + b; }
    long add(long a, long b) { return a + b; }
    long total(long x) { return add(x, 2L) + add(1, 2); }
}"#;
        let m = extract_method_info(src, "total(long)").unwrap();
        let sigs: Vec<_> = m.invoked_method_signatures().collect();
        assert_eq!(sigs, vec!["add(long, long)", "add(int, int)"]);
        assert!(m.invoked_methods.iter().all(|c| c.owner.as_deref() == Some("A")));
    }

    #[test]
    fn dependents_exclude_primitives_owner_and_type_params() {
        let src = r#"
package p;
class Box<T> {
    <R> List<R> map(Function<T, R> f, int n) {
        Box<T> copy = new Box<>();
        Parser parser = new Parser("x");
        return new ArrayList<>();
    }
}"#;
        let m = extract_method_info(src, "map(Function, int)").unwrap();
        assert_eq!(m.dependent_class_names, vec!["List", "Function", "Parser", "ArrayList"]);
    }

    #[test]
    fn nested_classes_are_indexed_with_dollar_but_not_focal() {
        let src = r#"
package p;
public class Outer {
    void a() {}
    static class Inner { void b() {} }
}"#;
        let unit = adapter().parse_unit("Outer.java", src).unwrap();
        let names: Vec<_> = unit.classes.iter().map(|c| c.qualified_name.as_str()).collect();
        assert_eq!(names, vec!["p.Outer", "p.Outer$Inner"]);
        assert_eq!(unit.methods.len(), 1);
        assert_eq!(unit.methods[0].signature, "a()");
    }

    #[test]
    fn accessor_declarations_follow_return_type_rule() {
        let src = r#"
class Bean {
    private String name;
    public String getName() { return name; }
    public void setName(String name) { this.name = name; }
    public void getNothing() {}
    public boolean isReady() { return true; }
    public Bean setFluent(String v) { return this; }
}"#;
        let unit = adapter().parse_unit("Bean.java", src).unwrap();
        assert_eq!(
            unit.classes[0].getter_setter_signatures,
            vec!["public String getName()", "public void setName(String name)", "public boolean isReady()"]
        );
    }

    #[test]
    fn qualify_prefers_imports_then_package() {
        let ctx = ClassInfo {
            qualified_name: "com.x.Calc".into(),
            package_decl: "package com.x;".into(),
            imports: vec!["import java.util.List;".into(), "import com.y.*;".into()],
            class_signature: String::new(),
            fields: vec![],
            constructor_signatures: vec![],
            method_signatures: vec![],
            getter_setter_signatures: vec![],
            source_path: String::new(),
        };
        let known = |n: &str| matches!(n, "com.x.Parser" | "com.y.Token" | "com.x.Calc$Mode");
        let a = adapter();
        assert_eq!(a.qualify("List", &ctx, &known), "java.util.List");
        assert_eq!(a.qualify("Parser", &ctx, &known), "com.x.Parser");
        assert_eq!(a.qualify("Token", &ctx, &known), "com.y.Token");
        assert_eq!(a.qualify("Mode", &ctx, &known), "com.x.Calc$Mode");
        assert_eq!(a.qualify("Math", &ctx, &known), "Math");
    }

    #[test]
    fn call_sites_count_invocations_and_asserts() {
        let src = "class T { void t() { assertEquals(1, f(2)); assert x; } }";
        let sites = adapter().call_sites(src);
        let names: Vec<_> = sites.iter().map(|s| (s.name.as_str(), s.arity)).collect();
        assert_eq!(names, vec![("assertEquals", 2), ("f", 1), ("assert", 1)]);
    }

    #[test]
    fn overload_pick_uses_known_types() {
        let keys = ["f(int)", "f(String)"];
        assert_eq!(pick_overload(keys.iter().copied(), &[Some("String".into())]), Some("f(String)"));
        assert_eq!(pick_overload(keys.iter().copied(), &[None]), Some("f(int)"));
        assert_eq!(pick_overload(["g(long)"].iter().copied(), &[Some("int".into())]), Some("g(long)"));
    }
}
