use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Class-level metadata for one declared type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    /// Dotted package path plus simple name; nested types use `$`.
    pub qualified_name: String,
    /// Verbatim package declaration, empty for the default package.
    pub package_decl: String,
    /// Verbatim import declarations, deduplicated, in source order.
    pub imports: Vec<String>,
    /// Declaration line: modifiers, name, generics, extends/implements.
    pub class_signature: String,
    pub fields: Vec<String>,
    pub constructor_signatures: Vec<String>,
    /// Method declaration headers (no bodies, no annotations).
    pub method_signatures: Vec<String>,
    /// Subset of `method_signatures` matching the getter/setter rule.
    pub getter_setter_signatures: Vec<String>,
    /// Path relative to the scanned root, `/`-separated.
    pub source_path: String,
}

impl ClassInfo {
    pub fn simple_name(&self) -> &str {
        let tail = self.qualified_name.rsplit('.').next().unwrap_or(&self.qualified_name);
        tail.rsplit('$').next().unwrap_or(tail)
    }

    /// Dotted package name, empty for the default package.
    pub fn package(&self) -> &str {
        match self.qualified_name.rfind('.') {
            Some(i) => &self.qualified_name[..i],
            None => "",
        }
    }

    pub fn is_nested(&self) -> bool {
        self.qualified_name.contains('$')
    }
}

/// A call made by a method, resolved as far as static information allows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InvokedMethod {
    /// Declaring class of the callee when it could be determined.
    pub owner: Option<String>,
    /// `name(Type, Type)` with full parameter types.
    pub signature: String,
}

/// Method-level metadata for one focal-method candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodInfo {
    pub owner_class: String,
    /// `name(Type, Type)`, unique within the owner class.
    pub signature: String,
    /// Full source text including the declaration header.
    pub body: String,
    pub field_accesses: Vec<String>,
    pub getter_setter_invocations: Vec<String>,
    pub dependent_class_names: Vec<String>,
    pub invoked_methods: Vec<InvokedMethod>,
}

impl MethodInfo {
    pub fn name(&self) -> &str {
        self.signature.split('(').next().unwrap_or(&self.signature)
    }

    pub fn arity(&self) -> usize {
        signature_arity(&self.signature)
    }

    pub fn is_varargs(&self) -> bool {
        self.signature.contains("...")
    }

    pub fn invoked_method_signatures(&self) -> impl Iterator<Item = &str> {
        self.invoked_methods.iter().map(|m| m.signature.as_str())
    }

    pub fn key(&self) -> MethodKey {
        MethodKey::new(&self.owner_class, &self.signature)
    }
}

/// Number of parameters in a `name(A, B)` signature key.
pub fn signature_arity(signature: &str) -> usize {
    let inner = signature
        .split_once('(')
        .map(|(_, rest)| rest.trim_end_matches(')'))
        .unwrap_or("");
    if inner.trim().is_empty() {
        0
    } else {
        inner.split(',').count()
    }
}

/// What a focal method needs to know about one in-project class it uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyInfo {
    pub class_name: String,
    pub class_signature: String,
    pub constructor_signatures: Vec<String>,
    /// Declaration headers of the methods the focal method calls on this class.
    pub invoked_method_signatures: Vec<String>,
}

/// `(class, signature)` identity of a method in the index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodKey {
    pub class: String,
    pub signature: String,
}

impl MethodKey {
    pub fn new(class: impl Into<String>, signature: impl Into<String>) -> Self {
        Self { class: class.into(), signature: signature.into() }
    }
}

impl fmt::Display for MethodKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.class, self.signature)
    }
}

pub const INDEX_SCHEMA_VERSION: u32 = 1;

/// Persisted catalog of the classes and methods of a project under test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectIndex {
    pub schema_version: u32,
    pub root_path: String,
    pub classes: BTreeMap<String, ClassInfo>,
    pub methods: BTreeMap<MethodKey, MethodInfo>,
}

impl ProjectIndex {
    pub fn new(root_path: impl Into<String>) -> Self {
        Self {
            schema_version: INDEX_SCHEMA_VERSION,
            root_path: root_path.into(),
            classes: BTreeMap::new(),
            methods: BTreeMap::new(),
        }
    }

    pub fn class(&self, qualified_name: &str) -> Option<&ClassInfo> {
        self.classes.get(qualified_name)
    }

    pub fn method(&self, key: &MethodKey) -> Option<&MethodInfo> {
        self.methods.get(key)
    }

    pub fn methods_of<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a MethodInfo> + 'a {
        self.methods.values().filter(move |m| m.owner_class == class)
    }

    /// Focal-method candidates in stable key order.
    pub fn focal_methods(&self) -> impl Iterator<Item = &MethodInfo> {
        self.methods.values()
    }
}

/// A source file the scanner could not use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: String,
}
