//! Project scanning: walk a source tree, parse every file through the
//! language adapter, and merge the results into a [`ProjectIndex`].

use std::collections::{BTreeMap, HashSet};
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

use crate::lang::{is_accessor_name, LanguageAdapter, ParsedUnit};

mod model;
mod persist;

pub use model::*;
pub use persist::{load_index, read_index, save_index, write_index, IndexError};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("project root not found: {0}")]
    RootNotFound(PathBuf),
    #[error("no parseable source files under {root} ({skipped} skipped)")]
    NoSourcesFound { root: PathBuf, skipped: usize },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Result of a scan: the index plus per-file bookkeeping.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub index: ProjectIndex,
    pub discovered: usize,
    pub parsed: usize,
    pub skipped: Vec<SkippedFile>,
}

pub fn scan_project(root: &Path, adapter: &dyn LanguageAdapter) -> Result<ScanReport, ScanError> {
    let meta = std::fs::metadata(root).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => ScanError::RootNotFound(root.to_path_buf()),
        _ => ScanError::Io { path: root.to_path_buf(), source: e },
    })?;
    if !meta.is_dir() {
        return Err(ScanError::Io {
            path: root.to_path_buf(),
            source: io::Error::new(io::ErrorKind::InvalidInput, "not a directory"),
        });
    }
    // fail early on an unreadable root rather than reporting "no sources"
    std::fs::read_dir(root).map_err(|e| ScanError::Io { path: root.to_path_buf(), source: e })?;

    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| ScanError::Io {
            path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
            source: e.into_io_error().unwrap_or_else(|| io::Error::other("filesystem loop")),
        })?;
        if entry.file_type().is_file() && adapter.handles(entry.path()) {
            files.push(entry.into_path());
        }
    }

    let results: Vec<(String, Result<ParsedUnit, String>)> = files
        .par_iter()
        .map(|path| {
            let rel = relative_path(root, path);
            let parsed = std::fs::read_to_string(path)
                .map_err(|e| e.to_string())
                .and_then(|src| adapter.parse_unit(&rel, &src).map_err(|e| e.to_string()));
            (rel, parsed)
        })
        .collect();

    let discovered = files.len();
    let mut skipped = Vec::new();
    let mut units = Vec::new();
    for (path, result) in results {
        match result {
            Ok(unit) => units.push(unit),
            Err(reason) => skipped.push(SkippedFile { path, reason }),
        }
    }
    let parsed = units.len();
    if parsed == 0 {
        return Err(ScanError::NoSourcesFound { root: root.to_path_buf(), skipped: skipped.len() });
    }

    let index = merge_units(root.display().to_string(), units, adapter);
    Ok(ScanReport { index, discovered, parsed, skipped })
}

fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Merge per-file results and qualify every type reference project-wide.
pub fn merge_units(root: String, units: Vec<ParsedUnit>, adapter: &dyn LanguageAdapter) -> ProjectIndex {
    let mut index = ProjectIndex::new(root);
    let mut raw_methods = Vec::new();
    for unit in units {
        for class in unit.classes {
            // first declaration of a qualified name wins
            index.classes.entry(class.qualified_name.clone()).or_insert(class);
        }
        raw_methods.extend(unit.methods);
    }

    let method_keys: BTreeMap<&str, Vec<String>> = index
        .classes
        .values()
        .map(|c| {
            let keys = c.method_signatures.iter().filter_map(|h| adapter.signature_key(h)).collect();
            (c.qualified_name.as_str(), keys)
        })
        .collect();
    let accessor_keys: HashSet<(&str, String)> = index
        .classes
        .values()
        .flat_map(|c| {
            c.getter_setter_signatures
                .iter()
                .filter_map(|h| adapter.signature_key(h))
                .map(move |k| (c.qualified_name.as_str(), k))
        })
        .collect();
    let known = |name: &str| index.classes.contains_key(name);

    let mut methods = BTreeMap::new();
    for mut m in raw_methods {
        let Some(owner) = index.classes.get(&m.owner_class) else {
            continue;
        };

        let mut accessors = Vec::new();
        let mut invoked = Vec::new();
        for call in m.invoked_methods.drain(..) {
            let owner_name = call.owner.map(|o| {
                if o == m.owner_class {
                    o
                } else {
                    adapter.qualify(&o, owner, &known)
                }
            });
            let mut signature = call.signature;
            if let Some(keys) = owner_name.as_deref().and_then(|o| method_keys.get(o)) {
                let name = signature.split('(').next().unwrap_or("").to_string();
                let arity = signature_arity(&signature);
                let args = crate::lang::java::parse_call_types(&signature);
                let same: Vec<&str> = keys
                    .iter()
                    .filter(|k| k.split('(').next() == Some(name.as_str()) && signature_arity(k) == arity)
                    .map(String::as_str)
                    .collect();
                if let Some(k) = crate::lang::java::pick_overload(same.into_iter(), &args) {
                    signature = k.to_string();
                }
            }
            let name = signature.split('(').next().unwrap_or("");
            if is_accessor_name(name, signature_arity(&signature)) {
                let declared_elsewhere = owner_name
                    .as_deref()
                    .is_some_and(|o| method_keys.contains_key(o));
                let qualifies = match owner_name.as_deref() {
                    Some(o) if declared_elsewhere => accessor_keys.contains(&(o, signature.clone())),
                    Some(_) => true,
                    None => false,
                };
                if qualifies && !accessors.contains(&signature) {
                    accessors.push(signature.clone());
                }
            }
            let call = InvokedMethod { owner: owner_name, signature };
            if !invoked.contains(&call) {
                invoked.push(call);
            }
        }
        m.invoked_methods = invoked;
        m.getter_setter_invocations = accessors;

        let mut deps = Vec::new();
        for raw in m.dependent_class_names.drain(..) {
            if adapter.is_builtin_type(&raw) {
                continue;
            }
            let q = adapter.qualify(&raw, owner, &known);
            if q != m.owner_class && !deps.contains(&q) {
                deps.push(q);
            }
        }
        m.dependent_class_names = deps;
        methods.insert(m.key(), m);
    }
    index.methods = methods;
    index
}

/// In-project dependencies of `method`, plus the names that are not in the index.
pub fn resolve_dependencies(
    method: &MethodInfo,
    index: &ProjectIndex,
    adapter: &dyn LanguageAdapter,
) -> (Vec<DependencyInfo>, Vec<String>) {
    let mut deps = Vec::new();
    let mut externals = Vec::new();
    for name in &method.dependent_class_names {
        let Some(class) = index.class(name) else {
            externals.push(name.clone());
            continue;
        };
        let invoked = method
            .invoked_methods
            .iter()
            .filter(|c| c.owner.as_deref() == Some(name.as_str()))
            .filter_map(|c| {
                class
                    .method_signatures
                    .iter()
                    .find(|h| adapter.signature_key(h).as_deref() == Some(c.signature.as_str()))
                    .cloned()
            })
            .fold(Vec::new(), |mut acc, h| {
                if !acc.contains(&h) {
                    acc.push(h);
                }
                acc
            });
        deps.push(DependencyInfo {
            class_name: class.qualified_name.clone(),
            class_signature: class.class_signature.clone(),
            constructor_signatures: class.constructor_signatures.clone(),
            invoked_method_signatures: invoked,
        });
    }
    (deps, externals)
}

/// Declaration header for a call, falling back to the call's own key.
pub fn invoked_declaration(call: &InvokedMethod, index: &ProjectIndex, adapter: &dyn LanguageAdapter) -> String {
    call.owner
        .as_deref()
        .and_then(|o| index.class(o))
        .and_then(|c| {
            c.method_signatures
                .iter()
                .find(|h| adapter.signature_key(h).as_deref() == Some(call.signature.as_str()))
        })
        .cloned()
        .unwrap_or_else(|| call.signature.clone())
}
