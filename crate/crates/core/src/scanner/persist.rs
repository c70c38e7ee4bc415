//! Line-delimited JSON persistence for [`ProjectIndex`].
//!
//! Line 1 is a header with the schema version and record counts; every
//! following line is one class record carrying its focal methods. The file
//! always ends with a newline, so any truncation is detectable.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{ClassInfo, MethodInfo, ProjectIndex, INDEX_SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u64, expected: u32 },
    #[error("index i/o error at byte {offset}: {message}")]
    Io { offset: u64, message: String },
}

impl IndexError {
    fn at(offset: usize, message: impl Into<String>) -> Self {
        IndexError::Io { offset: offset as u64, message: message.into() }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    root_path: String,
    classes: usize,
    methods: usize,
}

#[derive(Serialize, Deserialize)]
struct ClassRecord {
    class: ClassInfo,
    methods: Vec<MethodInfo>,
}

pub fn write_index(index: &ProjectIndex, out: &mut impl Write) -> io::Result<()> {
    let header = Header {
        schema_version: index.schema_version,
        root_path: index.root_path.clone(),
        classes: index.classes.len(),
        methods: index.methods.len(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for class in index.classes.values() {
        let record = ClassRecord {
            class: class.clone(),
            methods: index.methods_of(&class.qualified_name).cloned().collect(),
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_index(index: &ProjectIndex, path: &Path) -> Result<(), IndexError> {
    let mut buf = Vec::new();
    write_index(index, &mut buf).map_err(|e| IndexError::at(0, e.to_string()))?;
    std::fs::write(path, buf).map_err(|e| IndexError::at(0, format!("{}: {e}", path.display())))
}

pub fn load_index(path: &Path) -> Result<ProjectIndex, IndexError> {
    let bytes = std::fs::read(path).map_err(|e| IndexError::at(0, format!("{}: {e}", path.display())))?;
    read_index(&bytes)
}

pub fn read_index(bytes: &[u8]) -> Result<ProjectIndex, IndexError> {
    let mut offset = 0usize;
    let mut lines = bytes.split_inclusive(|&b| b == b'\n');

    let header_line = lines.next().ok_or_else(|| IndexError::at(0, "empty index file"))?;
    let value: serde_json::Value =
        serde_json::from_slice(header_line).map_err(|e| IndexError::at(json_offset(0, header_line, &e), e.to_string()))?;
    let found = value.get("schema_version").and_then(|v| v.as_u64());
    match found {
        Some(v) if v == u64::from(INDEX_SCHEMA_VERSION) => {}
        Some(v) => return Err(IndexError::SchemaMismatch { found: v, expected: INDEX_SCHEMA_VERSION }),
        None => return Err(IndexError::at(0, "index header has no schema_version")),
    }
    let header: Header = serde_json::from_value(value).map_err(|e| IndexError::at(0, e.to_string()))?;
    offset += header_line.len();

    let mut index = ProjectIndex::new(header.root_path);
    for line in lines {
        let record: ClassRecord = serde_json::from_slice(line)
            .map_err(|e| IndexError::at(json_offset(offset, line, &e), format!("bad class record: {e}")))?;
        for m in record.methods {
            index.methods.insert(m.key(), m);
        }
        index.classes.insert(record.class.qualified_name.clone(), record.class);
        offset += line.len();
    }

    if !bytes.ends_with(b"\n") {
        return Err(IndexError::at(bytes.len(), "index file does not end with a newline (truncated?)"));
    }
    if index.classes.len() != header.classes || index.methods.len() != header.methods {
        return Err(IndexError::at(
            bytes.len(),
            format!(
                "expected {} classes / {} methods, found {} / {} (truncated?)",
                header.classes,
                header.methods,
                index.classes.len(),
                index.methods.len()
            ),
        ));
    }
    Ok(index)
}

/// Absolute byte offset of a JSON error inside `line`, which starts at `base`.
fn json_offset(base: usize, line: &[u8], err: &serde_json::Error) -> usize {
    if err.line() == 0 {
        return base + line.len();
    }
    let mut pos = 0;
    for _ in 1..err.line() {
        pos += line[pos..].iter().position(|&b| b == b'\n').map(|p| p + 1).unwrap_or(0);
    }
    base + pos + err.column().saturating_sub(1)
}
