//! Inputs shared by the benchmarks, built from the core test fixtures.

use std::path::{Path, PathBuf};

use unitsmith_core::scanner::resolve_dependencies;
use unitsmith_core::{scan_project, FocalMaterial, JavaAdapter, MethodKey, ProjectIndex};

pub fn calc_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/calc")
}

pub fn calc_index() -> ProjectIndex {
    scan_project(&calc_root(), &JavaAdapter::new()).expect("calc fixture scans").index
}

/// Packing material for `class#signature` in the calc fixture.
pub fn material(index: &ProjectIndex, class: &str, signature: &str) -> FocalMaterial {
    let adapter = JavaAdapter::new();
    let fm = index.method(&MethodKey::new(class, signature)).expect("method in fixture");
    let (deps, _) = resolve_dependencies(fm, index, &adapter);
    FocalMaterial::new(index.class(class).expect("class in fixture"), fm, &deps, index, &adapter)
}

/// A chatty reply with a usage snippet before the test class.
pub const REPLY: &str = "Here is how you call it:\n\n```java\nCalculator c = new Calculator();\nc.add(1, 2);\n```\n\nAnd the test:\n\n```java\nimport org.junit.jupiter.api.Test;\nimport static org.junit.jupiter.api.Assertions.*;\n\npublic class CalculatorTest {\n    @Test\n    void adds() {\n        assertEquals(3, new Calculator().add(1, 2));\n    }\n\n    @Test\n    void divides() {\n        assertEquals(2, new Calculator().divide(4, 2));\n    }\n}\n```\n\nThese cover the basic cases.";

/// A test class cut off inside its second test.
pub const TRUNCATED: &str = "import org.junit.jupiter.api.Test;\n\npublic class CalculatorTest {\n    @Test\n    void adds() {\n        assertEquals(3, new Calculator().add(1, 2));\n    }\n\n    @Test\n    void divides() {\n        assertEquals(2, new Calculator().divide(4, ";
