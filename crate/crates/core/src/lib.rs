//! Generation, validation and repair of unit tests with a chat model.
//!
//! The pipeline scans a project into an index, packs an adaptive focal
//! context for each method under a prompt token budget, asks the model for a
//! test, extracts and validates it, and repairs failures by rules first and
//! by the model second.

pub mod config;
pub mod context;
pub mod extract;
pub mod gateway;
pub mod lang;
pub mod lexer;
pub mod pipeline;
pub mod prompt;
pub mod repair;
pub mod report;
pub mod scanner;
pub mod session;
pub mod tokens;
pub mod validate;

pub use config::{Config, ConfigError, GatewayConfig, RunConfig, ToolchainConfig};
pub use context::{
    build_adaptive_context, has_dependency, BlockKind, BudgetConfig, ContextBlock, ContextError, ContextPath,
    FocalContext, FocalMaterial,
};
pub use extract::{extract, ExtractionFailure, Origin, TestCandidate};
pub use gateway::{
    CallTag, Cassette, CassetteMode, CassetteTransport, ChatMessage, ChatRequest, ChatResponse, FinishReason, Gateway,
    GatewayError, LedgerReport, Phase, RetryPolicy, Role, TokenUsage, Transport, TransportFailure, Usage,
};
pub use lang::{JavaAdapter, LanguageAdapter};
pub use pipeline::{
    run_attempt, run_method, run_project, AttemptRecord, EventSink, MethodReport, RunReport, Services, Terminal,
    TerminalCounts,
};
pub use prompt::{render, render_repair, PromptTemplate, RenderedPrompt, TemplateId, TemplateSet};
pub use repair::{dispatch_repair, repair_imports, repair_syntax, RepairAction, Unrepairable};
pub use session::{build_gateway, build_toolchain, load_templates, report_json};
pub use scanner::{
    load_index, save_index, scan_project, ClassInfo, DependencyInfo, MethodInfo, MethodKey, ProjectIndex, ScanError,
};
pub use tokens::{BpeCounter, HeuristicCounter, TokenCounter};
pub use validate::{
    classify_correct, count_test_api_usage, validate, Diagnostic, DiagnosticKind, ProcessToolchain, Status,
    StubToolchain, Toolchain, ToolchainError, ValidationOutcome,
};
