//! Adaptive focal context: pack the most useful source-derived blocks into
//! a generation prompt without reaching the prompt token limit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageAdapter;
use crate::prompt::{PromptTemplate, TemplateId, TemplateSet};
use crate::scanner::{invoked_declaration, ClassInfo, DependencyInfo, MethodInfo, ProjectIndex};
use crate::tokens::TokenCounter;

pub const DEFAULT_MAX_PROMPT_TOKENS: usize = 2700;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    FocalSig,
    FocalCtor,
    FocalBody,
    Fields,
    GetterSetters,
    Namespace,
    DepSig,
    DepCtor,
    InvokedSigs,
    AllFocalMethodSigs,
}

impl BlockKind {
    fn header(self) -> &'static str {
        match self {
            BlockKind::FocalSig => "// Focal class",
            BlockKind::FocalCtor => "// Focal class constructors",
            BlockKind::FocalBody => "// Focal method",
            BlockKind::Fields => "// Focal class fields",
            BlockKind::GetterSetters => "// Focal class getters and setters",
            BlockKind::Namespace => "// Package and imports of the focal class",
            BlockKind::DepSig => "// Dependent class",
            BlockKind::DepCtor => "// Dependent class constructors",
            BlockKind::InvokedSigs => "// Invoked methods",
            BlockKind::AllFocalMethodSigs => "// All methods of the focal class",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub kind: BlockKind,
    pub text: String,
}

impl ContextBlock {
    pub fn new(kind: BlockKind, text: impl Into<String>) -> Self {
        Self { kind, text: text.into() }
    }

    fn render(&self) -> String {
        format!("{}\n{}", self.kind.header(), self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetConfig {
    pub max_prompt_tokens: usize,
    pub use_fields: bool,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self { max_prompt_tokens: DEFAULT_MAX_PROMPT_TOKENS, use_fields: false }
    }
}

/// Which way the builder went; mostly useful for tests and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContextPath {
    /// Namespace did not fit: required blocks only, base template.
    NamespaceShortCircuit,
    DepIncluded,
    /// Dependency blocks did not fit; dep template kept.
    DepOmitted,
    /// Dependency blocks did not fit and the dep template itself overflowed.
    DepOmittedBaseFallback,
    NoDepInvokedRejected,
    NoDepInvokedOnly,
    NoDepAll,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalContext {
    pub blocks: Vec<ContextBlock>,
    pub template: TemplateId,
    pub rendered_tokens: usize,
    pub path: ContextPath,
}

impl FocalContext {
    pub fn render_blocks(&self) -> String {
        render_blocks(&self.blocks)
    }

    pub fn kinds(&self) -> Vec<BlockKind> {
        self.blocks.iter().map(|b| b.kind).collect()
    }
}

pub fn render_blocks(blocks: &[ContextBlock]) -> String {
    blocks.iter().map(ContextBlock::render).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("required context not satisfied! ({tokens} tokens, limit {limit})")]
    RequiredContextNotSatisfied { tokens: usize, limit: usize },
}

/// Every candidate block for one focal method, before any budgeting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalMaterial {
    pub class_signature: String,
    pub constructors: String,
    pub body: String,
    pub fields: String,
    pub getter_setters: String,
    pub namespace: String,
    /// One `(signature, constructors, invoked headers)` triple per dependency.
    pub dependencies: Vec<(String, String, String)>,
    /// Headers of the methods the focal method calls (no-dependency branch).
    pub invoked: String,
    pub all_method_signatures: String,
}

impl FocalMaterial {
    pub fn new(
        fc: &ClassInfo,
        fm: &MethodInfo,
        deps: &[DependencyInfo],
        index: &ProjectIndex,
        adapter: &dyn LanguageAdapter,
    ) -> Self {
        let constructors = if fc.constructor_signatures.is_empty() {
            adapter.implicit_constructor(fc)
        } else {
            fc.constructor_signatures.join("\n")
        };
        let namespace = std::iter::once(fc.package_decl.as_str())
            .chain(fc.imports.iter().map(String::as_str))
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join("\n");
        let mut invoked: Vec<String> = Vec::new();
        for call in &fm.invoked_methods {
            if call.owner.as_deref().is_some_and(|o| index.class(o).is_some()) {
                let header = invoked_declaration(call, index, adapter);
                if !invoked.contains(&header) {
                    invoked.push(header);
                }
            }
        }
        Self {
            class_signature: fc.class_signature.clone(),
            constructors,
            body: fm.body.clone(),
            fields: fc.fields.join("\n"),
            getter_setters: fc.getter_setter_signatures.join("\n"),
            namespace,
            dependencies: deps
                .iter()
                .map(|d| {
                    (
                        d.class_signature.clone(),
                        d.constructor_signatures.join("\n"),
                        d.invoked_method_signatures.join("\n"),
                    )
                })
                .collect(),
            invoked: invoked.join("\n"),
            all_method_signatures: fc.method_signatures.join("\n"),
        }
    }

    pub fn has_dependency(&self) -> bool {
        !self.dependencies.is_empty()
    }

    fn required(&self, cfg: &BudgetConfig) -> Vec<ContextBlock> {
        let mut blocks = vec![
            ContextBlock::new(BlockKind::FocalSig, &self.class_signature),
            ContextBlock::new(BlockKind::FocalCtor, &self.constructors),
            ContextBlock::new(BlockKind::FocalBody, &self.body),
        ];
        if cfg.use_fields {
            push_nonempty(&mut blocks, BlockKind::Fields, &self.fields);
            push_nonempty(&mut blocks, BlockKind::GetterSetters, &self.getter_setters);
        }
        blocks
    }

    fn dependency_blocks(&self) -> Vec<ContextBlock> {
        let mut blocks = Vec::new();
        for (sig, ctors, invoked) in &self.dependencies {
            push_nonempty(&mut blocks, BlockKind::DepSig, sig);
            push_nonempty(&mut blocks, BlockKind::DepCtor, ctors);
            push_nonempty(&mut blocks, BlockKind::InvokedSigs, invoked);
        }
        blocks
    }
}

fn push_nonempty(blocks: &mut Vec<ContextBlock>, kind: BlockKind, text: &str) {
    if !text.is_empty() {
        blocks.push(ContextBlock::new(kind, text));
    }
}

/// True iff at least one in-index dependency was resolved.
pub fn has_dependency(deps: &[DependencyInfo]) -> bool {
    !deps.is_empty()
}

/// Tokens of `template` rendered around `blocks`.
pub fn token_count(template: &PromptTemplate, blocks: &[ContextBlock], counter: &dyn TokenCounter) -> usize {
    template.token_count(counter, &render_blocks(blocks))
}

pub fn build_adaptive_context(
    material: &FocalMaterial,
    cfg: &BudgetConfig,
    templates: &TemplateSet,
    counter: &dyn TokenCounter,
) -> Result<FocalContext, ContextError> {
    let limit = cfg.max_prompt_tokens;
    let base = &templates.base;
    let dep = &templates.dep;
    let count = |t: &PromptTemplate, blocks: &[ContextBlock]| token_count(t, blocks, counter);

    let mut context = material.required(cfg);
    let tokens = count(base, &context);
    // `>=` rather than `>`: a prompt exactly at the limit is not under it
    if tokens >= limit {
        return Err(ContextError::RequiredContextNotSatisfied { tokens, limit });
    }

    if !material.namespace.is_empty() {
        let mut next = context.clone();
        next.push(ContextBlock::new(BlockKind::Namespace, &material.namespace));
        if count(base, &next) < limit {
            context = next;
        } else {
            return finish(context, TemplateId::Base, ContextPath::NamespaceShortCircuit, cfg, templates, counter);
        }
    }

    let (template, path) = if material.has_dependency() {
        let mut next = context.clone();
        next.extend(material.dependency_blocks());
        if count(dep, &next) < limit {
            context = next;
            (TemplateId::Dep, ContextPath::DepIncluded)
        } else if count(dep, &context) < limit {
            (TemplateId::Dep, ContextPath::DepOmitted)
        } else {
            (TemplateId::Base, ContextPath::DepOmittedBaseFallback)
        }
    } else {
        let mut path = ContextPath::NoDepInvokedRejected;
        let mut next = context.clone();
        push_nonempty(&mut next, BlockKind::InvokedSigs, &material.invoked);
        if count(base, &next) < limit {
            context = next;
            path = ContextPath::NoDepInvokedOnly;
            let mut next = context.clone();
            push_nonempty(&mut next, BlockKind::AllFocalMethodSigs, &material.all_method_signatures);
            if count(base, &next) < limit {
                context = next;
                path = ContextPath::NoDepAll;
            }
        }
        (TemplateId::Base, path)
    };
    finish(context, template, path, cfg, templates, counter)
}

fn finish(
    blocks: Vec<ContextBlock>,
    template: TemplateId,
    path: ContextPath,
    cfg: &BudgetConfig,
    templates: &TemplateSet,
    counter: &dyn TokenCounter,
) -> Result<FocalContext, ContextError> {
    let rendered_tokens = token_count(templates.get(template), &blocks, counter);
    if rendered_tokens >= cfg.max_prompt_tokens {
        return Err(ContextError::RequiredContextNotSatisfied { tokens: rendered_tokens, limit: cfg.max_prompt_tokens });
    }
    Ok(FocalContext { blocks, template, rendered_tokens, path })
}
