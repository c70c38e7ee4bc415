//! Prompt templates and rendering.
//!
//! Templates are plain text files with a `[system]` and a `[user]` section.
//! Leading `#` lines are metadata. The user section may contain the slots
//! `{{context}}`, `{{error}}` and `{{previous_test}}`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{BlockKind, FocalContext};
use crate::gateway::{ChatMessage, Role};
use crate::tokens::TokenCounter;
use crate::validate::Diagnostic;

const SLOT_CONTEXT: &str = "{{context}}";
const SLOT_ERROR: &str = "{{error}}";
const SLOT_PREVIOUS: &str = "{{previous_test}}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    Base,
    Dep,
    Repair,
}

impl TemplateId {
    fn file_name(self) -> &'static str {
        match self {
            TemplateId::Base => "base.txt",
            TemplateId::Dep => "dep.txt",
            TemplateId::Repair => "repair.txt",
        }
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template {template:?} cannot render this context: {reason}")]
    SlotMismatch { template: TemplateId, reason: String },
    #[error("prompt needs {tokens} tokens even with the error message removed; limit is {limit}")]
    PromptOverflow { tokens: usize, limit: usize },
    #[error("malformed template {path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("cannot read template {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub system_text: String,
    pub user_skeleton: String,
    fixed_cost: Mutex<HashMap<String, usize>>,
}

impl Clone for PromptTemplate {
    fn clone(&self) -> Self {
        Self::new(self.id, self.system_text.clone(), self.user_skeleton.clone())
    }
}

impl PromptTemplate {
    pub fn new(id: TemplateId, system_text: impl Into<String>, user_skeleton: impl Into<String>) -> Self {
        Self {
            id,
            system_text: system_text.into(),
            user_skeleton: user_skeleton.into(),
            fixed_cost: Mutex::new(HashMap::new()),
        }
    }

    pub fn parse(id: TemplateId, text: &str, origin: &str) -> Result<Self, PromptError> {
        let mut system: Option<Vec<&str>> = None;
        let mut user: Option<Vec<&str>> = None;
        let mut current: Option<&mut Vec<&str>> = None;
        for line in text.lines() {
            match line.trim_end() {
                "[system]" => {
                    system = Some(Vec::new());
                    current = system.as_mut();
                }
                "[user]" => {
                    user = Some(Vec::new());
                    current = user.as_mut();
                }
                _ => match current.as_deref_mut() {
                    Some(section) => section.push(line),
                    None if line.starts_with('#') || line.trim().is_empty() => {}
                    None => {
                        return Err(PromptError::Malformed {
                            path: origin.into(),
                            reason: "text before the first section".into(),
                        })
                    }
                },
            }
        }
        let user = user.ok_or_else(|| PromptError::Malformed { path: origin.into(), reason: "no [user] section".into() })?;
        let join = |lines: Vec<&str>| lines.join("\n").trim_end_matches('\n').to_string();
        let template = Self::new(id, system.map(join).unwrap_or_default(), join(user));
        if !template.user_skeleton.contains(SLOT_CONTEXT) {
            return Err(PromptError::Malformed { path: origin.into(), reason: "missing {{context}} slot".into() });
        }
        if id == TemplateId::Repair
            && !(template.user_skeleton.contains(SLOT_ERROR) && template.user_skeleton.contains(SLOT_PREVIOUS))
        {
            return Err(PromptError::Malformed {
                path: origin.into(),
                reason: "repair template needs {{error}} and {{previous_test}} slots".into(),
            });
        }
        Ok(template)
    }

    pub fn messages(&self, context: &str, error: &str, previous_test: &str) -> Vec<ChatMessage> {
        let user = self
            .user_skeleton
            .replace(SLOT_CONTEXT, context)
            .replace(SLOT_ERROR, error)
            .replace(SLOT_PREVIOUS, previous_test);
        let mut out = Vec::with_capacity(2);
        if !self.system_text.is_empty() {
            out.push(ChatMessage::new(Role::System, self.system_text.clone()));
        }
        out.push(ChatMessage::new(Role::User, user));
        out
    }

    /// Tokens of the template with every slot empty, cached per counter.
    pub fn fixed_token_cost(&self, counter: &dyn TokenCounter) -> usize {
        let mut cache = self.fixed_cost.lock().unwrap_or_else(|e| e.into_inner());
        *cache
            .entry(counter.name().to_string())
            .or_insert_with(|| counter.count(&prompt_text(&self.messages("", "", ""))))
    }

    /// Token count of this template rendered around `context` text.
    pub fn token_count(&self, counter: &dyn TokenCounter, context: &str) -> usize {
        counter.count(&prompt_text(&self.messages(context, "", "")))
    }
}

/// The text a counter sees for a message list: contents joined by newlines.
pub fn prompt_text(messages: &[ChatMessage]) -> String {
    messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub base: PromptTemplate,
    pub dep: PromptTemplate,
    pub repair: PromptTemplate,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let parse = |id, text| PromptTemplate::parse(id, text, "builtin").expect("builtin templates are well formed");
        Self {
            base: parse(TemplateId::Base, include_str!("../templates/base.txt")),
            dep: parse(TemplateId::Dep, include_str!("../templates/dep.txt")),
            repair: parse(TemplateId::Repair, include_str!("../templates/repair.txt")),
        }
    }

    /// Load `base.txt`, `dep.txt` and `repair.txt` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let load = |id: TemplateId| -> Result<PromptTemplate, PromptError> {
            let path = dir.join(id.file_name());
            let text = std::fs::read_to_string(&path)
                .map_err(|source| PromptError::Io { path: path.display().to_string(), source })?;
            PromptTemplate::parse(id, &text, &path.display().to_string())
        };
        Ok(Self { base: load(TemplateId::Base)?, dep: load(TemplateId::Dep)?, repair: load(TemplateId::Repair)? })
    }

    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        match id {
            TemplateId::Base => &self.base,
            TemplateId::Dep => &self.dep,
            TemplateId::Repair => &self.repair,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub template: TemplateId,
    pub messages: Vec<ChatMessage>,
    pub token_estimate: usize,
}

/// Render a generation prompt for `ctx`.
pub fn render(
    template: &PromptTemplate,
    ctx: &FocalContext,
    counter: &dyn TokenCounter,
) -> Result<RenderedPrompt, PromptError> {
    match template.id {
        TemplateId::Repair => {
            return Err(PromptError::SlotMismatch {
                template: template.id,
                reason: "repair template needs an error and a previous test".into(),
            })
        }
        TemplateId::Base if ctx.blocks.iter().any(|b| matches!(b.kind, BlockKind::DepSig | BlockKind::DepCtor)) => {
            return Err(PromptError::SlotMismatch {
                template: template.id,
                reason: "context carries dependency blocks".into(),
            })
        }
        _ => {}
    }
    let messages = template.messages(&ctx.render_blocks(), "", "");
    let token_estimate = counter.count(&prompt_text(&messages));
    Ok(RenderedPrompt { template: template.id, messages, token_estimate })
}

/// Render a repair prompt, truncating the error message from the tail until
/// the prompt is strictly under `max_prompt_tokens`.
pub fn render_repair(
    template: &PromptTemplate,
    error: &Diagnostic,
    previous_test: &str,
    ctx: &FocalContext,
    max_prompt_tokens: usize,
    counter: &dyn TokenCounter,
) -> Result<RenderedPrompt, PromptError> {
    if template.id != TemplateId::Repair {
        return Err(PromptError::SlotMismatch { template: template.id, reason: "not a repair template".into() });
    }
    let context = ctx.render_blocks();
    let kind = error.kind.to_string();
    let build = |message: &str| {
        let err = if message.is_empty() { kind.clone() } else { format!("{kind}\n{message}") };
        let messages = template.messages(&context, &err, previous_test);
        let tokens = counter.count(&prompt_text(&messages));
        (messages, tokens)
    };

    let (messages, tokens) = build(&error.message);
    if tokens < max_prompt_tokens {
        return Ok(RenderedPrompt { template: TemplateId::Repair, messages, token_estimate: tokens });
    }
    let (messages, tokens) = build("");
    if tokens >= max_prompt_tokens {
        return Err(PromptError::PromptOverflow { tokens, limit: max_prompt_tokens });
    }

    // largest fitting head of the message, by character boundary
    let bounds: Vec<usize> = error.message.char_indices().map(|(i, _)| i).collect();
    let (mut lo, mut hi) = (0usize, bounds.len());
    let mut best = (messages, tokens);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let candidate = build(&error.message[..bounds[mid]]);
        if candidate.1 < max_prompt_tokens {
            lo = mid;
            best = candidate;
        } else {
            hi = mid;
        }
    }
    Ok(RenderedPrompt { template: TemplateId::Repair, messages: best.0, token_estimate: best.1 })
}
