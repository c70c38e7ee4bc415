//! Run configuration, loaded from a TOML file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::DEFAULT_MAX_PROMPT_TOKENS;
use crate::gateway::{DEFAULT_PRICE_PER_1K, DEFAULT_TEMPERATURE};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub attempts_per_method: u32,
    pub max_rounds: u32,
    pub max_prompt_tokens: usize,
    pub temperature: f64,
    /// Stop a method early once this many correct tests exist.
    pub min_passing_to_stop: Option<u32>,
    pub use_fields: bool,
    /// Token counter name: `cl100k_base` or `heuristic`.
    pub counter: String,
    /// Parallel method workers; 0 picks one per core.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            attempts_per_method: 6,
            max_rounds: 6,
            max_prompt_tokens: DEFAULT_MAX_PROMPT_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
            min_passing_to_stop: None,
            use_fields: false,
            counter: "cl100k_base".into(),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub model: String,
    pub base_url: String,
    pub price_per_1k: f64,
    pub max_in_flight: usize,
    pub request_timeout_secs: u64,
    pub max_retries: u32,
    /// Base backoff delay in milliseconds; doubles per retry.
    pub backoff_ms: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            model: "gpt-3.5-turbo".into(),
            base_url: "https://api.openai.com/v1".into(),
            price_per_1k: DEFAULT_PRICE_PER_1K,
            max_in_flight: 4,
            request_timeout_secs: 120,
            max_retries: 3,
            backoff_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ToolchainConfig {
    /// Rule-table toolchain; `rules` is a TOML file of source-pattern rules.
    Stub { rules: PathBuf },
    Process {
        #[serde(default)]
        compile_command: Vec<String>,
        #[serde(default)]
        run_command: Vec<String>,
        #[serde(default)]
        classpath: String,
        /// Shell command whose stdout is the classpath; overrides `classpath`.
        #[serde(default)]
        classpath_command: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_timeout() -> u64 {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub run: RunConfig,
    pub gateway: GatewayConfig,
    pub toolchain: Option<ToolchainConfig>,
    pub template_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self { run: RunConfig::default(), gateway: GatewayConfig::default(), toolchain: None, template_dir: None }
    }
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| ConfigError::Invalid { path: origin.into(), message: e.to_string() })?;
        cfg.check(origin)?;
        Ok(cfg)
    }

    /// Load a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: origin.clone(), source })?;
        let mut cfg = Self::parse(&text, &origin)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(dir) = cfg.template_dir.as_mut() {
            resolve(dir);
        }
        if let Some(ToolchainConfig::Stub { rules }) = cfg.toolchain.as_mut() {
            resolve(rules);
        }
        Ok(cfg)
    }

    fn check(&self, origin: &str) -> Result<(), ConfigError> {
        let bad = |message: &str| Err(ConfigError::Invalid { path: origin.into(), message: message.into() });
        if self.run.attempts_per_method == 0 {
            return bad("run.attempts_per_method must be at least 1");
        }
        if self.run.max_rounds == 0 {
            return bad("run.max_rounds must be at least 1");
        }
        if self.run.max_prompt_tokens == 0 {
            return bad("run.max_prompt_tokens must be positive");
        }
        if !(0.0..=2.0).contains(&self.run.temperature) {
            return bad("run.temperature must be within [0, 2]");
        }
        if crate::tokens::counter_by_name(&self.run.counter).is_none() {
            return bad("run.counter must be `cl100k_base` or `heuristic`");
        }
        Ok(())
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_secs(self.gateway.request_timeout_secs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_protocol() {
        let c = Config::default();
        assert_eq!(c.run.attempts_per_method, 6);
        assert_eq!(c.run.max_rounds, 6);
        assert_eq!(c.run.max_prompt_tokens, 2700);
        assert_eq!(c.run.temperature, 0.5);
        assert!(!c.run.use_fields);
        assert_eq!(c.gateway.price_per_1k, 0.002);
        assert_eq!(c.gateway.max_retries, 3);
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let c = Config::parse("[run]\nattempts_per_method = 3\ncounter = \"heuristic\"\n[toolchain]\nkind = \"stub\"\nrules = \"r.toml\"\n", "t")
            .unwrap();
        assert_eq!(c.run.attempts_per_method, 3);
        assert_eq!(c.run.max_rounds, 6);
        assert_eq!(c.toolchain, Some(ToolchainConfig::Stub { rules: "r.toml".into() }));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(Config::parse("[run]\nmax_rounds = 0\n", "t").is_err());
        assert!(Config::parse("[run]\ntemperature = 3.0\n", "t").is_err());
        assert!(Config::parse("[run]\nbogus = 1\n", "t").is_err());
        assert!(Config::parse("[run]\ncounter = \"words\"\n", "t").is_err());
    }

    #[test]
    fn relative_paths_resolve_next_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "template_dir = \"tpl\"\n[toolchain]\nkind = \"stub\"\nrules = \"rules.toml\"\n").unwrap();
        let c = Config::load(&p).unwrap();
        assert_eq!(c.template_dir.unwrap(), dir.path().join("tpl"));
        assert_eq!(c.toolchain, Some(ToolchainConfig::Stub { rules: dir.path().join("rules.toml") }));
    }
}
