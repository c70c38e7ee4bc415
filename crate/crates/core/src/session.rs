//! Wiring a run together from a loaded [`Config`].

use std::path::Path;
use std::process::Command;
use std::time::Duration;

use crate::config::{Config, GatewayConfig, ToolchainConfig};
use crate::gateway::{Gateway, RetryPolicy, Transport};
use crate::lang::JavaAdapter;
use crate::pipeline::RunReport;
use crate::prompt::{PromptError, TemplateSet};
use crate::validate::{ProcessConfig, ProcessToolchain, StubToolchain, Toolchain, ToolchainError};

pub fn retry_policy(cfg: &GatewayConfig) -> RetryPolicy {
    let base_delay = Duration::from_millis(cfg.backoff_ms);
    RetryPolicy { max_retries: cfg.max_retries, base_delay, jitter: if base_delay.is_zero() { 0.0 } else { 0.2 } }
}

pub fn build_gateway(cfg: &GatewayConfig, transport: Box<dyn Transport>) -> Gateway {
    Gateway::new(transport, retry_policy(cfg), cfg.price_per_1k).with_max_in_flight(cfg.max_in_flight)
}

pub fn load_templates(cfg: &Config) -> Result<TemplateSet, PromptError> {
    match &cfg.template_dir {
        Some(dir) => TemplateSet::load_dir(dir),
        None => Ok(TemplateSet::builtin()),
    }
}

fn shell_stdout(command: &str) -> Result<String, ToolchainError> {
    let out = Command::new("sh")
        .arg("-c")
        .arg(command)
        .output()
        .map_err(|e| ToolchainError::Unavailable(format!("classpath command: {e}")))?;
    if !out.status.success() {
        return Err(ToolchainError::Unavailable(format!(
            "classpath command exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

/// Toolchain for the configured kind. Without a `[toolchain]` table the
/// javac + JUnit launcher defaults are used; `work_dir` holds their output.
pub fn build_toolchain(cfg: Option<&ToolchainConfig>, work_dir: &Path) -> Result<Box<dyn Toolchain>, ToolchainError> {
    let adapter = Box::new(JavaAdapter::new());
    match cfg {
        Some(ToolchainConfig::Stub { rules }) => Ok(Box::new(StubToolchain::load(adapter, rules)?)),
        None => Ok(Box::new(ProcessToolchain::new(adapter, ProcessConfig::javac_junit("", work_dir.to_path_buf())))),
        Some(ToolchainConfig::Process { compile_command, run_command, classpath, classpath_command, timeout_secs }) => {
            let classpath = match classpath_command {
                Some(cmd) => shell_stdout(cmd)?,
                None => classpath.clone(),
            };
            let mut pc = ProcessConfig::javac_junit(classpath, work_dir.to_path_buf());
            if !compile_command.is_empty() {
                pc.compile_command = compile_command.clone();
            }
            if !run_command.is_empty() {
                pc.run_command = run_command.clone();
            }
            pc.timeout = Duration::from_secs(*timeout_secs);
            Ok(Box::new(ProcessToolchain::new(adapter, pc)))
        }
    }
}

/// Pretty JSON with a trailing newline, the on-disk form of a run report.
pub fn report_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("run report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_backoff_disables_jitter() {
        let p = retry_policy(&GatewayConfig { backoff_ms: 0, ..GatewayConfig::default() });
        assert_eq!(p.delay(2), Duration::ZERO);
        let p = retry_policy(&GatewayConfig::default());
        assert_eq!(p.max_retries, 3);
        assert_eq!(p.base_delay, Duration::from_secs(1));
    }

    #[test]
    fn classpath_command_output_is_used() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ToolchainConfig::Process {
            compile_command: vec![],
            run_command: vec![],
            classpath: "ignored".into(),
            classpath_command: Some("echo ' a.jar:b.jar '".into()),
            timeout_secs: 5,
        };
        assert!(build_toolchain(Some(&cfg), dir.path()).is_ok());
        let bad = ToolchainConfig::Process {
            compile_command: vec![],
            run_command: vec![],
            classpath: String::new(),
            classpath_command: Some("exit 3".into()),
            timeout_secs: 5,
        };
        assert!(matches!(build_toolchain(Some(&bad), dir.path()), Err(ToolchainError::Unavailable(_))));
    }
}
