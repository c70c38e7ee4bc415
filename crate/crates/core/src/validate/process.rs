//! Toolchain that shells out to a compiler and a test launcher.
//!
//! Commands are argv templates. Placeholders: `{out}` (candidate work dir),
//! `{classes}` (compiled output dir), `{classpath}`, `{source}` (written test
//! file) and `{class}` (qualified test class name).

use std::fs::File;
use std::io;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::LazyLock;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Diagnostic, DiagnosticKind, Location, StageResult, TestUnit, Toolchain, ToolchainError};
use crate::lang::LanguageAdapter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub compile_command: Vec<String>,
    pub run_command: Vec<String>,
    pub classpath: String,
    pub out_dir: PathBuf,
    pub timeout: Duration,
}

impl ProcessConfig {
    /// javac plus the JUnit console launcher, everything else on `classpath`.
    pub fn javac_junit(classpath: impl Into<String>, out_dir: PathBuf) -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        Self {
            compile_command: s(&["javac", "-d", "{classes}", "-cp", "{classpath}", "{source}"]),
            run_command: s(&[
                "java",
                "-jar",
                "junit-platform-console-standalone.jar",
                "execute",
                "-cp",
                "{classes}:{classpath}",
                "--select-class",
                "{class}",
                "--disable-banner",
            ]),
            classpath: classpath.into(),
            out_dir,
            timeout: Duration::from_secs(30),
        }
    }
}

pub struct ProcessToolchain {
    adapter: Box<dyn LanguageAdapter>,
    config: ProcessConfig,
}

static JAVAC_ERROR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^(.+?):(\d+): error: (.*)$").unwrap());

enum Finished {
    Exited { success: bool, output: String },
    TimedOut,
}

impl ProcessToolchain {
    pub fn new(adapter: Box<dyn LanguageAdapter>, config: ProcessConfig) -> Self {
        Self { adapter, config }
    }

    fn work_dir(&self, unit: &TestUnit) -> PathBuf {
        self.config.out_dir.join(&unit.class_name)
    }

    fn source_path(&self, unit: &TestUnit) -> PathBuf {
        let mut p = self.work_dir(unit).join("src");
        for part in unit.package.split('.').filter(|s| !s.is_empty()) {
            p.push(part);
        }
        p.join(format!("{}.java", unit.class_name))
    }

    fn expand(&self, template: &[String], unit: &TestUnit) -> Vec<String> {
        let out = self.work_dir(unit);
        template
            .iter()
            .map(|arg| {
                arg.replace("{out}", &out.display().to_string())
                    .replace("{classes}", &out.join("classes").display().to_string())
                    .replace("{classpath}", &self.config.classpath)
                    .replace("{source}", &self.source_path(unit).display().to_string())
                    .replace("{class}", &unit.qualified_name())
            })
            .collect()
    }

    fn execute(&self, argv: &[String], unit: &TestUnit, stage: &str) -> Result<Finished, ToolchainError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| ToolchainError::Unavailable(format!("empty {stage} command")))?;
        let dir = self.work_dir(unit);
        let log_path = dir.join(format!("{stage}.log"));
        let io_err = |e: io::Error| ToolchainError::Io(format!("{}: {e}", log_path.display()));
        let log = File::create(&log_path).map_err(io_err)?;
        let mut child = Command::new(program)
            .args(args)
            .current_dir(&dir)
            .stdin(Stdio::null())
            .stdout(log.try_clone().map_err(io_err)?)
            .stderr(log)
            .spawn()
            .map_err(|e| match e.kind() {
                io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied => {
                    ToolchainError::Unavailable(format!("cannot start `{program}`: {e}"))
                }
                _ => ToolchainError::Io(format!("cannot start `{program}`: {e}")),
            })?;
        let deadline = Instant::now() + self.config.timeout;
        let status = loop {
            if let Some(status) = child.try_wait().map_err(|e| ToolchainError::Io(e.to_string()))? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(Finished::TimedOut);
            }
            std::thread::sleep(Duration::from_millis(10));
        };
        let output = String::from_utf8_lossy(&std::fs::read(&log_path).map_err(io_err)?).into_owned();
        Ok(Finished::Exited { success: status.success(), output })
    }
}

fn compiler_diagnostics(output: &str) -> Vec<Diagnostic> {
    let lines: Vec<&str> = output.lines().collect();
    let mut diags = Vec::new();
    for caps in JAVAC_ERROR.captures_iter(output) {
        let whole = caps.get(0).unwrap();
        // keep the javac context lines (symbol/location) that follow the header
        let start_line = output[..whole.start()].matches('\n').count();
        let mut message = caps[3].to_string();
        for l in lines.iter().skip(start_line + 1) {
            if JAVAC_ERROR.is_match(l) || l.trim_end().ends_with("error") || l.trim_end().ends_with("errors") {
                break;
            }
            message.push('\n');
            message.push_str(l);
        }
        let mut d = Diagnostic::new(DiagnosticKind::CompileError, message);
        d.location = Some(Location { file: caps[1].to_string(), line: caps[2].parse().unwrap_or(0) });
        diags.push(d);
    }
    if diags.is_empty() {
        diags.push(Diagnostic::new(DiagnosticKind::CompileError, output.trim()));
    }
    diags
}

impl Toolchain for ProcessToolchain {
    fn parse(&self, source: &str) -> Result<StageResult, ToolchainError> {
        Ok(self
            .adapter
            .check_syntax(source)
            .map_err(|issue| vec![Diagnostic::new(DiagnosticKind::SyntaxError, issue.message)]))
    }

    fn compile(&self, unit: &TestUnit) -> Result<StageResult, ToolchainError> {
        let source = self.source_path(unit);
        let io_err = |e: io::Error| ToolchainError::Io(format!("{}: {e}", source.display()));
        std::fs::create_dir_all(source.parent().expect("source has a parent")).map_err(io_err)?;
        std::fs::create_dir_all(self.work_dir(unit).join("classes")).map_err(io_err)?;
        std::fs::write(&source, &unit.source).map_err(io_err)?;
        let argv = self.expand(&self.config.compile_command, unit);
        Ok(match self.execute(&argv, unit, "compile")? {
            Finished::Exited { success: true, .. } => Ok(()),
            Finished::Exited { output, .. } => Err(compiler_diagnostics(&output)),
            Finished::TimedOut => Err(vec![Diagnostic::new(
                DiagnosticKind::CompileError,
                format!("compilation timed out after {}s", self.config.timeout.as_secs()),
            )]),
        })
    }

    fn run(&self, unit: &TestUnit) -> Result<StageResult, ToolchainError> {
        let argv = self.expand(&self.config.run_command, unit);
        Ok(match self.execute(&argv, unit, "run")? {
            Finished::Exited { success: true, .. } => Ok(()),
            Finished::Exited { output, .. } => Err(vec![Diagnostic::new(DiagnosticKind::RuntimeError, output.trim())]),
            Finished::TimedOut => Err(vec![Diagnostic::new(
                DiagnosticKind::RuntimeError,
                format!("test execution timed out after {}s", self.config.timeout.as_secs()),
            )]),
        })
    }
}
