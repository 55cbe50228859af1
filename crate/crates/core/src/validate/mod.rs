//! Compilability checks.
//!
//! Java snippets go through the platform compiler; Python snippets through a
//! static checker and then the interpreter. Both produce a
//! [`ValidationReport`] whose diagnostics are categorized by the data-driven
//! rules in `rules/diagnostic-rules.json`.

mod java;
mod process;
mod python;
mod rules;

use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snippet::Language;

pub use java::{java_file_name, JavaValidator, JAVAC_ENV};
pub use process::{Permit, Semaphore};
pub use python::{read_manifest, verify_manifest, PythonValidator, PYTHON_ENV_VAR};
pub use rules::{categorize_diagnostic, RuleSet};

/// Default wall-clock limit for one tool invocation.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tool {
    JavaCompiler,
    PythonStaticCheck,
    PythonInterpreter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiagnosticCategory {
    SymbolNotFound,
    WrongAnnotation,
    MethodOverrideError,
    Syntax,
    Other,
}

impl DiagnosticCategory {
    pub const ALL: [DiagnosticCategory; 5] = [
        DiagnosticCategory::SymbolNotFound,
        DiagnosticCategory::WrongAnnotation,
        DiagnosticCategory::MethodOverrideError,
        DiagnosticCategory::Syntax,
        DiagnosticCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCategory::SymbolNotFound => "SymbolNotFound",
            DiagnosticCategory::WrongAnnotation => "WrongAnnotation",
            DiagnosticCategory::MethodOverrideError => "MethodOverrideError",
            DiagnosticCategory::Syntax => "Syntax",
            DiagnosticCategory::Other => "Other",
        }
    }
}

impl fmt::Display for DiagnosticCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: PathBuf,
    /// 1-based; 0 when the tool did not say.
    pub line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<u32>,
    pub severity: Severity,
    pub message: String,
    /// Extra lines the tool printed for this diagnostic (symbol, location).
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    pub category: DiagnosticCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub success: bool,
    /// Tool output with temporary paths removed.
    pub raw_log: String,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(with = "millis")]
    pub duration: Duration,
    pub tool: Tool,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    /// The text handed to the model as the error log.
    pub fn error_log(&self) -> &str {
        self.raw_log.trim_end()
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("tool {0} is not available")]
    ToolMissing(String),
    #[error("temporary file i/o: {0}")]
    TempIo(#[source] std::io::Error),
    #[error("python environment {0} has no interpreter")]
    EnvMissing(PathBuf),
    #[error("environment lacks required distributions: {}", .0.join(", "))]
    ManifestUnsatisfied(Vec<String>),
    #[error("diagnostic rules: {0}")]
    Rules(String),
}

/// A compilability check for one language.
pub trait Validator: Send + Sync {
    fn language(&self) -> Language;

    /// Check `code`. `classpath` lists archives the Java compiler should see
    /// and is ignored by Python validators. Broken input code is not an
    /// error: it yields a report with `success == false`.
    fn validate(&self, code: &str, classpath: &[PathBuf]) -> Result<ValidationReport, ValidateError>;
}

/// Nearest non-blank line strictly before 1-based `line`.
pub(crate) fn preceding_line(source: &str, line: u32) -> Option<&str> {
    let idx = (line as usize).checked_sub(1)?;
    source.lines().take(idx).filter(|l| !l.trim().is_empty()).last()
}

/// Source line `line` (1-based) when it exists.
pub(crate) fn source_line(source: &str, line: u32) -> Option<&str> {
    source.lines().nth((line as usize).checked_sub(1)?)
}

/// Category for a diagnostic, looking at the offending line and the one
/// before it for annotation context.
pub(crate) fn categorize_at(message: &str, source: &str, line: u32) -> DiagnosticCategory {
    let rules = RuleSet::builtin();
    let here = source_line(source, line).filter(|l| l.trim_start().starts_with('@'));
    rules.categorize(message, here.or_else(|| preceding_line(source, line)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_uses_millis() {
        let r = ValidationReport {
            success: false,
            raw_log: "x".into(),
            diagnostics: vec![],
            duration: Duration::from_millis(1500),
            tool: Tool::JavaCompiler,
        };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["duration"], 1500);
        let back: ValidationReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn annotation_context_lookup() {
        let src = "class A {}\n\n@Deprecated\n}\n";
        assert_eq!(preceding_line(src, 4), Some("@Deprecated"));
        assert_eq!(preceding_line(src, 1), None);
        assert_eq!(
            categorize_at("class, interface, or enum expected", src, 4),
            DiagnosticCategory::WrongAnnotation
        );
        assert_eq!(
            categorize_at("class, interface, or enum expected", src, 2),
            DiagnosticCategory::Syntax
        );
    }
}
