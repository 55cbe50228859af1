use std::env;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use regex::Regex;

use super::process::{run_with_timeout, Semaphore};
use super::{categorize_at, Diagnostic, DiagnosticCategory, Severity, Tool, ValidateError, ValidationReport, Validator};
use crate::kb::code_only;
use crate::snippet::Language;

/// Overrides the compiler executable.
pub const JAVAC_ENV: &str = "SNIPPET_FORGE_JAVAC";

const DEFAULT_ARGS: [&str; 4] = ["-J-Duser.language=en", "-J-Duser.country=US", "-encoding", "UTF-8"];

/// Name of the compilation unit for `code`: the first public top-level type,
/// else the first top-level type, else `Snippet.java`.
pub fn java_file_name(code: &str) -> String {
    static TOKEN: OnceLock<Regex> = OnceLock::new();
    let token = TOKEN.get_or_init(|| Regex::new(r"[A-Za-z_$][\w$]*|[{};.@]").unwrap());
    let code = code_only(code);
    let mut depth = 0usize;
    let mut public = false;
    let mut first: Option<&str> = None;
    let mut prev = "";
    let mut tokens = token.find_iter(&code).map(|m| m.as_str());
    while let Some(t) = tokens.next() {
        match t {
            "{" => depth += 1,
            "}" => {
                depth = depth.saturating_sub(1);
                public = false;
            }
            ";" if depth == 0 => public = false,
            "public" if depth == 0 => public = true,
            "class" | "interface" | "enum" if depth == 0 && prev != "." => {
                if let Some(name) = tokens.next().filter(|n| n.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')) {
                    if public {
                        return format!("{name}.java");
                    }
                    first.get_or_insert(name);
                }
                public = false;
            }
            _ => {}
        }
        prev = t;
    }
    format!("{}.java", first.unwrap_or("Snippet"))
}

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:(\S[^:]*\.java):(\d+): )?(error|warning): (.*)$").unwrap())
}

/// Parse compiler stderr into diagnostics. `source` is the compiled text,
/// used for annotation context.
pub(crate) fn parse_javac(log: &str, source: &str) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    // 0: expect source echo, 1: expect caret, 2: detail lines
    let mut phase = 0;
    for line in log.lines() {
        if let Some(c) = header_re().captures(line) {
            let line_no = c.get(2).and_then(|m| m.as_str().parse().ok()).unwrap_or(0);
            let message = c[4].trim().to_string();
            let severity = if &c[3] == "error" { Severity::Error } else { Severity::Warning };
            out.push(Diagnostic {
                file: c.get(1).map(|m| PathBuf::from(m.as_str())).unwrap_or_default(),
                line: line_no,
                column: None,
                severity,
                category: categorize_at(&message, source, line_no),
                message,
                detail: String::new(),
            });
            phase = if line_no == 0 { 2 } else { 0 };
            continue;
        }
        let Some(d) = out.last_mut() else { continue };
        let trimmed = line.trim();
        if trimmed.is_empty() || line.starts_with("Note: ") || is_count_line(trimmed) {
            phase = 3;
            continue;
        }
        match phase {
            0 => phase = 1,
            1 if trimmed == "^" => {
                d.column = line.find('^').map(|i| i as u32 + 1);
                phase = 2;
            }
            1 | 2 => {
                if !d.detail.is_empty() {
                    d.detail.push('\n');
                }
                d.detail.push_str(trimmed);
                phase = 2;
            }
            _ => {}
        }
    }
    out
}

fn is_count_line(line: &str) -> bool {
    let mut words = line.split(' ');
    matches!(
        (words.next().and_then(|n| n.parse::<u32>().ok()), words.next(), words.next()),
        (Some(_), Some("error" | "errors" | "warning" | "warnings"), None)
    )
}

/// Platform Java compiler adapter.
#[derive(Debug, Clone)]
pub struct JavaValidator {
    pub javac: PathBuf,
    pub timeout: Duration,
    pub extra_args: Vec<String>,
    semaphore: Arc<Semaphore>,
}

impl Default for JavaValidator {
    fn default() -> Self {
        Self::new()
    }
}

impl JavaValidator {
    /// Compiler from `SNIPPET_FORGE_JAVAC`, else `javac` on the path.
    pub fn new() -> Self {
        let javac = env::var_os(JAVAC_ENV).unwrap_or_else(|| OsString::from("javac"));
        JavaValidator {
            javac: PathBuf::from(javac),
            timeout: super::DEFAULT_TIMEOUT,
            extra_args: DEFAULT_ARGS.iter().map(|s| s.to_string()).collect(),
            semaphore: Semaphore::new(4),
        }
    }

    pub fn with_javac(mut self, javac: impl Into<PathBuf>) -> Self {
        self.javac = javac.into();
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_semaphore(mut self, semaphore: Arc<Semaphore>) -> Self {
        self.semaphore = semaphore;
        self
    }

    /// Whether the compiler can be started.
    pub fn available(&self) -> bool {
        Command::new(&self.javac).arg("-version").output().is_ok_and(|o| o.status.success())
    }
}

fn normalize(log: &str, dir: &Path) -> String {
    let d = dir.display().to_string();
    log.replace(&format!("{d}/"), "").replace(&d, ".")
}

impl Validator for JavaValidator {
    fn language(&self) -> Language {
        Language::Java
    }

    fn validate(&self, code: &str, classpath: &[PathBuf]) -> Result<ValidationReport, ValidateError> {
        let dir = tempfile::Builder::new()
            .prefix("sf-javac-")
            .tempdir()
            .map_err(ValidateError::TempIo)?;
        let file = java_file_name(code);
        fs::write(dir.path().join(&file), code).map_err(ValidateError::TempIo)?;
        let mut cmd = Command::new(&self.javac);
        cmd.args(&self.extra_args);
        if !classpath.is_empty() {
            let joined = env::join_paths(classpath).map_err(|e| ValidateError::TempIo(std::io::Error::other(e)))?;
            cmd.arg("-cp").arg(joined);
        }
        cmd.arg(&file);
        let finished = {
            let _permit = self.semaphore.acquire();
            run_with_timeout(cmd, dir.path(), self.timeout)?
        };
        let mut raw_log = normalize(&(finished.stderr.clone() + &finished.stdout), dir.path());
        let mut diagnostics = parse_javac(&raw_log, code);
        if finished.timed_out() {
            let message = format!("compiler timed out after {} s", self.timeout.as_secs_f64());
            raw_log.push_str(&message);
            raw_log.push('\n');
            diagnostics.push(synthetic(&file, message, DiagnosticCategory::Other));
        } else if !finished.success() && !diagnostics.iter().any(|d| d.severity == Severity::Error) {
            let first = raw_log.lines().find(|l| !l.trim().is_empty()).unwrap_or("compiler failed without output");
            let message = first.trim().to_string();
            diagnostics.push(synthetic(&file, message.clone(), super::categorize_diagnostic(&message)));
        }
        Ok(ValidationReport {
            success: finished.success(),
            raw_log,
            diagnostics,
            duration: finished.elapsed,
            tool: Tool::JavaCompiler,
        })
    }
}

fn synthetic(file: &str, message: String, category: DiagnosticCategory) -> Diagnostic {
    Diagnostic {
        file: PathBuf::from(file),
        line: 0,
        column: None,
        severity: Severity::Error,
        category,
        message,
        detail: String::new(),
    }
}
