use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use regex::Regex;

use super::process::{run_with_timeout, Finished, Semaphore};
use super::{categorize_at, Diagnostic, DiagnosticCategory, Severity, Tool, ValidateError, ValidationReport, Validator};
use crate::snippet::Language;

/// Overrides the default environment directory.
pub const PYTHON_ENV_VAR: &str = "SNIPPET_FORGE_PYTHON_ENV";

const FILE: &str = "snippet.py";

/// Static-checker messages that do not make code uncompilable.
const WARNINGS: [&str; 12] = [
    "imported but unused",
    "unable to detect undefined names",
    "may be undefined, or defined from star imports",
    "is missing placeholders",
    "is assigned to but never used",
    "redefinition of unused",
    "shadowed by loop variable",
    "has unused",
    "dictionary key",
    "assertion is always true",
    "use ==/!= to compare",
    "is an invalid escape sequence",
];

fn checker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^snippet\.py:(\d+):(?:(\d+):)? (.*)$").unwrap())
}

fn trace_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"^\s*File "(?:[^"]*/)?snippet\.py", line (\d+)"#).unwrap())
}

/// Parse static-checker output (stdout and stderr concatenated).
pub(crate) fn parse_checker(log: &str, source: &str) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    for line in log.lines() {
        if let Some(c) = checker_re().captures(line) {
            let line_no = c[1].parse().unwrap_or(0);
            let message = c[3].trim().to_string();
            let severity = if WARNINGS.iter().any(|w| message.contains(w)) {
                Severity::Warning
            } else {
                Severity::Error
            };
            out.push(Diagnostic {
                file: PathBuf::from(FILE),
                line: line_no,
                column: c.get(2).and_then(|m| m.as_str().parse().ok()),
                severity,
                category: categorize_at(&message, source, line_no),
                message,
                detail: String::new(),
            });
        } else if let Some(d) = out.last_mut().filter(|_| !line.trim().is_empty()) {
            if !d.detail.is_empty() {
                d.detail.push('\n');
            }
            d.detail.push_str(line);
        }
    }
    out
}

/// Turn a failed interpreter run into one diagnostic.
pub(crate) fn parse_traceback(stderr: &str, source: &str) -> Diagnostic {
    let line = stderr
        .lines()
        .filter_map(|l| trace_re().captures(l))
        .last()
        .and_then(|c| c[1].parse().ok())
        .unwrap_or(0);
    let message = stderr
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("interpreter exited with an error")
        .trim()
        .to_string();
    Diagnostic {
        file: PathBuf::from(FILE),
        line,
        column: None,
        severity: Severity::Error,
        category: categorize_at(&message, source, line),
        message,
        detail: String::new(),
    }
}

/// Static checker plus interpreter run inside a virtual environment.
#[derive(Debug, Clone)]
pub struct PythonValidator {
    pub env: PathBuf,
    pub timeout: Duration,
    semaphore: Arc<Semaphore>,
}

impl PythonValidator {
    pub fn new(env: impl Into<PathBuf>) -> Self {
        PythonValidator {
            env: env.into(),
            timeout: super::DEFAULT_TIMEOUT,
            semaphore: Semaphore::new(4),
        }
    }

    /// Environment named by `SNIPPET_FORGE_PYTHON_ENV`, if set.
    pub fn from_env() -> Option<Self> {
        env::var_os(PYTHON_ENV_VAR).map(Self::new)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_semaphore(mut self, semaphore: Arc<Semaphore>) -> Self {
        self.semaphore = semaphore;
        self
    }

    pub fn python(&self) -> PathBuf {
        let unix = self.env.join("bin").join("python");
        let windows = self.env.join("Scripts").join("python.exe");
        if !unix.exists() && windows.exists() {
            windows
        } else {
            unix
        }
    }

    fn interpreter(&self) -> Result<PathBuf, ValidateError> {
        let py = self.python();
        if py.exists() {
            Ok(py)
        } else {
            Err(ValidateError::EnvMissing(self.env.clone()))
        }
    }

    fn run(&self, py: &Path, args: &[&str], dir: &Path) -> Result<Finished, ValidateError> {
        let mut cmd = Command::new(py);
        cmd.args(args)
            .env("PYTHONDONTWRITEBYTECODE", "1")
            .env("PYTHONIOENCODING", "utf-8");
        let _permit = self.semaphore.acquire();
        run_with_timeout(cmd, dir, self.timeout)
    }
}

fn normalize(log: &str, dir: &Path) -> String {
    let d = dir.display().to_string();
    log.replace(&format!("{d}/"), "").replace(&d, ".")
}

fn timeout_diag(stage: &str, timeout: Duration) -> Diagnostic {
    Diagnostic {
        file: PathBuf::from(FILE),
        line: 0,
        column: None,
        severity: Severity::Error,
        category: DiagnosticCategory::Other,
        message: format!("{stage} timed out after {} s", timeout.as_secs_f64()),
        detail: String::new(),
    }
}

impl Validator for PythonValidator {
    fn language(&self) -> Language {
        Language::Python
    }

    fn validate(&self, code: &str, _classpath: &[PathBuf]) -> Result<ValidationReport, ValidateError> {
        let py = self.interpreter()?;
        let dir = tempfile::Builder::new()
            .prefix("sf-python-")
            .tempdir()
            .map_err(ValidateError::TempIo)?;
        fs::write(dir.path().join(FILE), code).map_err(ValidateError::TempIo)?;

        let check = self.run(&py, &["-m", "pyflakes", FILE], dir.path())?;
        let mut log = normalize(&(check.stdout.clone() + &check.stderr), dir.path());
        if log.contains("No module named pyflakes") {
            return Err(ValidateError::ToolMissing("pyflakes".into()));
        }
        let mut diagnostics = parse_checker(&log, code);
        let mut duration = check.elapsed;
        if check.timed_out() {
            diagnostics.push(timeout_diag("static check", self.timeout));
        } else if check.status.and_then(|s| s.code()).is_some_and(|c| c > 1) && diagnostics.is_empty() {
            // the checker itself broke
            return Err(ValidateError::ToolMissing(format!("pyflakes: {}", log.trim())));
        }
        if diagnostics.iter().any(|d| d.severity == Severity::Error) {
            return Ok(ValidationReport {
                success: false,
                raw_log: log,
                diagnostics,
                duration,
                tool: Tool::PythonStaticCheck,
            });
        }

        let exec = self.run(&py, &[FILE], dir.path())?;
        duration += exec.elapsed;
        let stderr = normalize(&exec.stderr, dir.path());
        log.push_str(&stderr);
        if exec.timed_out() {
            let d = timeout_diag("interpreter", self.timeout);
            log.push_str(&d.message);
            log.push('\n');
            diagnostics.push(d);
        } else if !exec.success() {
            diagnostics.push(parse_traceback(&stderr, code));
        }
        Ok(ValidationReport {
            success: exec.success(),
            raw_log: log,
            diagnostics,
            duration,
            tool: Tool::PythonInterpreter,
        })
    }
}

/// Distribution names listed in a manifest file, one per line. Version
/// specifiers and `#` comments are ignored.
pub fn read_manifest(path: &Path) -> Result<Vec<String>, ValidateError> {
    let text = fs::read_to_string(path).map_err(ValidateError::TempIo)?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| "<>=!~;[ ".contains(c))
                .next()
                .unwrap_or(l)
                .to_string()
        })
        .collect())
}

const PROBE: &str = "import sys\nfrom importlib import metadata\nfor n in sys.argv[1:]:\n    try:\n        metadata.version(n)\n    except metadata.PackageNotFoundError:\n        print(n)\n";

/// Check that every distribution is installed in the environment. Nothing
/// is ever installed.
pub fn verify_manifest(validator: &PythonValidator, distributions: &[String]) -> Result<(), ValidateError> {
    let py = validator.interpreter()?;
    let out = Command::new(&py)
        .arg("-c")
        .arg(PROBE)
        .args(distributions)
        .output()
        .map_err(|_| ValidateError::ToolMissing(py.display().to_string()))?;
    let missing: Vec<String> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(str::to_string)
        .filter(|l| !l.is_empty())
        .collect();
    if !out.status.success() {
        return Err(ValidateError::ToolMissing(format!(
            "{}: {}",
            py.display(),
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ValidateError::ManifestUnsatisfied(missing))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use DiagnosticCategory::*;

    #[test]
    fn checker_output() {
        let log = "snippet.py:1:1: 'os' imported but unused\nsnippet.py:4:7: undefined name 'np'\nsnippet.py:2:7: invalid syntax\nprint(1 +\n      ^\n";
        let d = parse_checker(log, "import os\n");
        assert_eq!(d.len(), 3);
        assert_eq!(d[0].severity, Severity::Warning);
        assert_eq!((d[1].severity, d[1].category, d[1].line, d[1].column), (Severity::Error, SymbolNotFound, 4, Some(7)));
        assert_eq!(d[2].category, Syntax);
        assert_eq!(d[2].detail, "print(1 +\n      ^");
    }

    #[test]
    fn traceback() {
        let err = "Traceback (most recent call last):\n  File \"snippet.py\", line 3, in <module>\n    import bs4\nModuleNotFoundError: No module named 'bs4'\n";
        let d = parse_traceback(err, "");
        assert_eq!(d.line, 3);
        assert_eq!(d.message, "ModuleNotFoundError: No module named 'bs4'");
        assert_eq!(d.category, SymbolNotFound);
    }

    #[test]
    fn manifest_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("requirements.txt");
        fs::write(&p, "# libs\nnumpy>=1.20\nrequests[socks] ; python_version>'3'\n\npyflakes\n").unwrap();
        assert_eq!(read_manifest(&p).unwrap(), ["numpy", "requests", "pyflakes"]);
    }

    /// A throwaway environment whose interpreter is the system python3.
    fn fake_env() -> Option<(tempfile::TempDir, PythonValidator)> {
        let python3 = which("python3")?;
        let ok = Command::new(&python3).args(["-c", "import pyflakes"]).output().ok()?.status.success();
        if !ok {
            eprintln!("pyflakes not available; skipping");
            return None;
        }
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("bin")).unwrap();
        #[cfg(unix)]
        std::os::unix::fs::symlink(&python3, dir.path().join("bin").join("python")).unwrap();
        let v = PythonValidator::new(dir.path());
        Some((dir, v))
    }

    fn which(name: &str) -> Option<PathBuf> {
        env::split_paths(&env::var_os("PATH")?)
            .map(|p| p.join(name))
            .find(|p| p.is_file())
    }

    #[test]
    fn three_paths() {
        let Some((_dir, v)) = fake_env() else { return };
        let ok = v.validate("print(1)\n", &[]).unwrap();
        assert!(ok.success, "{}", ok.raw_log);
        assert_eq!(ok.tool, Tool::PythonInterpreter);

        let undefined = v.validate("print(undefined_thing)\n", &[]).unwrap();
        assert!(!undefined.success);
        assert_eq!(undefined.tool, Tool::PythonStaticCheck);
        assert_eq!(undefined.diagnostics[0].category, SymbolNotFound);

        let runtime = v.validate("import nonexistent_mod_zz\nprint(nonexistent_mod_zz)\n", &[]).unwrap();
        assert!(!runtime.success);
        assert_eq!(runtime.tool, Tool::PythonInterpreter);
        let last = runtime.diagnostics.last().unwrap();
        assert_eq!((last.line, last.category), (1, SymbolNotFound));
        assert!(!runtime.raw_log.contains("sf-python-"));

        let warn_only = v.validate("import os\nprint(1)\n", &[]).unwrap();
        assert!(warn_only.success);
        assert_eq!(warn_only.diagnostics[0].severity, Severity::Warning);

        let syntax = v.validate("print(1 +\n", &[]).unwrap();
        assert!(!syntax.success);
        assert_eq!(syntax.diagnostics[0].category, Syntax);
    }

    #[test]
    fn interpreter_timeout() {
        let Some((_dir, v)) = fake_env() else { return };
        let v = v.with_timeout(Duration::from_millis(1500));
        let r = v.validate("import time\ntime.sleep(30)\n", &[]).unwrap();
        assert!(!r.success);
        assert!(r.diagnostics.last().unwrap().message.contains("timed out"));
        assert!(r.duration < Duration::from_secs(10));
    }

    #[test]
    fn environment_checks() {
        let v = PythonValidator::new("/nonexistent/env-zz");
        assert!(matches!(v.validate("print(1)", &[]), Err(ValidateError::EnvMissing(_))));
        let Some((_dir, v)) = fake_env() else { return };
        verify_manifest(&v, &["pyflakes".into()]).unwrap();
        match verify_manifest(&v, &["pyflakes".into(), "no-such-dist-zz".into()]) {
            Err(ValidateError::ManifestUnsatisfied(m)) => assert_eq!(m, ["no-such-dist-zz"]),
            other => panic!("{other:?}"),
        }
    }
}
