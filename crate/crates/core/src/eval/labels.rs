use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::snippet::{ImportSet, ImportStatement, MatchCategory};
use crate::validate::{DiagnosticCategory, ValidationReport};

/// Why a snippet failed, for manual failure analysis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureLabel {
    UnconstrainedClass,
    PartialInference,
    FakeInference,
    AlternativeInference,
    UnexpectedCodeModification,
    #[default]
    Unlabeled,
}

impl FailureLabel {
    pub const ALL: [FailureLabel; 6] = [
        FailureLabel::UnconstrainedClass,
        FailureLabel::PartialInference,
        FailureLabel::FakeInference,
        FailureLabel::AlternativeInference,
        FailureLabel::UnexpectedCodeModification,
        FailureLabel::Unlabeled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureLabel::UnconstrainedClass => "UnconstrainedClass",
            FailureLabel::PartialInference => "PartialInference",
            FailureLabel::FakeInference => "FakeInference",
            FailureLabel::AlternativeInference => "AlternativeInference",
            FailureLabel::UnexpectedCodeModification => "UnexpectedCodeModification",
            FailureLabel::Unlabeled => "Unlabeled",
        }
    }
}

impl fmt::Display for FailureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FailureLabel {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FailureLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| EvalError::UnknownLabel(s.to_string()))
    }
}

/// What the pre-labeler looks at for one snippet.
#[derive(Debug, Clone, Copy)]
pub struct LabelEvidence<'a> {
    /// Imports of the returned code.
    pub predicted: &'a ImportSet,
    pub truth: &'a ImportSet,
    pub compiled: bool,
    pub body_modified: bool,
    /// Imported names absent from the knowledge base.
    pub unresolved: &'a [String],
    pub final_report: Option<&'a ValidationReport>,
}

fn simple(fqn: &str) -> &str {
    fqn.rsplit('.').next().unwrap_or(fqn)
}

fn full_name(s: &ImportStatement) -> String {
    match &s.imported_symbol {
        Some(sym) => format!("{}.{sym}", s.fqn),
        None => s.fqn.clone(),
    }
}

fn shared_segments(a: &str, b: &str) -> usize {
    a.split('.').zip(b.split('.')).take_while(|(x, y)| x == y).count()
}

/// Heuristic first guess; reviewers override it in the worksheet.
pub fn pre_label(e: &LabelEvidence<'_>) -> FailureLabel {
    if e.compiled && e.predicted == e.truth {
        return FailureLabel::Unlabeled;
    }
    if e.body_modified {
        return FailureLabel::UnexpectedCodeModification;
    }
    if !e.unresolved.is_empty() {
        return FailureLabel::FakeInference;
    }
    let wrong: Vec<String> = e.predicted.difference(e.truth).map(full_name).collect();
    let missed: Vec<String> = e.truth.difference(e.predicted).map(full_name).collect();
    if wrong.iter().any(|p| missed.iter().any(|t| simple(p) == simple(t))) {
        return FailureLabel::AlternativeInference;
    }
    if wrong.iter().any(|p| missed.iter().any(|t| shared_segments(p, t) >= 2)) {
        return FailureLabel::PartialInference;
    }
    let truth_full: Vec<String> = e.truth.iter().map(full_name).collect();
    let truth_names: Vec<&str> = truth_full.iter().map(|n| simple(n)).collect();
    let unconstrained = e.final_report.is_some_and(|r| {
        r.errors()
            .filter(|d| d.category == DiagnosticCategory::SymbolNotFound)
            .filter_map(|d| d.detail.lines().find_map(|l| l.trim().strip_prefix("symbol:")))
            .filter_map(|s| s.split_whitespace().nth(1))
            .any(|name| !truth_names.contains(&name))
    });
    if unconstrained {
        return FailureLabel::UnconstrainedClass;
    }
    FailureLabel::Unlabeled
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorksheetRow {
    pub library: String,
    pub snippet: String,
    pub compiled: bool,
    #[serde(rename = "match")]
    pub match_category: MatchCategory,
    pub suggested: FailureLabel,
    /// Reviewer's label; empty means the suggestion stands.
    pub label: String,
    pub notes: String,
}

impl WorksheetRow {
    pub fn effective(&self) -> Result<FailureLabel, EvalError> {
        if self.label.trim().is_empty() {
            Ok(self.suggested)
        } else {
            self.label.parse()
        }
    }
}

pub fn write_worksheet(path: &Path, rows: &[WorksheetRow]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_worksheet(path: &Path) -> Result<Vec<WorksheetRow>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(EvalError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snippet::{parse_import_statement, Language};
    use crate::validate::{Diagnostic, Severity, Tool};
    use std::time::Duration;

    fn set(fqns: &[&str]) -> ImportSet {
        fqns.iter()
            .map(|f| parse_import_statement(&format!("import {f};"), Language::Java).unwrap())
            .collect()
    }

    fn evidence<'a>(pred: &'a ImportSet, truth: &'a ImportSet) -> LabelEvidence<'a> {
        LabelEvidence {
            predicted: pred,
            truth,
            compiled: false,
            body_modified: false,
            unresolved: &[],
            final_report: None,
        }
    }

    #[test]
    fn heuristics() {
        let truth = set(&["com.google.gwt.user.client.ui.Button"]);
        let alt = set(&["java.awt.Button"]);
        assert_eq!(pre_label(&evidence(&alt, &truth)), FailureLabel::AlternativeInference);
        let partial = set(&["com.google.gwt.user.client.Window"]);
        assert_eq!(pre_label(&evidence(&partial, &truth)), FailureLabel::PartialInference);
        let fake = ["com.google.gwt.Nope".to_string()];
        let e = LabelEvidence {
            unresolved: &fake,
            ..evidence(&partial, &truth)
        };
        assert_eq!(pre_label(&e), FailureLabel::FakeInference);
        let e = LabelEvidence {
            body_modified: true,
            ..e
        };
        assert_eq!(pre_label(&e), FailureLabel::UnexpectedCodeModification);
        let ok = LabelEvidence {
            compiled: true,
            ..evidence(&truth, &truth)
        };
        assert_eq!(pre_label(&ok), FailureLabel::Unlabeled);
    }

    #[test]
    fn unconstrained_class() {
        let truth = set(&["a.Foo"]);
        let report = ValidationReport {
            success: false,
            raw_log: String::new(),
            diagnostics: vec![Diagnostic {
                file: "A.java".into(),
                line: 3,
                column: None,
                severity: Severity::Error,
                message: "cannot find symbol".into(),
                detail: "symbol:   class UserGroup\nlocation: class A".into(),
                category: DiagnosticCategory::SymbolNotFound,
            }],
            duration: Duration::ZERO,
            tool: Tool::JavaCompiler,
        };
        let e = LabelEvidence {
            final_report: Some(&report),
            ..evidence(&truth, &truth)
        };
        assert_eq!(pre_label(&e), FailureLabel::UnconstrainedClass);
    }

    #[test]
    fn worksheet_round_trip_and_override() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        let mut rows = vec![WorksheetRow {
            library: "gwt".into(),
            snippet: "s1".into(),
            compiled: false,
            match_category: MatchCategory::Different,
            suggested: FailureLabel::PartialInference,
            label: String::new(),
            notes: "a, b".into(),
        }];
        write_worksheet(&p, &rows).unwrap();
        let back = read_worksheet(&p).unwrap();
        assert_eq!(back, rows);
        assert_eq!(back[0].effective().unwrap(), FailureLabel::PartialInference);
        rows[0].label = "fakeinference".into();
        assert_eq!(rows[0].effective().unwrap(), FailureLabel::FakeInference);
        rows[0].label = "bogus".into();
        assert!(rows[0].effective().is_err());
    }
}
