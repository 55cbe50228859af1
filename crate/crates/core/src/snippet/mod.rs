//! Snippets, import declarations and set comparison.

mod dataset;
mod import;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{load_dataset, write_import_file, DatasetError};
pub use import::{parse_import_line, parse_import_statement, ImportSet, ImportStatement};
pub(crate) use import::is_java_qualified_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    Python,
}

impl Language {
    pub fn extension(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::Python => "py",
        }
    }

    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext {
            "java" => Some(Language::Java),
            "py" => Some(Language::Python),
            _ => None,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Java => "java",
            Language::Python => "python",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("not a {language} import declaration: {line:?}")]
    NotAnImport { language: Language, line: String },
    #[error("line declares {0} imports")]
    SeveralImports(usize),
    #[error("expected a single physical line")]
    MultiLine,
}

/// One benchmark unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSnippet {
    pub id: String,
    pub language: Language,
    pub library_label: String,
    /// Source text with every import declaration removed.
    pub body: String,
    /// Expected imports; absent when only synthesizing.
    pub ground_truth: Option<ImportSet>,
}

impl CodeSnippet {
    /// Build a snippet from raw source, stripping any import lines it carries.
    pub fn new(
        id: impl Into<String>,
        language: Language,
        library_label: impl Into<String>,
        source: &str,
        ground_truth: Option<ImportSet>,
    ) -> Self {
        let (body, _) = strip_imports(source, language);
        CodeSnippet {
            id: id.into(),
            language,
            library_label: library_label.into(),
            body,
            ground_truth,
        }
    }

    /// `library/id`, unique within a dataset.
    pub fn key(&self) -> String {
        format!("{}/{}", self.library_label, self.id)
    }
}

/// Remove import declarations from `source`.
///
/// Non-import lines are kept byte-for-byte (line terminators included) and in
/// order. Python imports are only recognized at top level, so imports inside
/// function bodies stay where they are. A parenthesized Python `from` import
/// may span several lines.
pub fn strip_imports(source: &str, language: Language) -> (String, ImportSet) {
    let lines: Vec<&str> = source.split_inclusive('\n').collect();
    let mut body = String::with_capacity(source.len());
    let mut removed = ImportSet::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let text = line.trim_end_matches(['\n', '\r']);
        if language == Language::Python && text.starts_with(char::is_whitespace) {
            body.push_str(line);
            i += 1;
            continue;
        }
        if language == Language::Python
            && text.trim_start().starts_with("from ")
            && text.contains("import (")
            && !text.contains(')')
        {
            // gather the continuation lines of a parenthesized import
            let mut joined = text.to_string();
            let mut j = i + 1;
            while j < lines.len() {
                let cont = lines[j].trim_end_matches(['\n', '\r']);
                joined.push(' ');
                joined.push_str(cont.trim());
                j += 1;
                if cont.contains(')') {
                    break;
                }
            }
            if let Ok(stmts) = parse_import_line(&joined, language) {
                for s in stmts {
                    removed.insert(s);
                }
                i = j;
                continue;
            }
        }
        match parse_import_line(text, language) {
            Ok(stmts) => {
                for s in stmts {
                    removed.insert(s);
                }
            }
            Err(_) => body.push_str(line),
        }
        i += 1;
    }
    (body, removed)
}

/// Prepend `imports` to `body`, after a Java `package` declaration if one is
/// present.
pub fn insert_imports(body: &str, imports: &ImportSet, language: Language) -> String {
    if imports.is_empty() {
        return body.to_string();
    }
    let block: String = imports.canonical_forms().map(|c| format!("{c}\n")).collect();
    if language == Language::Java {
        let mut offset = 0;
        for line in body.split_inclusive('\n') {
            let t = line.trim_start();
            if t.starts_with("package ") && t.trim_end().ends_with(';') {
                let end = offset + line.len();
                let mut out = String::with_capacity(body.len() + block.len() + 1);
                out.push_str(&body[..end]);
                if !line.ends_with('\n') {
                    out.push('\n');
                }
                out.push_str(&block);
                out.push_str(&body[end..]);
                return out;
            }
            if !t.trim().is_empty() && !t.starts_with("//") {
                break;
            }
            offset += line.len();
        }
    }
    format!("{block}{body}")
}

/// List-wise comparison of a predicted import set with the expected one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchCategory {
    Same,
    Different,
    Missing,
    Extra,
    None,
}

impl MatchCategory {
    pub const ALL: [MatchCategory; 5] = [
        MatchCategory::Same,
        MatchCategory::Different,
        MatchCategory::Extra,
        MatchCategory::Missing,
        MatchCategory::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MatchCategory::Same => "Same",
            MatchCategory::Different => "Different",
            MatchCategory::Missing => "Missing",
            MatchCategory::Extra => "Extra",
            MatchCategory::None => "None",
        }
    }
}

impl fmt::Display for MatchCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Precedence: Same > None > Extra > Missing > Different.
pub fn classify_match(pred: &ImportSet, truth: &ImportSet) -> MatchCategory {
    if pred == truth {
        MatchCategory::Same
    } else if pred.is_empty() {
        MatchCategory::None
    } else if truth.is_subset(pred) {
        MatchCategory::Extra
    } else if pred.is_subset(truth) {
        MatchCategory::Missing
    } else {
        MatchCategory::Different
    }
}
