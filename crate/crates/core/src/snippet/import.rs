use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Language, ParseError};

/// One import declaration, normalized.
///
/// Two statements are equal when their canonical forms are equal; the
/// original text in `raw` does not take part in comparisons.
#[derive(Debug, Clone)]
pub struct ImportStatement {
    pub language: Language,
    /// The physical line the statement was read from, verbatim.
    pub raw: String,
    /// Dotted class name (Java) or module path (Python). For a Java wildcard
    /// this is the package, without the trailing `.*`.
    pub fqn: String,
    /// `Y` in Python's `from X import Y`. Always `None` for Java.
    pub imported_symbol: Option<String>,
    pub alias: Option<String>,
    pub wildcard: bool,
    /// Java `import static`.
    pub is_static: bool,
    canonical: String,
}

impl ImportStatement {
    fn new(
        language: Language,
        raw: &str,
        fqn: String,
        imported_symbol: Option<String>,
        alias: Option<String>,
        wildcard: bool,
        is_static: bool,
    ) -> Self {
        let canonical = match language {
            Language::Java => format!(
                "import {}{}{};",
                if is_static { "static " } else { "" },
                fqn,
                if wildcard { ".*" } else { "" }
            ),
            Language::Python => {
                let mut s = match &imported_symbol {
                    Some(sym) => format!("from {fqn} import {sym}"),
                    None => format!("import {fqn}"),
                };
                if let Some(a) = &alias {
                    s.push_str(" as ");
                    s.push_str(a);
                }
                s
            }
        };
        ImportStatement {
            language,
            raw: raw.to_string(),
            fqn,
            imported_symbol,
            alias,
            wildcard,
            is_static,
            canonical,
        }
    }

    /// Build a Java single-type import for `fqn` (used when a model lists bare
    /// qualified names in prose).
    pub fn java(fqn: &str) -> Result<Self, ParseError> {
        parse_import_statement(&format!("import {fqn};"), Language::Java)
    }

    /// Normalized declaration text; the identity used for sets and scoring.
    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    /// The simple (last) name this import binds, if it binds one.
    pub fn simple_name(&self) -> Option<&str> {
        if self.wildcard {
            return None;
        }
        if let Some(a) = &self.alias {
            return Some(a);
        }
        match &self.imported_symbol {
            Some(s) => Some(s),
            None => self.fqn.rsplit('.').next(),
        }
    }
}

impl PartialEq for ImportStatement {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for ImportStatement {}

impl Hash for ImportStatement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical.hash(state)
    }
}

impl fmt::Display for ImportStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

fn is_java_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' || c == '$' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

fn is_python_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// `a.b.C` with every segment a Java identifier.
pub(crate) fn is_java_qualified_name(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(is_java_ident)
}

fn is_python_dotted(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(is_python_ident)
}

/// Python module path, allowing leading dots for relative imports.
fn is_python_module(s: &str) -> bool {
    let rest = s.trim_start_matches('.');
    if rest.is_empty() {
        return !s.is_empty();
    }
    is_python_dotted(rest)
}

fn strip_java_comment(line: &str) -> &str {
    let line = match line.find("//") {
        Some(i) => &line[..i],
        None => line,
    };
    match line.find("/*") {
        Some(i) if line[i..].contains("*/") && line[i..].trim_end().ends_with("*/") => &line[..i],
        _ => line,
    }
}

fn strip_python_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_java_decl(raw: &str, decl: &str) -> Result<ImportStatement, ParseError> {
    let err = || ParseError::NotAnImport {
        language: Language::Java,
        line: raw.to_string(),
    };
    let decl = decl.trim().trim_end_matches(';').trim_end();
    let rest = decl.strip_prefix("import").ok_or_else(err)?;
    if !rest.starts_with(char::is_whitespace) {
        return Err(err());
    }
    let mut rest = rest.trim_start();
    let mut is_static = false;
    if let Some(r) = rest.strip_prefix("static") {
        if r.starts_with(char::is_whitespace) {
            is_static = true;
            rest = r.trim_start();
        }
    }
    // tolerate `java . util . List` spacing, but nothing else
    let name = rest
        .split('.')
        .map(str::trim)
        .collect::<Vec<_>>()
        .join(".");
    if name.chars().any(char::is_whitespace) {
        return Err(err());
    }
    let (fqn, wildcard) = match name.strip_suffix(".*") {
        Some(pkg) => (pkg.to_string(), true),
        None => (name, false),
    };
    if !is_java_qualified_name(&fqn) {
        return Err(err());
    }
    Ok(ImportStatement::new(
        Language::Java,
        raw,
        fqn,
        None,
        None,
        wildcard,
        is_static,
    ))
}

fn parse_java_line(line: &str) -> Result<Vec<ImportStatement>, ParseError> {
    let code = strip_java_comment(line);
    let decls: Vec<&str> = code
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if decls.is_empty() {
        return Err(ParseError::NotAnImport {
            language: Language::Java,
            line: line.to_string(),
        });
    }
    decls.iter().map(|d| parse_java_decl(line, d)).collect()
}

/// `name` or `name as alias`.
fn parse_python_alias(item: &str) -> Option<(String, Option<String>)> {
    let parts: Vec<&str> = item.split_whitespace().collect();
    match parts.as_slice() {
        [name] => Some((name.to_string(), None)),
        [name, "as", alias] if is_python_ident(alias) => {
            Some((name.to_string(), Some(alias.to_string())))
        }
        _ => None,
    }
}

fn parse_python_line(line: &str) -> Result<Vec<ImportStatement>, ParseError> {
    let err = || ParseError::NotAnImport {
        language: Language::Python,
        line: line.to_string(),
    };
    let code = strip_python_comment(line).trim().trim_end_matches(';').trim_end();
    if let Some(rest) = code.strip_prefix("import") {
        if !rest.starts_with(char::is_whitespace) {
            return Err(err());
        }
        let mut out = Vec::new();
        for item in rest.split(',') {
            let (name, alias) = parse_python_alias(item).ok_or_else(err)?;
            if !is_python_dotted(&name) {
                return Err(err());
            }
            out.push(ImportStatement::new(
                Language::Python,
                line,
                name,
                None,
                alias,
                false,
                false,
            ));
        }
        return Ok(out);
    }
    if let Some(rest) = code.strip_prefix("from") {
        if !rest.starts_with(char::is_whitespace) {
            return Err(err());
        }
        let rest = rest.trim_start();
        let (module, names) = rest.split_once(" import ").ok_or_else(err)?;
        let module = module.trim();
        if !is_python_module(module) {
            return Err(err());
        }
        let names = names.trim();
        if names == "*" {
            return Ok(vec![ImportStatement::new(
                Language::Python,
                line,
                module.to_string(),
                Some("*".to_string()),
                None,
                true,
                false,
            )]);
        }
        let names = names
            .strip_prefix('(')
            .map(|n| n.strip_suffix(')').unwrap_or(n))
            .unwrap_or(names);
        let mut out = Vec::new();
        for item in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, alias) = parse_python_alias(item).ok_or_else(err)?;
            if !is_python_ident(&name) {
                return Err(err());
            }
            out.push(ImportStatement::new(
                Language::Python,
                line,
                module.to_string(),
                Some(name),
                alias,
                false,
                false,
            ));
        }
        if out.is_empty() {
            return Err(err());
        }
        return Ok(out);
    }
    Err(err())
}

/// Parse one physical line that may declare several imports
/// (`import os, sys`, `import a.B; import c.D;`).
pub fn parse_import_line(line: &str, language: Language) -> Result<Vec<ImportStatement>, ParseError> {
    if line.contains('\n') {
        return Err(ParseError::MultiLine);
    }
    match language {
        Language::Java => parse_java_line(line),
        Language::Python => parse_python_line(line),
    }
}

/// Parse a line declaring exactly one import.
pub fn parse_import_statement(line: &str, language: Language) -> Result<ImportStatement, ParseError> {
    let mut all = parse_import_line(line, language)?;
    if all.len() != 1 {
        return Err(ParseError::SeveralImports(all.len()));
    }
    Ok(all.remove(0))
}

/// A deduplicated, order-insensitive collection of imports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ImportSet {
    entries: BTreeMap<String, ImportStatement>,
}

impl ImportSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if an entry with the same canonical form was present.
    pub fn insert(&mut self, stmt: ImportStatement) -> bool {
        if self.entries.contains_key(stmt.canonical()) {
            return false;
        }
        self.entries.insert(stmt.canonical().to_string(), stmt);
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, stmt: &ImportStatement) -> bool {
        self.entries.contains_key(stmt.canonical())
    }

    /// Entries in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = &ImportStatement> {
        self.entries.values()
    }

    pub fn canonical_forms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn is_subset(&self, other: &ImportSet) -> bool {
        self.entries.keys().all(|k| other.entries.contains_key(k))
    }

    pub fn intersection_count(&self, other: &ImportSet) -> usize {
        self.entries
            .keys()
            .filter(|k| other.entries.contains_key(*k))
            .count()
    }

    pub fn difference<'a>(&'a self, other: &'a ImportSet) -> impl Iterator<Item = &'a ImportStatement> {
        self.entries
            .iter()
            .filter(|(k, _)| !other.entries.contains_key(*k))
            .map(|(_, v)| v)
    }

    pub fn has_wildcard(&self) -> bool {
        self.entries.values().any(|s| s.wildcard)
    }

    /// Canonical lines sorted and joined with `\n`. Parsing this text back
    /// yields an equal set.
    pub fn serialize(&self) -> String {
        self.entries.keys().cloned().collect::<Vec<_>>().join("\n")
    }

    /// Parse newline-separated declarations. Blank lines are skipped; any
    /// other line that is not an import is an error.
    pub fn parse_lines(text: &str, language: Language) -> Result<Self, ParseError> {
        let mut set = ImportSet::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            for stmt in parse_import_line(line, language)? {
                set.insert(stmt);
            }
        }
        Ok(set)
    }
}

impl FromIterator<ImportStatement> for ImportSet {
    fn from_iter<T: IntoIterator<Item = ImportStatement>>(iter: T) -> Self {
        let mut set = ImportSet::new();
        for s in iter {
            set.insert(s);
        }
        set
    }
}

impl Serialize for ImportSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.entries.keys())
    }
}

impl<'de> Deserialize<'de> for ImportSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let lines = Vec::<String>::deserialize(deserializer)?;
        let mut set = ImportSet::new();
        for line in lines {
            // Java canonical forms always end in ';', Python ones never do.
            let language = if line.trim_end().ends_with(';') {
                Language::Java
            } else {
                Language::Python
            };
            for stmt in parse_import_line(&line, language).map_err(serde::de::Error::custom)? {
                set.insert(stmt);
            }
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn java_single_type_import() {
        let s = parse_import_statement("import java.text.NumberFormat;", Language::Java).unwrap();
        assert_eq!(s.fqn, "java.text.NumberFormat");
        assert!(!s.wildcard);
        assert_eq!(s.raw, "import java.text.NumberFormat;");
        assert_eq!(s.canonical(), "import java.text.NumberFormat;");
    }

    #[test]
    fn java_wildcard_import() {
        let s = parse_import_statement("import java.util.*;", Language::Java).unwrap();
        assert_eq!(s.fqn, "java.util");
        assert!(s.wildcard);
        assert_eq!(s.simple_name(), None);
    }

    #[test]
    fn java_canonical_ignores_spacing_and_semicolon() {
        let a = parse_import_statement("  import   java.util.List ;  ", Language::Java).unwrap();
        let b = parse_import_statement("import java.util.List", Language::Java).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn java_static_import_is_distinct() {
        let a = parse_import_statement("import static org.junit.Assert.assertEquals;", Language::Java).unwrap();
        assert!(a.is_static);
        let b = parse_import_statement("import org.junit.Assert.assertEquals;", Language::Java).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn java_rejects_non_imports() {
        for line in ["public class A {", "imports java.util.List;", "import ;", "import 3d.Foo;", ""] {
            assert!(parse_import_statement(line, Language::Java).is_err(), "{line}");
        }
    }

    #[test]
    fn java_trailing_comment() {
        let s = parse_import_statement("import a.B; // needed", Language::Java).unwrap();
        assert_eq!(s.fqn, "a.B");
    }

    #[test]
    fn java_two_on_one_line() {
        let v = parse_import_line("import a.B; import c.D;", Language::Java).unwrap();
        assert_eq!(v.len(), 2);
        assert!(matches!(
            parse_import_statement("import a.B; import c.D;", Language::Java),
            Err(ParseError::SeveralImports(2))
        ));
    }

    #[test]
    fn python_from_import() {
        let s = parse_import_statement("from bs4 import BeautifulSoup", Language::Python).unwrap();
        assert_eq!(s.fqn, "bs4");
        assert_eq!(s.imported_symbol.as_deref(), Some("BeautifulSoup"));
        assert!(!s.wildcard);
    }

    #[test]
    fn python_import_forms_are_distinct() {
        let a = parse_import_statement("import a.b.c", Language::Python).unwrap();
        let b = parse_import_statement("from a.b import c", Language::Python).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn python_alias_and_multi() {
        let s = parse_import_statement("import numpy as np", Language::Python).unwrap();
        assert_eq!(s.alias.as_deref(), Some("np"));
        assert_eq!(s.simple_name(), Some("np"));
        let v = parse_import_line("from os.path import (join, exists as ex)", Language::Python).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].canonical(), "from os.path import exists as ex");
        assert_eq!(parse_import_line("import os, sys", Language::Python).unwrap().len(), 2);
    }

    #[test]
    fn python_relative_and_star() {
        let s = parse_import_statement("from . import views", Language::Python).unwrap();
        assert_eq!(s.fqn, ".");
        let w = parse_import_statement("from pylab import *", Language::Python).unwrap();
        assert!(w.wildcard);
    }

    #[test]
    fn python_rejects_non_imports() {
        for line in ["print(1)", "important = 3", "from x", "import", "from a import b c"] {
            assert!(parse_import_statement(line, Language::Python).is_err(), "{line}");
        }
    }

    #[test]
    fn set_dedups_and_serializes_sorted() {
        let set = ImportSet::parse_lines(
            "import b.C;\nimport a.B;\nimport b.C ;\n",
            Language::Java,
        )
        .unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.serialize(), "import a.B;\nimport b.C;");
    }

    #[test]
    fn serde_round_trip_keeps_language() {
        let java = ImportSet::parse_lines("import a.B;", Language::Java).unwrap();
        let py = ImportSet::parse_lines("from a import b", Language::Python).unwrap();
        for set in [java, py] {
            let json = serde_json::to_string(&set).unwrap();
            let back: ImportSet = serde_json::from_str(&json).unwrap();
            assert_eq!(back, set);
            assert_eq!(back.iter().next().unwrap().language, set.iter().next().unwrap().language);
        }
    }
}
