use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;

use super::{DiagnosticCategory, ValidateError};

const BUILTIN: &str = include_str!("../../rules/diagnostic-rules.json");

#[derive(Deserialize)]
struct RuleFile {
    version: u32,
    rules: Vec<RuleSpec>,
}

#[derive(Deserialize)]
struct RuleSpec {
    category: DiagnosticCategory,
    pattern: String,
    #[serde(default)]
    after_annotation: bool,
}

struct Rule {
    category: DiagnosticCategory,
    pattern: Regex,
    after_annotation: bool,
}

/// Ordered message-pattern rules; the first match decides the category.
pub struct RuleSet {
    pub version: u32,
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn from_json(text: &str) -> Result<Self, ValidateError> {
        let file: RuleFile = serde_json::from_str(text).map_err(|e| ValidateError::Rules(e.to_string()))?;
        let rules = file
            .rules
            .into_iter()
            .map(|r| {
                Ok(Rule {
                    category: r.category,
                    pattern: Regex::new(&r.pattern).map_err(|e| ValidateError::Rules(e.to_string()))?,
                    after_annotation: r.after_annotation,
                })
            })
            .collect::<Result<_, ValidateError>>()?;
        Ok(RuleSet {
            version: file.version,
            rules,
        })
    }

    /// The rules shipped with the crate.
    pub fn builtin() -> &'static RuleSet {
        static RULES: OnceLock<RuleSet> = OnceLock::new();
        RULES.get_or_init(|| RuleSet::from_json(BUILTIN).expect("bundled rules are valid"))
    }

    /// Category for `message`. `preceding` is the nearest non-blank source
    /// line before the reported one, when known; rules marked
    /// `after_annotation` only fire when it is an annotation.
    pub fn categorize(&self, message: &str, preceding: Option<&str>) -> DiagnosticCategory {
        let message = message.trim();
        let after_annotation = preceding.is_some_and(|l| l.trim_start().starts_with('@'));
        self.rules
            .iter()
            .find(|r| r.pattern.is_match(message) && (!r.after_annotation || after_annotation))
            .map_or(DiagnosticCategory::Other, |r| r.category)
    }
}

/// Category of a compiler or checker message, without source context.
pub fn categorize_diagnostic(message: &str) -> DiagnosticCategory {
    RuleSet::builtin().categorize(message, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use DiagnosticCategory::*;

    #[test]
    fn builtin_rules() {
        let r = RuleSet::builtin();
        assert_eq!(r.version, 1);
        let cases = [
            ("cannot find symbol", SymbolNotFound),
            ("package org.joda.time does not exist", SymbolNotFound),
            ("undefined name 'np'", SymbolNotFound),
            ("ModuleNotFoundError: No module named 'bs4'", SymbolNotFound),
            ("NameError: name 'x' is not defined", SymbolNotFound),
            ("method does not override or implement a method from a supertype", MethodOverrideError),
            ("M2 is not abstract and does not override abstract method run() in Runnable", MethodOverrideError),
            ("toString() in M3 cannot override toString() in Object", MethodOverrideError),
            ("annotation type not applicable to this kind of declaration", WrongAnnotation),
            ("Unexpected @FunctionalInterface annotation", WrongAnnotation),
            ("Invalid SafeVarargs annotation. Method m(String) is not a varargs method.", WrongAnnotation),
            ("incompatible types: String cannot be converted to Annotation", WrongAnnotation),
            ("';' expected", Syntax),
            ("class, interface, or enum expected", Syntax),
            ("illegal start of expression", Syntax),
            ("reached end of file while parsing", Syntax),
            ("invalid syntax", Syntax),
            ("expected an indented block after function definition on line 1", Syntax),
            ("incompatible types: int cannot be converted to String", Other),
            ("something else entirely", Other),
        ];
        for (msg, want) in cases {
            assert_eq!(r.categorize(msg, None), want, "{msg}");
        }
    }

    #[test]
    fn annotation_context() {
        let r = RuleSet::builtin();
        let msg = "class, interface, or enum expected";
        assert_eq!(r.categorize(msg, Some("  @Deprecated")), WrongAnnotation);
        assert_eq!(r.categorize(msg, Some("}")), Syntax);
        assert_eq!(categorize_diagnostic(msg), Syntax);
    }

    #[test]
    fn custom_rules_and_errors() {
        let r = RuleSet::from_json(r#"{"version": 7, "rules": [{"category": "Syntax", "pattern": "boom"}]}"#).unwrap();
        assert_eq!(r.version, 7);
        assert_eq!(r.categorize("big boom", None), Syntax);
        assert!(RuleSet::from_json(r#"{"version": 1, "rules": [{"category": "Syntax", "pattern": "("}]}"#).is_err());
        assert!(RuleSet::from_json("nope").is_err());
    }
}
