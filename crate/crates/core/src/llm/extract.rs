use thiserror::Error;

use crate::snippet::{parse_import_line, ImportSet, ImportStatement, Language};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model output contains no code")]
pub struct NoCodeFound;

/// Drop list bullets, numbering and inline-code backticks.
fn clean_line(line: &str) -> &str {
    let mut t = line.trim();
    for bullet in ["- ", "* ", "+ ", "• "] {
        if let Some(r) = t.strip_prefix(bullet) {
            t = r.trim_start();
        }
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            t = r.trim_start();
        }
    }
    t.trim_matches('`').trim()
}

fn is_qualified(token: &str, language: Language) -> bool {
    match language {
        Language::Java => token.contains('.') && crate::snippet::is_java_qualified_name(token),
        Language::Python => {
            !token.is_empty()
                && token.split('.').all(|seg| {
                    let mut c = seg.chars();
                    matches!(c.next(), Some(ch) if ch.is_alphabetic() || ch == '_')
                        && c.all(|ch| ch.is_alphanumeric() || ch == '_')
                })
        }
    }
}

/// Statements named by one prose-list item, e.g. `java.util.Locale` or
/// `` `import a.B;` ``.
fn list_item(item: &str, language: Language) -> Vec<ImportStatement> {
    let item = item.trim().trim_matches(|c| c == '`' || c == '"' || c == '\'').trim();
    let item = item.strip_suffix('.').unwrap_or(item).trim();
    if item.is_empty() {
        return Vec::new();
    }
    if item.starts_with("import ") || item.starts_with("from ") {
        return parse_import_line(item, language).unwrap_or_default();
    }
    if !is_qualified(item, language) {
        return Vec::new();
    }
    let decl = match language {
        Language::Java => format!("import {item};"),
        Language::Python => format!("import {item}"),
    };
    parse_import_line(&decl, language).unwrap_or_default()
}

fn split_list(tail: &str) -> impl Iterator<Item = &str> {
    tail.split([';', ','])
        .flat_map(|s| s.split(" and "))
        .map(str::trim)
}

/// Collect the import statements a model answer names.
///
/// Every line that parses as an import declaration counts, inside or outside
/// code fences. A line whose text before a colon mentions imports starts a
/// prose list: qualified names after the colon, and bare qualified names on
/// the following lines, are read as single-type imports. Anything that does
/// not fit the name grammar is dropped, so a refusal such as "The code does
/// not require any additional import statements." yields the empty set.
pub fn extract_import_statements(text: &str, language: Language) -> ImportSet {
    let mut set = ImportSet::new();
    let mut in_list = false;
    for raw in text.lines() {
        let line = clean_line(raw);
        if line.starts_with("```") {
            in_list = false;
            continue;
        }
        if let Ok(stmts) = parse_import_line(line, language) {
            for s in stmts {
                set.insert(s);
            }
            continue;
        }
        if let Some((head, tail)) = line.split_once(':') {
            if head.to_ascii_lowercase().contains("import") {
                for item in split_list(tail) {
                    for s in list_item(item, language) {
                        set.insert(s);
                    }
                }
                in_list = tail.trim().is_empty();
                continue;
            }
        }
        if in_list {
            if line.is_empty() {
                continue;
            }
            let found: Vec<_> = split_list(line).flat_map(|i| list_item(i, language)).collect();
            if found.is_empty() {
                in_list = false;
            }
            for s in found {
                set.insert(s);
            }
        }
    }
    if set.is_empty() && !text.trim().is_empty() {
        log::debug!("no import statements recognized in model output");
    }
    set
}

/// A line of explanation rather than code: several words starting with a
/// capital letter and ending in sentence punctuation or a colon.
fn is_prose(line: &str) -> bool {
    let t = line.trim();
    let starts_upper = t.chars().next().is_some_and(char::is_uppercase);
    let words = t.split_whitespace().count();
    let ends = t.ends_with(['.', '!', '?', ':']);
    starts_upper && words >= 3 && ends && !t.starts_with("//") && !t.starts_with('#')
}

/// Pull the code out of a model answer.
///
/// With fenced blocks, the largest block's contents are returned verbatim (an
/// unterminated fence runs to the end of the text). Without fences, leading
/// and trailing prose lines are removed; text without such lines comes back
/// unchanged.
pub fn extract_code_block(text: &str, _language: Language) -> Result<String, NoCodeFound> {
    let mut blocks: Vec<&str> = Vec::new();
    let mut offset = 0;
    let mut open: Option<usize> = None;
    for line in text.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            match open {
                None => open = Some(offset + line.len()),
                Some(start) => {
                    blocks.push(&text[start..offset]);
                    open = None;
                }
            }
        }
        offset += line.len();
    }
    if let Some(start) = open {
        blocks.push(&text[start..]);
    }
    if !blocks.is_empty() {
        let mut best = blocks[0];
        for b in &blocks[1..] {
            if b.len() > best.len() {
                best = b;
            }
        }
        if best.trim().is_empty() {
            return Err(NoCodeFound);
        }
        return Ok(best.to_string());
    }

    let lines: Vec<&str> = text.lines().collect();
    let keep = |l: &&str| !l.trim().is_empty() && !is_prose(l);
    let first = lines.iter().position(|l| keep(&l)).ok_or(NoCodeFound)?;
    let last = lines.iter().rposition(|l| keep(&l)).ok_or(NoCodeFound)?;
    let edge_prose = lines[..first].iter().chain(&lines[last + 1..]).any(|l| is_prose(l));
    if !edge_prose {
        return Ok(text.to_string());
    }
    let mut out = lines[first..=last].join("\n");
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forms(set: &ImportSet) -> Vec<&str> {
        set.canonical_forms().collect()
    }

    #[test]
    fn negative_answer_is_empty() {
        let s = extract_import_statements(
            "The code does not require any additional import statements.",
            Language::Java,
        );
        assert!(s.is_empty());
    }

    #[test]
    fn declaration_lines() {
        let s = extract_import_statements("import java.text.NumberFormat;\nimport java.util.Locale;", Language::Java);
        assert_eq!(forms(&s), ["import java.text.NumberFormat;", "import java.util.Locale;"]);
    }

    #[test]
    fn prose_list_after_colon() {
        let s = extract_import_statements(
            "The code requires the following imports: java.text.NumberFormat; java.util.Locale",
            Language::Java,
        );
        assert_eq!(forms(&s), ["import java.text.NumberFormat;", "import java.util.Locale;"]);
    }

    #[test]
    fn prose_list_on_following_lines() {
        let text = "You need these imports:\n- `org.joda.time.Duration`\n- org.joda.time.Period.\n\nThat is all.";
        let s = extract_import_statements(text, Language::Java);
        assert_eq!(forms(&s), ["import org.joda.time.Duration;", "import org.joda.time.Period;"]);
    }

    #[test]
    fn fenced_block_and_bullets() {
        let text = "Sure:\n```java\nimport a.B;\nimport a.B;\n```\n1. import c.D;";
        let s = extract_import_statements(text, Language::Java);
        assert_eq!(forms(&s), ["import a.B;", "import c.D;"]);
    }

    #[test]
    fn python_answers() {
        let s = extract_import_statements(
            "```python\nimport numpy as np\nfrom bs4 import BeautifulSoup\n```",
            Language::Python,
        );
        assert_eq!(forms(&s), ["from bs4 import BeautifulSoup", "import numpy as np"]);
        let s = extract_import_statements("Required imports: numpy, matplotlib.pyplot", Language::Python);
        assert_eq!(forms(&s), ["import matplotlib.pyplot", "import numpy"]);
    }

    #[test]
    fn prose_words_are_not_names() {
        let s = extract_import_statements("Imports needed: none of them, really", Language::Java);
        assert!(s.is_empty());
    }

    #[test]
    fn code_block_single() {
        let text = "Here is the fixed code:\n```java\nimport a.B;\nclass A {}\n```\nHope this helps.";
        assert_eq!(extract_code_block(text, Language::Java).unwrap(), "import a.B;\nclass A {}\n");
    }

    #[test]
    fn code_block_largest_wins() {
        let text = "```\nx\n```\ntext\n```java\nclass Longer {}\n```\n";
        assert_eq!(extract_code_block(text, Language::Java).unwrap(), "class Longer {}\n");
    }

    #[test]
    fn unterminated_fence() {
        let text = "```python\nprint(1)\n";
        assert_eq!(extract_code_block(text, Language::Python).unwrap(), "print(1)\n");
    }

    #[test]
    fn bare_code_unchanged() {
        let code = "import a.B;\n\npublic class A {\n    // Fixed it.\n}\n";
        assert_eq!(extract_code_block(code, Language::Java).unwrap(), code);
        let py = "def f(x):\n    for y in x:\n        print(y)\n";
        assert_eq!(extract_code_block(py, Language::Python).unwrap(), py);
    }

    #[test]
    fn surrounding_prose_removed() {
        let text = "Here is the corrected code:\nimport a.B;\nclass A {}\nThis should now compile.";
        assert_eq!(extract_code_block(text, Language::Java).unwrap(), "import a.B;\nclass A {}\n");
    }

    #[test]
    fn apology_has_no_code() {
        assert_eq!(
            extract_code_block("I'm sorry, but I cannot fix this code.", Language::Java),
            Err(NoCodeFound)
        );
        assert_eq!(extract_code_block("", Language::Java), Err(NoCodeFound));
    }
}
