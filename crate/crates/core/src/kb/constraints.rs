use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use super::ConstraintQuery;
use crate::snippet::{ImportSet, Language};

/// Methods every class has; a call to one of them says nothing about the
/// archive.
const OBJECT_METHODS: &[&str] = &[
    "equals", "hashCode", "toString", "getClass", "notify", "notifyAll", "wait", "clone", "finalize",
];

fn ident_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b([A-Za-z_$][\w$]*)\s*\.\s*([A-Za-z_$][\w$]*)\s*(\()?").unwrap())
}

/// Strip comments and string/char literals so they cannot produce matches.
pub(crate) fn code_only(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '/' if chars.peek() == Some(&'/') => {
                for n in chars.by_ref() {
                    if n == '\n' {
                        out.push('\n');
                        break;
                    }
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                let mut prev = ' ';
                for n in chars.by_ref() {
                    if prev == '*' && n == '/' {
                        break;
                    }
                    prev = n;
                }
                out.push(' ');
            }
            '"' | '\'' => {
                let quote = c;
                let mut escaped = false;
                for n in chars.by_ref() {
                    if escaped {
                        escaped = false;
                    } else if n == '\\' {
                        escaped = true;
                    } else if n == quote || n == '\n' {
                        break;
                    }
                }
                out.push_str("\"\"");
            }
            _ => out.push(c),
        }
    }
    out
}

fn looks_like_field(name: &str) -> bool {
    let first = name.chars().next().unwrap_or('A');
    first.is_lowercase() || name.chars().all(|c| c.is_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Members the code uses on each imported class.
///
/// Two patterns count: `Simple.member` (static access) and `var.member`
/// where `var` is declared with the imported type (`Simple var`,
/// `Simple<...> var`). A member followed by `(` is a method, otherwise a
/// field. Methods every object has are ignored. Only single-type Java
/// imports get a query.
pub fn extract_constraints(code: &str, imports: &ImportSet) -> BTreeMap<String, ConstraintQuery> {
    let code = code_only(code);
    let mut by_simple: BTreeMap<String, String> = BTreeMap::new();
    for stmt in imports.iter() {
        if stmt.language != Language::Java || stmt.wildcard || stmt.is_static {
            continue;
        }
        if let Some(simple) = stmt.simple_name() {
            by_simple.insert(simple.to_string(), stmt.fqn.clone());
        }
    }
    if by_simple.is_empty() {
        return BTreeMap::new();
    }

    // variable name -> fqn of its declared type
    let mut vars: BTreeMap<String, String> = BTreeMap::new();
    for (simple, fqn) in &by_simple {
        let pat = format!(r"\b{}\s*(?:<[^;(){{}}]*?>)?\s*(?:\[\s*\]\s*)*([A-Za-z_$][\w$]*)\s*[=;,):]", regex::escape(simple));
        let re = Regex::new(&pat).expect("declaration pattern");
        for cap in re.captures_iter(&code) {
            vars.insert(cap[1].to_string(), fqn.clone());
        }
    }

    let mut out: BTreeMap<String, ConstraintQuery> = BTreeMap::new();
    let mut add = |fqn: &str, member: &str, call: bool| {
        if call && OBJECT_METHODS.contains(&member) {
            return;
        }
        let q = out.entry(fqn.to_string()).or_insert_with(|| ConstraintQuery::new(fqn));
        if call {
            q.required_methods.insert(member.to_string());
        } else {
            q.required_fields.insert(member.to_string());
        }
    };
    for cap in ident_re().captures_iter(&code) {
        let receiver = &cap[1];
        let member = &cap[2];
        let call = cap.get(3).is_some();
        // skip qualified names such as org.joda.time.Duration
        let start = cap.get(1).unwrap().start();
        if code[..start].trim_end().ends_with('.') {
            continue;
        }
        if let Some(fqn) = by_simple.get(receiver) {
            if call || looks_like_field(member) {
                add(fqn, member, call);
            }
        } else if let Some(fqn) = vars.get(receiver) {
            if call || looks_like_field(member) {
                add(fqn, member, call);
            }
        }
    }
    for fqn in by_simple.values() {
        out.entry(fqn.clone()).or_insert_with(|| ConstraintQuery::new(fqn));
    }
    out
}
