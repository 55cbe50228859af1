use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::validate::{DiagnosticCategory, ValidationReport};

pub type CategoryCounts = BTreeMap<DiagnosticCategory, u32>;

/// Snippets of one library showing each error category before and after
/// fixing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyRow {
    pub library_label: String,
    pub before: CategoryCounts,
    pub after: CategoryCounts,
}

fn zeroed() -> CategoryCounts {
    DiagnosticCategory::ALL.iter().map(|c| (*c, 0)).collect()
}

fn tally(counts: &mut CategoryCounts, report: &ValidationReport) {
    let mut seen: Vec<DiagnosticCategory> = report.errors().map(|d| d.category).collect();
    seen.sort();
    seen.dedup();
    for c in seen {
        *counts.entry(c).or_default() += 1;
    }
}

/// Count, per library, the snippets with at least one error of each
/// category. `rows` pairs each snippet's library with its report before and
/// after fixing.
pub fn error_taxonomy_table(rows: &[(&str, &ValidationReport, &ValidationReport)]) -> Vec<TaxonomyRow> {
    let mut by_lib: BTreeMap<&str, TaxonomyRow> = BTreeMap::new();
    for (lib, before, after) in rows {
        let row = by_lib.entry(lib).or_insert_with(|| TaxonomyRow {
            library_label: lib.to_string(),
            before: zeroed(),
            after: zeroed(),
        });
        tally(&mut row.before, before);
        tally(&mut row.after, after);
    }
    by_lib.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::{Diagnostic, Severity, Tool};
    use std::time::Duration;
    use DiagnosticCategory::*;

    fn report(cats: &[(DiagnosticCategory, Severity)]) -> ValidationReport {
        ValidationReport {
            success: cats.iter().all(|(_, s)| *s == Severity::Warning),
            raw_log: String::new(),
            diagnostics: cats
                .iter()
                .map(|(c, s)| Diagnostic {
                    file: "A.java".into(),
                    line: 1,
                    column: None,
                    severity: *s,
                    message: String::new(),
                    detail: String::new(),
                    category: *c,
                })
                .collect(),
            duration: Duration::ZERO,
            tool: Tool::JavaCompiler,
        }
    }

    #[test]
    fn counts_snippets_not_diagnostics() {
        let e = Severity::Error;
        let two = report(&[(SymbolNotFound, e), (SymbolNotFound, e), (MethodOverrideError, e)]);
        let clean = report(&[]);
        let warn = report(&[(Other, Severity::Warning)]);
        let t = error_taxonomy_table(&[("joda", &two, &clean), ("joda", &two, &warn), ("gwt", &clean, &two)]);
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].library_label, "joda");
        assert_eq!(t[1].before[&SymbolNotFound], 2);
        assert_eq!(t[1].before[&MethodOverrideError], 2);
        assert!(t[1].after.values().all(|v| *v == 0));
        assert_eq!(t[0].after[&SymbolNotFound], 1);
    }

    #[test]
    fn empty_reports() {
        let clean = report(&[]);
        let t = error_taxonomy_table(&[("a", &clean, &clean)]);
        assert!(t[0].before.values().chain(t[0].after.values()).all(|v| *v == 0));
        assert!(error_taxonomy_table(&[]).is_empty());
    }
}
