use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalError, RunSummary, SnippetScore, TaxonomyRow};
use crate::snippet::MatchCategory;
use crate::validate::DiagnosticCategory;

/// Everything one scored run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub snippets: Vec<SnippetScore>,
    pub summary: RunSummary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub taxonomy: Vec<TaxonomyRow>,
    /// One summary per repetition when a run was repeated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repetitions: Vec<RunSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median: Option<RunSummary>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), EvalError> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn pct(num: u32, den: u32) -> String {
    if den == 0 {
        "0.0".into()
    } else {
        format!("{:.1}", 100.0 * num as f64 / den as f64)
    }
}

/// Library, F1, Rec, Pre and compilation count and percentage, with a
/// summary row.
pub fn write_metrics_csv(path: &Path, summary: &RunSummary) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["library", "f1", "recall", "precision", "compiled", "total", "cr_percent"])?;
    for l in &summary.libraries {
        w.write_record([
            l.library_label.clone(),
            format!("{:.3}", l.f1),
            format!("{:.3}", l.recall),
            format!("{:.3}", l.precision),
            l.compiled_count.to_string(),
            l.total_count.to_string(),
            pct(l.compiled_count, l.total_count),
        ])?;
    }
    w.write_record([
        "Summary".to_string(),
        format!("{:.3}", summary.macro_f1),
        format!("{:.3}", summary.macro_recall),
        format!("{:.3}", summary.macro_precision),
        summary.compiled.to_string(),
        summary.total.to_string(),
        pct(summary.compiled, summary.total),
    ])?;
    w.flush()?;
    Ok(())
}

const MATCH_ORDER: [MatchCategory; 5] = [
    MatchCategory::Same,
    MatchCategory::Different,
    MatchCategory::Extra,
    MatchCategory::Missing,
    MatchCategory::None,
];

/// Match category counts per library plus the pooled row.
pub fn write_match_csv(path: &Path, summary: &RunSummary) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["library".to_string()];
    header.extend(MATCH_ORDER.iter().map(|c| c.as_str().to_string()));
    header.push("total".into());
    w.write_record(&header)?;
    let mut row = |label: &str, dist: &super::MatchDistribution, total: u32| -> Result<(), csv::Error> {
        let mut rec = vec![label.to_string()];
        rec.extend(MATCH_ORDER.iter().map(|c| dist.get(c).copied().unwrap_or(0).to_string()));
        rec.push(total.to_string());
        w.write_record(&rec)
    };
    for l in &summary.libraries {
        row(&l.library_label, &l.match_distribution, l.total_count)?;
    }
    row("Summary", &summary.match_distribution, summary.total)?;
    w.flush()?;
    Ok(())
}

const TAXONOMY_ORDER: [DiagnosticCategory; 5] = DiagnosticCategory::ALL;

/// Before and after error category counts per library.
pub fn write_taxonomy_csv(path: &Path, rows: &[TaxonomyRow]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["library".to_string()];
    for when in ["before", "after"] {
        header.extend(TAXONOMY_ORDER.iter().map(|c| format!("{when}_{c}")));
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.library_label.clone()];
        for counts in [&r.before, &r.after] {
            rec.extend(TAXONOMY_ORDER.iter().map(|c| counts.get(c).copied().unwrap_or(0).to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_snippets_csv(path: &Path, scores: &[SnippetScore]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    for s in scores {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
