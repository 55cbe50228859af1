//! Scoring and aggregation.
//!
//! Counts are micro-summed within a library; the run summary macro-averages
//! precision, recall and F1 across libraries and pools the compilation rate.

mod labels;
mod report;
mod taxonomy;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snippet::{classify_match, ImportSet, MatchCategory};

pub use labels::{pre_label, read_worksheet, write_worksheet, FailureLabel, LabelEvidence, WorksheetRow};
pub use report::{
    write_json, write_match_csv, write_metrics_csv, write_snippets_csv, write_taxonomy_csv, RunReport,
};
pub use taxonomy::{error_taxonomy_table, CategoryCounts, TaxonomyRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("nothing to aggregate")]
    EmptyInput,
    #[error("scores from several libraries: {0} and {1}")]
    MixedLibraries(String, String),
    #[error("runs cover different libraries")]
    MismatchedRuns,
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown failure label {0:?}")]
    UnknownLabel(String),
}

/// `(tp, fp, fn)` of a prediction against the expected imports.
pub fn score_imports(pred: &ImportSet, truth: &ImportSet) -> (u32, u32, u32) {
    let tp = pred.intersection_count(truth) as u32;
    (tp, pred.len() as u32 - tp, truth.len() as u32 - tp)
}

/// Precision, recall and F1 from summed counts. An empty denominator gives
/// 1; F1 is 0 when precision and recall are both 0.
pub fn prf(tp: u32, fp: u32, fn_: u32) -> (f64, f64, f64) {
    let ratio = |num: u32, den: u32| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    (p, r, f1(p, r))
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetScore {
    pub snippet_id: String,
    pub library_label: String,
    pub tp: u32,
    pub fp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
    #[serde(rename = "match")]
    pub match_category: MatchCategory,
    pub compiled: bool,
    pub rounds_used: u32,
}

impl SnippetScore {
    pub fn new(
        snippet_id: impl Into<String>,
        library_label: impl Into<String>,
        pred: &ImportSet,
        truth: &ImportSet,
        compiled: bool,
        rounds_used: u32,
    ) -> Self {
        let (tp, fp, fn_) = score_imports(pred, truth);
        SnippetScore {
            snippet_id: snippet_id.into(),
            library_label: library_label.into(),
            tp,
            fp,
            fn_,
            match_category: classify_match(pred, truth),
            compiled,
            rounds_used,
        }
    }
}

pub type MatchDistribution = BTreeMap<MatchCategory, u32>;

fn empty_distribution() -> MatchDistribution {
    MatchCategory::ALL.iter().map(|c| (*c, 0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryMetrics {
    pub library_label: String,
    pub tp: u32,
    pub fp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub compiled_count: u32,
    pub total_count: u32,
    pub match_distribution: MatchDistribution,
}

impl LibraryMetrics {
    /// Build from already-summed counts.
    pub fn from_counts(
        library_label: impl Into<String>,
        (tp, fp, fn_): (u32, u32, u32),
        compiled_count: u32,
        total_count: u32,
        match_distribution: MatchDistribution,
    ) -> Self {
        let (precision, recall, f1) = prf(tp, fp, fn_);
        LibraryMetrics {
            library_label: library_label.into(),
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
            compiled_count,
            total_count,
            match_distribution,
        }
    }

    pub fn compilation_rate(&self) -> f64 {
        rate(self.compiled_count, self.total_count)
    }
}

fn rate(num: u32, den: u32) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Sum the counts of one library's snippets.
pub fn aggregate_library(scores: &[SnippetScore]) -> Result<LibraryMetrics, EvalError> {
    let first = scores.first().ok_or(EvalError::EmptyInput)?;
    if let Some(other) = scores.iter().find(|s| s.library_label != first.library_label) {
        return Err(EvalError::MixedLibraries(
            first.library_label.clone(),
            other.library_label.clone(),
        ));
    }
    let mut counts = (0, 0, 0);
    let mut dist = empty_distribution();
    for s in scores {
        counts.0 += s.tp;
        counts.1 += s.fp;
        counts.2 += s.fn_;
        *dist.entry(s.match_category).or_default() += 1;
    }
    let compiled = scores.iter().filter(|s| s.compiled).count() as u32;
    Ok(LibraryMetrics::from_counts(
        first.library_label.clone(),
        counts,
        compiled,
        scores.len() as u32,
        dist,
    ))
}

/// Per-library metrics, sorted by library label.
pub fn aggregate(scores: &[SnippetScore]) -> Vec<LibraryMetrics> {
    let mut groups: BTreeMap<&str, Vec<SnippetScore>> = BTreeMap::new();
    for s in scores {
        groups.entry(&s.library_label).or_default().push(s.clone());
    }
    groups
        .values()
        .filter_map(|g| aggregate_library(g).ok())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub libraries: Vec<LibraryMetrics>,
    /// Unweighted mean over libraries.
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Pooled over all snippets.
    pub compiled: u32,
    pub total: u32,
    pub compilation_rate: f64,
    pub match_distribution: MatchDistribution,
}

pub fn summarize_run(libraries: &[LibraryMetrics]) -> Result<RunSummary, EvalError> {
    if libraries.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = libraries.len() as f64;
    let mean = |f: fn(&LibraryMetrics) -> f64| libraries.iter().map(f).sum::<f64>() / n;
    let compiled = libraries.iter().map(|l| l.compiled_count).sum();
    let total = libraries.iter().map(|l| l.total_count).sum();
    let mut dist = empty_distribution();
    for l in libraries {
        for (c, k) in &l.match_distribution {
            *dist.entry(*c).or_default() += k;
        }
    }
    Ok(RunSummary {
        libraries: libraries.to_vec(),
        macro_precision: mean(|l| l.precision),
        macro_recall: mean(|l| l.recall),
        macro_f1: mean(|l| l.f1),
        compiled,
        total,
        compilation_rate: rate(compiled, total),
        match_distribution: dist,
    })
}

/// Lower median: the element at index `(n - 1) / 2` after sorting.
pub fn lower_median<T: Copy + PartialOrd>(values: &[T]) -> Option<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.get(v.len().checked_sub(1)? / 2).copied()
}

fn median_by<T, V: Copy + PartialOrd>(items: &[&T], f: impl Fn(&T) -> V) -> V {
    let values: Vec<V> = items.iter().map(|x| f(x)).collect();
    lower_median(&values).expect("non-empty")
}

fn median_distribution(items: &[&MatchDistribution]) -> MatchDistribution {
    MatchCategory::ALL
        .iter()
        .map(|c| {
            let values: Vec<u32> = items.iter().map(|d| d.get(c).copied().unwrap_or(0)).collect();
            (*c, lower_median(&values).unwrap_or(0))
        })
        .collect()
}

/// Element-wise median of repeated runs. Every metric is taken on its own,
/// so different metrics may come from different runs.
pub fn median_of_runs(runs: &[RunSummary]) -> Result<RunSummary, EvalError> {
    let first = runs.first().ok_or(EvalError::EmptyInput)?;
    let labels: Vec<&str> = first.libraries.iter().map(|l| l.library_label.as_str()).collect();
    if runs
        .iter()
        .any(|r| r.libraries.iter().map(|l| l.library_label.as_str()).ne(labels.iter().copied()))
    {
        return Err(EvalError::MismatchedRuns);
    }
    let libraries = (0..labels.len())
        .map(|i| {
            let ls: Vec<&LibraryMetrics> = runs.iter().map(|r| &r.libraries[i]).collect();
            LibraryMetrics {
                library_label: labels[i].to_string(),
                tp: median_by(&ls, |l| l.tp),
                fp: median_by(&ls, |l| l.fp),
                fn_: median_by(&ls, |l| l.fn_),
                precision: median_by(&ls, |l| l.precision),
                recall: median_by(&ls, |l| l.recall),
                f1: median_by(&ls, |l| l.f1),
                compiled_count: median_by(&ls, |l| l.compiled_count),
                total_count: median_by(&ls, |l| l.total_count),
                match_distribution: median_distribution(&ls.iter().map(|l| &l.match_distribution).collect::<Vec<_>>()),
            }
        })
        .collect();
    let rs: Vec<&RunSummary> = runs.iter().collect();
    Ok(RunSummary {
        libraries,
        macro_precision: median_by(&rs, |r| r.macro_precision),
        macro_recall: median_by(&rs, |r| r.macro_recall),
        macro_f1: median_by(&rs, |r| r.macro_f1),
        compiled: median_by(&rs, |r| r.compiled),
        total: median_by(&rs, |r| r.total),
        compilation_rate: median_by(&rs, |r| r.compilation_rate),
        match_distribution: median_distribution(&rs.iter().map(|r| &r.match_distribution).collect::<Vec<_>>()),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::snippet::{parse_import_statement, Language};

    pub(crate) fn set(names: &[&str]) -> ImportSet {
        names
            .iter()
            .map(|n| parse_import_statement(&format!("import a.{n};"), Language::Java).unwrap())
            .collect()
    }

    #[test]
    fn scoring() {
        assert_eq!(score_imports(&set(&["A", "B", "C"]), &set(&["A", "B", "C"])), (3, 0, 0));
        assert_eq!(score_imports(&set(&["A", "X"]), &set(&["A", "B"])), (1, 1, 1));
        assert_eq!(score_imports(&set(&[]), &set(&[])), (0, 0, 0));
        assert_eq!(prf(0, 0, 0), (1.0, 1.0, 1.0));
        assert_eq!(prf(0, 3, 2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_computed_f1() {
        let (p, r, f) = prf(9, 1, 1);
        assert!((p - 0.9).abs() < 1e-12 && (r - 0.9).abs() < 1e-12);
        // 2 * 0.9 * 0.9 / 1.8
        assert!((f - 0.9).abs() < 1e-12);
        assert_eq!(f1(1.0, 1.0), 1.0);
    }

    fn score(lib: &str, pred: &[&str], truth: &[&str], compiled: bool) -> SnippetScore {
        SnippetScore::new("x", lib, &set(pred), &set(truth), compiled, 0)
    }

    #[test]
    fn library_aggregation() {
        let scores = vec![
            score("l", &["A", "B"], &["A", "B"], true),
            score("l", &["A"], &["A", "B"], false),
            score("l", &[], &["C"], false),
        ];
        let m = aggregate_library(&scores).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (3, 0, 2));
        assert_eq!(m.precision, 1.0);
        assert!((m.recall - 0.6).abs() < 1e-12);
        assert_eq!((m.compiled_count, m.total_count), (1, 3));
        assert_eq!(m.match_distribution[&MatchCategory::Same], 1);
        assert_eq!(m.match_distribution[&MatchCategory::Missing], 1);
        assert_eq!(m.match_distribution[&MatchCategory::None], 1);
        assert!(matches!(aggregate_library(&[]), Err(EvalError::EmptyInput)));
        let mixed = vec![score("l", &[], &[], true), score("m", &[], &[], true)];
        assert!(matches!(aggregate_library(&mixed), Err(EvalError::MixedLibraries(..))));
    }

    #[test]
    fn summary_pools_cr_and_averages_rest() {
        let libs = aggregate(&[
            score("a", &["A"], &["A"], true),
            score("b", &["A", "X"], &["A"], false),
            score("b", &["B"], &["B"], true),
            score("b", &["C"], &["C"], true),
        ]);
        let s = summarize_run(&libs).unwrap();
        assert_eq!((s.compiled, s.total), (3, 4));
        assert_eq!(s.compilation_rate, 0.75);
        // a: P=1; b: P=3/4
        assert!((s.macro_precision - 0.875).abs() < 1e-12);
        let single = summarize_run(&libs[..1]).unwrap();
        assert_eq!(single.macro_f1, libs[0].f1);
        assert_eq!(single.compilation_rate, libs[0].compilation_rate());
    }

    #[test]
    fn medians() {
        assert_eq!(lower_median(&[0.91, 0.85, 0.88, 0.90, 0.87]), Some(0.88));
        assert_eq!(lower_median(&[4, 1, 3, 2]), Some(2));
        assert_eq!(lower_median::<u32>(&[]), None);
        let run = |tp, fp, compiled| {
            let l = LibraryMetrics::from_counts("l", (tp, fp, 0), compiled, 10, empty_distribution());
            summarize_run(&[l]).unwrap()
        };
        // precision ranks the runs 2 < 1 < 0; compilation 0 < 2 < 1
        let runs = vec![run(10, 0, 5), run(10, 5, 9), run(10, 10, 7)];
        let m = median_of_runs(&runs).unwrap();
        assert_eq!(m.macro_precision, runs[1].macro_precision);
        assert_eq!(m.compiled, 7);
        assert_eq!(m.compilation_rate, 0.7);
        let same = median_of_runs(&vec![runs[0].clone(); 5]).unwrap();
        assert_eq!(same, runs[0]);
    }
}
