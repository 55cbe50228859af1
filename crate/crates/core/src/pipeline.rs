//! Runs the two stages over a dataset and turns the results into reports.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{
    aggregate, error_taxonomy_table, median_of_runs, pre_label, summarize_run, write_json, write_match_csv,
    write_metrics_csv, write_snippets_csv, write_taxonomy_csv, write_worksheet, EvalError, LabelEvidence, RunReport,
    RunSummary, SnippetScore, WorksheetRow,
};
use crate::fix::{fix, write_transcript, FixConfig, FixError, FixOutcome};
use crate::infer::{self_consistent_infer, InferError, InferenceConfig, InferenceResult};
use crate::kb::InverseIndex;
use crate::llm::{LlmBackend, LlmError};
use crate::snippet::{
    classify_match, insert_imports, strip_imports, write_import_file, CodeSnippet, DatasetError, ImportSet, Language,
    MatchCategory,
};
use crate::validate::{ValidateError, ValidationReport, Validator};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Live,
    Mock,
}

/// Settings for a whole run. Loaded from a config file and overridden by
/// command-line flags; the API key is never part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_root: Option<PathBuf>,
    pub kb_index: Option<PathBuf>,
    pub python_env: Option<PathBuf>,
    /// Distributions the Python environment must provide.
    pub python_manifest: Option<PathBuf>,
    pub backend: BackendKind,
    pub mock_transcript: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub requests_per_minute: Option<u32>,
    pub max_in_flight: usize,
    pub max_cost_usd: Option<f64>,
    pub inference: InferenceConfig,
    pub fix: FixConfig,
    pub parallelism: usize,
    pub repetitions: u32,
    pub out_dir: PathBuf,
    pub validator_timeout_secs: u64,
    /// Cap on concurrent compiler and interpreter processes.
    pub max_tool_processes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset_root: None,
            kb_index: None,
            python_env: None,
            python_manifest: None,
            backend: BackendKind::Live,
            mock_transcript: None,
            endpoint: None,
            requests_per_minute: None,
            max_in_flight: 4,
            max_cost_usd: None,
            inference: InferenceConfig::default(),
            fix: FixConfig::default(),
            parallelism: 1,
            repetitions: 1,
            out_dir: PathBuf::from("out"),
            validator_timeout_secs: 30,
            max_tool_processes: 4,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.backend == BackendKind::Mock && self.mock_transcript.is_none() {
            return bad("the mock backend needs a transcript");
        }
        if self.validator_timeout_secs == 0 {
            return bad("validator_timeout_secs must be positive");
        }
        self.inference.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.fix.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    /// Resources a dataset needs: a knowledge base for Java, an environment
    /// for Python.
    pub fn check_resources(&self, snippets: &[CodeSnippet]) -> Result<(), PipelineError> {
        if snippets.iter().any(|s| s.language == Language::Java) && self.kb_index.is_none() {
            return Err(PipelineError::Config("Java snippets need kb_index".into()));
        }
        if snippets.iter().any(|s| s.language == Language::Python) && self.python_env.is_none() {
            return Err(PipelineError::Config("Python snippets need python_env".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("no validator configured for {0}")]
    NoValidator(Language),
    #[error(transparent)]
    Tool(#[from] ValidateError),
    #[error("backend: {0}")]
    Backend(LlmError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Which part of the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Inference then fixing.
    Synthesize,
    InferOnly,
    /// Fixing only, starting from the imports given (or none).
    FixOnly,
}

/// Outcome for one snippet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub snippet_id: String,
    pub library_label: String,
    pub language: Language,
    /// Imports the first stage settled on.
    pub inferred: ImportSet,
    /// Imports of the returned code.
    pub final_imports: ImportSet,
    pub compiled: bool,
    pub rounds_used: u32,
    pub body_modified: bool,
    pub vote_count: u32,
    pub infer_rounds: u32,
    pub unresolved: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_report: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_report: Option<ValidationReport>,
    /// Set when this snippet could not be processed; the run went on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub final_code: Option<String>,
    #[serde(skip)]
    pub input_code: Option<String>,
    #[serde(skip)]
    pub outcome: Option<FixOutcome>,
    #[serde(skip)]
    pub inference: Option<InferenceResult>,
}

impl SnippetRecord {
    fn new(s: &CodeSnippet) -> Self {
        SnippetRecord {
            snippet_id: s.id.clone(),
            library_label: s.library_label.clone(),
            language: s.language,
            inferred: ImportSet::new(),
            final_imports: ImportSet::new(),
            compiled: false,
            rounds_used: 0,
            body_modified: false,
            vote_count: 0,
            infer_rounds: 0,
            unresolved: Vec::new(),
            initial_report: None,
            final_report: None,
            error: None,
            final_code: None,
            input_code: None,
            outcome: None,
            inference: None,
        }
    }

    pub fn key(&self) -> String {
        format!("{}/{}", self.library_label, self.snippet_id)
    }
}

/// Shared, read-only resources for a run.
pub struct Pipeline<'a> {
    pub backend: &'a dyn LlmBackend,
    pub java: Option<&'a dyn Validator>,
    pub python: Option<&'a dyn Validator>,
    pub kb: Option<&'a InverseIndex>,
    pub inference: InferenceConfig,
    pub fix: FixConfig,
    pub parallelism: usize,
}

/// Errors that stop the whole run rather than one snippet.
fn fatal_backend(e: &LlmError) -> bool {
    matches!(e, LlmError::BudgetExceeded(_) | LlmError::Config(_))
}

impl Pipeline<'_> {
    fn validator(&self, language: Language) -> Result<&dyn Validator, PipelineError> {
        match language {
            Language::Java => self.java,
            Language::Python => self.python,
        }
        .ok_or(PipelineError::NoValidator(language))
    }

    fn infer(&self, s: &CodeSnippet, rec: &mut SnippetRecord) -> Result<bool, PipelineError> {
        match self_consistent_infer(s, &self.inference, self.backend) {
            Ok(r) => {
                rec.inferred = r.chosen.clone();
                rec.final_imports = r.chosen.clone();
                rec.vote_count = r.vote_count;
                rec.infer_rounds = r.rounds_used;
                rec.inference = Some(r);
                Ok(true)
            }
            Err(InferError::Backend(e)) if fatal_backend(&e) => Err(PipelineError::Backend(e)),
            Err(e) => {
                rec.error = Some(e.to_string());
                Ok(false)
            }
        }
    }

    fn repair(&self, s: &CodeSnippet, imports: &ImportSet, rec: &mut SnippetRecord) -> Result<(), PipelineError> {
        let validator = self.validator(s.language)?;
        let code = insert_imports(&s.body, imports, s.language);
        rec.input_code = Some(code.clone());
        match fix(&code, s, &self.fix, self.backend, validator, self.kb) {
            Ok(out) => {
                rec.final_imports = strip_imports(&out.final_code, s.language).1;
                rec.compiled = out.compiled;
                rec.rounds_used = out.rounds_used;
                rec.body_modified = out.body_modified;
                rec.unresolved = out.unresolved.clone();
                rec.initial_report = Some(out.initial_report().clone());
                rec.final_report = Some(out.final_report.clone());
                rec.final_code = Some(out.final_code.clone());
                rec.outcome = Some(out);
                Ok(())
            }
            Err(FixError::Validator(e)) => Err(PipelineError::Tool(e)),
            Err(FixError::Backend(e)) if fatal_backend(&e) => Err(PipelineError::Backend(e)),
            Err(e) => {
                rec.error = Some(e.to_string());
                Ok(())
            }
        }
    }

    /// Process one snippet. `imports` seeds the fixing stage when inference
    /// is skipped.
    pub fn process(&self, s: &CodeSnippet, stage: Stage, imports: Option<&ImportSet>) -> Result<SnippetRecord, PipelineError> {
        let mut rec = SnippetRecord::new(s);
        match stage {
            Stage::InferOnly => {
                self.infer(s, &mut rec)?;
            }
            Stage::Synthesize => {
                if self.infer(s, &mut rec)? {
                    let chosen = rec.inferred.clone();
                    self.repair(s, &chosen, &mut rec)?;
                }
            }
            Stage::FixOnly => {
                let start = imports.cloned().unwrap_or_default();
                rec.inferred = start.clone();
                rec.final_imports = start.clone();
                self.repair(s, &start, &mut rec)?;
            }
        }
        if let Some(e) = &rec.error {
            log::warn!("{}: {e}", rec.key());
        }
        Ok(rec)
    }

    /// Process every snippet on a pool of `parallelism` workers. Records come
    /// back in input order.
    pub fn run(
        &self,
        snippets: &[CodeSnippet],
        stage: Stage,
        imports: &BTreeMap<String, ImportSet>,
    ) -> Result<Vec<SnippetRecord>, PipelineError> {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<SnippetRecord>>> = Mutex::new(vec![None; snippets.len()]);
        let failure: Mutex<Option<PipelineError>> = Mutex::new(None);
        std::thread::scope(|scope| {
            for _ in 0..self.parallelism.clamp(1, snippets.len().max(1)) {
                scope.spawn(|| loop {
                    if failure.lock().unwrap_or_else(|e| e.into_inner()).is_some() {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(s) = snippets.get(i) else { break };
                    match self.process(s, stage, imports.get(&s.key())) {
                        Ok(rec) => slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(rec),
                        Err(e) => {
                            failure.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
                            break;
                        }
                    }
                });
            }
        });
        if let Some(e) = failure.into_inner().unwrap_or_else(|e| e.into_inner()) {
            return Err(e);
        }
        Ok(slots
            .into_inner()
            .unwrap_or_else(|e| e.into_inner())
            .into_iter()
            .flatten()
            .collect())
    }
}

/// Scores for records whose snippet has expected imports.
pub fn score_records(records: &[SnippetRecord], snippets: &[CodeSnippet]) -> Vec<SnippetScore> {
    let truth: BTreeMap<String, &ImportSet> = snippets
        .iter()
        .filter_map(|s| s.ground_truth.as_ref().map(|t| (s.key(), t)))
        .collect();
    records
        .iter()
        .filter_map(|r| {
            let t = truth.get(&r.key())?;
            Some(SnippetScore::new(
                &r.snippet_id,
                &r.library_label,
                &r.final_imports,
                t,
                r.compiled,
                r.rounds_used,
            ))
        })
        .collect()
}

fn summary_of(records: &[SnippetRecord], snippets: &[CodeSnippet]) -> Result<(Vec<SnippetScore>, RunSummary), EvalError> {
    let scores = score_records(records, snippets);
    let summary = summarize_run(&aggregate(&scores))?;
    Ok((scores, summary))
}

/// Report over one or more repetitions of the same run. Per-snippet rows and
/// the taxonomy come from the first repetition.
pub fn build_report(reps: &[Vec<SnippetRecord>], snippets: &[CodeSnippet]) -> Result<RunReport, EvalError> {
    let first = reps.first().ok_or(EvalError::EmptyInput)?;
    let (scores, summary) = summary_of(first, snippets)?;
    let pairs: Vec<(&str, &ValidationReport, &ValidationReport)> = first
        .iter()
        .filter_map(|r| Some((r.library_label.as_str(), r.initial_report.as_ref()?, r.final_report.as_ref()?)))
        .collect();
    let mut report = RunReport {
        snippets: scores,
        summary,
        taxonomy: error_taxonomy_table(&pairs),
        repetitions: Vec::new(),
        median: None,
    };
    if reps.len() > 1 {
        report.repetitions = reps
            .iter()
            .map(|r| summary_of(r, snippets).map(|(_, s)| s))
            .collect::<Result<_, _>>()?;
        report.median = Some(median_of_runs(&report.repetitions)?);
    }
    Ok(report)
}

/// Worksheet rows for snippets that did not compile or did not match.
pub fn worksheet_rows(records: &[SnippetRecord], snippets: &[CodeSnippet]) -> Vec<WorksheetRow> {
    let truth: BTreeMap<String, &ImportSet> = snippets
        .iter()
        .filter_map(|s| s.ground_truth.as_ref().map(|t| (s.key(), t)))
        .collect();
    records
        .iter()
        .filter_map(|r| {
            let t = truth.get(&r.key())?;
            let m = classify_match(&r.final_imports, t);
            if r.compiled && m == MatchCategory::Same {
                return None;
            }
            let suggested = pre_label(&LabelEvidence {
                predicted: &r.final_imports,
                truth: t,
                compiled: r.compiled,
                body_modified: r.body_modified,
                unresolved: &r.unresolved,
                final_report: r.final_report.as_ref(),
            });
            Some(WorksheetRow {
                library: r.library_label.clone(),
                snippet: r.snippet_id.clone(),
                compiled: r.compiled,
                match_category: m,
                suggested,
                label: String::new(),
                notes: r.error.clone().unwrap_or_default(),
            })
        })
        .collect()
}

/// Write per-snippet predictions, transcripts and records under `dir`.
pub fn write_records(dir: &Path, records: &[SnippetRecord], snippets: &[CodeSnippet]) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let by_key: BTreeMap<String, &CodeSnippet> = snippets.iter().map(|s| (s.key(), s)).collect();
    for r in records {
        let path = dir
            .join("predictions")
            .join(&r.library_label)
            .join(format!("{}.imports", r.snippet_id));
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        write_import_file(&path, &r.final_imports).map_err(io_err(&path))?;
        if let Some(code) = &r.final_code {
            let ext = r.language.extension();
            let p = path.with_extension(ext);
            fs::write(&p, code).map_err(io_err(&p))?;
        }
        if let (Some(out), Some(s), Some(input)) = (&r.outcome, by_key.get(&r.key()), &r.input_code) {
            let tdir = dir.join("transcripts");
            write_transcript(&tdir, s, input, out).map_err(io_err(&tdir))?;
        }
        if let Some(inf) = &r.inference {
            let p = dir
                .join("inference")
                .join(&r.library_label)
                .join(format!("{}.json", r.snippet_id));
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            write_json(&p, inf)?;
        }
    }
    write_json(&dir.join("records.json"), &records)?;
    Ok(())
}

/// Write the report and its tables under `dir`.
pub fn write_report(dir: &Path, report: &RunReport, worksheet: &[WorksheetRow]) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join("report.json"), report)?;
    let summary = report.median.as_ref().unwrap_or(&report.summary);
    write_metrics_csv(&dir.join("metrics.csv"), summary)?;
    write_match_csv(&dir.join("match.csv"), summary)?;
    write_snippets_csv(&dir.join("snippets.csv"), &report.snippets)?;
    if !report.taxonomy.is_empty() {
        write_taxonomy_csv(&dir.join("taxonomy.csv"), &report.taxonomy)?;
    }
    if !worksheet.is_empty() {
        write_worksheet(&dir.join("worksheet.csv"), worksheet)?;
    }
    Ok(())
}

/// Read `records.json` written by an earlier run.
pub fn read_records(path: &Path) -> Result<Vec<SnippetRecord>, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        source: io::Error::new(io::ErrorKind::InvalidData, e),
    })
}

/// Records rebuilt from a predictions directory laid out like a dataset
/// (`<library>/<id>.imports`). Nothing is known about compilation.
pub fn records_from_predictions(dir: &Path, snippets: &[CodeSnippet]) -> Result<Vec<SnippetRecord>, PipelineError> {
    let mut out = Vec::new();
    for s in snippets {
        let p = dir.join(&s.library_label).join(format!("{}.imports", s.id));
        let Ok(text) = fs::read_to_string(&p) else { continue };
        let imports = ImportSet::parse_lines(&text, s.language).map_err(|e| PipelineError::Io {
            path: p.clone(),
            source: io::Error::new(io::ErrorKind::InvalidData, e.to_string()),
        })?;
        let mut rec = SnippetRecord::new(s);
        rec.inferred = imports.clone();
        rec.final_imports = imports;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fix::tests::FakeValidator;
    use crate::llm::{MockBackend, PromptKind, TranscriptRecord};
    use crate::snippet::ImportStatement;

    fn snippets() -> Vec<CodeSnippet> {
        let truth = |f: &str| Some([ImportStatement::java(f).unwrap()].into_iter().collect::<ImportSet>());
        vec![
            CodeSnippet::new("a", Language::Java, "lib", "class A { Foo f; }\n", truth("x.Foo")),
            CodeSnippet::new("b", Language::Java, "lib", "class B { Bar b; }\n", truth("x.Bar")),
            CodeSnippet::new("c", Language::Java, "other", "class C { Baz z; }\n", truth("x.Baz")),
        ]
    }

    fn transcript(never_fixed: Option<&str>) -> MockBackend {
        let mut recs = Vec::new();
        for (id, cls) in [("a", "Foo"), ("b", "Bar"), ("c", "Baz")] {
            let answer = if Some(id) == never_fixed { "import x.Wrong;".to_string() } else { format!("import x.{cls};") };
            recs.push(TranscriptRecord::new(PromptKind::Infer, id, None, answer).reusable());
            recs.push(TranscriptRecord::new(PromptKind::Fix, id, None, "no idea, sorry.").reusable());
        }
        MockBackend::new(recs)
    }

    fn pipeline<'a>(backend: &'a MockBackend, v: &'a FakeValidator, parallelism: usize) -> Pipeline<'a> {
        Pipeline {
            backend,
            java: Some(v),
            python: None,
            kb: None,
            inference: InferenceConfig {
                k_samples: 3,
                ..Default::default()
            },
            fix: FixConfig::default(),
            parallelism,
        }
    }

    #[test]
    fn scripted_perfect_run() {
        let v = FakeValidator::new(&[]);
        let mock = transcript(None);
        let recs = pipeline(&mock, &v, 2).run(&snippets(), Stage::Synthesize, &BTreeMap::new()).unwrap();
        let report = build_report(&[recs], &snippets()).unwrap();
        assert_eq!(report.summary.compilation_rate, 1.0);
        assert_eq!(report.summary.match_distribution[&MatchCategory::Same], 3);
        assert_eq!(report.summary.libraries.len(), 2);
    }

    /// Accepts code only when it imports the class its body uses.
    struct ImportsMatchValidator;

    impl Validator for ImportsMatchValidator {
        fn language(&self) -> Language {
            Language::Java
        }

        fn validate(&self, code: &str, cp: &[PathBuf]) -> Result<ValidationReport, ValidateError> {
            let ok = ["Foo", "Bar", "Baz"].iter().any(|c| code.contains(&format!("import x.{c};")) && code.contains(&format!("{c} ")));
            let inner = FakeValidator::new(if ok { &[] } else { &["<unresolvable>"] });
            inner.validate(code, cp)
        }
    }

    #[test]
    fn one_never_fixes() {
        let mock = transcript(Some("b"));
        let v = ImportsMatchValidator;
        let unused = FakeValidator::new(&[]);
        let p = Pipeline {
            java: Some(&v),
            ..pipeline(&mock, &unused, 1)
        };
        let recs = p.run(&snippets(), Stage::Synthesize, &BTreeMap::new()).unwrap();
        let report = build_report(&[recs.clone()], &snippets()).unwrap();
        assert!((report.summary.compilation_rate - 2.0 / 3.0).abs() < 1e-9);
        let b = &recs[1];
        assert!(!b.compiled);
        assert_eq!(b.rounds_used, FixConfig::default().max_rounds);
        assert_eq!(b.outcome.as_ref().unwrap().per_round.len(), 5);
        let ws = worksheet_rows(&recs, &snippets());
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].snippet, "b");
    }

    #[test]
    fn parallel_matches_sequential_and_repetitions() {
        let v = FakeValidator::new(&[]);
        let seq = pipeline(&transcript(Some("c")), &v, 1)
            .run(&snippets(), Stage::Synthesize, &BTreeMap::new())
            .unwrap();
        let par = pipeline(&transcript(Some("c")), &v, 3)
            .run(&snippets(), Stage::Synthesize, &BTreeMap::new())
            .unwrap();
        assert_eq!(serde_json::to_string(&seq).unwrap(), serde_json::to_string(&par).unwrap());
        let report = build_report(&vec![seq; 5], &snippets()).unwrap();
        assert_eq!(report.repetitions.len(), 5);
        assert_eq!(report.median.as_ref().unwrap(), &report.repetitions[0]);
    }

    #[test]
    fn fix_only_and_write() {
        let v = FakeValidator::new(&["import x.Foo;"]);
        let mock = transcript(None);
        let recs = pipeline(&mock, &v, 1).run(&snippets()[..1], Stage::FixOnly, &BTreeMap::new()).unwrap();
        assert_eq!(mock.calls(), 5);
        assert!(recs[0].inferred.is_empty());
        let dir = tempfile::tempdir().unwrap();
        write_records(dir.path(), &recs, &snippets()).unwrap();
        assert!(dir.path().join("transcripts/lib/a.json").exists());
        assert!(dir.path().join("predictions/lib/a.imports").exists());
        let back = read_records(&dir.path().join("records.json")).unwrap();
        assert_eq!(back[0].compiled, recs[0].compiled);
        let preds = records_from_predictions(&dir.path().join("predictions"), &snippets()).unwrap();
        assert_eq!(preds.len(), 1);
    }

    #[test]
    fn config_checks() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.backend = BackendKind::Mock;
        assert!(c.validate().is_err());
        c.mock_transcript = Some("t.jsonl".into());
        c.repetitions = 0;
        assert!(c.validate().is_err());
        c.repetitions = 1;
        assert!(c.check_resources(&snippets()).is_err());
        c.kb_index = Some("kb.json".into());
        assert!(c.check_resources(&snippets()).is_ok());
    }
}
