//! Conversational error fixing: validate, show the model the error log, take
//! its revised code, repeat until it compiles or the round budget is spent.

mod transcript;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{assemble_classpath, extract_constraints, InverseIndex};
use crate::llm::{
    estimate_tokens, extract_code_block, ChatMessage, CompletionRequest, LlmBackend, LlmError, PromptKind,
    DEFAULT_MAX_OUTPUT_TOKENS, DEFAULT_MODEL,
};
use crate::prompts::{fix_instruction, follow_up_lead, FIX_GOT_ERROR, FIX_SEE_CODE, PRESENTATION_GUIDE};
use crate::snippet::{strip_imports, CodeSnippet, Language};
use crate::validate::{ValidateError, ValidationReport, Validator};

pub use transcript::{read_transcript, transcript_path, write_transcript, FixTranscript};

/// Context window of the default model minus the reply allowance.
pub const DEFAULT_HISTORY_TOKEN_BUDGET: u64 = 4096 - DEFAULT_MAX_OUTPUT_TOKENS as u64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuardMode {
    /// Flag body changes but keep the candidate.
    #[default]
    Warn,
    /// Discard candidates that change the body.
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixConfig {
    pub max_rounds: u32,
    pub temperature: f64,
    pub history_token_budget: u64,
    pub guard_mode: GuardMode,
    pub max_output_tokens: u32,
    pub model_id: String,
}

impl Default for FixConfig {
    fn default() -> Self {
        FixConfig {
            max_rounds: 5,
            temperature: 0.5,
            history_token_budget: DEFAULT_HISTORY_TOKEN_BUDGET,
            guard_mode: GuardMode::Warn,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            model_id: DEFAULT_MODEL.to_string(),
        }
    }
}

impl FixConfig {
    pub fn validate(&self) -> Result<(), FixError> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(FixError::Config(format!("temperature {} outside [0, 1]", self.temperature)));
        }
        if self.history_token_budget == 0 {
            return Err(FixError::Config("history_token_budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum FixError {
    #[error("fix config: {0}")]
    Config(String),
    #[error("follow-up prompt needs attempt number >= 2, got {0}")]
    Precondition(u32),
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error(transparent)]
    Validator(#[from] ValidateError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationState {
    pub history: Vec<ChatMessage>,
    /// 1 before the first exchange.
    pub attempt_number: u32,
    pub last_code: String,
    pub last_error: String,
}

impl ConversationState {
    pub fn new(code: impl Into<String>) -> Self {
        ConversationState {
            history: Vec::new(),
            attempt_number: 1,
            last_code: code.into(),
            last_error: String::new(),
        }
    }
}

/// One validate-then-ask exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixRound {
    /// Report on the code that was sent.
    pub report: ValidationReport,
    pub prompt: Vec<ChatMessage>,
    pub response: String,
    /// The reply held no code; the previous code was kept.
    pub no_code: bool,
    pub body_modified: bool,
    /// The candidate was discarded by the guard.
    pub rejected: bool,
    pub classpath: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixOutcome {
    pub final_code: String,
    pub compiled: bool,
    /// Backend exchanges made; 0 when the input validated immediately.
    pub rounds_used: u32,
    pub per_round: Vec<FixRound>,
    /// Report on `final_code`.
    pub final_report: ValidationReport,
    pub body_modified: bool,
    /// Imported names the knowledge base could not place on the classpath.
    pub unresolved: Vec<String>,
}

impl FixOutcome {
    /// Report on the code as it came in.
    pub fn initial_report(&self) -> &ValidationReport {
        self.per_round.first().map_or(&self.final_report, |r| &r.report)
    }
}

fn request(messages: Vec<ChatMessage>, cfg: &FixConfig) -> CompletionRequest {
    let mut req = CompletionRequest::new(messages, cfg.temperature);
    req.max_output_tokens = cfg.max_output_tokens;
    req.model_id = cfg.model_id.clone();
    req
}

/// Message opening a fixing conversation.
pub fn build_prompt_2_first(code: &str, error_log: &str, language: Language, cfg: &FixConfig) -> CompletionRequest {
    let text = format!(
        "{PRESENTATION_GUIDE}\n{FIX_SEE_CODE}\n{code}\n{FIX_GOT_ERROR}\n{error_log}\n{}",
        fix_instruction(language)
    );
    request(vec![ChatMessage::user(text)], cfg)
}

/// Estimated tokens of `messages`, including the safety margin.
pub fn history_tokens(messages: &[ChatMessage]) -> u64 {
    let raw: u64 = messages.iter().map(|m| estimate_tokens(&m.content)).sum();
    (raw * 11).div_ceil(10)
}

/// Drop the oldest messages until the rest fit `budget`.
pub fn truncate_history(history: &[ChatMessage], budget: u64) -> Vec<ChatMessage> {
    let mut start = 0;
    while start < history.len() && history_tokens(&history[start..]) > budget {
        start += 1;
    }
    history[start..].to_vec()
}

/// Follow-up message carrying the latest code and error, preceded by as much
/// of the conversation as fits the budget.
pub fn build_prompt_2_followup(
    state: &ConversationState,
    language: Language,
    cfg: &FixConfig,
) -> Result<CompletionRequest, FixError> {
    if state.attempt_number < 2 {
        return Err(FixError::Precondition(state.attempt_number));
    }
    let text = format!(
        "{}\n{}\n{}\n{}",
        state.last_code,
        follow_up_lead(state.attempt_number),
        state.last_error,
        fix_instruction(language)
    );
    let msg = ChatMessage::user(text);
    let room = cfg.history_token_budget.saturating_sub(history_tokens(std::slice::from_ref(&msg)));
    let mut messages = truncate_history(&state.history, room);
    messages.push(msg);
    Ok(request(messages, cfg))
}

fn normalized_body(code: &str, language: Language) -> Vec<String> {
    let (body, _) = strip_imports(code, language);
    body.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect()
}

/// Whether `candidate` changes anything besides imports and whitespace.
pub fn detect_body_modification(original_body: &str, candidate: &str, language: Language) -> bool {
    normalized_body(original_body, language) != normalized_body(candidate, language)
}

fn validate_code(
    code: &str,
    language: Language,
    validator: &dyn Validator,
    kb: Option<&InverseIndex>,
) -> Result<(ValidationReport, Vec<PathBuf>, Vec<String>), FixError> {
    let (paths, unresolved) = match (language, kb) {
        (Language::Java, Some(idx)) => {
            let (_, imports) = strip_imports(code, language);
            let cp = assemble_classpath(&imports, idx, &extract_constraints(code, &imports));
            (cp.paths, cp.unresolved)
        }
        _ => (Vec::new(), Vec::new()),
    };
    Ok((validator.validate(code, &paths)?, paths, unresolved))
}

/// Repair `code_with_imports` through a validator and model conversation.
///
/// Each round validates the current code and, on failure, asks the model for
/// a revision. After the last round the latest revision is validated once
/// more so `compiled` describes the returned code.
pub fn fix(
    code_with_imports: &str,
    snippet: &CodeSnippet,
    cfg: &FixConfig,
    backend: &dyn LlmBackend,
    validator: &dyn Validator,
    kb: Option<&InverseIndex>,
) -> Result<FixOutcome, FixError> {
    cfg.validate()?;
    let language = snippet.language;
    let mut state = ConversationState::new(code_with_imports);
    let mut per_round = Vec::new();
    let mut body_modified = false;
    for round in 1..=cfg.max_rounds {
        let (report, classpath, unresolved) = validate_code(&state.last_code, language, validator, kb)?;
        if report.success {
            return Ok(FixOutcome {
                final_code: state.last_code,
                compiled: true,
                rounds_used: round - 1,
                per_round,
                final_report: report,
                body_modified,
                unresolved,
            });
        }
        state.last_error = report.error_log().to_string();
        let req = if round == 1 {
            build_prompt_2_first(&state.last_code, &state.last_error, language, cfg)
        } else {
            build_prompt_2_followup(&state, language, cfg)?
        };
        let req = req.with_tag(PromptKind::Fix, &snippet.id, round);
        let resp = backend.complete(&req)?;

        let mut record = FixRound {
            report,
            prompt: req.messages.clone(),
            response: resp.text.clone(),
            no_code: false,
            body_modified: false,
            rejected: false,
            classpath,
        };
        match extract_code_block(&resp.text, language) {
            Ok(candidate) => {
                record.body_modified = detect_body_modification(&snippet.body, &candidate, language);
                body_modified |= record.body_modified;
                if record.body_modified && cfg.guard_mode == GuardMode::Reject {
                    record.rejected = true;
                    log::debug!("{}: round {round} candidate changes the body; discarded", snippet.key());
                } else {
                    state.last_code = candidate;
                }
            }
            Err(_) => {
                record.no_code = true;
                log::debug!("{}: round {round} reply holds no code", snippet.key());
            }
        }
        // the conversation so far, newest last
        state.history.extend(req.messages.last().cloned());
        state.history.push(ChatMessage::assistant(resp.text));
        state.attempt_number = round + 1;
        per_round.push(record);
    }
    let (final_report, _, unresolved) = validate_code(&state.last_code, language, validator, kb)?;
    Ok(FixOutcome {
        final_code: state.last_code,
        compiled: final_report.success,
        rounds_used: cfg.max_rounds,
        per_round,
        final_report,
        body_modified,
        unresolved,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::llm::{MockBackend, TranscriptRecord};
    use crate::validate::{Diagnostic, DiagnosticCategory, Severity, Tool};
    use std::sync::Mutex;
    use std::time::Duration;

    /// Accepts code containing every `needle`; records each call.
    pub(crate) struct FakeValidator {
        pub needles: Vec<String>,
        pub seen: Mutex<Vec<(String, Vec<PathBuf>)>>,
    }

    impl FakeValidator {
        pub fn new(needles: &[&str]) -> Self {
            FakeValidator {
                needles: needles.iter().map(|s| s.to_string()).collect(),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl Validator for FakeValidator {
        fn language(&self) -> Language {
            Language::Java
        }

        fn validate(&self, code: &str, classpath: &[PathBuf]) -> Result<ValidationReport, ValidateError> {
            self.seen.lock().unwrap().push((code.to_string(), classpath.to_vec()));
            let missing: Vec<&String> = self.needles.iter().filter(|n| !code.contains(n.as_str())).collect();
            let diagnostics: Vec<Diagnostic> = missing
                .iter()
                .map(|n| Diagnostic {
                    file: "A.java".into(),
                    line: 1,
                    column: None,
                    severity: Severity::Error,
                    message: format!("cannot find symbol {n}"),
                    detail: String::new(),
                    category: DiagnosticCategory::SymbolNotFound,
                })
                .collect();
            Ok(ValidationReport {
                success: diagnostics.is_empty(),
                raw_log: diagnostics.iter().map(|d| format!("A.java:1: error: {}\n", d.message)).collect(),
                diagnostics,
                duration: Duration::ZERO,
                tool: Tool::JavaCompiler,
            })
        }
    }

    fn snippet(body: &str) -> CodeSnippet {
        CodeSnippet::new("s1", Language::Java, "lib", body, None)
    }

    fn fix_reply(code: &str) -> String {
        format!("Here is the fixed code:\n```java\n{code}```\n")
    }

    const BODY: &str = "public class A {\n    Foo f;\n}\n";

    #[test]
    fn already_compiles() {
        let v = FakeValidator::new(&[]);
        let mock = MockBackend::new(vec![]);
        let out = fix(BODY, &snippet(BODY), &FixConfig::default(), &mock, &v, None).unwrap();
        assert!(out.compiled);
        assert_eq!(out.rounds_used, 0);
        assert_eq!(mock.calls(), 0);
        assert!(out.per_round.is_empty());
    }

    #[test]
    fn fixed_in_one_round() {
        let v = FakeValidator::new(&["import x.Foo;"]);
        let fixed = format!("import x.Foo;\n{BODY}");
        let mock = MockBackend::new(vec![TranscriptRecord::new(PromptKind::Fix, "s1", Some(1), fix_reply(&fixed))]);
        let out = fix(BODY, &snippet(BODY), &FixConfig::default(), &mock, &v, None).unwrap();
        assert!(out.compiled);
        assert_eq!(out.rounds_used, 1);
        assert_eq!(mock.calls(), 1);
        assert_eq!(out.final_code, fixed);
        assert!(!out.body_modified);
        let prompt = &out.per_round[0].prompt;
        assert_eq!(prompt.len(), 1);
        assert!(prompt[0].content.contains("cannot find symbol import x.Foo;"));
    }

    #[test]
    fn exhaustion() {
        let v = FakeValidator::new(&["import x.Foo;"]);
        let mock = MockBackend::new(vec![TranscriptRecord::new(PromptKind::Fix, "s1", None, fix_reply(BODY)).reusable()]);
        let cfg = FixConfig::default();
        let out = fix(BODY, &snippet(BODY), &cfg, &mock, &v, None).unwrap();
        assert!(!out.compiled);
        assert_eq!(out.rounds_used, cfg.max_rounds);
        assert_eq!(mock.calls(), cfg.max_rounds as u64);
        // M rounds plus the final check
        assert_eq!(v.seen.lock().unwrap().len(), cfg.max_rounds as usize + 1);
        let second = &out.per_round[1].prompt;
        assert_eq!(second.len(), 3);
        assert!(second[2].content.contains("in your attempt 2."));
        assert!(!second[2].content.contains(PRESENTATION_GUIDE));
    }

    #[test]
    fn zero_rounds_validates_once() {
        let v = FakeValidator::new(&["nope"]);
        let mock = MockBackend::new(vec![]);
        let cfg = FixConfig {
            max_rounds: 0,
            ..Default::default()
        };
        let out = fix(BODY, &snippet(BODY), &cfg, &mock, &v, None).unwrap();
        assert!(!out.compiled);
        assert_eq!((out.rounds_used, mock.calls()), (0, 0));
    }

    #[test]
    fn no_code_keeps_previous() {
        let v = FakeValidator::new(&["import x.Foo;"]);
        let fixed = format!("import x.Foo;\n{BODY}");
        let mock = MockBackend::new(vec![
            TranscriptRecord::new(PromptKind::Fix, "s1", Some(1), "Sorry, I cannot help with that."),
            TranscriptRecord::new(PromptKind::Fix, "s1", Some(2), fix_reply(&fixed)),
        ]);
        let out = fix(BODY, &snippet(BODY), &FixConfig::default(), &mock, &v, None).unwrap();
        assert!(out.per_round[0].no_code);
        assert!(out.compiled);
        assert_eq!(out.rounds_used, 2);
    }

    #[test]
    fn guard_modes() {
        let v = FakeValidator::new(&["import x.Foo;"]);
        let changed = "import x.Foo;\npublic class A {\n    Bar f;\n}\n";
        let script = || MockBackend::new(vec![TranscriptRecord::new(PromptKind::Fix, "s1", None, fix_reply(changed)).reusable()]);
        let warn = fix(BODY, &snippet(BODY), &FixConfig::default(), &script(), &v, None).unwrap();
        assert!(warn.compiled && warn.body_modified);
        let reject_cfg = FixConfig {
            guard_mode: GuardMode::Reject,
            ..Default::default()
        };
        let reject = fix(BODY, &snippet(BODY), &reject_cfg, &script(), &v, None).unwrap();
        assert!(!reject.compiled);
        assert!(reject.body_modified);
        assert_eq!(reject.final_code, BODY);
        assert!(reject.per_round.iter().all(|r| r.rejected));
    }

    #[test]
    fn body_modification() {
        let j = Language::Java;
        let body = "class A {\n  int table = 1;\n  void f() { g(table); }\n}\n";
        assert!(!detect_body_modification(body, &format!("import a.B;\n\n{body}"), j));
        assert!(!detect_body_modification(body, "class A {\n    int   table = 1;\n\n  void f() { g(table); }\n}", j));
        assert!(detect_body_modification(body, "class A {\n  void f() { g(); }\n}\n", j));
        let gwt = "LayoutContainer c = new LayoutContainer();\n";
        assert!(detect_body_modification(gwt, "import x.Container;\nContainer c = new Container();\n", j));
    }

    #[test]
    fn prompts() {
        let cfg = FixConfig::default();
        let r = build_prompt_2_first("CODE", "LOG", Language::Java, &cfg);
        let t = &r.messages[0].content;
        assert!(t.starts_with(PRESENTATION_GUIDE));
        assert!(t.contains("must not modify code body"));
        let (code, log, mi) = (t.find("CODE").unwrap(), t.find("LOG").unwrap(), t.find("Now fix").unwrap());
        assert!(code < log && log < mi);
        assert_eq!(r.temperature, 0.5);
        let p = build_prompt_2_first("c", "e", Language::Python, &cfg);
        assert!(p.messages[0].content.contains("So, it can be run successfully"));

        let mut st = ConversationState::new("c");
        assert!(matches!(
            build_prompt_2_followup(&st, Language::Java, &cfg),
            Err(FixError::Precondition(1))
        ));
        st.attempt_number = 2;
        st.history = vec![ChatMessage::user("first"), ChatMessage::assistant("reply")];
        let f = build_prompt_2_followup(&st, Language::Java, &cfg).unwrap();
        assert_eq!(f.messages.len(), 3);
        assert!(f.messages[2].content.contains("attempt 2"));
    }

    #[test]
    fn truncation_drops_oldest() {
        let h: Vec<ChatMessage> = (0..6).map(|i| ChatMessage::user(format!("{i}").repeat(40))).collect();
        // 10 tokens each, 11 with margin
        assert_eq!(history_tokens(&h[..1]), 11);
        let kept = truncate_history(&h, 35);
        assert_eq!(kept.len(), 3);
        assert_eq!(kept.last(), h.last());
        assert!(truncate_history(&h, 5).is_empty());
        assert_eq!(truncate_history(&h, 1000).len(), 6);
    }
}
