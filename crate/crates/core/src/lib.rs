//! Turns incomplete code snippets into compilable units.
//!
//! The pipeline has two stages. Import inference samples a chat model several
//! times and keeps the import set with the most votes. Conversational fixing
//! then alternates between a validator (the Java compiler, or a static checker
//! plus interpreter for Python) and the model until the snippet compiles or
//! the round budget runs out. A knowledge base maps fully qualified class names
//! to library archives so the compiler sees the right classpath on every round.
//!
//! The [`eval`] module scores runs (compilation rate, precision/recall/F1 over
//! import statements, list-wise match categories, error taxonomy) and
//! [`pipeline`] wires everything together for the command-line tool.

pub mod eval;
pub mod fix;
pub mod infer;
pub mod kb;
pub mod llm;
pub mod pipeline;
pub mod prompts;
pub mod snippet;
pub mod validate;

pub use eval::{LibraryMetrics, RunSummary, SnippetScore};
pub use fix::{FixConfig, FixOutcome, GuardMode};
pub use infer::{InferenceConfig, InferenceResult};
pub use kb::{InverseIndex, LibraryArtifact};
pub use pipeline::{Pipeline, RunConfig, SnippetRecord, Stage};
pub use llm::{ChatMessage, CompletionRequest, CompletionResponse, LlmBackend, Role};
pub use snippet::{CodeSnippet, ImportSet, ImportStatement, Language, MatchCategory};
pub use validate::{Diagnostic, DiagnosticCategory, ValidationReport, Validator};
