mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use snippet_forge_core::eval::RunReport;
use snippet_forge_core::kb::{build_index, load_index, parse_dates, save_index, InverseIndex, KbError};
use snippet_forge_core::llm::{Budget, LiveBackend, LiveConfig, LlmBackend, Metered, MockBackend, PriceTable};
use snippet_forge_core::pipeline::{
    build_report, read_records, records_from_predictions, worksheet_rows, write_records, write_report, BackendKind,
    Pipeline, PipelineError, RunConfig, SnippetRecord, Stage,
};
use snippet_forge_core::snippet::{load_dataset, CodeSnippet, ImportSet, Language};
use snippet_forge_core::validate::{
    read_manifest, verify_manifest, JavaValidator, PythonValidator, Semaphore, ValidateError, Validator,
};

#[derive(Parser)]
#[command(name = "snippet-forge", version, about = "Make code snippets compilable: infer imports, then repair with compiler feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Knowledge base maintenance.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
    /// Infer import statements only.
    Infer(InferArgs),
    /// Repair snippets with compiler feedback only.
    Fix(FixArgs),
    /// Infer imports, then repair.
    Synthesize(SynthArgs),
    /// Score stored predictions against the dataset, without calling a model.
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum KbCommand {
    /// Index every .jar archive in a directory.
    Build {
        #[arg(long)]
        archives: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Tab-separated artifact id and ISO-8601 date, overriding archive dates.
        #[arg(long)]
        dates: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    mock_transcript: Option<PathBuf>,
    #[arg(long)]
    kb_index: Option<PathBuf>,
    #[arg(long)]
    python_env: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    k: Option<u32>,
    /// One sample per snippet (same as --k 1).
    #[arg(long)]
    no_self_consistency: bool,
}

#[derive(Args)]
struct FixArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    max_rounds: Option<u32>,
    /// Directory of `<library>/<id>.imports` to start from; without it the
    /// snippets are repaired as they are.
    #[arg(long)]
    imports: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    no_self_consistency: bool,
    #[arg(long)]
    max_rounds: Option<u32>,
    #[arg(long)]
    repetitions: Option<u32>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// A `records.json`, a run directory holding one, or a directory of
    /// `<library>/<id>.imports` files.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_ENV: u8 = 2;

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error: e.into(),
    }
}

fn env_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_ENV,
        error: e.into(),
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::Tool(_) | PipelineError::NoValidator(_) => env_err(e),
            _ => config_err(e),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors; 2 is kept for missing tools
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Kb {
            command: KbCommand::Build { archives, out, dates },
        } => kb_build(&archives, &out, dates.as_deref()),
        Command::Infer(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_k(&mut cfg, a.k, a.no_self_consistency);
            execute(cfg, Stage::InferOnly, None)
        }
        Command::Fix(a) => {
            let mut cfg = load_config(&a.common)?;
            if let Some(m) = a.max_rounds {
                cfg.fix.max_rounds = m;
            }
            execute(cfg, Stage::FixOnly, a.imports.as_deref())
        }
        Command::Synthesize(a) => {
            let mut cfg = load_config(&a.common)?;
            apply_k(&mut cfg, a.k, a.no_self_consistency);
            if let Some(m) = a.max_rounds {
                cfg.fix.max_rounds = m;
            }
            if let Some(r) = a.repetitions {
                cfg.repetitions = r;
            }
            execute(cfg, Stage::Synthesize, None)
        }
        Command::Eval(a) => eval(a),
    }
}

fn apply_k(cfg: &mut RunConfig, k: Option<u32>, no_sc: bool) {
    if let Some(k) = k {
        cfg.inference.k_samples = k;
    }
    if no_sc {
        cfg.inference.k_samples = 1;
    }
}

fn base_config(config: Option<&Path>) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    config::apply_env(&mut cfg, &config::env_vars()).map_err(config_err)?;
    match config {
        Some(path) => config::apply_file(cfg, path).map_err(config_err),
        None => Ok(cfg),
    }
}

fn load_config(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = base_config(c.config.as_deref())?;
    if let Some(v) = &c.dataset {
        cfg.dataset_root = Some(v.clone());
    }
    if let Some(v) = &c.backend {
        cfg.backend = config::backend_from_flag(v).map_err(config_err)?;
    }
    if let Some(v) = &c.mock_transcript {
        cfg.mock_transcript = Some(v.clone());
    }
    if let Some(v) = &c.kb_index {
        cfg.kb_index = Some(v.clone());
    }
    if let Some(v) = &c.python_env {
        cfg.python_env = Some(v.clone());
    }
    if let Some(v) = c.parallelism {
        cfg.parallelism = v;
    }
    if let Some(v) = &c.out {
        cfg.out_dir = v.clone();
    }
    Ok(cfg)
}

fn kb_build(archives: &Path, out: &Path, dates: Option<&Path>) -> Outcome {
    let dates = match dates {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(config_err)?;
            parse_dates(&text).map_err(config_err)?
        }
        None => BTreeMap::new(),
    };
    let (idx, report) = build_index(archives, &dates).map_err(kb_failure)?;
    save_index(&idx, out).map_err(kb_failure)?;
    println!(
        "indexed {} classes from {} archives ({} skipped, {} unreadable entries) into {}",
        report.classes,
        report.archives,
        report.skipped.len(),
        report.bad_entries,
        out.display()
    );
    Ok(())
}

fn kb_failure(e: KbError) -> Failure {
    match e {
        KbError::ToolMissing(_) => env_err(e),
        _ => config_err(e),
    }
}

fn load_snippets(cfg: &RunConfig) -> Result<Vec<CodeSnippet>, Failure> {
    let root = cfg
        .dataset_root
        .as_ref()
        .ok_or_else(|| config_err(anyhow!("no dataset given (--dataset, dataset_root or SNIPPET_FORGE_DATASET)")))?;
    let snippets = load_dataset(root).map_err(config_err)?;
    if snippets.is_empty() {
        return Err(config_err(anyhow!("no snippets found under {}", root.display())));
    }
    Ok(snippets)
}

/// The backend for each repetition. Scripted transcripts are replayed from
/// the start every time; a live backend and its spending ceiling are shared.
enum Backends {
    Live(Metered<LiveBackend>),
    Mock(PathBuf),
}

impl Backends {
    fn open(cfg: &RunConfig) -> Result<Self, Failure> {
        match cfg.backend {
            BackendKind::Mock => {
                let path = cfg.mock_transcript.clone().ok_or_else(|| config_err(anyhow!("the mock backend needs --mock-transcript")))?;
                MockBackend::from_path(&path).map_err(config_err)?;
                Ok(Backends::Mock(path))
            }
            BackendKind::Live => {
                let key = config::api_key().ok_or_else(|| {
                    config_err(anyhow!("no API key: set {}", config::API_KEY_VARS.join(" or ")))
                })?;
                let mut live = LiveConfig {
                    api_key: key,
                    max_in_flight: cfg.max_in_flight,
                    requests_per_minute: cfg.requests_per_minute,
                    ..LiveConfig::default()
                };
                if let Some(e) = &cfg.endpoint {
                    live.endpoint = e.clone();
                }
                let backend = LiveBackend::new(live).map_err(config_err)?;
                let budget = Budget {
                    max_cost_usd: cfg.max_cost_usd,
                    max_total_tokens: None,
                };
                std::fs::create_dir_all(&cfg.out_dir).map_err(config_err)?;
                Ok(Backends::Live(
                    Metered::new(backend, PriceTable::default(), budget).with_ledger_file(cfg.out_dir.join("usage.csv")),
                ))
            }
        }
    }

    fn for_repetition(&self) -> Result<Box<dyn LlmBackend + '_>, Failure> {
        match self {
            Backends::Live(b) => Ok(Box::new(b)),
            Backends::Mock(p) => Ok(Box::new(MockBackend::from_path(p).map_err(config_err)?)),
        }
    }
}

struct Tools {
    kb: Option<InverseIndex>,
    java: Option<JavaValidator>,
    python: Option<PythonValidator>,
}

fn prepare_tools(cfg: &RunConfig, snippets: &[CodeSnippet], stage: Stage) -> Result<Tools, Failure> {
    let mut tools = Tools {
        kb: None,
        java: None,
        python: None,
    };
    if stage == Stage::InferOnly {
        return Ok(tools);
    }
    cfg.check_resources(snippets)?;
    let timeout = Duration::from_secs(cfg.validator_timeout_secs);
    let permits = Semaphore::new(cfg.max_tool_processes.max(1));
    let uses = |l: Language| snippets.iter().any(|s| s.language == l);
    if let (true, Some(p)) = (uses(Language::Java), &cfg.kb_index) {
        tools.kb = Some(load_index(p).map_err(kb_failure)?);
        let javac = JavaValidator::new().with_timeout(timeout).with_semaphore(Arc::clone(&permits));
        if !javac.available() {
            return Err(env_err(anyhow!("Java compiler {} not found", javac.javac.display())));
        }
        tools.java = Some(javac);
    }
    if let (true, Some(env)) = (uses(Language::Python), &cfg.python_env) {
        let py = PythonValidator::new(env).with_timeout(timeout).with_semaphore(permits);
        if !py.python().exists() {
            return Err(env_err(ValidateError::EnvMissing(env.clone())));
        }
        if let Some(manifest) = &cfg.python_manifest {
            let wanted = read_manifest(manifest).map_err(env_err)?;
            verify_manifest(&py, &wanted).map_err(env_err)?;
        }
        tools.python = Some(py);
    }
    Ok(tools)
}

fn seed_imports(dir: Option<&Path>, snippets: &[CodeSnippet]) -> Result<BTreeMap<String, ImportSet>, Failure> {
    let Some(dir) = dir else { return Ok(BTreeMap::new()) };
    let records = records_from_predictions(dir, snippets)?;
    Ok(records.into_iter().map(|r| (r.key(), r.final_imports)).collect())
}

fn execute(cfg: RunConfig, stage: Stage, imports_dir: Option<&Path>) -> Outcome {
    cfg.validate()?;
    let snippets = load_snippets(&cfg)?;
    let tools = prepare_tools(&cfg, &snippets, stage)?;
    let seeds = seed_imports(imports_dir, &snippets)?;
    let backends = Backends::open(&cfg)?;

    let mut reps: Vec<Vec<SnippetRecord>> = Vec::new();
    for rep in 1..=cfg.repetitions {
        let backend = backends.for_repetition()?;
        let pipeline = Pipeline {
            backend: &*backend,
            java: tools.java.as_ref().map(|v| v as &dyn Validator),
            python: tools.python.as_ref().map(|v| v as &dyn Validator),
            kb: tools.kb.as_ref(),
            inference: cfg.inference.clone(),
            fix: cfg.fix.clone(),
            parallelism: cfg.parallelism,
        };
        log::info!("repetition {rep}/{}: {} snippets", cfg.repetitions, snippets.len());
        let records = pipeline.run(&snippets, stage, &seeds)?;
        let dir = if cfg.repetitions > 1 {
            cfg.out_dir.join(format!("rep-{rep}"))
        } else {
            cfg.out_dir.clone()
        };
        write_records(&dir, &records, &snippets)?;
        reps.push(records);
    }
    if let Backends::Live(m) = &backends {
        let t = m.totals();
        log::info!(
            "{} calls, {} prompt and {} output tokens, ${:.4}",
            t.calls,
            t.prompt_tokens,
            t.output_tokens,
            t.cost_usd
        );
    }
    report(&cfg.out_dir, &reps, &snippets)
}

fn report(out: &Path, reps: &[Vec<SnippetRecord>], snippets: &[CodeSnippet]) -> Outcome {
    let failed = reps.iter().flatten().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} snippet runs recorded an error; see records.json");
    }
    if !snippets.iter().any(|s| s.ground_truth.is_some()) {
        log::info!("dataset has no expected imports; skipping metrics");
        return Ok(());
    }
    let report = build_report(reps, snippets).map_err(config_err)?;
    write_report(out, &report, &worksheet_rows(&reps[0], snippets))?;
    print_summary(&report);
    Ok(())
}

fn print_summary(report: &RunReport) {
    let s = report.median.as_ref().unwrap_or(&report.summary);
    for l in &s.libraries {
        println!(
            "{:<20} F1 {:.3}  Rec {:.3}  Pre {:.3}  CR {}/{}",
            l.library_label, l.f1, l.recall, l.precision, l.compiled_count, l.total_count
        );
    }
    println!(
        "{:<20} F1 {:.3}  Rec {:.3}  Pre {:.3}  CR {}/{} ({:.1}%)",
        "Summary",
        s.macro_f1,
        s.macro_recall,
        s.macro_precision,
        s.compiled,
        s.total,
        100.0 * s.compilation_rate
    );
}

fn eval(a: EvalArgs) -> Outcome {
    let mut cfg = base_config(a.config.as_deref())?;
    if let Some(d) = a.dataset {
        cfg.dataset_root = Some(d);
    }
    if let Some(o) = a.out {
        cfg.out_dir = o;
    }
    let snippets = load_snippets(&cfg)?;
    let p = &a.predictions;
    let records = if p.is_file() {
        read_records(p)?
    } else if p.join("records.json").is_file() {
        read_records(&p.join("records.json"))?
    } else if p.is_dir() {
        records_from_predictions(p, &snippets)?
    } else {
        return Err(config_err(anyhow!("{} does not exist", p.display())));
    };
    if records.is_empty() {
        return Err(config_err(anyhow!("no predictions found in {}", p.display())));
    }
    report(&cfg.out_dir, &[records], &snippets)
}
