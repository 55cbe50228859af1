//! Run configuration: defaults, then environment, then the config file, then
//! command-line flags, each layer overriding the one before.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use snippet_forge_core::pipeline::{BackendKind, RunConfig};
use snippet_forge_core::validate::PYTHON_ENV_VAR;

pub const API_KEY_VARS: [&str; 2] = ["SNIPPET_FORGE_API_KEY", "OPENAI_API_KEY"];

/// First non-empty API key found in the environment.
pub fn api_key() -> Option<String> {
    API_KEY_VARS
        .iter()
        .filter_map(|v| env::var(v).ok())
        .find(|k| !k.trim().is_empty())
}

fn parse_backend(s: &str) -> Result<BackendKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "live" => Ok(BackendKind::Live),
        "mock" => Ok(BackendKind::Mock),
        other => bail!("unknown backend {other:?}, expected live or mock"),
    }
}

/// Settings taken from `SNIPPET_FORGE_*` variables.
pub fn apply_env(cfg: &mut RunConfig, vars: &BTreeMap<String, String>) -> Result<()> {
    let get = |k: &str| vars.get(k).filter(|v| !v.is_empty());
    if let Some(v) = get("SNIPPET_FORGE_DATASET") {
        cfg.dataset_root = Some(v.into());
    }
    if let Some(v) = get("SNIPPET_FORGE_KB_INDEX") {
        cfg.kb_index = Some(v.into());
    }
    if let Some(v) = get(PYTHON_ENV_VAR) {
        cfg.python_env = Some(v.into());
    }
    if let Some(v) = get("SNIPPET_FORGE_BACKEND") {
        cfg.backend = parse_backend(v)?;
    }
    if let Some(v) = get("SNIPPET_FORGE_MOCK_TRANSCRIPT") {
        cfg.mock_transcript = Some(v.into());
    }
    if let Some(v) = get("SNIPPET_FORGE_ENDPOINT") {
        cfg.endpoint = Some(v.clone());
    }
    if let Some(v) = get("SNIPPET_FORGE_MODEL") {
        cfg.inference.model_id = v.clone();
        cfg.fix.model_id = v.clone();
    }
    if let Some(v) = get("SNIPPET_FORGE_OUT") {
        cfg.out_dir = v.into();
    }
    Ok(())
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(existing) => merge(existing, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Layer a TOML file over `cfg`. Keys absent from the file keep their
/// current value. Relative paths in the file are taken relative to it.
pub fn apply_file(cfg: RunConfig, path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: toml::Value = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut base = toml::Value::try_from(&cfg).context("serializing configuration")?;
    merge(&mut base, file.clone());
    let mut out: RunConfig = base.try_into().with_context(|| format!("invalid configuration in {}", path.display()))?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let set = |k: &str| file.get(k).is_some();
    let rebase = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = dir.join(&*p);
        }
    };
    for (key, slot) in [
        ("dataset_root", &mut out.dataset_root),
        ("kb_index", &mut out.kb_index),
        ("python_env", &mut out.python_env),
        ("python_manifest", &mut out.python_manifest),
        ("mock_transcript", &mut out.mock_transcript),
    ] {
        if set(key) {
            if let Some(p) = slot.as_mut() {
                rebase(p);
            }
        }
    }
    if set("out_dir") {
        rebase(&mut out.out_dir);
    }
    Ok(out)
}

pub fn env_vars() -> BTreeMap<String, String> {
    env::vars().filter(|(k, _)| k.starts_with("SNIPPET_FORGE_")).collect()
}

pub fn backend_from_flag(s: &str) -> Result<BackendKind> {
    parse_backend(s)
}
