//! Library knowledge base: an inverse index from fully qualified class names
//! to the archives that define them.
//!
//! Archives are read offline ([`ingest_archive`], [`build_index`]); the
//! resulting [`InverseIndex`] is saved as versioned JSON and consulted on
//! every fixing round to put the right archives on the compiler classpath.

mod classfile;
mod constraints;
mod index;
mod ingest;
mod javap;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classfile::{parse_class, ClassParseError, Member, RawClass};
pub use constraints::extract_constraints;
pub(crate) use constraints::code_only;
pub use index::{assemble_classpath, resolve_library, Candidate, Classpath, CollisionStats, InverseIndex};
pub use ingest::{build_index, ingest_archive, parse_dates, BuildReport, Ingested};
pub use javap::ingest_with_javap;
pub use store::{load_index, save_index, INDEX_FORMAT, INDEX_VERSION};

use classfile::{ACC_ABSTRACT, ACC_ANNOTATION, ACC_BRIDGE, ACC_INTERFACE, ACC_MODULE, ACC_PRIVATE, ACC_SYNTHETIC};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryArtifact {
    /// Name plus version, e.g. `joda-time-2.9.9`.
    pub artifact_id: String,
    pub archive_path: PathBuf,
    pub last_modified: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassKind {
    Class,
}

/// A concrete class as recorded in the index. `methods` and `fields` include
/// non-private members inherited from superclasses in the same archive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub fqn: String,
    pub kind: ClassKind,
    pub methods: BTreeSet<String>,
    pub fields: BTreeSet<String>,
    pub artifact_id: String,
}

/// Names of members a snippet uses on one class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintQuery {
    pub fqn: String,
    pub required_methods: BTreeSet<String>,
    pub required_fields: BTreeSet<String>,
}

impl ConstraintQuery {
    pub fn new(fqn: impl Into<String>) -> Self {
        ConstraintQuery {
            fqn: fqn.into(),
            ..Default::default()
        }
    }

    pub fn satisfied_by(&self, record: &ClassRecord) -> bool {
        self.required_methods.is_subset(&record.methods) && self.required_fields.is_subset(&record.fields)
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("archive {path} is corrupt: {message}")]
    ArchiveCorrupt { path: PathBuf, message: String },
    #[error("archive {0} has no readable date and no override was given")]
    MissingDate(String),
    #[error("dates file line {line}: {message}")]
    BadDates { line: usize, message: String },
    #[error("index is corrupt: {0}")]
    CorruptIndex(String),
    #[error("index format version {found}, expected {expected}")]
    FormatVersionMismatch { found: u32, expected: u32 },
    #[error("{0} not found on PATH")]
    ToolMissing(String),
}

/// Whether a class name denotes an anonymous or local class (`Outer$1`,
/// `Outer$1Local`).
fn is_anonymous(binary_name: &str) -> bool {
    binary_name
        .split('$')
        .skip(1)
        .any(|seg| seg.chars().next().is_some_and(|c| c.is_ascii_digit()))
}

fn is_recordable(c: &RawClass) -> bool {
    let simple = c.name.rsplit('.').next().unwrap_or(&c.name);
    c.access & (ACC_INTERFACE | ACC_ABSTRACT | ACC_ANNOTATION | ACC_SYNTHETIC | ACC_MODULE) == 0
        && simple != "module-info"
        && simple != "package-info"
        && !is_anonymous(&c.name)
}

fn visible(m: &Member, inherited: bool) -> bool {
    !(m.name.starts_with('<') || m.access & (ACC_SYNTHETIC | ACC_BRIDGE) != 0 || inherited && m.access & ACC_PRIVATE != 0)
}

/// Turn the classes of one archive into index records: concrete classes
/// only, nested names dotted, members merged down the superclass chain.
pub fn records_from_classes(classes: &[RawClass], artifact_id: &str) -> Vec<ClassRecord> {
    let by_name: BTreeMap<&str, &RawClass> = classes.iter().map(|c| (c.name.as_str(), c)).collect();
    let mut out: Vec<ClassRecord> = classes
        .iter()
        .filter(|c| is_recordable(c))
        .map(|c| {
            let mut methods = BTreeSet::new();
            let mut fields = BTreeSet::new();
            let mut cur: Option<&RawClass> = Some(c);
            let mut seen = BTreeSet::new();
            let mut inherited = false;
            while let Some(k) = cur {
                if !seen.insert(k.name.as_str()) {
                    break;
                }
                methods.extend(k.methods.iter().filter(|m| visible(m, inherited)).map(|m| m.name.clone()));
                fields.extend(k.fields.iter().filter(|m| visible(m, inherited)).map(|m| m.name.clone()));
                cur = k.super_name.as_deref().and_then(|s| by_name.get(s).copied());
                inherited = true;
            }
            ClassRecord {
                fqn: c.name.replace('$', "."),
                kind: ClassKind::Class,
                methods,
                fields,
                artifact_id: artifact_id.to_string(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.fqn.cmp(&b.fqn));
    out.dedup_by(|a, b| a.fqn == b.fqn);
    out
}
