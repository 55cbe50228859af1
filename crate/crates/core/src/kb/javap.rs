//! Second ingestion route that reads class metadata through the JDK
//! disassembler instead of parsing class files directly.

use std::io;
use std::path::Path;
use std::process::Command;

use chrono::{DateTime, Utc};

use super::ingest::scan_archive;
use super::{records_from_classes, Ingested, KbError, LibraryArtifact, Member, RawClass};

const BATCH: usize = 200;

fn parse_flags(line: &str) -> Option<u16> {
    let hex = line.trim().strip_prefix("flags: (0x")?;
    u16::from_str_radix(hex.get(..4)?, 16).ok()
}

/// Name declared by a member line of the verbose listing.
fn member_name(decl: &str) -> Option<(String, bool)> {
    let decl = decl.trim().trim_end_matches(';');
    if decl == "static {}" {
        return Some(("<clinit>".into(), true));
    }
    match decl.split_once('(') {
        Some((head, _)) => {
            let name = head.split_whitespace().last()?;
            // constructors are printed with the class name
            let name = if name.contains('.') { "<init>" } else { name };
            Some((name.to_string(), true))
        }
        None => {
            let name = decl.split_whitespace().last()?;
            Some((name.to_string(), false))
        }
    }
}

fn class_header(line: &str) -> Option<(String, Option<String>)> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let kw = words.iter().position(|w| matches!(*w, "class" | "interface" | "enum"))?;
    let name = words.get(kw + 1)?.split('<').next()?.to_string();
    let sup = words
        .iter()
        .position(|w| *w == "extends")
        .and_then(|i| words.get(i + 1))
        .map(|s| s.split('<').next().unwrap_or(s).trim_end_matches(',').to_string());
    Some((name, sup))
}

/// Parse `javap -p -v` output covering one or more classes.
pub(crate) fn parse_verbose(out: &str) -> Vec<RawClass> {
    let mut classes = Vec::new();
    let mut cur: Option<RawClass> = None;
    let mut in_body = false;
    let mut pending: Option<(String, bool)> = None;
    let mut expect_header = false;
    for line in out.lines() {
        if line.starts_with("Classfile ") {
            classes.extend(cur.take());
            in_body = false;
            expect_header = true;
            continue;
        }
        if !line.starts_with(' ') && !in_body {
            if line == "{" {
                in_body = true;
            } else if let Some((name, sup)) = class_header(line).filter(|_| expect_header) {
                expect_header = false;
                let sup = if line.contains(" interface ") || line.starts_with("interface ") {
                    None
                } else {
                    sup.or_else(|| Some("java.lang.Object".into()))
                };
                cur = Some(RawClass {
                    name,
                    super_name: sup,
                    access: 0,
                    fields: vec![],
                    methods: vec![],
                });
            }
            continue;
        }
        let Some(c) = cur.as_mut() else { continue };
        if !in_body {
            if line.starts_with("  flags:") {
                c.access = parse_flags(line).unwrap_or(0);
            }
            continue;
        }
        if line == "}" {
            in_body = false;
            continue;
        }
        if line.starts_with("  ") && !line.starts_with("   ") && line.trim_end().ends_with(';') {
            pending = member_name(line);
        } else if line.starts_with("    flags:") {
            if let (Some((name, is_method)), Some(access)) = (pending.take(), parse_flags(line)) {
                let m = Member { name, access };
                if is_method {
                    c.methods.push(m);
                } else {
                    c.fields.push(m);
                }
            }
        }
    }
    classes.extend(cur);
    classes
}

/// Like [`super::ingest_archive`], but class metadata comes from running
/// `javap` on the archive.
pub fn ingest_with_javap(
    path: &Path,
    artifact_id: &str,
    override_date: Option<DateTime<Utc>>,
    javap: &Path,
) -> Result<Ingested, KbError> {
    let mut names = Vec::new();
    let date = scan_archive(path, |name, _| {
        names.push(name.trim_end_matches(".class").replace('/', "."));
    })?;
    names.retain(|n| !n.ends_with("module-info"));
    let mut classes = Vec::new();
    for batch in names.chunks(BATCH) {
        let out = Command::new(javap)
            .arg("-p")
            .arg("-v")
            .arg("-cp")
            .arg(path)
            .args(batch)
            .output()
            .map_err(|e| match e.kind() {
                io::ErrorKind::NotFound => KbError::ToolMissing(javap.display().to_string()),
                _ => KbError::Io {
                    path: javap.to_path_buf(),
                    source: e,
                },
            })?;
        classes.extend(parse_verbose(&String::from_utf8_lossy(&out.stdout)));
    }
    let last_modified = override_date
        .or(date)
        .ok_or_else(|| KbError::MissingDate(artifact_id.to_string()))?;
    Ok(Ingested {
        artifact: LibraryArtifact {
            artifact_id: artifact_id.to_string(),
            archive_path: path.to_path_buf(),
            last_modified,
        },
        records: records_from_classes(&classes, artifact_id),
        bad_entries: Vec::new(),
    })
}
