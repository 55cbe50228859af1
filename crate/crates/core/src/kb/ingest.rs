use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{parse_class, records_from_classes, ClassParseError, ClassRecord, InverseIndex, KbError, LibraryArtifact};

/// What one archive contributed.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub artifact: LibraryArtifact,
    pub records: Vec<ClassRecord>,
    /// Class entries that failed to parse, with the reason.
    pub bad_entries: Vec<(String, ClassParseError)>,
}

fn zip_date(dt: zip::DateTime) -> Option<DateTime<Utc>> {
    // 1980-01-01 00:00 is the format's zero value, written by tools that
    // did not record a time
    if dt.year() <= 1980 && dt.month() == 1 && dt.day() == 1 && dt.hour() == 0 && dt.minute() == 0 {
        return None;
    }
    let date = NaiveDate::from_ymd_opt(dt.year() as i32, dt.month() as u32, dt.day() as u32)?;
    let t = date.and_hms_opt(dt.hour() as u32, dt.minute() as u32, dt.second() as u32)?;
    Some(Utc.from_utc_datetime(&t))
}

fn corrupt(path: &Path, e: impl std::fmt::Display) -> KbError {
    KbError::ArchiveCorrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Walk the entries of an archive, handing each class file to `on_class`.
/// Returns the archive date: the manifest time, else the newest entry time.
pub(crate) fn scan_archive(
    path: &Path,
    mut on_class: impl FnMut(&str, &[u8]),
) -> Result<Option<DateTime<Utc>>, KbError> {
    let file = File::open(path).map_err(|source| KbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut zip = zip::ZipArchive::new(file).map_err(|e| corrupt(path, e))?;
    let mut manifest_date = None;
    let mut newest: Option<DateTime<Utc>> = None;
    for i in 0..zip.len() {
        let mut entry = zip.by_index(i).map_err(|e| corrupt(path, e))?;
        let name = entry.name().to_string();
        let date = entry.last_modified().and_then(zip_date);
        if name.eq_ignore_ascii_case("META-INF/MANIFEST.MF") {
            manifest_date = date;
        }
        if let Some(d) = date {
            newest = Some(newest.map_or(d, |n| n.max(d)));
        }
        if entry.is_dir() || !name.ends_with(".class") {
            continue;
        }
        let mut bytes = Vec::with_capacity(entry.size() as usize);
        entry.read_to_end(&mut bytes).map_err(|e| corrupt(path, format!("{name}: {e}")))?;
        on_class(&name, &bytes);
    }
    Ok(manifest_date.or(newest))
}

/// Read every class in a class archive.
///
/// The archive date is the modification time of `META-INF/MANIFEST.MF`, or
/// the newest entry time when there is no manifest; `override_date` replaces
/// it. Entries that fail to parse are logged and skipped.
pub fn ingest_archive(path: &Path, artifact_id: &str, override_date: Option<DateTime<Utc>>) -> Result<Ingested, KbError> {
    let mut classes = Vec::new();
    let mut bad_entries = Vec::new();
    let date = scan_archive(path, |name, bytes| match parse_class(bytes) {
        Ok(c) => classes.push(c),
        Err(e) => {
            log::warn!("{}: skipping {name}: {e}", path.display());
            bad_entries.push((name.to_string(), e));
        }
    })?;
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
        bad_entries,
    })
}

fn parse_date(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Some(d.with_timezone(&Utc));
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Some(Utc.from_utc_datetime(&t));
    }
    let d = NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
    Some(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0)?))
}

/// Parse a manual dates file: one `artifact_id<TAB>ISO-8601 date` per line.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_dates(text: &str) -> Result<BTreeMap<String, DateTime<Utc>>, KbError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let bad = |message: String| KbError::BadDates { line: i + 1, message };
        let (id, date) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected artifact id and date separated by a tab".into()))?;
        let parsed = parse_date(date.trim()).ok_or_else(|| bad(format!("unreadable date {:?}", date.trim())))?;
        out.insert(id.trim().to_string(), parsed);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BuildReport {
    pub archives: usize,
    pub classes: usize,
    /// Archives left out, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
    pub bad_entries: usize,
}

/// Index every `.jar` file directly under `dir`. The artifact id is the file
/// name without extension. Archives are read in parallel and merged in file
/// name order.
pub fn build_index(dir: &Path, dates: &BTreeMap<String, DateTime<Utc>>) -> Result<(InverseIndex, BuildReport), KbError> {
    let io = |source| KbError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut jars: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("jar")))
        .collect();
    jars.sort();

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let mut results: Vec<Option<Result<Ingested, KbError>>> = (0..jars.len()).map(|_| None).collect();
    for (chunk_paths, chunk_out) in jars.chunks(workers).zip(results.chunks_mut(workers)) {
        std::thread::scope(|s| {
            for (p, slot) in chunk_paths.iter().zip(chunk_out.iter_mut()) {
                s.spawn(move || {
                    let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    *slot = Some(ingest_archive(p, &id, dates.get(&id).copied()));
                });
            }
        });
    }

    let mut idx = InverseIndex::new();
    let mut report = BuildReport::default();
    for (path, r) in jars.iter().zip(results) {
        match r.expect("every archive visited") {
            Ok(ing) => {
                report.archives += 1;
                report.classes += ing.records.len();
                report.bad_entries += ing.bad_entries.len();
                idx.add_artifact(ing.artifact, ing.records);
            }
            Err(e @ (KbError::MissingDate(_) | KbError::ArchiveCorrupt { .. })) => {
                log::warn!("skipping {}: {e}", path.display());
                report.skipped.push((path.clone(), e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    Ok((idx, report))
}

#[cfg(test)]
pub(crate) mod testjar {
    use std::io::Write;

    use zip::write::SimpleFileOptions;

    use super::*;

    /// Write an archive with the given entries; `date` stamps every entry
    /// (the format's zero date when `None`).
    pub fn write_jar(path: &Path, entries: &[(&str, Vec<u8>)], date: Option<(u16, u8, u8)>, manifest: bool) {
        let mut w = zip::ZipWriter::new(File::create(path).unwrap());
        let stamp = match date {
            Some((y, m, d)) => zip::DateTime::from_date_and_time(y, m, d, 12, 0, 0).unwrap(),
            None => zip::DateTime::default(),
        };
        let opts = SimpleFileOptions::default().last_modified_time(stamp);
        if manifest {
            w.start_file("META-INF/MANIFEST.MF", opts).unwrap();
            w.write_all(b"Manifest-Version: 1.0\r\n\r\n").unwrap();
        }
        for (name, bytes) in entries {
            w.start_file(*name, opts).unwrap();
            w.write_all(bytes).unwrap();
        }
        w.finish().unwrap();
    }
}
