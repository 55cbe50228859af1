use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ClassRecord, ConstraintQuery, KbError, LibraryArtifact};
use crate::snippet::{ImportSet, ImportStatement, Language};

/// One archive defining a class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub artifact_id: String,
    pub last_modified: DateTime<Utc>,
}

/// FQN to candidate archives, newest first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InverseIndex {
    artifacts: BTreeMap<String, LibraryArtifact>,
    candidates: BTreeMap<String, Vec<Candidate>>,
    /// fqn → artifact_id → record
    records: BTreeMap<String, BTreeMap<String, ClassRecord>>,
}

/// Newest first; equal dates by artifact id, smallest first.
fn candidate_order(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.last_modified
        .cmp(&a.last_modified)
        .then_with(|| a.artifact_id.cmp(&b.artifact_id))
}

impl InverseIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an archive and its records, replacing an earlier archive with the
    /// same id.
    pub fn add_artifact(&mut self, artifact: LibraryArtifact, records: Vec<ClassRecord>) {
        let id = artifact.artifact_id.clone();
        if self.artifacts.contains_key(&id) {
            self.remove_artifact(&id);
        }
        for mut rec in records {
            rec.artifact_id = id.clone();
            let list = self.candidates.entry(rec.fqn.clone()).or_default();
            list.push(Candidate {
                artifact_id: id.clone(),
                last_modified: artifact.last_modified,
            });
            list.sort_by(candidate_order);
            list.dedup_by(|a, b| a.artifact_id == b.artifact_id);
            self.records.entry(rec.fqn.clone()).or_default().insert(id.clone(), rec);
        }
        self.artifacts.insert(id, artifact);
    }

    fn remove_artifact(&mut self, id: &str) {
        self.artifacts.remove(id);
        self.candidates.retain(|_, list| {
            list.retain(|c| c.artifact_id != id);
            !list.is_empty()
        });
        self.records.retain(|_, m| {
            m.remove(id);
            !m.is_empty()
        });
    }

    pub fn is_empty(&self) -> bool {
        self.artifacts.is_empty()
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &LibraryArtifact> {
        self.artifacts.values()
    }

    pub fn artifact(&self, id: &str) -> Option<&LibraryArtifact> {
        self.artifacts.get(id)
    }

    /// Number of distinct FQNs.
    pub fn fqn_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn fqns(&self) -> impl Iterator<Item = &str> {
        self.candidates.keys().map(String::as_str)
    }

    pub fn contains_fqn(&self, fqn: &str) -> bool {
        self.candidates.contains_key(fqn)
    }

    pub fn candidates(&self, fqn: &str) -> &[Candidate] {
        self.candidates.get(fqn).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn record(&self, fqn: &str, artifact_id: &str) -> Option<&ClassRecord> {
        self.records.get(fqn)?.get(artifact_id)
    }

    pub fn records(&self) -> impl Iterator<Item = &ClassRecord> {
        self.records.values().flat_map(|m| m.values())
    }

    /// Whether any indexed class lives directly in `package`.
    pub fn has_package(&self, package: &str) -> bool {
        let prefix = format!("{package}.");
        self.candidates
            .range(prefix.clone()..)
            .take_while(|(k, _)| k.starts_with(&prefix))
            .any(|(k, _)| !k[prefix.len()..].contains('.'))
    }

    /// Candidates for `q.fqn` whose record has every required member, in
    /// resolution order.
    pub fn surviving(&self, q: &ConstraintQuery) -> Vec<&Candidate> {
        self.candidates(&q.fqn)
            .iter()
            .filter(|c| self.record(&q.fqn, &c.artifact_id).is_some_and(|r| q.satisfied_by(r)))
            .collect()
    }

    /// Rebuild from stored parts, checking that every record points at a
    /// known archive.
    pub(crate) fn from_parts(artifacts: Vec<LibraryArtifact>, records: Vec<ClassRecord>) -> Result<Self, KbError> {
        let mut grouped: BTreeMap<String, Vec<ClassRecord>> =
            artifacts.iter().map(|a| (a.artifact_id.clone(), Vec::new())).collect();
        if grouped.len() != artifacts.len() {
            return Err(KbError::CorruptIndex("duplicate artifact id".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for r in records {
            if r.fqn.is_empty() {
                return Err(KbError::CorruptIndex("record with empty fqn".into()));
            }
            if !seen.insert((r.fqn.clone(), r.artifact_id.clone())) {
                return Err(KbError::CorruptIndex(format!("duplicate record {} in {}", r.fqn, r.artifact_id)));
            }
            match grouped.get_mut(&r.artifact_id) {
                Some(list) => list.push(r),
                None => {
                    return Err(KbError::CorruptIndex(format!(
                        "record {} refers to unknown artifact {}",
                        r.fqn, r.artifact_id
                    )))
                }
            }
        }
        let mut idx = InverseIndex::new();
        for a in artifacts {
            let recs = grouped.remove(&a.artifact_id).unwrap_or_default();
            idx.add_artifact(a, recs);
        }
        Ok(idx)
    }

    /// Share of queries with more than one satisfying candidate before the
    /// date tie-break.
    pub fn collision_stats<'a>(&self, queries: impl IntoIterator<Item = &'a ConstraintQuery>) -> CollisionStats {
        let mut s = CollisionStats::default();
        for q in queries {
            let n = self.surviving(q).len();
            if n == 0 {
                continue;
            }
            s.resolved += 1;
            if n > 1 {
                s.collisions += 1;
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionStats {
    /// Queries with at least one satisfying candidate.
    pub resolved: usize,
    /// Queries with more than one.
    pub collisions: usize,
}

impl CollisionStats {
    pub fn rate(&self) -> f64 {
        if self.resolved == 0 {
            0.0
        } else {
            self.collisions as f64 / self.resolved as f64
        }
    }
}

/// The newest archive defining `q.fqn` with every required member. Equal
/// dates go to the smallest artifact id. `None` when nothing qualifies.
pub fn resolve_library<'a>(q: &ConstraintQuery, idx: &'a InverseIndex) -> Option<&'a LibraryArtifact> {
    let best = idx.surviving(q).into_iter().next()?;
    idx.artifact(&best.artifact_id)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classpath {
    pub paths: Vec<PathBuf>,
    /// Imported names no archive provides.
    pub unresolved: Vec<String>,
}

/// Packages the JDK itself provides; imports from them need no archive.
const PLATFORM_PREFIXES: &[&str] = &[
    "java.", "javax.annotation.processing.", "javax.crypto.", "javax.imageio.", "javax.lang.model.",
    "javax.management.", "javax.naming.", "javax.net.", "javax.print.", "javax.script.", "javax.security.",
    "javax.sound.", "javax.sql.", "javax.swing.", "javax.tools.", "javax.xml.", "javax.accessibility.",
    "javax.rmi.", "jdk.", "sun.", "com.sun.", "org.w3c.dom.", "org.xml.sax.", "org.ietf.jgss.",
];

fn is_platform(name: &str) -> bool {
    let dotted = format!("{name}.");
    PLATFORM_PREFIXES.iter().any(|p| dotted.starts_with(p))
}

/// The class an import refers to, for index lookup.
fn import_class(stmt: &ImportStatement) -> (String, bool) {
    if stmt.is_static && !stmt.wildcard {
        // import static a.B.m; -> class a.B
        let cls = stmt.fqn.rsplit_once('.').map(|(c, _)| c).unwrap_or(&stmt.fqn);
        return (cls.to_string(), false);
    }
    (stmt.fqn.clone(), stmt.wildcard && !stmt.is_static)
}

/// Archives for the classes `imports` names, newest qualifying archive per
/// import, each path once in first-resolution order.
///
/// When the constraints rule out every candidate for an indexed class, the
/// newest unconstrained candidate is used so the compiler still sees the
/// library. Imports from JDK packages are skipped; any other name with no
/// candidate is reported as unresolved.
pub fn assemble_classpath(
    imports: &ImportSet,
    idx: &InverseIndex,
    constraints: &BTreeMap<String, ConstraintQuery>,
) -> Classpath {
    let mut cp = Classpath::default();
    let push = |cp: &mut Classpath, a: &LibraryArtifact| {
        if !cp.paths.contains(&a.archive_path) {
            cp.paths.push(a.archive_path.clone());
        }
    };
    for stmt in imports.iter() {
        if stmt.language != Language::Java {
            continue;
        }
        let (name, package) = import_class(stmt);
        if package {
            let prefix = format!("{name}.");
            let newest = idx
                .candidates
                .range(prefix.clone()..)
                .take_while(|(k, _)| k.starts_with(&prefix))
                .filter(|(k, _)| !k[prefix.len()..].contains('.'))
                .flat_map(|(_, list)| list.iter())
                .min_by(|a, b| candidate_order(a, b));
            match newest.and_then(|c| idx.artifact(&c.artifact_id)) {
                Some(a) => push(&mut cp, a),
                None if is_platform(&name) => {}
                None => cp.unresolved.push(format!("{name}.*")),
            }
            continue;
        }
        let q = constraints.get(&name).cloned().unwrap_or_else(|| ConstraintQuery::new(&name));
        if let Some(a) = resolve_library(&q, idx) {
            push(&mut cp, a);
        } else if let Some(a) = resolve_library(&ConstraintQuery::new(&name), idx) {
            log::debug!("constraints on {name} match no archive; using {}", a.artifact_id);
            push(&mut cp, a);
        } else if !is_platform(&name) {
            cp.unresolved.push(name);
        }
    }
    cp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::ClassKind;
    use chrono::TimeZone;

    fn art(id: &str, year: i32) -> LibraryArtifact {
        LibraryArtifact {
            artifact_id: id.into(),
            archive_path: PathBuf::from(format!("/libs/{id}.jar")),
            last_modified: Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap(),
        }
    }

    fn rec(fqn: &str, methods: &[&str]) -> ClassRecord {
        ClassRecord {
            fqn: fqn.into(),
            kind: ClassKind::Class,
            methods: methods.iter().map(|s| s.to_string()).collect(),
            fields: Default::default(),
            artifact_id: String::new(),
        }
    }

    fn sample() -> InverseIndex {
        let mut idx = InverseIndex::new();
        idx.add_artifact(art("lib-1.0", 2015), vec![rec("p.C", &["old", "both"]), rec("p.D", &[])]);
        idx.add_artifact(art("lib-2.0", 2019), vec![rec("p.C", &["new", "both"])]);
        idx.add_artifact(art("joda-time-2.9.9", 2017), vec![rec("org.joda.time.Duration", &["getMillis"])]);
        idx
    }

    fn imports(lines: &str) -> ImportSet {
        ImportSet::parse_lines(lines, Language::Java).unwrap()
    }

    #[test]
    fn newest_satisfying_candidate() {
        let idx = sample();
        let mut q = ConstraintQuery::new("p.C");
        assert_eq!(resolve_library(&q, &idx).unwrap().artifact_id, "lib-2.0");
        q.required_methods.insert("old".into());
        assert_eq!(resolve_library(&q, &idx).unwrap().artifact_id, "lib-1.0");
        q.required_methods.insert("new".into());
        assert!(resolve_library(&q, &idx).is_none());
        assert!(resolve_library(&ConstraintQuery::new("p.Missing"), &idx).is_none());
        let q = ConstraintQuery::new("org.joda.time.Duration");
        assert_eq!(resolve_library(&q, &idx).unwrap().artifact_id, "joda-time-2.9.9");
    }

    #[test]
    fn equal_dates_pick_smallest_id() {
        let mut idx = InverseIndex::new();
        idx.add_artifact(art("zeta", 2018), vec![rec("p.C", &[])]);
        idx.add_artifact(art("alpha", 2018), vec![rec("p.C", &[])]);
        assert_eq!(resolve_library(&ConstraintQuery::new("p.C"), &idx).unwrap().artifact_id, "alpha");
    }

    #[test]
    fn classpath_assembly() {
        let idx = sample();
        let none = BTreeMap::new();
        assert_eq!(assemble_classpath(&ImportSet::new(), &idx, &none), Classpath::default());

        let cp = assemble_classpath(
            &imports("import org.joda.time.Duration;\nimport org.joda.time.PeriodFormatterBuilder;\nimport java.util.List;"),
            &idx,
            &none,
        );
        assert_eq!(cp.paths, [PathBuf::from("/libs/joda-time-2.9.9.jar")]);
        assert_eq!(cp.unresolved, ["org.joda.time.PeriodFormatterBuilder"]);

        let cp = assemble_classpath(&imports("import p.C;\nimport p.D;"), &idx, &none);
        assert_eq!(cp.paths, [PathBuf::from("/libs/lib-2.0.jar"), PathBuf::from("/libs/lib-1.0.jar")]);

        let mut cons = BTreeMap::new();
        let mut q = ConstraintQuery::new("p.C");
        q.required_methods.insert("old".into());
        cons.insert("p.C".to_string(), q);
        let cp = assemble_classpath(&imports("import p.C;\nimport p.D;"), &idx, &cons);
        assert_eq!(cp.paths, [PathBuf::from("/libs/lib-1.0.jar")]);
    }

    #[test]
    fn wildcard_and_static_imports() {
        let idx = sample();
        let none = BTreeMap::new();
        let cp = assemble_classpath(&imports("import org.joda.time.*;\nimport java.util.*;\nimport nope.*;"), &idx, &none);
        assert_eq!(cp.paths.len(), 1);
        assert_eq!(cp.unresolved, ["nope.*"]);
        let cp = assemble_classpath(&imports("import static p.C.both;"), &idx, &none);
        assert_eq!(cp.paths, [PathBuf::from("/libs/lib-2.0.jar")]);
        assert!(idx.has_package("org.joda.time"));
        assert!(!idx.has_package("org.joda"));
    }

    #[test]
    fn collisions() {
        let idx = sample();
        let qs = [ConstraintQuery::new("p.C"), ConstraintQuery::new("p.D"), ConstraintQuery::new("x.Y")];
        let s = idx.collision_stats(&qs);
        assert_eq!((s.resolved, s.collisions), (2, 1));
        assert!((s.rate() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn replacing_an_artifact() {
        let mut idx = sample();
        idx.add_artifact(art("lib-2.0", 2019), vec![rec("p.E", &[])]);
        assert_eq!(idx.candidates("p.C").len(), 1);
        assert!(idx.contains_fqn("p.E"));
    }
}
