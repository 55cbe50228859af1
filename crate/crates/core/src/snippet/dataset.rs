use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{CodeSnippet, ImportSet, Language, ParseError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    BadImports {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{0} is not UTF-8")]
    NotUtf8(PathBuf),
}

fn read_text(path: &Path) -> Result<String, DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|_| DatasetError::NotUtf8(path.to_path_buf()))
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        out.push(entry.map_err(io_err)?.path());
    }
    out.sort();
    Ok(out)
}

/// Load every snippet under `root`.
///
/// Layout: one directory per library label, one `<id>.java` or `<id>.py` per
/// snippet, and an optional sibling `<id>.imports` holding the expected import
/// declarations one per line. Snippets come back sorted by library then id.
pub fn load_dataset(root: &Path) -> Result<Vec<CodeSnippet>, DatasetError> {
    let mut snippets = Vec::new();
    for lib_dir in read_dir_sorted(root)? {
        if !lib_dir.is_dir() {
            continue;
        }
        let library = lib_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for path in read_dir_sorted(&lib_dir)? {
            let Some(language) = path
                .extension()
                .and_then(|e| e.to_str())
                .and_then(Language::from_extension)
            else {
                continue;
            };
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let source = read_text(&path)?;
            let truth_path = path.with_extension("imports");
            let ground_truth = if truth_path.exists() {
                let text = read_text(&truth_path)?;
                Some(
                    ImportSet::parse_lines(&text, language).map_err(|source| {
                        DatasetError::BadImports {
                            path: truth_path.clone(),
                            source,
                        }
                    })?,
                )
            } else {
                None
            };
            snippets.push(CodeSnippet::new(id, language, library.clone(), &source, ground_truth));
        }
    }
    Ok(snippets)
}

/// Write `imports` in the `.imports` format (one declaration per line, LF).
pub fn write_import_file(path: &Path, imports: &ImportSet) -> io::Result<()> {
    let mut text = imports.serialize();
    if !text.is_empty() {
        text.push('\n');
    }
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_layout_and_strips_imports() {
        let dir = tempfile::tempdir().unwrap();
        let lib = dir.path().join("joda");
        fs::create_dir(&lib).unwrap();
        fs::write(lib.join("s2.java"), "import a.B;\nclass S2 {}\n").unwrap();
        fs::write(lib.join("s1.java"), "class S1 {}\n").unwrap();
        fs::write(lib.join("s1.imports"), "import org.joda.time.Duration;\n").unwrap();
        fs::write(lib.join("notes.txt"), "ignored").unwrap();
        let py = dir.path().join("flask");
        fs::create_dir(&py).unwrap();
        fs::write(py.join("p1.py"), "app = Flask(__name__)\n").unwrap();

        let snippets = load_dataset(dir.path()).unwrap();
        let keys: Vec<_> = snippets.iter().map(|s| s.key()).collect();
        assert_eq!(keys, ["flask/p1", "joda/s1", "joda/s2"]);
        assert_eq!(snippets[2].body, "class S2 {}\n");
        assert_eq!(snippets[1].ground_truth.as_ref().unwrap().len(), 1);
        assert!(snippets[2].ground_truth.is_none());
        assert_eq!(snippets[0].language, Language::Python);
    }

    #[test]
    fn bad_truth_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let lib = dir.path().join("x");
        fs::create_dir(&lib).unwrap();
        fs::write(lib.join("a.java"), "class A {}").unwrap();
        fs::write(lib.join("a.imports"), "not an import\n").unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(DatasetError::BadImports { .. })));
    }
}
