use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

/// Pretty JSON with a trailing newline. Object keys come out sorted, so
/// parsing and re-serialising reproduces the text exactly.
pub fn json_bytes(doc: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("a Value always serialises");
    out.push(b'\n');
    out
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(|source| CliError::Output {
                path: "stdout".into(),
                source,
            });
    };
    let fail = |source| CliError::Output {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replaces_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        std::fs::write(&path, "old").unwrap();
        emit(Some(&path), b"new").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "new");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_directory_is_an_output_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit(Some(&dir.path().join("nope/out.txt")), b"x").unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn json_round_trips() {
        let doc = serde_json::json!({"b": [1.5, 2], "a": {"z": null, "c": "x"}});
        let text = json_bytes(&doc);
        let back: Value = serde_json::from_slice(&text).unwrap();
        assert_eq!(json_bytes(&back), text);
    }
}
