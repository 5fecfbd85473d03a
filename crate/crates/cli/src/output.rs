//! Report envelope, hashing and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use wgm_core::config::RunConfig;

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(cfg: &RunConfig) -> String {
    sha256_hex(cfg.canonical_json().as_bytes())
}

/// Common header of every JSON report. The embedded config is the fully
/// resolved one, so `--config` on it reproduces the run.
pub fn envelope(command: &str, cfg: &RunConfig, inputs: &[(PathBuf, String)]) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("format".into(), json!("wgm-report v1"));
    m.insert("command".into(), json!(command));
    m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("config_sha256".into(), json!(config_hash(cfg)));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("preset".into(), json!(cfg.preset));
    let inputs: Vec<Value> = inputs
        .iter()
        .map(|(p, h)| json!({ "path": p.display().to_string(), "sha256": h }))
        .collect();
    m.insert("inputs".into(), Value::Array(inputs));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    m
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Files produced by one command, written only once everything is computed.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, String)>,
}

impl Outputs {
    pub fn add(&mut self, path: PathBuf, content: String) {
        self.files.push((path, content));
    }

    /// Writes each file through a temporary sibling and a rename.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::new();
        for (path, content) in self.files {
            write_atomic(&path, content.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = std::env::temp_dir().join(format!("wgm-out-{}", std::process::id()));
        let mut out = Outputs::default();
        out.add(dir.join("a/b.txt"), "hello".into());
        out.commit().unwrap();
        assert_eq!(fs::read_to_string(dir.join("a/b.txt")).unwrap(), "hello");
        let names: Vec<_> = fs::read_dir(dir.join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
        fs::remove_dir_all(dir).unwrap();
    }
}
