//! Run manifests: what ran, with which seeds and inputs, and what came out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::output::write_bytes;
use crate::CliError;

pub const FORMAT: &str = "stagegate-run";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub tool_version: String,
    pub command: String,
    /// Full argument vector, program name excluded; `replay` re-runs it.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub jobs: usize,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    pub started_at: String,
    pub wall_clock_secs: f64,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if m.format != FORMAT {
            return Err(CliError::Usage(format!("{}: not a run manifest", path.display())));
        }
        Ok(m)
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Every regular file under `path` (or `path` itself), sorted.
fn files_under(path: &Path) -> Vec<PathBuf> {
    if path.is_file() {
        return vec![path.to_path_buf()];
    }
    let mut out = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.is_file() {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

/// Collects manifest fields while a command runs.
pub struct Recorder {
    manifest: RunManifest,
    path: Option<PathBuf>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    clock: Instant,
}

impl Recorder {
    pub fn new(command: &str, argv: Vec<String>, master_seed: u64, jobs: usize) -> Self {
        Recorder {
            manifest: RunManifest {
                format: FORMAT.into(),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                argv,
                config: serde_json::Value::Null,
                master_seed,
                seeds: BTreeMap::new(),
                jobs,
                inputs: Vec::new(),
                outputs: Vec::new(),
                started_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                wall_clock_secs: 0.0,
                status: "running".into(),
                exit_code: 0,
                error: None,
            },
            path: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            clock: Instant::now(),
        }
    }

    /// Where the manifest goes. The first call wins, so an explicit
    /// `--manifest` set up front is not replaced by the per-command default.
    pub fn set_path(&mut self, path: PathBuf) {
        self.path.get_or_insert(path);
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn seed(&mut self, label: &str, value: u64) -> u64 {
        self.manifest.seeds.insert(label.into(), value);
        value
    }

    pub fn config<T: Serialize>(&mut self, config: &T) {
        self.manifest.config = serde_json::to_value(config).unwrap_or(serde_json::Value::Null);
    }

    fn hash_all(paths: &[PathBuf]) -> Vec<Artifact> {
        paths
            .iter()
            .flat_map(|p| files_under(p))
            .map(|f| Artifact {
                path: f.display().to_string(),
                sha256: sha256_file(&f).unwrap_or_else(|_| "unreadable".into()),
            })
            .collect()
    }

    /// Writes the manifest if a path is known. Errors here are reported on
    /// stderr but never change the command's own exit status.
    pub fn finish(mut self, result: &Result<(), CliError>) {
        let Some(path) = self.path.take() else { return };
        let m = &mut self.manifest;
        m.inputs = Self::hash_all(&self.inputs);
        m.outputs = match result {
            Ok(()) => Self::hash_all(&self.outputs),
            Err(_) => Vec::new(),
        };
        m.wall_clock_secs = self.clock.elapsed().as_secs_f64();
        match result {
            Ok(()) => m.status = "ok".into(),
            Err(e) => {
                m.status = "error".into();
                m.exit_code = e.exit_code();
                m.error = Some(e.to_string());
            }
        }
        let text = match serde_json::to_string_pretty(m) {
            Ok(t) => t + "\n",
            Err(e) => {
                eprintln!("warning: manifest not written: {e}");
                return;
            }
        };
        if let Err(e) = write_bytes(&path, text.as_bytes()) {
            eprintln!("warning: manifest not written: {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_on_failure_with_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let mut r = Recorder::new("train", vec!["train".into()], 3, 1);
        r.set_path(path.clone());
        r.set_path(dir.path().join("ignored.json"));
        r.seed("train/svm", 42);
        r.finish(&Err(CliError::Usage("bad flag".into())));
        let m = RunManifest::load(&path).unwrap();
        assert_eq!(m.status, "error");
        assert_eq!(m.exit_code, 2);
        assert_eq!(m.seeds["train/svm"], 42);
        assert!(!dir.path().join("ignored.json").exists());
    }

    #[test]
    fn hashes_directory_outputs() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("out")).unwrap();
        std::fs::write(dir.path().join("out/b"), "b").unwrap();
        std::fs::write(dir.path().join("out/a"), "a").unwrap();
        let mut r = Recorder::new("x", vec![], 0, 1);
        r.set_path(dir.path().join("m.json"));
        r.output(&dir.path().join("out"));
        r.finish(&Ok(()));
        let m = RunManifest::load(&dir.path().join("m.json")).unwrap();
        assert_eq!(m.outputs.len(), 2);
        assert!(m.outputs[0].path.ends_with("a"));
        assert_eq!(
            m.outputs[0].sha256,
            "ca978112ca1bbdcafac231b39a23dc4da786eff8147c4e72b9807785afee48bb"
        );
    }
}
