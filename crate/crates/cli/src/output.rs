//! Atomic artifact writes: temp path in the target directory, then rename.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

fn parent_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Writes a file through `f` and renames it into place only on success.
pub fn write_file<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let dir = parent_of(path);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        f(&mut w)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_file(path, |w| w.write_all(bytes).map_err(|e| CliError::io(path, e)))
}

/// Builds a directory in a sibling temp location through `f`, then swaps it
/// in. An existing directory at `path` is replaced only after `f` succeeds.
pub fn write_dir<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&Path) -> Result<(), CliError>,
{
    let parent = parent_of(path);
    std::fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
    let tmp = tempfile::Builder::new()
        .prefix(".stagegate-")
        .tempdir_in(&parent)
        .map_err(|e| CliError::io(&parent, e))?;
    f(tmp.path())?;
    let staged = tmp.keep();
    if path.exists() {
        let old = tempfile::Builder::new()
            .prefix(".stagegate-old-")
            .tempdir_in(&parent)
            .map_err(|e| CliError::io(&parent, e))?;
        let old_path = old.path().join("previous");
        std::fs::rename(path, &old_path).map_err(|e| CliError::io(path, e))?;
        if let Err(e) = std::fs::rename(&staged, path) {
            let _ = std::fs::rename(&old_path, path);
            let _ = std::fs::remove_dir_all(&staged);
            return Err(CliError::io(path, e));
        }
    } else {
        std::fs::rename(&staged, path).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
