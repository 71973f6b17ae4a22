//! Atomic artifact writes: each file is written to a temporary sibling and
//! renamed into place, so readers never see a partial file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

pub fn write_atomic<F>(dir: &Path, name: &str, fill: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> Result<(), CliError>,
{
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    persist(tmp, dir, name)
}

/// Renames a finished temporary file to `dir/name`.
pub fn persist(tmp: NamedTempFile, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| CliError::Runtime(format!("{}: {}", target.display(), e.error)))?;
    Ok(target)
}

/// A JSON-lines file that grows record by record in a temporary file and is
/// renamed into place by [`Journal::finish`], also after a failed run.
pub struct Journal {
    tmp: NamedTempFile,
    dir: PathBuf,
    name: String,
}

impl Journal {
    pub fn create(dir: &Path, name: &str) -> Result<Self, CliError> {
        Ok(Self { tmp: NamedTempFile::new_in(dir)?, dir: dir.to_path_buf(), name: name.to_string() })
    }

    pub fn append<T: serde::Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let f = self.tmp.as_file_mut();
        serde_json::to_writer(&mut *f, value).map_err(|e| CliError::Runtime(e.to_string()))?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        self.tmp.as_file().sync_all()?;
        persist(self.tmp, &self.dir, &self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_fill_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let r = write_atomic(dir.path(), "x.csv", |w| {
            w.write_all(b"partial").unwrap();
            Err(CliError::Runtime("boom".into()))
        });
        assert!(r.is_err());
        assert!(!dir.path().join("x.csv").exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn journal_lines() {
        let dir = tempfile::tempdir().unwrap();
        let mut j = Journal::create(dir.path(), "j.jsonl").unwrap();
        j.append(&1).unwrap();
        j.append(&"a").unwrap();
        assert!(!dir.path().join("j.jsonl").exists());
        let p = j.finish().unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "1\n\"a\"\n");
    }
}
