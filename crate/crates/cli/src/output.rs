//! In-memory output files committed to disk all at once.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Write everything into a scratch directory next to `dir`, then move
    /// the files into place. Nothing lands in `dir` unless every write
    /// succeeded.
    pub fn commit(self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let scratch = tempfile::Builder::new().prefix(".memwave-").tempdir_in(dir)?;
        for (name, bytes) in &self.files {
            fs::write(scratch.path().join(name), bytes)?;
        }
        for (name, _) in &self.files {
            fs::rename(scratch.path().join(name), dir.join(name))?;
        }
        Ok(())
    }
}
