//! CSV and JSON report files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LabError, Result};

/// Writes report files under `dir` with a common name prefix and remembers them.
#[derive(Debug)]
pub struct ReportWriter {
    dir: PathBuf,
    prefix: String,
    written: Vec<PathBuf>,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> LabError {
    LabError::Invalid(format!("cannot write {}: {e}", path.display()))
}

impl ReportWriter {
    pub fn new(dir: &Path, prefix: &str) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), prefix: prefix.to_string(), written: Vec::new() })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}.{suffix}", self.prefix))
    }

    /// `<prefix>.<table>.csv` with one row per record and a header from the field names.
    pub fn csv<R: Serialize>(&mut self, table: &str, rows: &[R]) -> Result<PathBuf> {
        let path = self.path(&format!("{table}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        for r in rows {
            w.serialize(r).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// `<prefix>.<name>.json`, pretty-printed in declaration order.
    pub fn json<R: Serialize>(&mut self, name: &str, value: &R) -> Result<PathBuf> {
        let path = self.path(&format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        value: f64,
        pass: bool,
    }

    #[test]
    fn csv_quotes_and_json_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ReportWriter::new(dir.path(), "demo").unwrap();
        let p = w.csv("rows", &[Row { name: "a,b", value: 0.25, pass: true }]).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "name,value,pass\n\"a,b\",0.25,true\n");
        let j = w.json("verdict", &Row { name: "x", value: 1e-9, pass: false }).unwrap();
        assert_eq!(fs::read_to_string(j).unwrap(), "{\n  \"name\": \"x\",\n  \"value\": 1e-9,\n  \"pass\": false\n}\n");
        assert_eq!(w.into_files().len(), 2);
    }
}
