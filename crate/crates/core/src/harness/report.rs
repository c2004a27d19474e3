use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};

/// Outcome of one experiment: what ran, where its tables went and the
/// headline numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: Vec<(String, String)>,
    pub csv_paths: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
    pub elapsed: Duration,
}

impl ExperimentReport {
    pub(crate) fn new(name: &str) -> Self {
        ExperimentReport {
            name: name.to_string(),
            parameters: Vec::new(),
            csv_paths: Vec::new(),
            summary: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub(crate) fn param(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.parameters.push((key.to_string(), value.to_string()));
        self
    }

    pub(crate) fn stat(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.summary.push((key.to_string(), value.to_string()));
        self
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// `name.key = value` lines for parameters, statistics, outputs and
    /// timing.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for (k, v) in &self.parameters {
            lines.push(format!("{}.param.{k} = {v}", self.name));
        }
        for (k, v) in &self.summary {
            lines.push(format!("{}.{k} = {v}", self.name));
        }
        for p in &self.csv_paths {
            lines.push(format!("{}.csv = {}", self.name, p.display()));
        }
        lines.push(format!(
            "{}.elapsed_s = {:.3}",
            self.name,
            self.elapsed.as_secs_f64()
        ));
        lines
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Serializes `rows` to `dir/file_name` with a header row. The header comes
/// from the row type's field names, so it is fixed per experiment.
pub(crate) fn write_csv<T: Serialize>(dir: &Path, file_name: &str, rows: &[T]) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(file_name);
    let mut w = csv::Writer::from_path(&path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub(crate) fn write_summary(dir: &Path, reports: &[ExperimentReport]) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("summary.txt");
    let mut text = String::new();
    for r in reports {
        for line in r.summary_lines() {
            text.push_str(&line);
            text.push('\n');
        }
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
